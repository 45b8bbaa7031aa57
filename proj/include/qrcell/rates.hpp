#pragma once

// Closed-form pair-probability scaling and the rate-superiority model for the
// repeater cell versus direct transmission, with fiber-channel conversions.
//
// Timing model: tau_c = 2 L / v is the classical heralding round trip for the
// cell (photons travel the half distance L); tau = tau0 + tau_c is the cell's
// clock period.  Direct transmission sends both photons of a pair source over
// the full distance, so its period tau' doubles the communication term.

#include <cmath>
#include <optional>
#include <stdexcept>

namespace qrcell::rates {

inline double p_pair_asyn(double p1, double p2, long n_max) {
  if (p1 < 0.0 || p1 > 1.0 || p2 < 0.0 || p2 > 1.0)
    throw std::invalid_argument("p_pair_asyn: probabilities must be in [0,1]");
  if (n_max < 1) throw std::invalid_argument("p_pair_asyn: n_max must be >= 1");
  // n_max = 1 must reduce to the synchronous product bit-for-bit
  if (n_max == 1) return p1 * p2;
  return p1 * -std::expm1(static_cast<double>(n_max) * std::log1p(-p2));
}

inline double p_pair_syn(double p1, double p2) {
  if (p1 < 0.0 || p1 > 1.0 || p2 < 0.0 || p2 > 1.0)
    throw std::invalid_argument("p_pair_syn: probabilities must be in [0,1]");
  return p1 * p2;
}

struct ChannelModel {
  double attenuation_db_per_km = 0.2;
  double conversion_efficiency = 1.0;

  void validate() const {
    if (attenuation_db_per_km <= 0.0) throw std::invalid_argument("ChannelModel: attenuation must be > 0");
    if (conversion_efficiency <= 0.0 || conversion_efficiency > 1.0)
      throw std::invalid_argument("ChannelModel: conversion efficiency must be in (0,1]");
  }

  double transmission(double length_km) const {
    validate();
    if (length_km < 0.0) throw std::invalid_argument("ChannelModel: length must be >= 0");
    return std::pow(10.0, -attenuation_db_per_km * length_km / 10.0) * conversion_efficiency;
  }

  double length_for_transmission(double p_t) const {
    validate();
    if (p_t <= 0.0 || p_t > conversion_efficiency)
      throw std::invalid_argument("ChannelModel: transmission must be in (0, conversion_efficiency]");
    // + 0.0 normalizes the -0.0 that log10(1) produces
    return -10.0 * std::log10(p_t / conversion_efficiency) / attenuation_db_per_km + 0.0;
  }
};

struct RateScenario {
  double p = 0.0;               // single-shot detection probability, no channel loss
  double p_t = 1.0;             // channel transmission
  double tau0 = 4.5e-6;         // clock period without communication, s
  double fiber_speed = 2.04e8;  // group velocity in fiber, m/s
  double one_way_length = 0.0;  // cell-to-station distance L, m
  long n_max = 1;

  double tau_c() const { return 2.0 * one_way_length / fiber_speed; }
  double tau() const { return tau0 + tau_c(); }
  double tau_prime() const { return tau0 + 2.0 * tau_c(); }

  void validate() const {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("RateScenario: p must be in [0,1]");
    if (p_t <= 0.0 || p_t > 1.0) throw std::invalid_argument("RateScenario: p_t must be in (0,1]");
    if (tau0 <= 0.0 || fiber_speed <= 0.0 || one_way_length < 0.0)
      throw std::invalid_argument("RateScenario: timing parameters must be positive");
    if (n_max < 1) throw std::invalid_argument("RateScenario: n_max must be >= 1");
  }
};

// direct: pair source at one end, both photons over the full distance.
// synchronous: the cell without retries, both atoms fire fresh each period.
// semi/fully asynchronous: retries on one or both sides.
enum class RateKind { direct, synchronous, semi_asyn, fully_asyn };

inline double rate(const RateScenario& s, RateKind kind) {
  s.validate();
  const double pp = s.p * s.p_t;
  const double herald_sq = [&] {
    const double x = -std::expm1(static_cast<double>(s.n_max) * std::log1p(-pp));
    return x * x;
  }();
  switch (kind) {
    case RateKind::direct:
      return s.p * s.p_t * s.p_t / s.tau_prime();
    case RateKind::synchronous:
      return pp * pp / s.tau();
    case RateKind::semi_asyn:
      return 0.5 * herald_sq / (static_cast<double>(s.n_max) * s.tau());
    case RateKind::fully_asyn:
      return herald_sq / (static_cast<double>(s.n_max) * s.tau());
  }
  throw std::logic_error("rate: unknown kind");
}

struct ThresholdResult {
  std::optional<long> n_min;  // empty: no crossing up to the cap
  double best_ratio = 0.0;    // largest rate(kind)/rate(direct) seen in the scan
};

// Smallest n_max at which the asynchronous protocol beats direct transmission.
// The ratio rises roughly linearly while retries still help, then decays as
// 1/n_max once the herald probability saturates, so a capped forward scan is
// exact: past the peak no later crossing exists.
inline ThresholdResult superiority_threshold(const RateScenario& scenario, RateKind kind,
                                             long cap = 1000000) {
  if (kind == RateKind::direct) throw std::invalid_argument("superiority_threshold: kind must not be direct");
  RateScenario s = scenario;
  s.n_max = 1;
  s.validate();
  const double r_direct = rate(s, RateKind::direct);
  ThresholdResult result;
  const double pp = s.p * s.p_t;
  const double numer_scale = (kind == RateKind::fully_asyn ? 1.0 : 0.5) / s.tau();
  double miss = 1.0;  // (1 - p p_t)^n accumulated incrementally
  bool past_peak = false;
  double prev_ratio = 0.0;
  for (long n = 1; n <= cap; ++n) {
    miss *= 1.0 - pp;
    const double herald = 1.0 - miss;
    const double ratio = numer_scale * herald * herald / (static_cast<double>(n) * r_direct);
    if (ratio > result.best_ratio) result.best_ratio = ratio;
    if (ratio >= 1.0) {
      result.n_min = n;
      return result;
    }
    if (ratio < prev_ratio) past_peak = true;
    if (past_peak && herald > 1.0 - 1e-12) break;  // saturated and decaying: no crossing ahead
    prev_ratio = ratio;
  }
  return result;
}

}  // namespace qrcell::rates
