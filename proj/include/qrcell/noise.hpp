#pragma once

// Analytic noise model for the asynchronous pair source, with brute-force
// density-matrix oracles for every closed form.
//
// Storing atom 1 while atom 2 retries exposes it to false addressing by the
// reset beam: each retry mixes the stored atom-photon state toward a fixed
// depolarizing matrix M with probability c = P_false * eta_850 / 2.  The
// two-ion gate error is a white-noise admixture of strength alpha.  One
// channel family, two fidelity labels for the same alpha:
//   - four-qubit output state fidelity  F = 1 - (15/16) alpha
//   - reduced two-atom (parity) fidelity F = 1 - (3/4) alpha
// The model formulas below use the first label; the parity estimator in the
// protocol module measures the second.

#include "qrcell/entangle.hpp"
#include "qrcell/qcore.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qrcell::noise {

using entangle::LarmorClock;

// (1-p)^n with log1p accuracy for small p.
inline double pow1m(double p, double n) {
  if (p >= 1.0) return n == 0.0 ? 1.0 : 0.0;
  return std::exp(n * std::log1p(-p));
}

struct NoiseModelParams {
  double f10 = 1.0;          // initial atom-photon fidelity, atom 1
  double f20 = 1.0;          // initial atom-photon fidelity, atom 2
  double f_ms = 1.0;         // gate fidelity (four-qubit state-fidelity label)
  double p_sia_false = 0.0;  // per-trial false addressing probability
  double eta_850 = 0.899;    // branching ratio into the storage manifold
  double p = 1.0;            // single-shot detection probability of photon 2
  long n_max = 1;            // maximum number of trials

  double c() const { return p_sia_false * eta_850 / 2.0; }

  void validate() const {
    auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in01(f10) || !in01(f20) || !in01(f_ms) || !in01(p_sia_false) || !in01(eta_850) || !in01(p))
      throw std::invalid_argument("NoiseModelParams: probabilities and fidelities must be in [0,1]");
    if (n_max < 1) throw std::invalid_argument("NoiseModelParams: n_max must be >= 1");
    if (c() > 0.5) throw std::invalid_argument("NoiseModelParams: c must be <= 1/2");
  }
};

// Fixed point of the false-addressing channel on (atom1, photonA):
// (3/5 |-><-| + 2/5 |+><+|) (x) I_photon / 2.
inline cmat depolarizing_matrix_M() {
  cmat atom = cmat::Zero(2, 2);
  atom(0, 0) = 2.0 / 5.0;
  atom(1, 1) = 3.0 / 5.0;
  return kron(atom, identity(2) / 2.0);
}

// One retry of storage exposure: rho -> (1-c) rho + c M.
inline cmat depolarize_once(const cmat& rho, double c) {
  return (1.0 - c) * rho + c * depolarizing_matrix_M();
}

// k retries in closed form: (1-c)^k rho0 + (1 - (1-c)^k) M.
inline cmat depolarize_k(const cmat& rho0, double c, long k) {
  if (k < 0) throw std::invalid_argument("depolarize_k: k must be >= 0");
  const double s = pow1m(c, static_cast<double>(k));
  return s * rho0 + (1.0 - s) * depolarizing_matrix_M();
}

// Oracle: the same map applied k times, one step at a time.
inline cmat depolarize_iterated(const cmat& rho0, double c, long k) {
  cmat rho = rho0;
  for (long i = 0; i < k; ++i) rho = depolarize_once(rho, c);
  return rho;
}

// Fidelity with the ideal balanced state after k retries; uses <psi|M|psi> = 1/4.
inline double fidelity_after_k(double f10, double c, long k) {
  const double s = pow1m(c, static_cast<double>(k));
  return s * f10 + (1.0 - s) * 0.25;
}

// Probability that photon 2 arrives in trial k, conditioned on arrival within
// n trials: w_k = p (1-p)^{k-1} / (1 - (1-p)^n).
inline std::vector<double> trial_weights(double p, long n) {
  if (p <= 0.0 || p > 1.0) throw std::invalid_argument("trial_weights: degenerate weights, need 0 < p <= 1");
  if (n < 1) throw std::invalid_argument("trial_weights: n must be >= 1");
  std::vector<double> w(n);
  double norm = 0.0;
  for (long k = 0; k < n; ++k) {
    w[k] = p * pow1m(p, static_cast<double>(k));
    norm += w[k];
  }
  for (double& x : w) x /= norm;
  return w;
}

// Trial-weighted average of (1-c)^k: the survival factor shared by all
// weighted-average fidelities.
inline double survival_factor(double c, double p, long n) {
  const double dn = static_cast<double>(n);
  const double denom_w = -std::expm1(dn * std::log1p(-p));          // 1 - (1-p)^n
  const double joint = -std::expm1(dn * (std::log1p(-c) + std::log1p(-p)));  // 1 - ((1-c)(1-p))^n
  return (p * (1.0 - c) / denom_w) * joint / (p + c * (1.0 - p));
}

inline double survival_factor_limit(double c, double p) {
  return p * (1.0 - c) / (p + c * (1.0 - p));
}

// Weighted-average atom-photon fidelity, closed form.
inline double avg_atom_fidelity(const NoiseModelParams& params) {
  params.validate();
  return 0.25 + (params.f10 - 0.25) * survival_factor(params.c(), params.p, params.n_max);
}

// Summation oracle: sum_k F1(k) w_k.
inline double avg_atom_fidelity_sum(const NoiseModelParams& params) {
  params.validate();
  const auto w = trial_weights(params.p, params.n_max);
  double f = 0.0;
  for (long k = 1; k <= params.n_max; ++k) f += w[k - 1] * fidelity_after_k(params.f10, params.c(), k);
  return f;
}

// White-noise admixture over the whole register.
inline cmat white_mix(const cmat& rho, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("white_mix: alpha must be in [0,1]");
  const double dim = static_cast<double>(rho.rows());
  return (1.0 - alpha) * rho + (alpha / dim) * std::real(rho.trace()) * identity(rho.rows());
}

// Mixing strength from the four-qubit state-fidelity label.
inline double ms_mixing_alpha(double f_ms) {
  const double alpha = 16.0 / 15.0 * (1.0 - f_ms);
  if (f_ms > 1.0 || alpha > 1.0)
    throw std::invalid_argument("ms_mixing_alpha: fidelity below the 1/16 white-mixing floor");
  return alpha;
}

// Mixing strength from the reduced two-atom fidelity label, the quantity a
// parity calibration estimates.
inline double parity_mixing_alpha(double f_ms) {
  const double alpha = 4.0 / 3.0 * (1.0 - f_ms);
  if (f_ms > 1.0 || alpha > 1.0)
    throw std::invalid_argument("parity_mixing_alpha: fidelity below the 1/4 white-mixing floor");
  return alpha;
}

// Noisy two-ion gate on the four-qubit register (atom1, photonA, atom2, photonB):
// (1-alpha) U rho U^dag + (alpha/16) I, alpha = 16/15 (1 - F_MS).
inline cmat noisy_ms_channel(const cmat& rho12, double f_ms) {
  if (rho12.rows() != 16) throw std::invalid_argument("noisy_ms_channel: expected a four-qubit state");
  const cmat u = embed(entangle::ms_map(), {0, 2}, 4);
  return white_mix(apply_unitary(rho12, u), ms_mixing_alpha(f_ms));
}

// Depolarized initial atom-photon state with target fidelity f_i0:
// (1-q) |psi><psi| + (q/4) I, q = 4/3 (1 - f_i0).
inline cmat depolarized_ap_state(double f_i0, double t, const LarmorClock& clock) {
  if (f_i0 < 0.25) throw std::invalid_argument("depolarized_ap_state: fidelity below the 1/4 depolarizing floor");
  if (f_i0 > 1.0) throw std::invalid_argument("depolarized_ap_state: fidelity above 1");
  const double q = 4.0 / 3.0 * (1.0 - f_i0);
  return (1.0 - q) * dm(entangle::atom_photon_state(true, t, clock)) + (q / 4.0) * identity(4);
}

// Weighted-average fidelity of the gate output with the ideal post-gate joint
// state, closed form:  (1-alpha) F20 F1(N) + alpha/16.
inline double avg_pp_fidelity(const NoiseModelParams& params) {
  params.validate();
  const double alpha = ms_mixing_alpha(params.f_ms);
  return (1.0 - alpha) * params.f20 * avg_atom_fidelity(params) + alpha / 16.0;
}

// Summation oracle: per-trial fidelities weighted by w_k.
inline double avg_pp_fidelity_sum(const NoiseModelParams& params) {
  params.validate();
  const double alpha = ms_mixing_alpha(params.f_ms);
  const auto w = trial_weights(params.p, params.n_max);
  double f = 0.0;
  for (long k = 1; k <= params.n_max; ++k) {
    const double f1k = fidelity_after_k(params.f10, params.c(), k);
    f += w[k - 1] * ((1.0 - alpha) * params.f20 * f1k + alpha / 16.0);
  }
  return f;
}

// Full matrix oracle for the atom model: iterate the storage channel step by
// step and project on the ideal state.  Larmor times are arbitrary; the
// result must not depend on them.
inline double avg_atom_fidelity_matrix(const NoiseModelParams& params, const LarmorClock& clock) {
  params.validate();
  const cvec psi1 = entangle::atom_photon_state(true, clock.t1, clock);
  const auto w = trial_weights(params.p, params.n_max);
  cmat rho1 = depolarized_ap_state(params.f10, clock.t1, clock);
  double f = 0.0;
  for (long k = 1; k <= params.n_max; ++k) {
    rho1 = depolarize_once(rho1, params.c());
    f += w[k - 1] * fidelity_with_pure(rho1, psi1);
  }
  return f;
}

// Full matrix oracle for the pair model: iterate the storage channel step by
// step, tensor with the fresh second state, apply the noisy gate, and project
// on the ideal post-gate joint state U (psi1 (x) psi2).
inline double avg_pp_fidelity_matrix(const NoiseModelParams& params, const LarmorClock& clock) {
  params.validate();
  const cvec psi1 = entangle::atom_photon_state(true, clock.t1, clock);
  const cvec psi2 = entangle::atom_photon_state(true, clock.t2, clock);
  const cmat u = embed(entangle::ms_map(), {0, 2}, 4);
  const cvec ideal = u * kron(psi1, psi2);
  const cmat rho20 = depolarized_ap_state(params.f20, clock.t2, clock);
  const auto w = trial_weights(params.p, params.n_max);
  cmat rho1 = depolarized_ap_state(params.f10, clock.t1, clock);
  double f = 0.0;
  for (long k = 1; k <= params.n_max; ++k) {
    rho1 = depolarize_once(rho1, params.c());
    const cmat joint = noisy_ms_channel(kron(rho1, rho20), params.f_ms);
    f += w[k - 1] * fidelity_with_pure(joint, ideal);
  }
  return f;
}

inline std::optional<long> first_n_below(const std::function<double(long)>& f, double limit_value,
                                         double target, long cap = 1000000) {
  if (limit_value >= target) return std::nullopt;  // never crosses
  if (f(1) < target) return 1;
  long lo = 1, hi = 2;
  while (hi <= cap && f(hi) >= target) {
    lo = hi;
    hi *= 2;
  }
  if (hi > cap) return std::nullopt;
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (f(mid) < target ? hi : lo) = mid;
  }
  return hi;
}

// Smallest N at which the weighted-average atom-photon fidelity drops below
// target; empty if the large-N limit stays at or above it.
inline std::optional<long> atom_fidelity_threshold(NoiseModelParams params, double target = 0.5) {
  params.n_max = 1;
  params.validate();
  const double limit = 0.25 + (params.f10 - 0.25) * survival_factor_limit(params.c(), params.p);
  auto f = [&params](long n) {
    NoiseModelParams q = params;
    q.n_max = n;
    return avg_atom_fidelity(q);
  };
  return first_n_below(f, limit, target);
}

// Same crossing question for the photon-pair fidelity.
inline std::optional<long> pp_fidelity_threshold(NoiseModelParams params, double target = 0.5) {
  params.n_max = 1;
  params.validate();
  const double alpha = ms_mixing_alpha(params.f_ms);
  const double f1_limit = 0.25 + (params.f10 - 0.25) * survival_factor_limit(params.c(), params.p);
  const double limit = (1.0 - alpha) * params.f20 * f1_limit + alpha / 16.0;
  auto f = [&params](long n) {
    NoiseModelParams q = params;
    q.n_max = n;
    return avg_pp_fidelity(q);
  };
  return first_n_below(f, limit, target);
}

}  // namespace qrcell::noise
