#pragma once

// Scenario configuration: a versioned JSON schema covering every tunable of
// the simulator.  All sections and keys are optional and default to the
// measured baseline scenario; unknown keys are rejected so typos cannot
// silently fall back to defaults.

#include "qrcell/entangle.hpp"
#include "qrcell/fit.hpp"
#include "qrcell/noise.hpp"
#include "qrcell/protocol.hpp"
#include "qrcell/rates.hpp"

#include "json.hpp"

#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrcell::config {

using json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;
// Default seed for every stochastic command; fixed so repeated runs of the
// same config are byte-identical.
constexpr std::uint64_t kDefaultSeed = 42;

struct OutcomeParams {
  double f_ms = 1.0;
  double p_sia_false = 0.0;
};

struct Scenario {
  protocol::ProtocolParams protocol;
  noise::NoiseModelParams noise;
  protocol::EfficiencyBudget budget_atom1;
  protocol::EfficiencyBudget budget_atom2;
  rates::RateScenario rate;
  rates::ChannelModel channel;
  std::map<std::string, OutcomeParams> outcomes;
  std::vector<long> n_max_grid = {1, 3, 10, 30, 100};
  std::vector<double> transmission_grid = {1.0, 0.78, 0.48, 0.24};
  std::string fit_model = "pp";
  std::vector<fit::CurvePoint> fit_points;
  double tomo_fidelity = 0.924;
  long tomo_shots = 100000;  // 0: analytic mode
  long tomo_bootstrap = 200;

  Scenario() {
    protocol.f10 = 0.945;
    protocol.f20 = 0.924;
    protocol.f_ms = 0.926;
    noise.f10 = 0.945;
    noise.f20 = 0.924;
    noise.f_ms = 0.926;
    noise.p_sia_false = 0.0056;
    noise.p = 0.00096;
    noise.n_max = 100;
    budget_atom1 = {0.899, 0.5, 0.6, 0.06, 2.0 / 3.0, 1.0, 0.193, 0.603, 0.91};
    budget_atom2 = {0.899, 0.5, 0.6, 0.06, 2.0 / 3.0, 0.82, 0.177, 0.672, 0.91};
    rate.p = 0.001;
    rate.p_t = 0.24;
    rate.one_way_length = 31400.0;
    rate.n_max = 100;
    outcomes = {
        {"psi_minus", {0.915, 0.0130}},
        {"psi_plus", {0.914, 0.0110}},
        {"phi_minus", {0.871, 0.0120}},
        {"phi_plus", {0.886, 0.0146}},
    };
  }
};

namespace detail {

inline void check_keys(const json& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::runtime_error("config: '" + where + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known) throw std::runtime_error("config: unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
inline void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void parse_budget(const json& j, const std::string& where, protocol::EfficiencyBudget& b) {
  check_keys(j, where,
             {"eta_850", "eta_mix", "eta_sigma", "eta_halo", "eta_balance", "eta_gate", "eta_fiber",
              "t_projection", "eta_detector"});
  read(j, "eta_850", b.eta_850);
  read(j, "eta_mix", b.eta_mix);
  read(j, "eta_sigma", b.eta_sigma);
  read(j, "eta_halo", b.eta_halo);
  read(j, "eta_balance", b.eta_balance);
  read(j, "eta_gate", b.eta_gate);
  read(j, "eta_fiber", b.eta_fiber);
  read(j, "t_projection", b.t_projection);
  read(j, "eta_detector", b.eta_detector);
}

}  // namespace detail

inline Scenario parse_scenario(const json& j) {
  using detail::check_keys;
  using detail::read;
  Scenario s;
  check_keys(j, "scenario",
             {"version", "protocol", "noise", "budget_atom1", "budget_atom2", "rate", "channel",
              "outcomes", "scan", "fit", "tomo"});
  if (!j.contains("version")) throw std::runtime_error("config: missing 'version'");
  if (j.at("version").get<int>() != kSchemaVersion)
    throw std::runtime_error("config: unsupported schema version");

  if (j.contains("protocol")) {
    const json& p = j.at("protocol");
    check_keys(p, "protocol",
               {"p1", "p2", "n_max", "p_sia_false", "p_sia_reset", "dark_count_rate", "f10", "f20",
                "f_ms", "eta_850", "rng_seed"});
    read(p, "p1", s.protocol.p1);
    read(p, "p2", s.protocol.p2);
    read(p, "n_max", s.protocol.n_max);
    read(p, "p_sia_false", s.protocol.p_sia_false);
    read(p, "p_sia_reset", s.protocol.p_sia_reset);
    read(p, "dark_count_rate", s.protocol.dark_count_rate);
    read(p, "f10", s.protocol.f10);
    read(p, "f20", s.protocol.f20);
    read(p, "f_ms", s.protocol.f_ms);
    read(p, "eta_850", s.protocol.eta_850);
    read(p, "rng_seed", s.protocol.rng_seed);
  }
  if (j.contains("noise")) {
    const json& p = j.at("noise");
    check_keys(p, "noise", {"f10", "f20", "f_ms", "p_sia_false", "eta_850", "p", "n_max"});
    read(p, "f10", s.noise.f10);
    read(p, "f20", s.noise.f20);
    read(p, "f_ms", s.noise.f_ms);
    read(p, "p_sia_false", s.noise.p_sia_false);
    read(p, "eta_850", s.noise.eta_850);
    read(p, "p", s.noise.p);
    read(p, "n_max", s.noise.n_max);
  }
  if (j.contains("budget_atom1")) detail::parse_budget(j.at("budget_atom1"), "budget_atom1", s.budget_atom1);
  if (j.contains("budget_atom2")) detail::parse_budget(j.at("budget_atom2"), "budget_atom2", s.budget_atom2);
  if (j.contains("rate")) {
    const json& p = j.at("rate");
    check_keys(p, "rate", {"p", "p_t", "tau0", "fiber_speed", "one_way_length_km", "n_max"});
    read(p, "p", s.rate.p);
    read(p, "p_t", s.rate.p_t);
    read(p, "tau0", s.rate.tau0);
    read(p, "fiber_speed", s.rate.fiber_speed);
    if (p.contains("one_way_length_km")) s.rate.one_way_length = p.at("one_way_length_km").get<double>() * 1000.0;
    read(p, "n_max", s.rate.n_max);
  }
  if (j.contains("channel")) {
    const json& p = j.at("channel");
    check_keys(p, "channel", {"attenuation_db_per_km", "conversion_efficiency"});
    read(p, "attenuation_db_per_km", s.channel.attenuation_db_per_km);
    read(p, "conversion_efficiency", s.channel.conversion_efficiency);
  }
  if (j.contains("outcomes")) {
    const json& p = j.at("outcomes");
    check_keys(p, "outcomes", {"psi_minus", "psi_plus", "phi_minus", "phi_plus"});
    s.outcomes.clear();
    for (auto it = p.begin(); it != p.end(); ++it) {
      check_keys(it.value(), "outcomes." + it.key(), {"f_ms", "p_sia_false"});
      OutcomeParams op;
      read(it.value(), "f_ms", op.f_ms);
      read(it.value(), "p_sia_false", op.p_sia_false);
      s.outcomes[it.key()] = op;
    }
  }
  if (j.contains("scan")) {
    const json& p = j.at("scan");
    check_keys(p, "scan", {"n_max_grid", "transmission_grid"});
    read(p, "n_max_grid", s.n_max_grid);
    read(p, "transmission_grid", s.transmission_grid);
  }
  if (j.contains("fit")) {
    const json& p = j.at("fit");
    check_keys(p, "fit", {"model", "points"});
    read(p, "model", s.fit_model);
    if (s.fit_model != "atom" && s.fit_model != "pp")
      throw std::runtime_error("config: fit.model must be 'atom' or 'pp'");
    if (p.contains("points")) {
      s.fit_points.clear();
      for (const auto& row : p.at("points")) {
        if (!row.is_array() || row.size() != 3)
          throw std::runtime_error("config: fit.points rows must be [n_max, fidelity, sigma]");
        s.fit_points.push_back({row[0].get<long>(), row[1].get<double>(), row[2].get<double>()});
      }
    }
  }
  if (j.contains("tomo")) {
    const json& p = j.at("tomo");
    check_keys(p, "tomo", {"fidelity", "shots", "n_bootstrap"});
    read(p, "fidelity", s.tomo_fidelity);
    read(p, "shots", s.tomo_shots);
    read(p, "n_bootstrap", s.tomo_bootstrap);
  }
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("config: parse error in '" + path + "': " + e.what());
  }
  return parse_scenario(j);
}

// Noise parameters specialized to one projection outcome's fitted gate values.
inline noise::NoiseModelParams noise_for_outcome(const Scenario& s, const std::string& outcome) {
  noise::NoiseModelParams p = s.noise;
  const auto it = s.outcomes.find(outcome);
  if (it == s.outcomes.end()) throw std::runtime_error("config: no outcome '" + outcome + "'");
  p.f_ms = it->second.f_ms;
  p.p_sia_false = it->second.p_sia_false;
  return p;
}

}  // namespace qrcell::config
