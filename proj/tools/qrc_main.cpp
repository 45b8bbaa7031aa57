// Command-line front end.  Subcommands evaluate the library over a scenario
// config and emit plot-ready tables; the CLI adds no computation of its own,
// so every row can be re-derived by calling the module functions directly.
//
// Exit codes: 0 success, 1 config or usage error, 2 numerical non-convergence.

#include "qrcell/qrcell.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace qrcell;

namespace {

struct Options {
  std::string config_path;
  std::string out_path;
  std::string curve_path;
  std::string format = "csv";
  std::uint64_t seed = config::kDefaultSeed;
  bool seed_set = false;
  long reps = 100000;
};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

config::Scenario load(const Options& opt) {
  if (opt.config_path.empty()) return config::Scenario{};
  return config::load_scenario(opt.config_path);
}

void emit(const Options& opt, const std::string& content) {
  if (opt.out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream out(opt.out_path);
  if (!out) throw std::runtime_error("cannot open output file '" + opt.out_path + "'");
  out << content;
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
  return out.str();
}

std::string json_text(const config::json& j) { return j.dump(2) + "\n"; }

const entangle::LarmorClock kClock{};

int cmd_simulate(const Options& opt) {
  const auto s = load(opt);
  auto params = s.protocol;
  if (opt.seed_set) params.rng_seed = opt.seed;
  const auto sum = protocol::monte_carlo(params, opt.reps);

  const double p_eff = params.p2 * params.p_sia_reset;
  const double predicted = rates::p_pair_asyn(params.p1, p_eff, params.n_max);
  noise::NoiseModelParams q;
  q.f10 = params.f10;
  q.f20 = params.f20;
  q.f_ms = params.f_ms;
  q.p_sia_false = params.p_sia_false;
  q.eta_850 = params.eta_850;
  q.p = p_eff;
  q.n_max = params.n_max;
  const double predicted_stored = noise::avg_atom_fidelity(q);

  config::json outcomes = config::json::object();
  for (const auto& [outcome, count] : sum.outcome_counts) {
    config::json entry;
    entry["count"] = count;
    const auto it = sum.outcome_mean_states.find(outcome);
    if (it != sum.outcome_mean_states.end())
      entry["fidelity"] =
          fidelity_with_pure(it->second, entangle::photon_target(outcome, kClock));
    outcomes[entangle::to_string(outcome)] = entry;
  }

  if (opt.format == "json") {
    config::json j;
    j["command"] = "simulate";
    j["seed"] = params.rng_seed;
    j["reps"] = sum.n_reps;
    j["n_success"] = sum.n_success;
    j["pair_probability"] = sum.pair_probability;
    j["predicted_pair_probability"] = predicted;
    j["rate_hz"] = sum.rate_estimate_hz;
    j["mean_elapsed_us"] = sum.mean_overhead_time_us;
    j["mean_stored_fidelity"] = sum.mean_stored_fidelity;
    j["predicted_stored_fidelity"] = predicted_stored;
    j["outcomes"] = outcomes;
    emit(opt, json_text(j));
    return 0;
  }
  std::vector<std::vector<std::string>> rows = {
      {"seed", std::to_string(params.rng_seed)},
      {"reps", std::to_string(sum.n_reps)},
      {"n_success", std::to_string(sum.n_success)},
      {"pair_probability", num(sum.pair_probability)},
      {"predicted_pair_probability", num(predicted)},
      {"rate_hz", num(sum.rate_estimate_hz)},
      {"mean_elapsed_us", num(sum.mean_overhead_time_us)},
      {"mean_stored_fidelity", num(sum.mean_stored_fidelity)},
      {"predicted_stored_fidelity", num(predicted_stored)},
  };
  for (const auto& [outcome, count] : sum.outcome_counts)
    rows.push_back({"count_" + entangle::to_string(outcome), std::to_string(count)});
  for (const auto& [outcome, rho] : sum.outcome_mean_states)
    rows.push_back({"fidelity_" + entangle::to_string(outcome),
                    num(fidelity_with_pure(rho, entangle::photon_target(outcome, kClock)))});
  emit(opt, csv_table({"metric", "value"}, rows));
  return 0;
}

int cmd_scan_nmax(const Options& opt) {
  const auto s = load(opt);
  std::vector<std::string> header = {"n_max", "f_atom1"};
  for (const auto& [name, params] : s.outcomes) header.push_back("f_pp_" + name);
  header.push_back("p_pair");

  config::json jrows = config::json::array();
  std::vector<std::vector<std::string>> rows;
  for (long n : s.n_max_grid) {
    auto q = s.noise;
    q.n_max = n;
    config::json jrow;
    jrow["n_max"] = n;
    std::vector<std::string> row = {std::to_string(n)};
    const double f_atom = noise::avg_atom_fidelity(q);
    jrow["f_atom1"] = f_atom;
    row.push_back(num(f_atom));
    config::json jpp = config::json::object();
    for (const auto& [name, op] : s.outcomes) {
      auto qo = config::noise_for_outcome(s, name);
      qo.n_max = n;
      const double f = noise::avg_pp_fidelity(qo);
      jpp[name] = f;
      row.push_back(num(f));
    }
    jrow["f_pp"] = jpp;
    const double p_pair = rates::p_pair_asyn(s.protocol.p1, s.protocol.p2, n);
    jrow["p_pair"] = p_pair;
    row.push_back(num(p_pair));
    jrows.push_back(jrow);
    rows.push_back(row);
  }
  if (opt.format == "json") {
    config::json j;
    j["command"] = "scan-nmax";
    j["rows"] = jrows;
    emit(opt, json_text(j));
  } else {
    emit(opt, csv_table(header, rows));
  }
  return 0;
}

int cmd_scan_transmission(const Options& opt) {
  const auto s = load(opt);
  config::json jrows = config::json::array();
  std::vector<std::vector<std::string>> rows;
  for (double p_t : s.transmission_grid) {
    const double length_km = s.channel.length_for_transmission(p_t);
    const double asyn = rates::p_pair_asyn(s.protocol.p1 * p_t, s.protocol.p2 * p_t,
                                           s.protocol.n_max);
    const double syn = rates::p_pair_syn(s.protocol.p1 * p_t, s.protocol.p2 * p_t);
    const double limit = s.protocol.p1 * p_t;
    config::json jrow;
    jrow["p_t"] = p_t;
    jrow["length_km"] = length_km;
    jrow["p_pair_asyn"] = asyn;
    jrow["p_pair_syn"] = syn;
    jrow["p_pair_limit"] = limit;
    jrows.push_back(jrow);
    rows.push_back({num(p_t), num(length_km), num(asyn), num(syn), num(limit)});
  }
  if (opt.format == "json") {
    config::json j;
    j["command"] = "scan-transmission";
    j["rows"] = jrows;
    emit(opt, json_text(j));
  } else {
    emit(opt, csv_table({"p_t", "length_km", "p_pair_asyn", "p_pair_syn", "p_pair_limit"}, rows));
  }
  return 0;
}

int cmd_thresholds(const Options& opt) {
  const auto s = load(opt);
  config::json jrows = config::json::array();
  std::vector<std::vector<std::string>> rows;

  auto add_row = [&](const std::string& kind, const std::string& which, double p,
                     const std::optional<long>& n, const std::optional<double>& ratio) {
    config::json jrow;
    jrow["kind"] = kind;
    jrow["case"] = which;
    jrow["p"] = p;
    if (n)
      jrow["n_threshold"] = *n;
    else
      jrow["n_threshold"] = nullptr;
    if (ratio)
      jrow["best_ratio"] = *ratio;
    else
      jrow["best_ratio"] = nullptr;
    jrows.push_back(jrow);
    rows.push_back({kind, which, num(p), n ? std::to_string(*n) : "never",
                    ratio ? num(*ratio) : ""});
  };

  // stored-qubit and pair fidelity caps; the decay rate is set by the
  // second-photon probability, with the first-photon choice reported alongside
  for (double p : {s.noise.p, s.protocol.p1}) {
    const std::string kind = p == s.noise.p ? "fidelity" : "fidelity_sensitivity";
    auto atom = s.noise;
    atom.p = p;
    add_row(kind, "atom1", p, noise::atom_fidelity_threshold(atom), std::nullopt);
    for (const auto& [name, op] : s.outcomes) {
      auto q = config::noise_for_outcome(s, name);
      q.p = p;
      add_row(kind, "pp_" + name, p, noise::pp_fidelity_threshold(q), std::nullopt);
    }
  }

  for (double scale : {1.0, 3.4}) {
    auto scenario = s.rate;
    scenario.p = s.rate.p * scale;
    const std::string suffix = scale == 1.0 ? "base" : "p_x3.4";
    for (auto kind : {rates::RateKind::fully_asyn, rates::RateKind::semi_asyn}) {
      const auto res = rates::superiority_threshold(scenario, kind);
      const std::string which =
          (kind == rates::RateKind::fully_asyn ? "rate_fully_asyn_" : "rate_semi_asyn_") + suffix;
      add_row("rate", which, scenario.p, res.n_min, res.best_ratio);
    }
  }

  if (opt.format == "json") {
    config::json j;
    j["command"] = "thresholds";
    j["rows"] = jrows;
    emit(opt, json_text(j));
  } else {
    emit(opt, csv_table({"kind", "case", "p", "n_threshold", "best_ratio"}, rows));
  }
  return 0;
}

fit::FidelityCurve load_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open curve file '" + path + "'");
  fit::FidelityCurve curve;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string a, b, c;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c))
      throw std::runtime_error("curve rows must be n_max,fidelity,sigma");
    try {
      curve.points.push_back({std::stol(a), std::stod(b), std::stod(c)});
    } catch (const std::exception&) {
      if (curve.points.empty() && a.find_first_not_of("0123456789 \t") != std::string::npos)
        continue;  // header line
      throw std::runtime_error("curve rows must be n_max,fidelity,sigma");
    }
  }
  curve.validate();
  return curve;
}

int cmd_fit(const Options& opt) {
  const auto s = load(opt);
  fit::FidelityCurve curve;
  if (!opt.curve_path.empty()) {
    curve = load_curve_csv(opt.curve_path);
  } else {
    curve.points = s.fit_points;
    if (curve.points.empty())
      throw std::runtime_error("fit needs --curve or fit.points in the config");
  }

  fit::FitResult result;
  double f_init = 0.0;
  double f_init_error = 0.0;
  if (s.fit_model == "atom") {
    fit::AtomFitFixed fixed;
    fixed.p = s.noise.p;
    fixed.eta_850 = s.noise.eta_850;
    result = fit::fit_atom_model(curve, fixed);
  } else {
    fit::PpFitFixed fixed;
    fixed.f10 = s.noise.f10;
    fixed.f20 = s.noise.f20;
    fixed.p = s.noise.p;
    fixed.eta_850 = s.noise.eta_850;
    const auto pp = fit::fit_pp_model(curve, fixed);
    result = pp.fit;
    f_init = pp.f_init;
    f_init_error = pp.f_init_error;
  }

  if (opt.format == "json") {
    config::json j;
    j["command"] = "fit";
    j["model"] = s.fit_model;
    j["converged"] = result.converged;
    j["iterations"] = result.iterations;
    j["residual_norm"] = result.residual_norm;
    config::json params = config::json::object();
    for (size_t i = 0; i < result.names.size(); ++i) {
      config::json entry;
      entry["value"] = result.parameters(static_cast<Eigen::Index>(i));
      entry["std_error"] = result.std_errors(static_cast<Eigen::Index>(i));
      params[result.names[i]] = entry;
    }
    j["parameters"] = params;
    config::json cov = config::json::array();
    for (Eigen::Index r = 0; r < result.covariance.rows(); ++r) {
      config::json line = config::json::array();
      for (Eigen::Index c = 0; c < result.covariance.cols(); ++c) line.push_back(result.covariance(r, c));
      cov.push_back(line);
    }
    j["covariance"] = cov;
    if (s.fit_model == "pp") {
      j["f_init"] = f_init;
      j["f_init_error"] = f_init_error;
    }
    emit(opt, json_text(j));
  } else {
    std::vector<std::vector<std::string>> rows = {
        {"model", s.fit_model, ""},
        {"converged", result.converged ? "true" : "false", ""},
        {"iterations", std::to_string(result.iterations), ""},
        {"residual_norm", num(result.residual_norm), ""},
    };
    for (size_t i = 0; i < result.names.size(); ++i)
      rows.push_back({result.names[i], num(result.parameters(static_cast<Eigen::Index>(i))),
                      num(result.std_errors(static_cast<Eigen::Index>(i)))});
    if (s.fit_model == "pp") rows.push_back({"f_init", num(f_init), num(f_init_error)});
    emit(opt, csv_table({"name", "value", "std_error"}, rows));
  }
  return result.converged ? 0 : 2;
}

int cmd_tomography(const Options& opt) {
  const auto s = load(opt);
  const cmat rho = noise::depolarized_ap_state(s.tomo_fidelity, 0.0, kClock);
  const cvec target = entangle::atom_photon_state(true, 0.0, kClock);
  const auto settings = tomo::all_settings(2);

  tomo::CountsTable counts;
  if (s.tomo_shots == 0) {
    counts = tomo::simulate_counts(rho, settings, 0, nullptr);
  } else {
    SubstreamRng rng = make_substream(opt.seed, 11);
    counts = tomo::simulate_counts(rho, settings, s.tomo_shots, &rng);
  }
  auto result = tomo::reconstruct(counts, &target);
  if (s.tomo_shots > 0 && s.tomo_bootstrap >= 100) {
    SubstreamRng rng = make_substream(opt.seed, 12);
    tomo::bootstrap(result, counts, s.tomo_bootstrap, rng, &target);
  }

  if (opt.format == "json") {
    config::json j;
    j["command"] = "tomography";
    j["prepared_fidelity"] = s.tomo_fidelity;
    j["shots"] = s.tomo_shots;
    j["seed"] = opt.seed;
    j["fidelity"] = result.fidelity;
    j["fidelity_error"] = result.fidelity_error;
    j["purity"] = result.purity;
    j["purity_error"] = result.purity_error;
    j["fidelity_linear"] = result.fidelity_linear;
    j["clipped_mass"] = result.clipped_mass;
    j["n_bootstrap"] = result.n_bootstrap;
    config::json jrho = config::json::array();
    for (Eigen::Index r = 0; r < result.rho.rows(); ++r) {
      config::json line = config::json::array();
      for (Eigen::Index c = 0; c < result.rho.cols(); ++c)
        line.push_back(config::json::array({result.rho(r, c).real(), result.rho(r, c).imag()}));
      jrho.push_back(line);
    }
    j["rho"] = jrho;
    emit(opt, json_text(j));
  } else {
    std::vector<std::vector<std::string>> rows = {
        {"prepared_fidelity", num(s.tomo_fidelity)},
        {"shots", std::to_string(s.tomo_shots)},
        {"seed", std::to_string(opt.seed)},
        {"fidelity", num(result.fidelity)},
        {"fidelity_error", num(result.fidelity_error)},
        {"purity", num(result.purity)},
        {"purity_error", num(result.purity_error)},
        {"fidelity_linear", num(result.fidelity_linear)},
        {"clipped_mass", num(result.clipped_mass)},
        {"n_bootstrap", std::to_string(result.n_bootstrap)},
    };
    emit(opt, csv_table({"metric", "value"}, rows));
  }
  return 0;
}

int cmd_budget(const Options& opt) {
  const auto s = load(opt);
  const protocol::ExtinctionBudget ext;
  const double e1 = protocol::detection_efficiency(s.budget_atom1);
  const double e2 = protocol::detection_efficiency(s.budget_atom2);

  auto factors = [](const protocol::EfficiencyBudget& b) {
    return std::vector<std::pair<std::string, double>>{
        {"eta_850", b.eta_850},           {"eta_mix", b.eta_mix},
        {"eta_sigma", b.eta_sigma},       {"eta_halo", b.eta_halo},
        {"eta_balance", b.eta_balance},   {"eta_gate", b.eta_gate},
        {"eta_fiber", b.eta_fiber},       {"t_projection", b.t_projection},
        {"eta_detector", b.eta_detector},
    };
  };

  if (opt.format == "json") {
    config::json j;
    j["command"] = "budget";
    for (const auto& [label, budget, eff] :
         {std::tuple{"atom1", &s.budget_atom1, e1}, std::tuple{"atom2", &s.budget_atom2, e2}}) {
      config::json side;
      for (const auto& [name, value] : factors(*budget)) side[name] = value;
      side["detection_efficiency"] = eff;
      j[label] = side;
    }
    config::json jext;
    jext["r_free_space"] = ext.r_free_space;
    jext["r_fiber"] = ext.r_fiber;
    jext["product"] = ext.product();
    jext["required"] = ext.required;
    jext["sufficient"] = ext.sufficient();
    j["reset_extinction"] = jext;
    emit(opt, json_text(j));
  } else {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [label, budget, eff] :
         {std::tuple{"atom1", &s.budget_atom1, e1}, std::tuple{"atom2", &s.budget_atom2, e2}}) {
      for (const auto& [name, value] : factors(*budget))
        rows.push_back({label, name, num(value)});
      rows.push_back({label, "detection_efficiency", num(eff)});
    }
    rows.push_back({"reset_extinction", "r_free_space", num(ext.r_free_space)});
    rows.push_back({"reset_extinction", "r_fiber", num(ext.r_fiber)});
    rows.push_back({"reset_extinction", "product", num(ext.product())});
    rows.push_back({"reset_extinction", "required", num(ext.required)});
    rows.push_back({"reset_extinction", "sufficient", ext.sufficient() ? "true" : "false"});
    emit(opt, csv_table({"section", "name", "value"}, rows));
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Repeater-cell analysis: closed-form fidelity and rate models, "
      "discrete-event simulation, tomography, and model fits"};
  app.fallthrough();
  app.require_subcommand(1);

  Options opt;
  app.add_option("--config", opt.config_path, "Scenario config (JSON); defaults when omitted");
  app.add_option("--out", opt.out_path, "Output file; stdout when omitted");
  app.add_option("--format", opt.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_option("--seed", opt.seed, "Random seed for sampling commands")
      ->capture_default_str();
  app.add_option("--reps", opt.reps, "Monte Carlo repetitions (simulate)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "Discrete-event Monte Carlo of the sequence");
  auto* scan_nmax = app.add_subcommand("scan-nmax", "Fidelities and pair probability vs retry cap");
  auto* scan_tr = app.add_subcommand("scan-transmission", "Pair probabilities vs channel transmission");
  auto* thresholds = app.add_subcommand("thresholds", "Fidelity and rate-superiority retry caps");
  auto* fit_cmd = app.add_subcommand("fit", "Weighted fit of a fidelity-vs-n_max curve");
  fit_cmd->add_option("--curve", opt.curve_path, "Curve CSV (n_max,fidelity,sigma); falls back to fit.points");
  auto* tomography = app.add_subcommand("tomography", "Closed-loop state tomography");
  auto* budget = app.add_subcommand("budget", "Detection-efficiency and extinction budgets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  opt.seed_set = app.count("--seed") > 0;

  try {
    if (simulate->parsed()) return cmd_simulate(opt);
    if (scan_nmax->parsed()) return cmd_scan_nmax(opt);
    if (scan_tr->parsed()) return cmd_scan_transmission(opt);
    if (thresholds->parsed()) return cmd_thresholds(opt);
    if (fit_cmd->parsed()) return cmd_fit(opt);
    if (tomography->parsed()) return cmd_tomography(opt);
    if (budget->parsed()) return cmd_budget(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cerr << "error: no command\n";
  return 1;
}
