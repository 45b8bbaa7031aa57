#include "qrcell/protocol.hpp"
#include "qrcell/rates.hpp"

#include "stats.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qrcell;

namespace {

protocol::ProtocolParams noiseless() {
  protocol::ProtocolParams p;
  p.p1 = 1.0;
  p.p2 = 1.0;
  p.p_sia_false = 0.0;
  p.p_sia_reset = 1.0;
  p.f10 = 1.0;
  p.f20 = 1.0;
  p.f_ms = 1.0;
  return p;
}

protocol::ProtocolParams table_defaults() {
  protocol::ProtocolParams p;
  p.f10 = 0.945;
  p.f20 = 0.924;
  p.f_ms = 0.926;
  return p;
}

}  // namespace

TEST_CASE("step table layout", "[protocol]") {
  const auto& table = protocol::sequence_table();
  REQUIRE(table.size() == 12);
  const double expect[] = {3, 2, 50, 4.5, 2, 10, 10, 10, 220, 100, 110, 110};
  for (size_t i = 0; i < table.size(); ++i) {
    CHECK(table[i].id == static_cast<int>(i + 1));
    CHECK(table[i].duration_us == Catch::Approx(expect[i]).margin(1e-12));
  }
  // failed generation restarts at cooling, a missed detection retries at reset
  CHECK(table[1].on_failure == 1);
  CHECK(table[4].on_failure == 4);
  CHECK(table[4].on_success == 6);
  // only the (-,-) pattern ends after the first projection pulse
  CHECK(table[10].on_success == 0);
  CHECK(table[10].on_failure == 12);
  CHECK(table[11].on_success == 0);
}

TEST_CASE("noiseless sequence heralds on the first trial", "[protocol]") {
  SubstreamRng rng = make_substream(3, 0);
  const auto out = protocol::run_sequence(noiseless(), rng);
  REQUIRE(out.success);
  CHECK(out.trials_used == 1);
  CHECK(out.abort_reason == protocol::AbortReason::none);
  CHECK(out.stored_fidelity == Catch::Approx(1.0).margin(1e-12));
  REQUIRE(out.bell_outcome.has_value());
  REQUIRE(out.photon_pair_state.has_value());
  const entangle::LarmorClock clock{};
  const double fid = fidelity_with_pure(*out.photon_pair_state,
                                        entangle::photon_target(*out.bell_outcome, clock));
  CHECK(fid == Catch::Approx(1.0).margin(1e-12));
  const double base = 3 + 2 + 50 + 6.5 + 30 + 220 + 100 + 110;
  const double expect =
      *out.bell_outcome == entangle::BellOutcome::PhiMinus ? base : base + 110;
  CHECK(out.elapsed_us == Catch::Approx(expect).margin(1e-12));
}

TEST_CASE("aborted branches cost the right amount of time", "[protocol]") {
  auto params = noiseless();
  params.p1 = 0.0;
  SubstreamRng rng = make_substream(3, 1);
  const auto no_herald = protocol::run_sequence(params, rng);
  CHECK_FALSE(no_herald.success);
  CHECK(no_herald.abort_reason == protocol::AbortReason::no_herald);
  CHECK(no_herald.elapsed_us == Catch::Approx(5.0).margin(1e-12));

  params = noiseless();
  params.p2 = 0.0;
  params.n_max = 100;
  const auto exhausted = protocol::run_sequence(params, rng);
  CHECK_FALSE(exhausted.success);
  CHECK(exhausted.abort_reason == protocol::AbortReason::max_trials);
  CHECK(exhausted.trials_used == 100);
  CHECK(exhausted.elapsed_us == Catch::Approx(55.0 + 6.5 * 100).margin(1e-9));
}

TEST_CASE("aggregation is deterministic in the seed", "[protocol]") {
  const auto params = table_defaults();
  const auto a = protocol::monte_carlo(params, 50000);
  const auto b = protocol::monte_carlo(params, 50000);
  CHECK(a.n_success == b.n_success);
  CHECK(a.pair_probability == b.pair_probability);
  CHECK(a.mean_overhead_time_us == b.mean_overhead_time_us);
  CHECK(a.mean_stored_fidelity == b.mean_stored_fidelity);
  CHECK(a.trials_histogram == b.trials_histogram);

  auto reseeded = params;
  reseeded.rng_seed = 43;
  const auto c = protocol::monte_carlo(reseeded, 50000);
  CHECK(c.n_success != a.n_success);  // 50k reps make ties vanishingly unlikely
}

TEST_CASE("aggregate bookkeeping is consistent", "[protocol]") {
  const auto params = table_defaults();
  const auto s = protocol::monte_carlo(params, 300000);
  CHECK(s.n_reps == 300000);
  long hist_total = 0;
  for (long v : s.trials_histogram) hist_total += v;
  CHECK(hist_total == s.n_success);
  long outcome_total = 0;
  for (const auto& [outcome, count] : s.outcome_counts) outcome_total += count;
  CHECK(outcome_total == s.n_success);
  CHECK(s.pair_probability == Catch::Approx(static_cast<double>(s.n_success) / 300000.0)
                                  .margin(1e-15));
  for (const auto& [outcome, rho] : s.outcome_mean_states) {
    CHECK(std::abs(trace_real(rho) - 1.0) < 1e-9);
    CHECK(check_density_matrix(rho, 1e-7).ok());
  }
}

TEST_CASE("heralding statistics match the retry formula", "[protocol]") {
  const auto params = table_defaults();
  const long reps = 200000;
  const auto s = protocol::monte_carlo(params, reps);
  // the reset pulse gates the detection, so the per-trial probability is
  // p2 scaled by the reset survival
  const double pred = rates::p_pair_asyn(params.p1, params.p2 * params.p_sia_reset,
                                         params.n_max);
  const double sigma = std::sqrt(pred * (1.0 - pred) / static_cast<double>(reps));
  CHECK(std::abs(s.pair_probability - pred) < 3.0 * sigma);
}

TEST_CASE("success-averaged stored fidelity tracks the closed form", "[protocol]") {
  const auto params = table_defaults();
  const auto s = protocol::monte_carlo(params, 1000000);
  REQUIRE(s.n_success > 0);
  noise::NoiseModelParams q;
  q.f10 = params.f10;
  q.f20 = params.f20;
  q.f_ms = params.f_ms;
  q.p_sia_false = params.p_sia_false;
  q.p = params.p2 * params.p_sia_reset;
  q.n_max = params.n_max;
  CHECK(std::abs(s.mean_stored_fidelity - noise::avg_atom_fidelity(q)) < 0.005);
}

TEST_CASE("dark counts herald uncorrelated pairs", "[protocol]") {
  auto params = noiseless();
  params.p2 = 0.0;
  params.n_max = 5;
  params.dark_count_rate = 1e9;  // saturates the 2 us window
  SubstreamRng rng = make_substream(5, 0);
  const auto out = protocol::run_sequence(params, rng);
  REQUIRE(out.success);
  REQUIRE(out.photon_pair_state.has_value());
  // atom 2 never fired, so the heralded pair carries no correlations
  const entangle::LarmorClock clock{};
  const double fid = fidelity_with_pure(*out.photon_pair_state,
                                        entangle::photon_target(*out.bell_outcome, clock));
  CHECK(fid < 0.8);
  CHECK(check_density_matrix(*out.photon_pair_state).ok());
}

TEST_CASE("detection efficiency budgets", "[protocol]") {
  protocol::EfficiencyBudget b1;
  b1.eta_850 = 0.899;
  b1.eta_mix = 0.5;
  b1.eta_sigma = 0.6;
  b1.eta_halo = 0.06;
  b1.eta_balance = 2.0 / 3.0;
  b1.eta_gate = 1.0;
  b1.eta_fiber = 0.193;
  b1.t_projection = 0.603;
  b1.eta_detector = 0.91;
  protocol::EfficiencyBudget b2 = b1;
  b2.eta_gate = 0.82;
  b2.eta_fiber = 0.177;
  b2.t_projection = 0.672;
  CHECK(100.0 * protocol::detection_efficiency(b1) == Catch::Approx(0.114250).margin(1e-9));
  CHECK(100.0 * protocol::detection_efficiency(b2) == Catch::Approx(0.095750).margin(1e-9));

  protocol::EfficiencyBudget unit;
  CHECK(protocol::detection_efficiency(unit) == Catch::Approx(1.0).margin(1e-15));
  protocol::EfficiencyBudget bad;
  bad.eta_mix = 0.0;
  CHECK_THROWS_AS(protocol::detection_efficiency(bad), std::invalid_argument);
}

TEST_CASE("signal-to-background estimator", "[protocol]") {
  // flat histogram: post-onset total equals the scaled background estimate
  std::vector<double> flat(100, 5.0);
  CHECK(protocol::sbr(flat, 40) == Catch::Approx(1.0).margin(1e-12));

  std::vector<double> clean(50, 0.0);
  clean[30] = 100.0;
  CHECK(std::isinf(protocol::sbr(clean, 20)));

  CHECK_THROWS_AS(protocol::sbr(flat, 0), std::invalid_argument);
  CHECK_THROWS_AS(protocol::sbr(flat, 100), std::invalid_argument);
}

TEST_CASE("signal-to-background on a synthetic wavepacket", "[protocol]") {
  // 50 ns bins, 741 ns decay, background sized for a ratio of 810
  SubstreamRng rng = make_substream(42, 55);
  const double bg = 10.0;
  const int n_pre = 40;
  const int n_post = 60;
  const double target = 810.0;
  const double r = std::exp(-50.0 / 741.0);
  const double a0 = target * bg * n_post * (1.0 - r) / (1.0 - std::pow(r, n_post));
  std::vector<double> hist;
  for (int i = 0; i < n_pre; ++i)
    hist.push_back(static_cast<double>(teststat::poisson(bg, rng)));
  for (int i = 0; i < n_post; ++i)
    hist.push_back(static_cast<double>(teststat::poisson(bg + a0 * std::pow(r, i), rng)));
  const double est = protocol::sbr(hist, n_pre);
  CHECK(std::abs(est / target - 1.0) < 0.1);
}

TEST_CASE("parity amplitude and population recover the gate fidelity", "[protocol]") {
  CHECK(protocol::ms_fidelity_from_parity(1.0, 1.0) == Catch::Approx(1.0).margin(1e-14));
  CHECK(protocol::ms_fidelity_from_parity(0.89, 0.962) ==
        Catch::Approx(0.926).margin(1e-12));
  CHECK(protocol::ms_fidelity_from_parity(0.0, 0.5) == Catch::Approx(0.25).margin(1e-14));
  CHECK_THROWS_AS(protocol::ms_fidelity_from_parity(1.4, 1.0), std::invalid_argument);
}

TEST_CASE("analytic parity scan is exact", "[protocol]") {
  std::vector<double> phases;
  for (int i = 0; i < 16; ++i) phases.push_back(2.0 * kPi * i / 16.0);
  const auto scan = protocol::simulate_parity_scan(0.926, phases, 100000, nullptr);
  const double alpha = noise::parity_mixing_alpha(0.926);
  CHECK(scan.amplitude == Catch::Approx(1.0 - alpha).margin(1e-12));
  CHECK(scan.p_ddss == Catch::Approx(1.0 - alpha / 2.0).margin(1e-12));
  CHECK(protocol::ms_fidelity_from_parity(scan.amplitude, scan.p_ddss) ==
        Catch::Approx(0.926).margin(1e-12));

  const auto perfect = protocol::simulate_parity_scan(1.0, phases, 100000, nullptr);
  CHECK(perfect.amplitude == Catch::Approx(1.0).margin(1e-12));
  CHECK(perfect.p_ddss == Catch::Approx(1.0).margin(1e-12));

  CHECK_THROWS_AS(protocol::simulate_parity_scan(0.9, {0.0, 1.0, 2.0}, 100, nullptr),
                  std::invalid_argument);
}

TEST_CASE("sampled parity scan converges to the label", "[protocol]") {
  std::vector<double> phases;
  for (int i = 0; i < 16; ++i) phases.push_back(2.0 * kPi * i / 16.0);
  SubstreamRng rng = make_substream(42, 7);
  const auto scan = protocol::simulate_parity_scan(0.926, phases, 100000, &rng);
  const double f = protocol::ms_fidelity_from_parity(scan.amplitude, scan.p_ddss);
  CHECK(std::abs(f - 0.926) < 0.01);
}

TEST_CASE("protocol parameter validation", "[protocol]") {
  protocol::ProtocolParams p;
  CHECK_NOTHROW(p.validate());
  p.p1 = 1.5;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = protocol::ProtocolParams{};
  p.f_ms = 0.1;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p = protocol::ProtocolParams{};
  p.n_max = 0;
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
