#include "qrcell/noise.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace qrcell;

namespace {

noise::NoiseModelParams table_params(double f_ms, double p_sia_false, long n_max) {
  noise::NoiseModelParams q;
  q.f10 = 0.945;
  q.f20 = 0.924;
  q.f_ms = f_ms;
  q.p_sia_false = p_sia_false;
  q.p = 0.00096;
  q.n_max = n_max;
  return q;
}

entangle::LarmorClock default_clock() {
  entangle::LarmorClock clock{};
  clock.t1 = 1.3e-6;
  clock.t2 = 0.4e-6;
  return clock;
}

}  // namespace

TEST_CASE("false-addressing fixed point", "[noise]") {
  const cmat m = noise::depolarizing_matrix_M();
  CHECK(std::abs(trace_real(m) - 1.0) < 1e-14);
  CHECK(std::abs(m(0, 0).real() - 0.2) < 1e-14);
  CHECK(std::abs(m(1, 1).real() - 0.2) < 1e-14);
  CHECK(std::abs(m(2, 2).real() - 0.3) < 1e-14);
  CHECK(std::abs(m(3, 3).real() - 0.3) < 1e-14);
  CHECK(m.cwiseAbs().sum() == Catch::Approx(1.0).margin(1e-14));  // diagonal
  // overlap with the balanced emission state is exactly 1/4
  const auto clock = default_clock();
  const cvec psi = entangle::atom_photon_state(true, 0.0, clock);
  CHECK(fidelity_with_pure(m, psi) == Catch::Approx(0.25).margin(1e-14));
}

TEST_CASE("iterated map agrees with its closed form", "[noise]") {
  const auto clock = default_clock();
  const cvec psi = entangle::atom_photon_state(true, clock.t1, clock);
  const cmat rho0 = dm(psi);
  const double c = 0.0173;
  for (long k : {0L, 1L, 7L, 40L}) {
    const cmat closed = noise::depolarize_k(rho0, c, k);
    const cmat looped = noise::depolarize_iterated(rho0, c, k);
    CHECK((closed - looped).cwiseAbs().maxCoeff() < 1e-13);
  }
  // fidelity decay formula against the matrix evolution
  const cmat rho20 = noise::depolarize_k(rho0, c, 20);
  CHECK(fidelity_with_pure(rho20, psi) ==
        Catch::Approx(noise::fidelity_after_k(1.0, c, 20)).margin(1e-13));
}

TEST_CASE("trial weights form the truncated geometric distribution", "[noise]") {
  const auto w = noise::trial_weights(0.03, 25);
  REQUIRE(w.size() == 25);
  double sum = 0.0;
  for (double x : w) sum += x;
  CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  CHECK(w[1] / w[0] == Catch::Approx(0.97).margin(1e-12));

  const auto sure = noise::trial_weights(1.0, 5);
  CHECK(sure[0] == Catch::Approx(1.0).margin(1e-14));
  CHECK(sure[1] == Catch::Approx(0.0).margin(1e-14));

  CHECK_THROWS_AS(noise::trial_weights(0.0, 5), std::invalid_argument);
}

TEST_CASE("survival factor limits", "[noise]") {
  const double c = 0.0025;
  const double p = 0.00096;
  // n = 1 has no extra exposures beyond the heralded trial
  CHECK(noise::survival_factor(c, p, 1) == Catch::Approx(1.0 - c).margin(1e-12));
  // long-retry limit
  const double lim = noise::survival_factor_limit(c, p);
  CHECK(noise::survival_factor(c, p, 2000000) == Catch::Approx(lim).margin(1e-9));
  CHECK(lim == Catch::Approx(p * (1.0 - c) / (p + c * (1.0 - p))).margin(1e-15));
}

TEST_CASE("stored-qubit average fidelity: closed form, weighted sum, matrix oracle",
          "[noise]") {
  const auto clock = default_clock();
  const auto q = table_params(0.914, 0.0110, 100);
  const double closed = noise::avg_atom_fidelity(q);
  CHECK(closed == Catch::Approx(0.798812102755707).margin(1e-12));
  CHECK(noise::avg_atom_fidelity_sum(q) == Catch::Approx(closed).margin(1e-12));
  CHECK(noise::avg_atom_fidelity_matrix(q, clock) == Catch::Approx(closed).margin(1e-12));
}

TEST_CASE("pair average fidelity: closed form, weighted sum, matrix oracle", "[noise]") {
  const auto clock = default_clock();
  const auto q = table_params(0.914, 0.0110, 100);
  const double closed = noise::avg_pp_fidelity(q);
  CHECK(closed == Catch::Approx(0.676127124350669).margin(1e-12));
  CHECK(noise::avg_pp_fidelity_sum(q) == Catch::Approx(closed).margin(1e-12));
  CHECK(noise::avg_pp_fidelity_matrix(q, clock) == Catch::Approx(closed).margin(1e-12));
}

TEST_CASE("pair average fidelity matches the expanded form", "[noise]") {
  for (long n : {1L, 10L, 37L, 100L}) {
    const auto q = table_params(0.886, 0.0146, n);
    const double g = noise::survival_factor(q.c(), q.p, q.n_max);
    const double expanded =
        g * (1.0 / 60.0) * q.f20 * (4.0 * q.f10 - 1.0) * (16.0 * q.f_ms - 1.0) +
        (1.0 / 15.0) * (1.0 - q.f_ms - q.f20 / 4.0 + 4.0 * q.f_ms * q.f20);
    CHECK(noise::avg_pp_fidelity(q) == Catch::Approx(expanded).margin(1e-13));
  }
}

TEST_CASE("pair fidelity decreases with the retry cap", "[noise]") {
  double prev = 1.0;
  for (long n : {1L, 3L, 10L, 30L, 100L, 300L}) {
    const double f = noise::avg_pp_fidelity(table_params(0.915, 0.0130, n));
    CHECK(f < prev);
    prev = f;
  }
}

TEST_CASE("gate white-noise weight and its floor", "[noise]") {
  CHECK(noise::ms_mixing_alpha(1.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(noise::ms_mixing_alpha(0.926) == Catch::Approx(16.0 / 15.0 * 0.074).margin(1e-14));
  // a fully mixed 16-dim state has pair fidelity 1/16, so labels below it are invalid
  CHECK_THROWS_AS(noise::ms_mixing_alpha(0.05), std::invalid_argument);
  CHECK(noise::parity_mixing_alpha(1.0) == Catch::Approx(0.0).margin(1e-15));
  CHECK(noise::parity_mixing_alpha(0.25) == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("white admixture endpoints", "[noise]") {
  const cmat rho = dm(basis_ket({0, 1}));
  const cmat same = noise::white_mix(rho, 0.0);
  CHECK((same - rho).cwiseAbs().maxCoeff() < 1e-15);
  const cmat mixed = noise::white_mix(rho, 1.0);
  CHECK((mixed - identity(4) / 4.0).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("noisy gate channel reduces to the ideal gate at unit fidelity", "[noise]") {
  const auto clock = default_clock();
  const cmat rho = dm(entangle::joint_state(clock));
  const cmat ideal = apply_unitary(rho, embed(entangle::ms_map(), {0, 2}, 4));
  const cmat channel = noise::noisy_ms_channel(rho, 1.0);
  CHECK((channel - ideal).cwiseAbs().maxCoeff() < 1e-13);
  CHECK(std::abs(trace_real(noise::noisy_ms_channel(rho, 0.9)) - 1.0) < 1e-13);
}

TEST_CASE("gate fidelity label is the unconditional overlap on ideal inputs", "[noise]") {
  const auto clock = default_clock();
  const cmat rho = dm(entangle::joint_state(clock));
  const cmat after = noise::noisy_ms_channel(rho, 0.926);
  const cvec ideal = embed(entangle::ms_map(), {0, 2}, 4) * entangle::joint_state(clock);
  CHECK(fidelity_with_pure(after, ideal) == Catch::Approx(0.926).margin(1e-12));

  // conditioning on any readout keeps 1 - 3 alpha / 4: a quarter of the white
  // noise weight survives each projection
  const double alpha = noise::ms_mixing_alpha(0.926);
  for (auto outcome : entangle::kAllOutcomes) {
    const auto res = entangle::project_after_gate(after, outcome);
    CHECK(res.probability == Catch::Approx(0.25).margin(1e-12));
    const double fid =
        fidelity_with_pure(res.photon_state, entangle::photon_target(outcome, clock));
    CHECK(fid == Catch::Approx(1.0 - 0.75 * alpha).margin(1e-12));
  }

  // the single-trial closed form reproduces the same unconditional label
  noise::NoiseModelParams q;
  q.f10 = 1.0;
  q.f20 = 1.0;
  q.f_ms = 0.926;
  q.p_sia_false = 0.0;
  q.p = 0.5;
  q.n_max = 1;
  CHECK(noise::avg_pp_fidelity(q) == Catch::Approx(0.926).margin(1e-12));
}

TEST_CASE("depolarized state honors the requested fidelity", "[noise]") {
  const auto clock = default_clock();
  const cvec psi = entangle::atom_photon_state(true, clock.t1, clock);
  for (double f : {0.25, 0.7, 0.945, 1.0}) {
    const cmat rho = noise::depolarized_ap_state(f, clock.t1, clock);
    CHECK(fidelity_with_pure(rho, psi) == Catch::Approx(f).margin(1e-13));
    CHECK(check_density_matrix(rho).ok());
  }
  CHECK_THROWS_AS(noise::depolarized_ap_state(0.2, 0.0, clock), std::invalid_argument);
  CHECK_THROWS_AS(noise::depolarized_ap_state(1.1, 0.0, clock), std::invalid_argument);
}

TEST_CASE("parameter validation", "[noise]") {
  noise::NoiseModelParams q = table_params(0.914, 0.0110, 100);
  CHECK_NOTHROW(q.validate());
  q.n_max = 0;
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
  q = table_params(0.914, 1.5, 100);
  CHECK_THROWS_AS(q.validate(), std::invalid_argument);
}

TEST_CASE("exposure probability from the false-addressing rate", "[noise]") {
  noise::NoiseModelParams q = table_params(0.914, 0.0110, 100);
  CHECK(q.c() == Catch::Approx(0.0110 * 0.899 / 2.0).margin(1e-15));
}

TEST_CASE("retry cap pushing the stored fidelity to one half", "[noise]") {
  noise::NoiseModelParams q;
  q.f10 = 0.945;
  q.p_sia_false = 0.0056;
  q.p = 0.00096;
  auto t = noise::atom_fidelity_threshold(q);
  REQUIRE(t.has_value());
  CHECK(*t == 1495);
  // crossing is genuine: above threshold the average sits below the target
  q.n_max = *t - 1;
  CHECK(noise::avg_atom_fidelity(q) >= 0.5);
  q.n_max = *t;
  CHECK(noise::avg_atom_fidelity(q) < 0.5);

  // without false addressing the fidelity never decays
  noise::NoiseModelParams clean = q;
  clean.p_sia_false = 0.0;
  clean.n_max = 1;
  CHECK_FALSE(noise::atom_fidelity_threshold(clean).has_value());
}

TEST_CASE("retry cap pushing the pair fidelity to one half", "[noise]") {
  struct Row {
    double f_ms;
    double p_sia_false;
    long expect;
  };
  const Row rows[] = {{0.915, 0.0130, 302}, {0.914, 0.0110, 361},
                      {0.871, 0.0120, 284}, {0.886, 0.0146, 243}};
  for (const auto& row : rows) {
    auto q = table_params(row.f_ms, row.p_sia_false, 1);
    auto t = noise::pp_fidelity_threshold(q);
    REQUIRE(t.has_value());
    CHECK(*t == row.expect);
    q.n_max = *t;
    CHECK(noise::avg_pp_fidelity(q) < 0.5);
    q.n_max = *t - 1;
    CHECK(noise::avg_pp_fidelity(q) >= 0.5);
  }
}

TEST_CASE("threshold search degenerate targets", "[noise]") {
  auto q = table_params(0.915, 0.0130, 1);
  // a target above the single-trial value is crossed immediately
  auto t = noise::pp_fidelity_threshold(q, 0.99);
  REQUIRE(t.has_value());
  CHECK(*t == 1);
  // a target below the long-retry limit is never crossed
  CHECK_FALSE(noise::pp_fidelity_threshold(q, 0.05).has_value());
}

TEST_CASE("complement power helper", "[noise]") {
  CHECK(noise::pow1m(1.0, 3) == Catch::Approx(0.0).margin(1e-300));
  CHECK(noise::pow1m(0.3, 0) == Catch::Approx(1.0).margin(1e-15));
  CHECK(noise::pow1m(0.25, 2) == Catch::Approx(0.5625).margin(1e-14));
}
