#pragma once

// Discrete-event Monte Carlo of the generation sequence, the detection
// efficiency budget, the wavepacket signal-to-background estimator, and the
// parity-scan gate-fidelity estimator.
//
// One run_sequence call is one repetition: a single pass that either heralds
// a photon pair and completes the swap or aborts back to cooling.  Detection,
// reset, and false-addressing events are Bernoulli draws; the stored
// atom-photon state is tracked as a density matrix so the per-retry
// depolarization feeds the same channel the closed forms integrate.

#include "qrcell/entangle.hpp"
#include "qrcell/noise.hpp"
#include "qrcell/qcore.hpp"
#include "qrcell/rng.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace qrcell::protocol {

using entangle::BellOutcome;
using entangle::LarmorClock;

enum class StepKind { Cool, Generate1, FluorCheck, Reprep2, Generate2, Pump, Balance, MSGate, Projection };

struct SequenceStep {
  int id;
  double duration_us;
  StepKind kind;
  int on_success;  // next step id; 0 marks sequence end
  int on_failure;  // step id on the rejected branch; 0 if the step cannot fail
};

// Step table of the generation sequence.  Failure branches: no photon or a
// bright veto restarts at cooling; an exhausted retry budget also restarts.
// Step 11 ends the sequence only when both atoms read out (-,-); every other
// pattern needs the second projection pulse.
inline const std::array<SequenceStep, 12>& sequence_table() {
  static const std::array<SequenceStep, 12> steps = {{
      {1, 3.0, StepKind::Cool, 2, 0},
      {2, 2.0, StepKind::Generate1, 3, 1},
      {3, 50.0, StepKind::FluorCheck, 4, 1},
      {4, 4.5, StepKind::Reprep2, 5, 0},
      {5, 2.0, StepKind::Generate2, 6, 4},
      {6, 10.0, StepKind::Pump, 7, 0},
      {7, 10.0, StepKind::Balance, 8, 0},
      {8, 10.0, StepKind::Pump, 9, 0},
      {9, 220.0, StepKind::MSGate, 10, 0},
      {10, 100.0, StepKind::FluorCheck, 11, 1},
      {11, 110.0, StepKind::Projection, 0, 12},
      {12, 110.0, StepKind::Projection, 0, 0},
  }};
  return steps;
}

inline double step_duration_us(int id) { return sequence_table().at(static_cast<size_t>(id - 1)).duration_us; }

struct ProtocolParams {
  double p1 = 0.00114;          // per-shot detection probability, photon of atom 1
  double p2 = 0.00096;          // per-shot detection probability, photon of atom 2
  long n_max = 100;             // retry budget for atom 2
  double p_sia_false = 0.0056;  // per-retry false addressing probability
  double p_sia_reset = 0.99976; // per-retry reset success probability
  double dark_count_rate = 0.0; // Hz; false heralds during the detection windows
  std::uint64_t rng_seed = 42;

  // Initial-state and gate quality for the tracked density matrices.
  double f10 = 1.0;
  double f20 = 1.0;
  double f_ms = 1.0;
  double eta_850 = 0.899;

  void validate() const {
    auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
    if (!in01(p1) || !in01(p2) || !in01(p_sia_false) || !in01(p_sia_reset) || !in01(eta_850))
      throw std::invalid_argument("ProtocolParams: probabilities must be in [0,1]");
    if (!in01(f10) || !in01(f20) || !in01(f_ms) || f10 < 0.25 || f20 < 0.25 || f_ms < 0.25)
      throw std::invalid_argument("ProtocolParams: fidelities must be in [0.25,1]");
    if (n_max < 1) throw std::invalid_argument("ProtocolParams: n_max must be >= 1");
    if (dark_count_rate < 0.0) throw std::invalid_argument("ProtocolParams: dark_count_rate must be >= 0");
  }
};

enum class AbortReason { none, no_herald, max_trials };

struct TrialOutcome {
  bool success = false;
  long trials_used = 0;
  double elapsed_us = 0.0;
  AbortReason abort_reason = AbortReason::none;
  std::optional<BellOutcome> bell_outcome;
  std::optional<cmat> photon_pair_state;  // 4x4 over (photonA, photonB)
  double stored_fidelity = 0.0;           // atom 1 state vs ideal at herald time
};

// One repetition of the sequence.  Veto and balancing acceptance are folded
// into p1/p2 as the efficiency budget defines them, so steps 3 and 6-8 only
// cost time here.  The false-addressing draw precedes the detection draw:
// the reset pulse of step 4 fires on every retry, including the one that
// succeeds.
inline TrialOutcome run_sequence(const ProtocolParams& params, SubstreamRng& rng) {
  params.validate();
  static const LarmorClock clock{};
  TrialOutcome out;
  out.elapsed_us = step_duration_us(1) + step_duration_us(2);
  if (!rng.bernoulli(params.p1)) {
    out.abort_reason = AbortReason::no_herald;
    return out;
  }
  out.elapsed_us += step_duration_us(3);

  const cvec psi1 = entangle::atom_photon_state(true, clock.t1, clock);
  cmat rho1 = noise::depolarized_ap_state(params.f10, clock.t1, clock);
  const double mix = params.eta_850 / 2.0;
  const double window_s = step_duration_us(5) * 1e-6;
  const double p_dark = -std::expm1(-params.dark_count_rate * window_s);

  bool detected = false;
  bool dark_herald = false;
  for (long k = 1; k <= params.n_max; ++k) {
    out.elapsed_us += step_duration_us(4) + step_duration_us(5);
    out.trials_used = k;
    const bool reset_ok = rng.bernoulli(params.p_sia_reset);
    if (rng.bernoulli(params.p_sia_false))
      rho1 = (1.0 - mix) * rho1 + mix * noise::depolarizing_matrix_M();
    if (reset_ok && rng.bernoulli(params.p2)) {
      detected = true;
    } else if (p_dark > 0.0 && rng.bernoulli(p_dark)) {
      detected = true;
      dark_herald = true;
    }
    if (detected) break;
  }
  if (!detected) {
    out.abort_reason = AbortReason::max_trials;
    return out;
  }

  out.stored_fidelity = fidelity_with_pure(rho1, psi1);
  out.elapsed_us += step_duration_us(6) + step_duration_us(7) + step_duration_us(8);

  // A dark-count herald leaves atom 2 unentangled with anything detected.
  const cmat rho2 = dark_herald ? identity(4) / 4.0
                                : noise::depolarized_ap_state(params.f20, clock.t2, clock);
  const cmat after_gate = noise::noisy_ms_channel(kron(rho1, rho2), params.f_ms);
  out.elapsed_us += step_duration_us(9) + step_duration_us(10);

  std::array<double, 4> probs{};
  std::array<entangle::SwapResult, 4> swaps;
  for (size_t i = 0; i < entangle::kAllOutcomes.size(); ++i) {
    swaps[i] = entangle::project_after_gate(after_gate, entangle::kAllOutcomes[i]);
    probs[i] = swaps[i].probability;
  }
  double u = rng.uniform() * (probs[0] + probs[1] + probs[2] + probs[3]);
  size_t pick = 3;
  for (size_t i = 0; i < 4; ++i) {
    if (u < probs[i]) {
      pick = i;
      break;
    }
    u -= probs[i];
  }
  out.bell_outcome = entangle::kAllOutcomes[pick];
  out.photon_pair_state = swaps[pick].photon_state;
  out.elapsed_us += step_duration_us(11);
  if (*out.bell_outcome != BellOutcome::PhiMinus) out.elapsed_us += step_duration_us(12);
  out.success = true;
  return out;
}

struct MonteCarloSummary {
  long n_reps = 0;
  long n_success = 0;
  double pair_probability = 0.0;
  double mean_overhead_time_us = 0.0;  // mean elapsed per repetition
  double rate_estimate_hz = 0.0;       // successes per simulated second
  double mean_stored_fidelity = 0.0;   // over successes
  std::vector<long> trials_histogram;  // index k-1: successes heralded in trial k
  std::map<BellOutcome, long> outcome_counts;
  std::map<BellOutcome, cmat> outcome_mean_states;
};

// Aggregate independent repetitions.  Each repetition draws from its own
// substream of rng_seed, so the aggregate is independent of evaluation order
// and bit-identical for identical seeds.
inline MonteCarloSummary monte_carlo(const ProtocolParams& params, long n_reps) {
  params.validate();
  if (n_reps < 1) throw std::invalid_argument("monte_carlo: n_reps must be >= 1");
  MonteCarloSummary s;
  s.n_reps = n_reps;
  s.trials_histogram.assign(static_cast<size_t>(params.n_max), 0);
  double total_us = 0.0;
  double fid_sum = 0.0;
  std::map<BellOutcome, cmat> state_sums;
  for (long rep = 0; rep < n_reps; ++rep) {
    SubstreamRng rng = make_substream(params.rng_seed, static_cast<std::uint64_t>(rep));
    const TrialOutcome out = run_sequence(params, rng);
    total_us += out.elapsed_us;
    if (!out.success) continue;
    ++s.n_success;
    ++s.trials_histogram[static_cast<size_t>(out.trials_used - 1)];
    fid_sum += out.stored_fidelity;
    ++s.outcome_counts[*out.bell_outcome];
    auto [it, fresh] = state_sums.try_emplace(*out.bell_outcome, *out.photon_pair_state);
    if (!fresh) it->second += *out.photon_pair_state;
  }
  s.pair_probability = static_cast<double>(s.n_success) / static_cast<double>(n_reps);
  s.mean_overhead_time_us = total_us / static_cast<double>(n_reps);
  s.rate_estimate_hz = static_cast<double>(s.n_success) / (total_us * 1e-6);
  if (s.n_success > 0) s.mean_stored_fidelity = fid_sum / static_cast<double>(s.n_success);
  for (auto& [outcome, sum] : state_sums)
    s.outcome_mean_states[outcome] = sum / static_cast<double>(s.outcome_counts[outcome]);
  return s;
}

struct EfficiencyBudget {
  double eta_850 = 1.0;
  double eta_mix = 1.0;
  double eta_sigma = 1.0;
  double eta_halo = 1.0;
  double eta_balance = 1.0;
  double eta_gate = 1.0;
  double eta_fiber = 1.0;
  double t_projection = 1.0;
  double eta_detector = 1.0;

  void validate() const {
    for (double x : {eta_850, eta_mix, eta_sigma, eta_halo, eta_balance, eta_gate, eta_fiber,
                     t_projection, eta_detector})
      if (x <= 0.0 || x > 1.0) throw std::invalid_argument("EfficiencyBudget: factors must be in (0,1]");
  }
};

inline double detection_efficiency(const EfficiencyBudget& b) {
  b.validate();
  return b.eta_850 * b.eta_mix * b.eta_sigma * b.eta_halo * b.eta_balance * b.eta_gate *
         b.eta_fiber * b.t_projection * b.eta_detector;
}

// Two-stage switching extinction of the reset beam: a free-space modulator
// followed by a fiber-coupled one.  The stages multiply; the reset scheme
// needs a system extinction of 1e-10 or better.
struct ExtinctionBudget {
  double r_free_space = 2.76e-6;
  double r_fiber = 1.29e-7;
  double required = 1e-10;

  double product() const { return r_free_space * r_fiber; }
  bool sufficient() const { return product() <= required; }
};

// Signal-to-background ratio of a time-binned wavepacket histogram.  Bins
// before onset_bin estimate the background rate; the full post-onset sum is
// the signal.  Returns +infinity when the pre-onset window is empty.
inline double sbr(const std::vector<double>& histogram, size_t onset_bin) {
  if (onset_bin < 1 || onset_bin >= histogram.size())
    throw std::invalid_argument("sbr: onset must leave at least one bin on each side");
  double pre = 0.0, post = 0.0;
  for (size_t i = 0; i < histogram.size(); ++i) {
    if (histogram[i] < 0.0) throw std::invalid_argument("sbr: counts must be >= 0");
    (i < onset_bin ? pre : post) += histogram[i];
  }
  if (pre == 0.0) return std::numeric_limits<double>::infinity();
  const double background_per_bin = pre / static_cast<double>(onset_bin);
  const double scaled_background = background_per_bin * static_cast<double>(histogram.size() - onset_bin);
  return post / scaled_background;
}

// Gate fidelity from a parity measurement: F = P_DD+SS / 2 + A / 2.
inline double ms_fidelity_from_parity(double amplitude, double p_ddss) {
  if (amplitude < 0.0 || amplitude > 1.0 || p_ddss < 0.0 || p_ddss > 1.0)
    throw std::invalid_argument("ms_fidelity_from_parity: inputs must be in [0,1]");
  return p_ddss / 2.0 + amplitude / 2.0;
}

struct ParityScanResult {
  double amplitude = 0.0;
  double p_ddss = 0.0;
};

namespace detail {

// Analyzer pulse: global pi/2 rotation with phase phi on one qubit.
inline cmat parity_analyzer(double phi) {
  const cplx i(0.0, 1.0);
  cmat r(2, 2);
  r << 1.0, -i * std::exp(cplx(0.0, -phi)), -i * std::exp(cplx(0.0, phi)), 1.0;
  return r / std::sqrt(2.0);
}

inline std::array<double, 4> outcome_probs(const cmat& rho) {
  std::array<double, 4> p{};
  for (int i = 0; i < 4; ++i) p[static_cast<size_t>(i)] = std::max(0.0, std::real(rho(i, i)));
  const double norm = p[0] + p[1] + p[2] + p[3];
  for (double& x : p) x /= norm;
  return p;
}

inline std::array<long, 4> multinomial(const std::array<double, 4>& p, long shots, SubstreamRng& rng) {
  std::array<long, 4> n{};
  for (long s = 0; s < shots; ++s) {
    double u = rng.uniform();
    size_t pick = 3;
    for (size_t i = 0; i < 4; ++i) {
      if (u < p[i]) {
        pick = i;
        break;
      }
      u -= p[i];
    }
    ++n[pick];
  }
  return n;
}

}  // namespace detail

// Parity scan of the two-ion gate.  The gate acts on two freshly prepared
// atoms, producing (1-alpha) |bell><bell| + alpha I/4 with the atomic-label
// mixing strength alpha = 4/3 (1 - f_ms); the even-population measurement P
// and the fitted parity amplitude A then satisfy P/2 + A/2 = f_ms.  With
// rng == nullptr the Born probabilities are used directly (infinite shots).
inline ParityScanResult simulate_parity_scan(double f_ms, const std::vector<double>& phases,
                                             long shots, SubstreamRng* rng) {
  if (phases.size() < 4)
    throw std::invalid_argument("simulate_parity_scan: need at least 4 phases, sinusoid underdetermined");
  if (shots < 1) throw std::invalid_argument("simulate_parity_scan: shots must be >= 1");
  const double alpha = noise::parity_mixing_alpha(f_ms);
  const cmat u_gen = entangle::ms_map().adjoint();  // |++> -> (|++> + i|-->)/sqrt2
  const cmat bell = apply_unitary(dm(kron(basis_ket({0}), basis_ket({0}))), u_gen);
  const cmat rho = noise::white_mix(bell, alpha);

  // Even-parity population without analyzer pulse.
  const auto pop = detail::outcome_probs(rho);
  double p_ddss = pop[0] + pop[3];
  if (rng) {
    const auto n = detail::multinomial(pop, shots, *rng);
    p_ddss = static_cast<double>(n[0] + n[3]) / static_cast<double>(shots);
  }

  // Parity oscillation vs analyzer phase, fitted as a + b sin(2phi) + c cos(2phi).
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Eigen::Vector3d atb = Eigen::Vector3d::Zero();
  for (double phi : phases) {
    const cmat r2 = kron(detail::parity_analyzer(phi), detail::parity_analyzer(phi));
    const auto p = detail::outcome_probs(apply_unitary(rho, r2));
    double parity = p[0] + p[3] - p[1] - p[2];
    if (rng) {
      const auto n = detail::multinomial(p, shots, *rng);
      parity = static_cast<double>(n[0] + n[3] - n[1] - n[2]) / static_cast<double>(shots);
    }
    const Eigen::Vector3d row(1.0, std::sin(2.0 * phi), std::cos(2.0 * phi));
    ata += row * row.transpose();
    atb += row * parity;
  }
  const Eigen::Vector3d coef = ata.ldlt().solve(atb);
  ParityScanResult result;
  result.amplitude = std::min(1.0, std::hypot(coef(1), coef(2)));
  result.p_ddss = p_ddss;
  return result;
}

}  // namespace qrcell::protocol
