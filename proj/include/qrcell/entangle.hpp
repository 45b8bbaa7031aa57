#pragma once

// Atom-photon state construction and entanglement swapping.
//
// The cell stores two ions; each emits one photon, entangling its internal
// Zeeman qubit {|+>, |->} with the photon polarization {|L>, |R>}.  The
// stored atomic phase precesses at the Larmor frequency, so two-qubit states
// carry a time-dependent phase e^{i omega_L t} on the |-,R> component.
// Swapping projects the atom pair onto its Bell basis via the two-ion gate,
// which is modeled as the unitary basis change mapping each atomic Bell
// state to one product state:
//   (|--> + i|++>)/sqrt2 -> |-->     (|++> + i|-->)/sqrt2 -> |++>
//   (|+-> - i|-+>)/sqrt2 -> |+->     (|-+> - i|+->)/sqrt2 -> |-+>
// The heralded photon pair is then left in a Bell state whose phase
// phi_-/phi_+ depends on the two emission times.

#include "qrcell/qcore.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <utility>

namespace qrcell::entangle {

struct LarmorClock {
  double omega_l = 2.0 * kPi * 9.6e6;  // rad/s
  double t1 = 0.0;                     // s, elapsed since photon 1 emission
  double t2 = 0.0;                     // s, elapsed since photon 2 emission

  double phi_minus() const { return omega_l * (t1 - t2) + kPi / 2.0; }
  double phi_plus() const { return omega_l * (t1 + t2) + kPi / 2.0; }

  void validate() const {
    if (omega_l <= 0.0) throw std::invalid_argument("LarmorClock: omega_l must be positive");
    if (t1 < 0.0 || t2 < 0.0) throw std::invalid_argument("LarmorClock: times must be non-negative");
  }
};

enum class BellOutcome { PsiMinus, PsiPlus, PhiMinus, PhiPlus };

constexpr std::array<BellOutcome, 4> kAllOutcomes = {
    BellOutcome::PsiMinus, BellOutcome::PsiPlus, BellOutcome::PhiMinus, BellOutcome::PhiPlus};

inline std::string to_string(BellOutcome o) {
  switch (o) {
    case BellOutcome::PsiMinus: return "psi_minus";
    case BellOutcome::PsiPlus: return "psi_plus";
    case BellOutcome::PhiMinus: return "phi_minus";
    case BellOutcome::PhiPlus: return "phi_plus";
  }
  return "?";
}

// Projective readout result per atom; encoding |+> -> 0, |-> -> 1.
inline std::pair<int, int> atomic_result(BellOutcome o) {
  switch (o) {
    case BellOutcome::PhiMinus: return {1, 1};  // (-,-)
    case BellOutcome::PhiPlus: return {0, 0};   // (+,+)
    case BellOutcome::PsiMinus: return {0, 1};  // (+,-)
    case BellOutcome::PsiPlus: return {1, 0};   // (-,+)
  }
  throw std::logic_error("atomic_result: bad outcome");
}

// Atomic Bell state on (atom1, atom2) associated with each readout.
inline cvec bell_state(BellOutcome o) {
  const cplx i(0.0, 1.0);
  const double s = 1.0 / std::sqrt(2.0);
  switch (o) {
    case BellOutcome::PhiMinus: return s * (basis_ket({1, 1}) + i * basis_ket({0, 0}));
    case BellOutcome::PhiPlus: return s * (basis_ket({0, 0}) + i * basis_ket({1, 1}));
    case BellOutcome::PsiMinus: return s * (basis_ket({0, 1}) - i * basis_ket({1, 0}));
    case BellOutcome::PsiPlus: return s * (basis_ket({1, 0}) - i * basis_ket({0, 1}));
  }
  throw std::logic_error("bell_state: bad outcome");
}

// Two-qubit atom-photon state at elapsed time t.  balanced=false keeps the
// emission amplitudes sqrt(2/3), sqrt(1/3) of the raw decay; balanced=true is
// the state after the imbalance compensation.
inline cvec atom_photon_state(bool balanced, double t, const LarmorClock& clock) {
  if (t < 0.0) throw std::invalid_argument("atom_photon_state: t must be non-negative");
  const cplx phase = std::exp(cplx(0.0, clock.omega_l * t));
  const double a = balanced ? std::sqrt(0.5) : std::sqrt(2.0 / 3.0);
  const double b = balanced ? std::sqrt(0.5) : std::sqrt(1.0 / 3.0);
  return a * basis_ket({0, 0}) + b * phase * basis_ket({1, 1});
}

// Basis change on (atom1, atom2) taking each atomic Bell state to the product
// state of its readout pattern.
inline cmat ms_map() {
  cmat u = cmat::Zero(4, 4);
  for (BellOutcome o : kAllOutcomes) {
    auto [a1, a2] = atomic_result(o);
    u += basis_ket({a1, a2}) * bell_state(o).adjoint();
  }
  return u;
}

// Ideal four-qubit joint state (atom1, photonA, atom2, photonB) built from
// two balanced atom-photon states at the clock's elapsed times.
inline cvec joint_state(const LarmorClock& clock) {
  clock.validate();
  return kron(atom_photon_state(true, clock.t1, clock),
              atom_photon_state(true, clock.t2, clock));
}

// Photon-pair Bell state heralded by each readout, on (photonA, photonB).
inline cvec photon_target(BellOutcome o, const LarmorClock& clock) {
  const double s = 1.0 / std::sqrt(2.0);
  const cplx em = std::exp(cplx(0.0, clock.phi_minus()));
  const cplx ep = std::exp(cplx(0.0, clock.phi_plus()));
  switch (o) {
    case BellOutcome::PsiMinus: return s * (basis_ket({0, 1}) + em * basis_ket({1, 0}));
    case BellOutcome::PsiPlus: return s * (basis_ket({0, 1}) - em * basis_ket({1, 0}));
    case BellOutcome::PhiPlus: return s * (basis_ket({0, 0}) - ep * basis_ket({1, 1}));
    case BellOutcome::PhiMinus: return s * (basis_ket({0, 0}) + ep * basis_ket({1, 1}));
  }
  throw std::logic_error("photon_target: bad outcome");
}

struct SwapResult {
  cmat photon_state;  // 4x4 over (photonA, photonB)
  double probability = 0.0;
};

// Project the atoms of a post-gate four-qubit state onto the outcome's
// readout pattern and trace them out.
inline SwapResult project_after_gate(const cmat& rho_after_gate, BellOutcome outcome) {
  if (rho_after_gate.rows() != 16)
    throw std::invalid_argument("project_after_gate: expected a four-qubit state");
  auto [a1, a2] = atomic_result(outcome);
  const cmat proj = embed(projector(kron(basis_ket({a1}), basis_ket({a2}))), {0, 2}, 4);
  const cmat selected = proj * rho_after_gate * proj;
  const double prob = std::real(selected.trace());
  if (prob <= 0.0) throw std::runtime_error("project_after_gate: outcome has zero probability");
  SwapResult r;
  r.probability = prob;
  r.photon_state = partial_trace_keep(selected, {1, 3}, 4) / prob;
  return r;
}

// Apply the two-ion gate to the atoms of a four-qubit state, project the
// atoms onto the outcome's readout pattern, and trace them out.
inline SwapResult swap(const cmat& rho_joint, BellOutcome outcome, const LarmorClock& clock) {
  clock.validate();
  if (rho_joint.rows() != 16) throw std::invalid_argument("swap: expected a four-qubit state");
  const cmat u = embed(ms_map(), {0, 2}, 4);
  return project_after_gate(apply_unitary(rho_joint, u), outcome);
}

}  // namespace qrcell::entangle
