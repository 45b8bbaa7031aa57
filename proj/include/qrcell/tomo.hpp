#pragma once

// Simulated tomography: forward sampling of measurement counts from a known
// state, linear-inversion reconstruction with physical projection, parametric
// bootstrap error bars, and Larmor rephasing of time-tagged events.
//
// Estimator choice: linear inversion from Pauli expectations, then eigenvalue
// clipping plus trace renormalization.  Inversion is deterministic and its
// analytic-mode round trip is exact, which makes the estimator itself
// testable; the projection guarantees a physical output.  A likelihood-based
// estimator could replace it behind the same interface.

#include "qrcell/entangle.hpp"
#include "qrcell/qcore.hpp"
#include "qrcell/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrcell::tomo {

using entangle::LarmorClock;

enum class Basis { Z, X, Y };

inline char basis_char(Basis b) { return b == Basis::Z ? 'Z' : (b == Basis::X ? 'X' : 'Y'); }

// Rotation bringing each basis onto Z: U B U^dag = Z.
inline cmat basis_rotation(Basis b) {
  const cplx i(0.0, 1.0);
  const double s = 1.0 / std::sqrt(2.0);
  cmat u(2, 2);
  switch (b) {
    case Basis::Z: return identity(2);
    case Basis::X:
      u << s, s, s, -s;
      return u;
    case Basis::Y:
      u << s, -i * s, s, i * s;
      return u;
  }
  throw std::logic_error("basis_rotation: bad basis");
}

struct SettingCounts {
  std::vector<Basis> bases;    // one per qubit, register order
  std::vector<double> counts;  // per outcome index, big-endian bits
  long shots = 0;              // 0: analytic mode, counts hold Born probabilities
};

using CountsTable = std::vector<SettingCounts>;

// All 3^k settings in lexicographic Z < X < Y order.
inline std::vector<std::vector<Basis>> all_settings(int n_qubits) {
  std::vector<std::vector<Basis>> out;
  std::vector<Basis> cur(static_cast<size_t>(n_qubits), Basis::Z);
  const std::array<Basis, 3> order = {Basis::Z, Basis::X, Basis::Y};
  const long total = static_cast<long>(std::pow(3.0, n_qubits));
  for (long idx = 0; idx < total; ++idx) {
    long rem = idx;
    for (int q = n_qubits - 1; q >= 0; --q) {
      cur[static_cast<size_t>(q)] = order[static_cast<size_t>(rem % 3)];
      rem /= 3;
    }
    out.push_back(cur);
  }
  return out;
}

inline std::vector<double> born_probabilities(const cmat& rho, const std::vector<Basis>& bases) {
  const int n = static_cast<int>(bases.size());
  cmat u = basis_rotation(bases[0]);
  for (int q = 1; q < n; ++q) u = kron(u, basis_rotation(bases[static_cast<size_t>(q)])).eval();
  const cmat rotated = apply_unitary(rho, u);
  std::vector<double> p(static_cast<size_t>(rho.rows()));
  for (Eigen::Index i = 0; i < rho.rows(); ++i) p[static_cast<size_t>(i)] = std::max(0.0, std::real(rotated(i, i)));
  double norm = 0.0;
  for (double x : p) norm += x;
  for (double& x : p) x /= norm;
  return p;
}

// Forward model: counts for each requested setting.  rng == nullptr selects
// analytic mode, storing the exact Born probabilities with shots = 0.
inline CountsTable simulate_counts(const cmat& rho, const std::vector<std::vector<Basis>>& settings,
                                   long shots, SubstreamRng* rng) {
  if (settings.empty()) throw std::invalid_argument("simulate_counts: no settings");
  if (rng && shots < 1) throw std::invalid_argument("simulate_counts: shots must be >= 1");
  CountsTable table;
  for (const auto& bases : settings) {
    if (static_cast<Eigen::Index>(1) << bases.size() != rho.rows())
      throw std::invalid_argument("simulate_counts: setting size does not match state");
    SettingCounts sc;
    sc.bases = bases;
    const auto p = born_probabilities(rho, bases);
    if (!rng) {
      sc.counts.assign(p.begin(), p.end());
      sc.shots = 0;
    } else {
      sc.counts.assign(p.size(), 0.0);
      sc.shots = shots;
      for (long s = 0; s < shots; ++s) {
        double u = rng->uniform();
        size_t pick = p.size() - 1;
        for (size_t i = 0; i < p.size(); ++i) {
          if (u < p[i]) {
            pick = i;
            break;
          }
          u -= p[i];
        }
        sc.counts[pick] += 1.0;
      }
    }
    table.push_back(std::move(sc));
  }
  return table;
}

struct TomographyResult {
  cmat rho;
  double fidelity = 0.0;
  double fidelity_error = 0.0;
  double purity = 0.0;
  double purity_error = 0.0;
  long n_bootstrap = 0;
  double fidelity_linear = 0.0;  // before physical projection
  double clipped_mass = 0.0;     // total negative eigenvalue weight removed
};

namespace detail {

inline std::string setting_name(const std::vector<Basis>& bases) {
  std::string s;
  for (Basis b : bases) s.push_back(basis_char(b));
  return s;
}

// Pauli expectation <P> for the string with X/Y/Z on `active` positions,
// identity elsewhere, estimated from the given setting's frequencies.
inline double pauli_expectation(const SettingCounts& sc, const std::vector<bool>& active) {
  const size_t n = sc.bases.size();
  double total = 0.0;
  for (double c : sc.counts) total += c;
  double e = 0.0;
  for (size_t out = 0; out < sc.counts.size(); ++out) {
    int sign = 1;
    for (size_t q = 0; q < n; ++q) {
      const bool bit = (out >> (n - 1 - q)) & 1u;
      if (active[q] && bit) sign = -sign;
    }
    e += sign * sc.counts[out];
  }
  return e / total;
}

inline cmat pauli_matrix(Basis b) {
  switch (b) {
    case Basis::Z: return pauli_z();
    case Basis::X: return pauli_x();
    case Basis::Y: return pauli_y();
  }
  throw std::logic_error("pauli_matrix: bad basis");
}

}  // namespace detail

// Linear inversion: rho = 2^-k sum_P <P> P over all 4^k Pauli strings, each
// <P> read from the setting that measures the string's bases with Z filling
// the identity slots.  Then clip negative eigenvalues and renormalize.
inline TomographyResult reconstruct(const CountsTable& counts, const cvec* target = nullptr) {
  if (counts.empty()) throw std::invalid_argument("reconstruct: empty counts");
  const int n = static_cast<int>(counts[0].bases.size());
  const Eigen::Index dim = static_cast<Eigen::Index>(1) << n;

  std::map<std::string, const SettingCounts*> by_name;
  for (const auto& sc : counts) {
    if (static_cast<int>(sc.bases.size()) != n)
      throw std::invalid_argument("reconstruct: inconsistent setting sizes");
    by_name[detail::setting_name(sc.bases)] = &sc;
  }
  std::vector<std::string> missing;
  for (const auto& bases : all_settings(n))
    if (!by_name.count(detail::setting_name(bases))) missing.push_back(detail::setting_name(bases));
  if (!missing.empty()) {
    std::ostringstream os;
    os << "reconstruct: incomplete settings, missing";
    for (const auto& m : missing) os << ' ' << m;
    throw std::invalid_argument(os.str());
  }

  cmat rho = cmat::Zero(dim, dim);
  const std::array<Basis, 4> letters = {Basis::Z, Basis::X, Basis::Y, Basis::Z};  // index 0: identity slot
  const long n_strings = 1L << (2 * n);  // 4^n
  for (long code = 0; code < n_strings; ++code) {
    std::vector<Basis> setting(static_cast<size_t>(n));
    std::vector<bool> active(static_cast<size_t>(n));
    cmat op = cmat::Ones(1, 1);
    long rem = code;
    for (int q = n - 1; q >= 0; --q) {
      const int letter = static_cast<int>(rem % 4);
      rem /= 4;
      active[static_cast<size_t>(q)] = letter != 0;
      setting[static_cast<size_t>(q)] = letters[static_cast<size_t>(letter)];
    }
    for (int q = 0; q < n; ++q) {
      const cmat factor = active[static_cast<size_t>(q)]
                              ? detail::pauli_matrix(setting[static_cast<size_t>(q)])
                              : identity(2);
      op = kron(op, factor).eval();
    }
    const double e = detail::pauli_expectation(*by_name.at(detail::setting_name(setting)), active);
    rho += e * op;
  }
  rho /= static_cast<double>(dim);

  TomographyResult result;
  if (target) result.fidelity_linear = std::real(((*target).adjoint() * rho * (*target))(0, 0));

  Eigen::SelfAdjointEigenSolver<cmat> es((rho + rho.adjoint()) / 2.0);
  Eigen::VectorXd vals = es.eigenvalues();
  for (Eigen::Index i = 0; i < vals.size(); ++i) {
    if (vals(i) < 0.0) {
      result.clipped_mass += -vals(i);
      vals(i) = 0.0;
    }
  }
  const double trace = vals.sum();
  if (trace <= 0.0) throw std::runtime_error("reconstruct: degenerate counts, zero trace after clipping");
  vals /= trace;
  result.rho = es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
  result.purity = purity(result.rho);
  if (target) result.fidelity = fidelity_with_pure(result.rho, *target);
  return result;
}

// Parametric bootstrap: resample each setting's counts from its observed
// frequencies, reconstruct, and take standard deviations.  Analytic-mode
// counts carry no sampling noise, so the error bars are zero.
inline void bootstrap(TomographyResult& result, const CountsTable& counts, long n_resamples,
                      SubstreamRng& rng, const cvec* target = nullptr) {
  if (n_resamples < 100) throw std::invalid_argument("bootstrap: need at least 100 resamples");
  result.n_bootstrap = n_resamples;
  if (std::all_of(counts.begin(), counts.end(), [](const SettingCounts& s) { return s.shots == 0; })) {
    result.fidelity_error = 0.0;
    result.purity_error = 0.0;
    return;
  }
  double f_sum = 0.0, f_sq = 0.0, p_sum = 0.0, p_sq = 0.0;
  for (long b = 0; b < n_resamples; ++b) {
    CountsTable resampled = counts;
    for (auto& sc : resampled) {
      if (sc.shots == 0) continue;
      double total = 0.0;
      for (double c : sc.counts) total += c;
      std::vector<double> p(sc.counts.size());
      for (size_t i = 0; i < p.size(); ++i) p[i] = sc.counts[i] / total;
      std::vector<double> fresh(sc.counts.size(), 0.0);
      for (long s = 0; s < sc.shots; ++s) {
        double u = rng.uniform();
        size_t pick = p.size() - 1;
        for (size_t i = 0; i < p.size(); ++i) {
          if (u < p[i]) {
            pick = i;
            break;
          }
          u -= p[i];
        }
        fresh[pick] += 1.0;
      }
      sc.counts = std::move(fresh);
    }
    const TomographyResult r = reconstruct(resampled, target);
    f_sum += r.fidelity;
    f_sq += r.fidelity * r.fidelity;
    p_sum += r.purity;
    p_sq += r.purity * r.purity;
  }
  const double nb = static_cast<double>(n_resamples);
  result.fidelity_error = std::sqrt(std::max(0.0, f_sq / nb - (f_sum / nb) * (f_sum / nb)));
  result.purity_error = std::sqrt(std::max(0.0, p_sq / nb - (p_sum / nb) * (p_sum / nb)));
}

// Undo the Larmor precession accumulated by a time-tagged atom-photon event,
// so all events reconstruct the t = 0 state.
inline cmat larmor_rephase(const cmat& rho_atom_photon, double detection_time, const LarmorClock& clock) {
  if (rho_atom_photon.rows() != 4) throw std::invalid_argument("larmor_rephase: expected a two-qubit state");
  if (detection_time < 0.0) throw std::invalid_argument("larmor_rephase: time must be non-negative");
  cmat u = cmat::Zero(2, 2);
  u(0, 0) = 1.0;
  u(1, 1) = std::exp(cplx(0.0, -clock.omega_l * detection_time));
  return apply_unitary(rho_atom_photon, embed(u, {0}, 2));
}

}  // namespace qrcell::tomo
