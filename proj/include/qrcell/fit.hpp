#pragma once

// Weighted nonlinear least squares for the fidelity-vs-n_max models: a damped
// Gauss-Newton (Levenberg-Marquardt) core with numerically differenced
// Jacobians, plus the two concrete model fits and their derived quantities.

#include "qrcell/noise.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrcell::fit {

struct CurvePoint {
  long n_max = 1;
  double fidelity = 0.0;
  double sigma = 0.0;  // 0: unit weight
};

struct FidelityCurve {
  std::vector<CurvePoint> points;

  void validate() const {
    if (points.empty()) throw std::invalid_argument("FidelityCurve: empty");
    long prev = 0;
    for (const auto& pt : points) {
      if (pt.n_max <= prev) throw std::invalid_argument("FidelityCurve: n_max must be strictly increasing");
      if (pt.fidelity < 0.0 || pt.fidelity > 1.0)
        throw std::invalid_argument("FidelityCurve: fidelities must be in [0,1]");
      if (pt.sigma < 0.0) throw std::invalid_argument("FidelityCurve: sigma must be >= 0");
      prev = pt.n_max;
    }
  }
};

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd parameters;
  Eigen::VectorXd std_errors;
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;
  bool converged = false;
  long iterations = 0;
};

using ModelFn = std::function<double(double x, const Eigen::VectorXd& params)>;

struct DataPoint {
  double x = 0.0;
  double y = 0.0;
  double sigma = 0.0;
};

namespace detail {

inline Eigen::VectorXd residuals(const ModelFn& model, const std::vector<DataPoint>& data,
                                 const Eigen::VectorXd& p) {
  Eigen::VectorXd r(static_cast<Eigen::Index>(data.size()));
  for (size_t i = 0; i < data.size(); ++i) {
    const double w = data[i].sigma > 0.0 ? data[i].sigma : 1.0;
    r(static_cast<Eigen::Index>(i)) = (data[i].y - model(data[i].x, p)) / w;
  }
  return r;
}

inline Eigen::MatrixXd jacobian(const ModelFn& model, const std::vector<DataPoint>& data,
                                const Eigen::VectorXd& p, const Eigen::VectorXd& lower,
                                const Eigen::VectorXd& upper) {
  const Eigen::Index np = p.size();
  Eigen::MatrixXd j(static_cast<Eigen::Index>(data.size()), np);
  for (Eigen::Index k = 0; k < np; ++k) {
    const double h = 1e-6 * std::max(std::abs(p(k)), 1.0);
    Eigen::VectorXd hi = p, lo = p;
    hi(k) = std::min(p(k) + h, upper(k));
    lo(k) = std::max(p(k) - h, lower(k));
    const double span = hi(k) - lo(k);
    const Eigen::VectorXd r_hi = residuals(model, data, hi);
    const Eigen::VectorXd r_lo = residuals(model, data, lo);
    j.col(k) = -(r_hi - r_lo) / span;  // d residual / d param = -d model / d param / sigma
  }
  return j;
}

}  // namespace detail

// Damped Gauss-Newton with Marquardt scaling.  Bounds are enforced by
// clipping the proposed step; a clipped or rejected step raises the damping.
inline FitResult least_squares(const ModelFn& model, const std::vector<DataPoint>& data,
                               const Eigen::VectorXd& initial, const Eigen::VectorXd& lower,
                               const Eigen::VectorXd& upper) {
  const Eigen::Index np = initial.size();
  if (np == 0) throw std::invalid_argument("least_squares: no parameters");
  if (lower.size() != np || upper.size() != np)
    throw std::invalid_argument("least_squares: bounds size mismatch");
  for (Eigen::Index k = 0; k < np; ++k)
    if (!(initial(k) >= lower(k) && initial(k) <= upper(k)) || !std::isfinite(initial(k)))
      throw std::invalid_argument("least_squares: initial guess outside bounds");
  if (static_cast<Eigen::Index>(data.size()) < np)
    throw std::invalid_argument("least_squares: fewer points than parameters");

  FitResult result;
  Eigen::VectorXd p = initial;
  Eigen::VectorXd r = detail::residuals(model, data, p);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  const long max_iter = 10000;

  for (long iter = 1; iter <= max_iter; ++iter) {
    result.iterations = iter;
    const Eigen::MatrixXd j = detail::jacobian(model, data, p, lower, upper);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd grad = j.transpose() * r;
    if (grad.lpNorm<Eigen::Infinity>() < 1e-9) {
      result.converged = true;
      break;
    }
    bool stepped = false;
    for (int tries = 0; tries < 50; ++tries) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(grad);
      Eigen::VectorXd cand = p + delta;
      for (Eigen::Index k = 0; k < np; ++k) cand(k) = std::clamp(cand(k), lower(k), upper(k));
      const Eigen::VectorXd r_cand = detail::residuals(model, data, cand);
      const double cost_cand = r_cand.squaredNorm();
      if (cost_cand < cost) {
        const double rel_drop = (cost - cost_cand) / std::max(cost, 1e-300);
        p = cand;
        r = r_cand;
        cost = cost_cand;
        lambda = std::max(lambda / 10.0, 1e-12);
        stepped = true;
        if (rel_drop < 1e-12) result.converged = true;
        break;
      }
      lambda *= 10.0;
      if (lambda > 1e12) break;
    }
    if (result.converged || !stepped) {
      // no strictly improving step exists even as the damping drives the
      // proposal to zero: the point is a minimum to machine precision
      if (!stepped) result.converged = true;
      break;
    }
  }

  result.parameters = p;
  result.residual_norm = std::sqrt(cost);
  const Eigen::MatrixXd j = detail::jacobian(model, data, p, lower, upper);
  const Eigen::MatrixXd jtj = j.transpose() * j;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (!lu.isInvertible()) {
    result.converged = false;
    result.covariance = Eigen::MatrixXd::Constant(np, np, std::numeric_limits<double>::quiet_NaN());
    result.std_errors = Eigen::VectorXd::Constant(np, std::numeric_limits<double>::quiet_NaN());
    return result;
  }
  result.covariance = lu.inverse();
  result.std_errors = result.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
  return result;
}

struct AtomFitFixed {
  double p = 0.00096;
  double eta_850 = 0.899;
};

inline double atom_model_value(long n, double f10, double p_sia_false, const AtomFitFixed& fixed) {
  noise::NoiseModelParams params;
  params.f10 = f10;
  params.p_sia_false = p_sia_false;
  params.eta_850 = fixed.eta_850;
  params.p = fixed.p;
  params.n_max = n;
  return noise::avg_atom_fidelity(params);
}

// Fit {F10, P_SIA_false} of the atom-photon decay model.
inline FitResult fit_atom_model(const FidelityCurve& curve, const AtomFitFixed& fixed) {
  curve.validate();
  if (curve.points.size() < 3) throw std::invalid_argument("fit_atom_model: need at least 3 points");
  std::vector<DataPoint> data;
  for (const auto& pt : curve.points) data.push_back({static_cast<double>(pt.n_max), pt.fidelity, pt.sigma});
  ModelFn model = [&fixed](double x, const Eigen::VectorXd& p) {
    return atom_model_value(static_cast<long>(std::lround(x)), p(0), p(1), fixed);
  };
  Eigen::VectorXd initial(2), lower(2), upper(2);
  initial << std::clamp(curve.points.front().fidelity, 0.25, 1.0), 0.005;
  lower << 0.25, 0.0;
  upper << 1.0, 0.1;
  FitResult result = least_squares(model, data, initial, lower, upper);
  result.names = {"f10", "p_sia_false"};
  return result;
}

struct PpFitFixed {
  double f10 = 0.945;
  double f20 = 0.924;
  double p = 0.00096;
  double eta_850 = 0.899;
};

inline double pp_model_value(long n, double f_ms, double p_sia_false, const PpFitFixed& fixed) {
  noise::NoiseModelParams params;
  params.f10 = fixed.f10;
  params.f20 = fixed.f20;
  params.f_ms = f_ms;
  params.p_sia_false = p_sia_false;
  params.eta_850 = fixed.eta_850;
  params.p = fixed.p;
  params.n_max = n;
  return noise::avg_pp_fidelity(params);
}

struct PpFitResult {
  FitResult fit;
  double f_init = 0.0;        // fitted model evaluated at n_max = 1
  double f_init_error = 0.0;  // delta-method propagation
};

// Fit {F_MS, P_SIA_false} of the photon-pair decay model.
inline PpFitResult fit_pp_model(const FidelityCurve& curve, const PpFitFixed& fixed) {
  curve.validate();
  if (curve.points.size() < 3) throw std::invalid_argument("fit_pp_model: need at least 3 points");
  std::vector<DataPoint> data;
  for (const auto& pt : curve.points) data.push_back({static_cast<double>(pt.n_max), pt.fidelity, pt.sigma});
  ModelFn model = [&fixed](double x, const Eigen::VectorXd& p) {
    return pp_model_value(static_cast<long>(std::lround(x)), p(0), p(1), fixed);
  };
  Eigen::VectorXd initial(2), lower(2), upper(2);
  initial << std::clamp(curve.points.front().fidelity, 0.25, 1.0), 0.005;
  lower << 0.25, 0.0;
  upper << 1.0, 0.1;
  PpFitResult out;
  out.fit = least_squares(model, data, initial, lower, upper);
  out.fit.names = {"f_ms", "p_sia_false"};

  const Eigen::VectorXd& p = out.fit.parameters;
  out.f_init = pp_model_value(1, p(0), p(1), fixed);
  if (out.fit.converged && out.fit.covariance.allFinite()) {
    Eigen::VectorXd grad(2);
    for (Eigen::Index k = 0; k < 2; ++k) {
      const double h = 1e-6 * std::max(std::abs(p(k)), 1.0);
      Eigen::VectorXd hi = p, lo = p;
      hi(k) = std::min(hi(k) + h, upper(k));
      lo(k) = std::max(lo(k) - h, lower(k));
      grad(k) = (pp_model_value(1, hi(0), hi(1), fixed) - pp_model_value(1, lo(0), lo(1), fixed)) /
                (hi(k) - lo(k));
    }
    out.f_init_error = std::sqrt(std::max(0.0, grad.dot(out.fit.covariance * grad)));
  }
  return out;
}

}  // namespace qrcell::fit
