#pragma once

/// @file mls.hpp
/// Weighted least-squares quadratic reconstruction: nodal MLS and the
/// radial-component fit on edge midpoints, optionally augmented with
/// normal-derivative rows for faces that touch a prescribed-velocity
/// boundary. Fits are returned as linear functionals over the samples.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "mcd/geometry.hpp"

namespace mcd {

/// Radial component 2 (x_eval - x_ref) . u.
inline double radial_component(const Vec2& x_ref, const Vec2& x_eval, const Vec2& u) {
  return 2.0 * dot(x_eval - x_ref, u);
}

/// Quadratic basis [1, xi, eta, xi^2, xi eta, eta^2] in coordinates scaled by `scale`.
struct BasisSpec {
  static constexpr int kTerms = 6;
  double scale = 1.0;

  using Row = Eigen::Matrix<double, kTerms, 1>;

  Row values(const Vec2& rel) const {
    const double xi = rel.x / scale;
    const double eta = rel.y / scale;
    Row b;
    b << 1.0, xi, eta, xi * xi, xi * eta, eta * eta;
    return b;
  }

  /// n . grad_xi b (derivative with respect to the scaled coordinates).
  Row normal_derivative(const Vec2& rel, const Vec2& n) const {
    const double xi = rel.x / scale;
    const double eta = rel.y / scale;
    Row b;
    b << 0.0, n.x, n.y, 2.0 * n.x * xi, n.x * eta + n.y * xi, 2.0 * n.y * eta;
    return b;
  }
};

/// Quartic bump w(d) = (1 - (d/r_e)^2)^2 on d < r_e.
/// Quartic bump of support `radius`, optionally tapered by exp(-(d/taper)^2).
struct WeightSpec {
  double radius = 1.0;
  double taper = 0.0;  // 0 disables the Gaussian factor

  double operator()(double d) const {
    if (d >= radius) return 0.0;
    const double s = 1.0 - (d / radius) * (d / radius);
    return taper > 0.0 ? s * s * std::exp(-(d / taper) * (d / taper)) : s * s;
  }
};

/// Per-sample linear functionals evaluated at the fit centre.
struct DerivativeWeights {
  std::vector<double> value;
  std::vector<Vec2> gradient;
  std::vector<double> laplacian;
  double condition_number = 1.0;
  bool regularized = false;

  int size() const { return static_cast<int>(value.size()); }

  double apply_laplacian(std::span<const double> t) const {
    double s = 0.0;
    for (int k = 0; k < size(); ++k) s += laplacian[k] * t[k];
    return s;
  }
  Vec2 apply_gradient(std::span<const double> t) const {
    Vec2 s;
    for (int k = 0; k < size(); ++k) s += gradient[k] * t[k];
    return s;
  }
  double apply_value(std::span<const double> t) const {
    double s = 0.0;
    for (int k = 0; k < size(); ++k) s += value[k] * t[k];
    return s;
  }
};

/// One least-squares row: a value sample at `rel` or, when `normal` is set,
/// a normal-derivative sample there.
struct FitSample {
  Vec2 rel;
  double weight = 1.0;
  bool derivative = false;
  Vec2 normal;
};

class DegenerateFitError : public DegenerateStencilError {
 public:
  using DegenerateStencilError::DegenerateStencilError;
};

/// Solved least-squares problem: `coefficients` maps sample targets to the
/// polynomial coefficients in scaled coordinates.
struct LeastSquaresFit {
  BasisSpec basis;
  Eigen::Matrix<double, BasisSpec::kTerms, Eigen::Dynamic> coefficients;
  double condition_number = 1.0;
  bool regularized = false;

  int samples() const { return static_cast<int>(coefficients.cols()); }

  /// Weights reproducing the fitted polynomial value at `rel`.
  std::vector<double> value_weights_at(const Vec2& rel) const {
    const Eigen::RowVectorXd row = basis.values(rel).transpose() * coefficients;
    return {row.data(), row.data() + row.size()};
  }

  DerivativeWeights derivative_weights() const {
    DerivativeWeights w;
    const int k = samples();
    const double h = basis.scale;
    w.value.resize(k);
    w.gradient.resize(k);
    w.laplacian.resize(k);
    for (int s = 0; s < k; ++s) {
      w.value[s] = coefficients(0, s);
      w.gradient[s] = {coefficients(1, s) / h, coefficients(2, s) / h};
      w.laplacian[s] = 2.0 * (coefficients(3, s) + coefficients(5, s)) / (h * h);
    }
    w.condition_number = condition_number;
    w.regularized = regularized;
    return w;
  }
};

inline constexpr double kRegularizeAbove = 1e12;
inline constexpr double kSingularAbove = 1e15;

/// Solves the weighted normal equations. Derivative rows are scaled by h so
/// that every coefficient column multiplies the raw target (2q for a
/// boundary row, the sample value otherwise). With `zero_at_center` the
/// constant term is fixed to 0, i.e. the fit passes through 0 at the centre.
inline LeastSquaresFit fit_least_squares(std::span<const FitSample> samples, const BasisSpec& basis,
                                         int node, bool zero_at_center = false) {
  constexpr int kT = BasisSpec::kTerms;
  const int first = zero_at_center ? 1 : 0;
  const int terms = kT - first;
  const int k = static_cast<int>(samples.size());
  if (k < terms) throw DegenerateFitError(node, "too few least-squares samples");
  Eigen::MatrixXd bw(terms, k);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(terms, terms);
  for (int s = 0; s < k; ++s) {
    const auto& smp = samples[s];
    const auto full = smp.derivative ? basis.normal_derivative(smp.rel, smp.normal)
                                     : basis.values(smp.rel);
    const Eigen::VectorXd row = full.tail(terms);
    // A derivative row with scaled basis predicts h * d/dn, so its target is h * (2q).
    const double target_scale = smp.derivative ? basis.scale : 1.0;
    bw.col(s) = smp.weight * target_scale * row;
    m.noalias() += smp.weight * row * row.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  const double lmax = eig.eigenvalues().maxCoeff();
  const double lmin = eig.eigenvalues().minCoeff();
  const double cond = lmin > 0.0 ? lmax / lmin : std::numeric_limits<double>::infinity();
  if (!(lmax > 0.0) || !(cond <= kSingularAbove)) {
    throw DegenerateFitError(node, "rank-deficient least-squares system");
  }
  LeastSquaresFit fit;
  fit.basis = basis;
  fit.condition_number = cond;
  if (cond > kRegularizeAbove) {
    m.diagonal().array() += 1e-10 * m.trace();
    fit.regularized = true;
  }
  fit.coefficients = Eigen::Matrix<double, kT, Eigen::Dynamic>::Zero(kT, k);
  fit.coefficients.bottomRows(terms) = m.ldlt().solve(bw);
  return fit;
}

/// Radial-component fit on the midpoints of `stencil`. With `augment`,
/// faces into prescribed-velocity nodes become rows n_j . grad U^h(x_ij)
/// with weight |e_ij|^2 w(|x_j - x_i|) and target 2 q_j; other rows sample
/// U_{i->ij} with weight w(|x_ij - x_i|). The radial component 2 (x - x_i) . u
/// vanishes at x_i for every u, so the constant term is fixed to zero.
inline LeastSquaresFit fit_radial_mls(const LocalStencil& stencil, const NodeSet& nodes,
                                      const BasisSpec& basis, const WeightSpec& weight,
                                      bool augment) {
  std::vector<FitSample> samples;
  samples.reserve(stencil.neighbors.size());
  for (const auto& nb : stencil.neighbors) {
    FitSample s;
    s.rel = nb.midpoint_offset();
    if (augment && nb.face == FaceClass::boundary) {
      const double len = norm(nb.offset);
      s.derivative = true;
      s.normal = nodes.normal[nb.node];
      s.weight = len * len / (basis.scale * basis.scale) * weight(len);
    } else {
      s.weight = weight(norm(s.rel));
    }
    samples.push_back(s);
  }
  return fit_least_squares(samples, basis, stencil.center, true);
}

/// Standard nodal MLS fit. Sample 0 is the centre (weight 1), sample k+1 is
/// neighbour k.
inline LeastSquaresFit fit_nodal_mls(const LocalStencil& stencil, const BasisSpec& basis,
                                     const WeightSpec& weight) {
  std::vector<FitSample> samples;
  samples.reserve(stencil.neighbors.size() + 1);
  samples.push_back({Vec2{}, weight(0.0), false, {}});
  for (const auto& nb : stencil.neighbors) {
    samples.push_back({nb.offset, weight(norm(nb.offset)), false, {}});
  }
  return fit_least_squares(samples, basis, stencil.center);
}

}  // namespace mcd
