#pragma once

// Derivatives of the propagator with respect to the Fourier coefficients.
//
// Two engines:
//   timeslice  exact derivative of the midpoint-sliced propagator, using the
//              closed-form derivative of each SU(2) slice exponential;
//   floquet    derivative of the truncated extended-space exponential via
//              divided differences on its eigendecomposition.
// finite_diff_gradient is the central-difference oracle for both.

#include <cmath>
#include <memory>
#include <vector>

#include "smoothctl/core.hpp"
#include "smoothctl/errors.hpp"
#include "smoothctl/linalg.hpp"
#include "smoothctl/propagation.hpp"

namespace smoothctl {

/// dU/da_jk for j = 1..N (stored at j - 1) and k in {x, y}.
struct GradientSet {
  std::vector<Mat2> dx;
  std::vector<Mat2> dy;

  explicit GradientSet(std::size_t n = 0) : dx(n, Mat2::Zero()), dy(n, Mat2::Zero()) {}

  std::size_t num_harmonics() const { return dx.size(); }
  const Mat2& operator()(std::size_t j, Channel k) const { return k == Channel::x ? dx[j] : dy[j]; }
  Mat2& operator()(std::size_t j, Channel k) { return k == Channel::x ? dx[j] : dy[j]; }

  /// max |entry| over every matrix
  double max_abs() const {
    double m = 0.0;
    for (std::size_t j = 0; j < dx.size(); ++j)
      m = std::max({m, smoothctl::max_abs(dx[j]), smoothctl::max_abs(dy[j])});
    return m;
  }
};

/// max |a - b| / max |b| over all entries of all coefficient matrices.
inline double relative_deviation(const GradientSet& a, const GradientSet& b) {
  if (a.num_harmonics() != b.num_harmonics()) throw DomainError("gradient sets differ in size");
  double diff = 0.0;
  for (std::size_t j = 0; j < a.num_harmonics(); ++j)
    diff = std::max({diff, max_abs(Mat2(a.dx[j] - b.dx[j])), max_abs(Mat2(a.dy[j] - b.dy[j]))});
  const double ref = b.max_abs();
  return ref > 0.0 ? diff / ref : diff;
}

enum class GradientEngine { timeslice, floquet };

/// Forward pass of the sliced propagator with per-slice derivative data kept
/// for reverse contraction.
class SlicedEvolution {
 public:
  SlicedEvolution(const FourierEnvelope& env, const EnsemblePoint& point, double t,
                  int n_slices = kDefaultSlices)
      : SlicedEvolution(env, point, SliceGrid::over(t, env.duration_s, n_slices)) {}

  SlicedEvolution(const FourierEnvelope& env, const EnsemblePoint& point, const SliceGrid& grid)
      : owned_(std::make_shared<const Eigen::MatrixXd>(sine_basis(env, grid))) {
    init(env, point, grid, *owned_);
  }

  /// `basis` must be sine_basis(env, grid); pass it to reuse across points.
  SlicedEvolution(const FourierEnvelope& env, const EnsemblePoint& point, const SliceGrid& grid,
                  const Eigen::MatrixXd& basis) {
    init(env, point, grid, basis);
  }

  const Mat2& unitary() const { return u_; }

  /// d/da Re tr(U Gamma) for every coefficient, x channel first.
  std::vector<double> contract(const Mat2& gamma) const {
    const auto n = static_cast<Eigen::Index>(jets_.size());
    Eigen::VectorXd gx(n), gy(n);
    // after = E_{K-1} ... E_{k+1}; d tr(after dE before Gamma) = tr(dE before Gamma after)
    Mat2 tail = gamma;  // before_k-independent part: Gamma * after
    for (Eigen::Index k = n - 1; k >= 0; --k) {
      const auto& jet = jets_[static_cast<std::size_t>(k)];
      const Mat2 m = before_[static_cast<std::size_t>(k)] * tail;
      gx(k) = (jet.d_hx.transpose().cwiseProduct(m)).sum().real();
      gy(k) = (jet.d_hy.transpose().cwiseProduct(m)).sum().real();
      tail = tail * jet.value;
    }
    const Eigen::VectorXd ax = scale_ * (basis_->transpose() * gx);
    const Eigen::VectorXd ay = scale_ * (basis_->transpose() * gy);
    std::vector<double> out(2 * n_);
    for (std::size_t j = 0; j < n_; ++j) {
      out[j] = ax(static_cast<Eigen::Index>(j));
      out[n_ + j] = ay(static_cast<Eigen::Index>(j));
    }
    return out;
  }

  /// Full matrix derivatives dU/da_jk.
  GradientSet full() const {
    GradientSet g(n_);
    Mat2 after = Mat2::Identity();
    for (auto k = static_cast<std::ptrdiff_t>(jets_.size()) - 1; k >= 0; --k) {
      const auto uk = static_cast<std::size_t>(k);
      const auto& jet = jets_[uk];
      const Mat2 gx = scale_ * (after * jet.d_hx * before_[uk]);
      const Mat2 gy = scale_ * (after * jet.d_hy * before_[uk]);
      for (std::size_t j = 0; j < n_; ++j) {
        const double b = (*basis_)(k, static_cast<Eigen::Index>(j));
        g.dx[j] += b * gx;
        g.dy[j] += b * gy;
      }
      after = after * jet.value;
    }
    return g;
  }

 private:
  void init(const FourierEnvelope& env, const EnsemblePoint& point, const SliceGrid& grid,
            const Eigen::MatrixXd& basis) {
    basis_ = &basis;
    scale_ = kPi * point.amplitude_scale;
    n_ = env.num_harmonics();
    if (static_cast<int>(basis.rows()) != grid.count ||
        static_cast<std::size_t>(basis.cols()) != env.num_harmonics())
      throw DomainError("SlicedEvolution: basis does not match grid");
    const auto f = detail::slice_fields(env, basis, point);
    jets_.reserve(static_cast<std::size_t>(grid.count));
    before_.reserve(static_cast<std::size_t>(grid.count));
    Mat2 u = Mat2::Identity();
    for (int k = 0; k < grid.count; ++k) {
      before_.push_back(u);
      jets_.push_back(su2_exp_jet(f.hx(k), f.hy(k), f.hz, grid.dt));
      u = jets_.back().value * u;
    }
    u_ = u;
  }

  std::shared_ptr<const Eigen::MatrixXd> owned_;
  const Eigen::MatrixXd* basis_ = nullptr;
  double scale_ = 0.0;
  std::size_t n_ = 0;
  std::vector<Su2ExpJet> jets_;
  std::vector<Mat2> before_;
  Mat2 u_;
};

namespace detail {

inline GradientSet gradient_timeslice(const FourierEnvelope& env, const EnsemblePoint& point,
                                      double t, int n_slices) {
  const SliceGrid grid = SliceGrid::over(t, env.duration_s, n_slices);
  const Eigen::MatrixXd basis = sine_basis(env, grid);
  return SlicedEvolution(env, point, grid, basis).full();
}

inline GradientSet gradient_floquet(const FourierEnvelope& env, const EnsemblePoint& point,
                                    double t, int n_modes) {
  const FloquetPropagator prop(env, point, n_modes);
  const auto& v = prop.eigenvectors();
  const auto& lam = prop.eigenvalues();
  const Eigen::Index dim = prop.dim();
  const int modes = prop.modes();

  // divided differences of g(l) = exp(-i l t)
  Eigen::MatrixXcd phi(dim, dim);
  for (Eigen::Index p = 0; p < dim; ++p) {
    const cplx gp = std::exp(-kI * (lam(p) * t));
    for (Eigen::Index q = 0; q < dim; ++q) {
      const double d = lam(p) - lam(q);
      if (std::abs(d) * t < 1e-9) {
        phi(p, q) = -kI * t * gp;
      } else {
        phi(p, q) = (gp - std::exp(-kI * (lam(q) * t))) / d;
      }
    }
  }
  const Eigen::MatrixXcd w = v.middleRows(prop.block(0), 2).adjoint();  // dim x 2

  GradientSet g(env.num_harmonics());
  const double s = kPi * point.amplitude_scale;
  for (std::size_t jj = 0; jj < env.num_harmonics(); ++jj) {
    const int j = static_cast<int>(jj) + 1;
    for (Channel k : {Channel::x, Channel::y}) {
      const Mat2 sigma = k == Channel::x ? pauli::x() : pauli::y();
      const Mat2 lower = (-0.5 * s) * kI * sigma;  // block (n, n - j)
      const Mat2 upper = (0.5 * s) * kI * sigma;   // block (n, n + j)
      Eigen::MatrixXcd dfv = Eigen::MatrixXcd::Zero(dim, dim);
      for (int n = -modes; n <= modes; ++n) {
        if (n - j >= -modes)
          dfv.middleRows(prop.block(n), 2) += lower * v.middleRows(prop.block(n - j), 2);
        if (n + j <= modes)
          dfv.middleRows(prop.block(n), 2) += upper * v.middleRows(prop.block(n + j), 2);
      }
      const Eigen::MatrixXcd x = v.adjoint() * dfv;
      const Eigen::MatrixXcd column = v * (x.cwiseProduct(phi) * w);
      g(jj, k) = prop.fold(column, t);
    }
  }
  return g;
}

}  // namespace detail

/// dU(t)/da_jk for a single Fourier envelope.
inline GradientSet gradient_unitary(const FourierEnvelope& env, const EnsemblePoint& point,
                                    double t, GradientEngine engine = GradientEngine::timeslice,
                                    int resolution = 0) {
  env.validate();
  detail::check_time(t, env.duration_s, "gradient_unitary");
  if (engine == GradientEngine::floquet)
    return detail::gradient_floquet(env, point, t, resolution > 0 ? resolution : kDefaultFloquetModes);
  return detail::gradient_timeslice(env, point, t, resolution > 0 ? resolution : kDefaultSlices);
}

/// Default finite-difference step for a coefficient value.
inline double default_fd_step(double coefficient_hz) {
  return 1e-3 * std::max(std::abs(coefficient_hz), 1e3);
}

/// Central differences of propagate_timeslice. step <= 0 selects the default
/// per-coefficient step.
inline GradientSet finite_diff_gradient(const FourierEnvelope& env, const EnsemblePoint& point,
                                        double t, double step = 0.0,
                                        int n_slices = kDefaultSlices) {
  env.validate();
  detail::check_time(t, env.duration_s, "finite_diff_gradient");
  GradientSet g(env.num_harmonics());
  for (std::size_t j = 0; j < env.num_harmonics(); ++j) {
    for (Channel k : {Channel::x, Channel::y}) {
      const double a = env.coeffs(k)[j];
      const double h = step > 0.0 ? step : default_fd_step(a);
      FourierEnvelope plus = env, minus = env;
      plus.coeffs(k)[j] = a + h;
      minus.coeffs(k)[j] = a - h;
      const Mat2 up = detail::propagate_fourier(plus, point, t, n_slices);
      const Mat2 um = detail::propagate_fourier(minus, point, t, n_slices);
      g(j, k) = (up - um) / (2.0 * h);
    }
  }
  return g;
}

}  // namespace smoothctl
