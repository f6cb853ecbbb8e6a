#pragma once

// Full-covariance Gaussian mixture fitted by expectation-maximization.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <vector>

#include "aiskg/error.hpp"

namespace aiskg {

struct GmmOptions {
  int components = 2;
  std::uint64_t seed = 0;
  int max_iter = 200;
  double tol = 1e-6;  // on the mean per-point log-likelihood
  double reg_floor = 1e-6;

  friend bool operator==(const GmmOptions&, const GmmOptions&) = default;
};

template <int Dim>
struct GaussianComponent {
  using Vector = Eigen::Matrix<double, Dim, 1>;
  using Matrix = Eigen::Matrix<double, Dim, Dim>;

  double weight = 0.0;
  Vector mean = Vector::Zero();
  Matrix cov = Matrix::Identity();
};

namespace detail {

// Precomputed Cholesky factor and normalizer for repeated density evaluation.
template <int Dim>
struct GaussianDensity {
  using Vector = Eigen::Matrix<double, Dim, 1>;
  using Matrix = Eigen::Matrix<double, Dim, Dim>;

  Vector mean;
  Eigen::LLT<Matrix> llt;
  double log_norm = 0.0;  // log(weight) - 0.5 (d log 2pi + log det)

  explicit GaussianDensity(const GaussianComponent<Dim>& c) : mean(c.mean), llt(c.cov) {
    if (llt.info() != Eigen::Success) throw SingularComponent("covariance is not positive definite");
    const Matrix& L = llt.matrixL();
    double log_det = 0.0;
    for (int i = 0; i < Dim; ++i) log_det += 2.0 * std::log(L(i, i));
    log_norm = std::log(c.weight) - 0.5 * (Dim * std::log(2.0 * std::numbers::pi) + log_det);
  }

  double log_weighted_pdf(const Vector& x) const {
    const Vector z = llt.matrixL().solve(x - mean);
    return log_norm - 0.5 * z.squaredNorm();
  }
};

inline double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace detail

template <int Dim>
class GaussianMixture {
 public:
  using Vector = Eigen::Matrix<double, Dim, 1>;
  using Matrix = Eigen::Matrix<double, Dim, Dim>;
  using Component = GaussianComponent<Dim>;

  std::vector<Component> components;

  // Fit metadata. The trace holds the mean per-point log-likelihood after each E-step.
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;
  std::uint64_t seed = 0;

  /// Posterior component probabilities for x; sums to 1.
  std::vector<double> responsibilities(const Vector& x) const {
    const auto dens = densities();
    std::vector<double> logp(dens.size());
    for (std::size_t k = 0; k < dens.size(); ++k) logp[k] = dens[k].log_weighted_pdf(x);
    const double lse = detail::log_sum_exp(logp);
    for (double& v : logp) v = std::exp(v - lse);
    return logp;
  }

  double mean_log_likelihood(std::span<const Vector> data) const {
    const auto dens = densities();
    std::vector<double> logp(dens.size());
    double total = 0.0;
    for (const auto& x : data) {
      for (std::size_t k = 0; k < dens.size(); ++k) logp[k] = dens[k].log_weighted_pdf(x);
      total += detail::log_sum_exp(logp);
    }
    return data.empty() ? 0.0 : total / static_cast<double>(data.size());
  }

  std::vector<detail::GaussianDensity<Dim>> densities() const {
    std::vector<detail::GaussianDensity<Dim>> out;
    out.reserve(components.size());
    for (const auto& c : components) out.emplace_back(c);
    return out;
  }
};

namespace detail {

template <int Dim>
std::size_t count_distinct(std::span<const Eigen::Matrix<double, Dim, 1>> data) {
  std::vector<std::array<double, Dim>> rows;
  rows.reserve(data.size());
  for (const auto& x : data) {
    std::array<double, Dim> r;
    for (int i = 0; i < Dim; ++i) r[static_cast<std::size_t>(i)] = x(i);
    rows.push_back(r);
  }
  std::sort(rows.begin(), rows.end());
  return static_cast<std::size_t>(std::unique(rows.begin(), rows.end()) - rows.begin());
}

// k-means++ seeding: first centre uniform, then proportional to squared distance.
template <int Dim>
std::vector<std::size_t> kmeanspp_seeds(std::span<const Eigen::Matrix<double, Dim, 1>> data, int k,
                                        std::mt19937_64& rng) {
  std::vector<std::size_t> seeds;
  std::vector<double> d2(data.size(), std::numeric_limits<double>::infinity());
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  seeds.push_back(pick(rng));
  while (static_cast<int>(seeds.size()) < k) {
    const auto& c = data[seeds.back()];
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      d2[i] = std::min(d2[i], (data[i] - c).squaredNorm());
      total += d2[i];
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double r = u(rng);
    std::size_t chosen = data.size() - 1;
    for (std::size_t i = 0; i < data.size(); ++i) {
      r -= d2[i];
      if (r <= 0.0 && d2[i] > 0.0) {
        chosen = i;
        break;
      }
    }
    if (d2[chosen] == 0.0) {  // never reuse a point already chosen
      chosen = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
    }
    seeds.push_back(chosen);
  }
  return seeds;
}

// M-step: weights, means and full covariances from an n x K responsibility matrix.
template <int Dim>
std::vector<GaussianComponent<Dim>> m_step(std::span<const Eigen::Matrix<double, Dim, 1>> data,
                                           const Eigen::MatrixXd& resp, double reg_floor) {
  using Vector = Eigen::Matrix<double, Dim, 1>;
  using Matrix = Eigen::Matrix<double, Dim, Dim>;
  const auto n = static_cast<Eigen::Index>(data.size());
  const auto k = resp.cols();
  std::vector<GaussianComponent<Dim>> comps(static_cast<std::size_t>(k));
  for (Eigen::Index j = 0; j < k; ++j) {
    const double nk = resp.col(j).sum();
    if (!(nk > 0.0)) throw SingularComponent("component lost all responsibility");
    Vector mean = Vector::Zero();
    for (Eigen::Index i = 0; i < n; ++i) mean += resp(i, j) * data[static_cast<std::size_t>(i)];
    mean /= nk;
    Matrix cov = Matrix::Zero();
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector d = data[static_cast<std::size_t>(i)] - mean;
      cov.noalias() += resp(i, j) * d * d.transpose();
    }
    cov /= nk;
    cov = 0.5 * (cov + cov.transpose());
    cov.diagonal().array() += reg_floor;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < reg_floor * (1.0 - 1e-9)) {
      throw SingularComponent("covariance eigenvalue below regularization floor");
    }
    auto& c = comps[static_cast<std::size_t>(j)];
    c.weight = nk / static_cast<double>(n);
    c.mean = mean;
    c.cov = cov;
  }
  return comps;
}

}  // namespace detail

/// EM with k-means++ seeding. Throws DegenerateData with fewer than
/// 2 * components distinct points.
template <int Dim>
GaussianMixture<Dim> fit_gmm(std::span<const Eigen::Matrix<double, Dim, 1>> data, const GmmOptions& opt = {}) {
  using Vector = Eigen::Matrix<double, Dim, 1>;
  if (opt.components < 1) throw InvalidArgument("gmm needs at least one component");
  const std::size_t distinct = detail::count_distinct<Dim>(data);
  if (distinct < static_cast<std::size_t>(2 * opt.components)) {
    throw DegenerateData("gmm needs at least " + std::to_string(2 * opt.components) + " distinct points, got " +
                         std::to_string(distinct));
  }
  const auto n = static_cast<Eigen::Index>(data.size());
  const int k = opt.components;

  std::mt19937_64 rng(opt.seed);
  const auto seeds = detail::kmeanspp_seeds<Dim>(data, k, rng);

  // Hard assignment to the nearest seed gives the starting responsibilities.
  Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
      const double d = (data[static_cast<std::size_t>(i)] - data[seeds[static_cast<std::size_t>(j)]]).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    resp(i, best) = 1.0;
  }

  GaussianMixture<Dim> model;
  model.seed = opt.seed;
  std::vector<double> logp(static_cast<std::size_t>(k));
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    model.components = detail::m_step<Dim>(data, resp, opt.reg_floor);
    const auto dens = model.densities();
    double total = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vector& x = data[static_cast<std::size_t>(i)];
      for (int j = 0; j < k; ++j) logp[static_cast<std::size_t>(j)] = dens[static_cast<std::size_t>(j)].log_weighted_pdf(x);
      const double lse = detail::log_sum_exp(logp);
      total += lse;
      for (int j = 0; j < k; ++j) resp(i, j) = std::exp(logp[static_cast<std::size_t>(j)] - lse);
    }
    const double ll = total / static_cast<double>(n);
    model.iterations = iter + 1;
    const bool done = !model.log_likelihood_trace.empty() && ll - model.log_likelihood_trace.back() < opt.tol;
    model.log_likelihood_trace.push_back(ll);
    if (done) {
      model.converged = true;
      break;
    }
  }
  return model;
}

template <int Dim>
GaussianMixture<Dim> fit_gmm(const std::vector<Eigen::Matrix<double, Dim, 1>>& data, const GmmOptions& opt = {}) {
  return fit_gmm<Dim>(std::span<const Eigen::Matrix<double, Dim, 1>>(data), opt);
}

}  // namespace aiskg
