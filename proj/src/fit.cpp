#include "afcmem/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "afcmem/core.hpp"

namespace afcmem::fit {

Model fano_dip() {
  return Model{"fano",
               {"center", "fwhm", "depth", "inv_q", "baseline", "slope"},
               [](double x, std::span<const double> p) {
                 const double dx = x - p[0];
                 const double u = 2.0 * dx / p[1];
                 const double e = p[3];
                 const double shape = (1.0 + e * u) * (1.0 + e * u) / ((1.0 + e * e) * (1.0 + u * u));
                 return (p[4] + p[5] * dx) * (1.0 - p[2] * shape);
               }};
}

Model exp_decay() {
  return Model{"exp_decay", {"amplitude", "tau"},
               [](double x, std::span<const double> p) { return p[0] * std::exp(-x / p[1]); }};
}

Model fringe() {
  return Model{"fringe", {"amplitude", "visibility", "phase"},
               [](double x, std::span<const double> p) {
                 return p[0] * (1.0 + p[1] * std::cos(x - p[2]));
               }};
}

Model gaussian_pulse() {
  return Model{"gaussian_pulse", {"amplitude", "center", "fwhm", "offset"},
               [](double x, std::span<const double> p) {
                 const double u = (x - p[1]) / p[2];
                 return p[0] * std::exp(-4.0 * std::log(2.0) * u * u) + p[3];
               }};
}

std::optional<Model> model_by_name(std::string_view name) {
  if (name == "fano") return fano_dip();
  if (name == "exp_decay") return exp_decay();
  if (name == "fringe") return fringe();
  if (name == "gaussian_pulse") return gaussian_pulse();
  return std::nullopt;
}

double FitResult::stderr_of(std::size_t i) const {
  if (static_cast<Eigen::Index>(i) >= covariance.rows()) return 0.0;
  return std::sqrt(std::max(0.0, covariance(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i))));
}

const FitProblem& validate(const FitProblem& problem) {
  const std::size_t np = problem.model.n_params();
  if (!problem.model.eval || np == 0) fail(ErrorCode::InvalidProblem, "fit model is empty");
  if (problem.initial_guess.size() != np)
    fail(ErrorCode::InvalidProblem, "initial guess size does not match model '" + problem.model.name + "'");
  if (problem.x.size() != problem.y.size()) fail(ErrorCode::InvalidProblem, "x and y sizes differ");
  if (problem.x.size() < np + 1) {
    std::ostringstream os;
    os << "need at least " << np + 1 << " data points, got " << problem.x.size();
    fail(ErrorCode::InvalidProblem, os.str());
  }
  if (!problem.sigma.empty()) {
    if (problem.sigma.size() != problem.y.size()) fail(ErrorCode::InvalidProblem, "sigma size differs from y");
    for (double s : problem.sigma)
      if (!(s > 0.0)) fail(ErrorCode::InvalidProblem, "sigma must be > 0");
  }
  if (problem.bounds) {
    if (problem.bounds->lower.size() != np || problem.bounds->upper.size() != np)
      fail(ErrorCode::InvalidProblem, "bounds size does not match model");
  }
  return problem;
}

namespace {

constexpr int kMaxIterations = 200;
constexpr double kTolerance = 1e-10;

class Objective {
 public:
  explicit Objective(const FitProblem& p) : problem_(p), n_(p.x.size()), np_(p.model.n_params()) {}

  Eigen::VectorXd residuals(const std::vector<double>& params) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(n_));
    const std::span<const double> ps(params);
    for (std::size_t i = 0; i < n_; ++i) {
      const double s = problem_.sigma.empty() ? 1.0 : problem_.sigma[i];
      r(static_cast<Eigen::Index>(i)) = (problem_.y[i] - problem_.model.eval(problem_.x[i], ps)) / s;
    }
    return r;
  }

  // Jacobian of the model (not the residual), weighted by 1/sigma.
  Eigen::MatrixXd jacobian(const std::vector<double>& params, const Eigen::VectorXd& r0) const {
    Eigen::MatrixXd j(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(np_));
    std::vector<double> shifted = params;
    for (std::size_t k = 0; k < np_; ++k) {
      const double h = std::max(1e-8, 1e-8 * std::abs(params[k]));
      shifted[k] = params[k] + h;
      const Eigen::VectorXd r1 = residuals(shifted);
      j.col(static_cast<Eigen::Index>(k)) = (r0 - r1) / h;
      shifted[k] = params[k];
    }
    return j;
  }

  void clamp(std::vector<double>& params) const {
    if (!problem_.bounds) return;
    for (std::size_t k = 0; k < np_; ++k)
      params[k] = std::clamp(params[k], problem_.bounds->lower[k], problem_.bounds->upper[k]);
  }

  std::size_t n() const { return n_; }
  std::size_t np() const { return np_; }

 private:
  const FitProblem& problem_;
  std::size_t n_;
  std::size_t np_;
};

bool all_finite(const Eigen::VectorXd& v) { return v.allFinite(); }

// Columns rescaled to unit norm so rank decisions do not depend on the units
// of each parameter. Zero columns keep scale 1.
Eigen::VectorXd column_scales(const Eigen::MatrixXd& j) {
  Eigen::VectorXd d = j.colwise().norm().transpose();
  for (Eigen::Index k = 0; k < d.size(); ++k)
    if (!(d(k) > 0.0)) d(k) = 1.0;
  return d;
}

// Inverse of J^T J. At a minimum where some parameter combination no longer
// moves the residuals (a fringe with zero visibility has no phase) the
// pseudo-inverse is used and every parameter touching that null space gets an
// infinite variance.
Eigen::MatrixXd covariance_of(const Eigen::MatrixXd& j) {
  if (j.squaredNorm() == 0.0) fail(ErrorCode::SingularJacobian, "Jacobian vanishes at the optimum");
  const Eigen::VectorXd d = column_scales(j);
  const Eigen::MatrixXd js = j * d.cwiseInverse().asDiagonal();
  const Eigen::MatrixXd a = js.transpose() * js;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double cut = 1e-14 * s(0);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index k = 0; k < s.size(); ++k)
    if (s(k) > cut) inv(k) = 1.0 / s(k);
  Eigen::MatrixXd cov = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
  cov = d.cwiseInverse().asDiagonal() * cov * d.cwiseInverse().asDiagonal();
  cov = 0.5 * (cov + cov.transpose());
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    if (s(k) > cut) continue;
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
      if (std::abs(svd.matrixV()(i, k)) > 1e-6) cov(i, i) = std::numeric_limits<double>::infinity();
  }
  return cov;
}

}  // namespace

FitResult fit(const FitProblem& problem) {
  validate(problem);
  const Objective obj(problem);

  std::vector<double> p = problem.initial_guess;
  obj.clamp(p);
  Eigen::VectorXd r = obj.residuals(p);
  if (!all_finite(r)) fail(ErrorCode::FitDiverged, "model is not finite at the initial guess");
  double cost = r.squaredNorm();

  double data_scale = 0.0;
  for (std::size_t i = 0; i < problem.y.size(); ++i) {
    const double s = problem.sigma.empty() ? 1.0 : problem.sigma[i];
    data_scale += (problem.y[i] / s) * (problem.y[i] / s);
  }
  const double perfect_cost = 1e-26 * std::max(1.0, data_scale);

  {
    const Eigen::MatrixXd j = obj.jacobian(p, r);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(j * column_scales(j).cwiseInverse().asDiagonal());
    qr.setThreshold(1e-12);
    if (qr.rank() < static_cast<Eigen::Index>(obj.np()))
      fail(ErrorCode::SingularJacobian, "Jacobian is rank deficient at the initial guess");
  }

  FitResult result;
  result.cost_history.push_back(cost);
  double lambda = 1e-3;
  bool converged = cost <= perfect_cost;
  int iter = 0;

  while (!converged && iter < kMaxIterations) {
    ++iter;
    const Eigen::MatrixXd j = obj.jacobian(p, r);
    if (!j.allFinite()) fail(ErrorCode::FitDiverged, "non-finite Jacobian");
    const Eigen::MatrixXd a = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;

    bool accepted = false;
    while (!accepted) {
      Eigen::MatrixXd damped = a;
      for (Eigen::Index k = 0; k < damped.rows(); ++k)
        damped(k, k) += lambda * std::max(a(k, k), 1e-30);
      const Eigen::VectorXd step = damped.ldlt().solve(g);
      std::vector<double> trial = p;
      for (std::size_t k = 0; k < trial.size(); ++k) trial[k] += step(static_cast<Eigen::Index>(k));
      obj.clamp(trial);
      const Eigen::VectorXd rt = obj.residuals(trial);
      const double cost_t = all_finite(rt) ? rt.squaredNorm() : std::numeric_limits<double>::infinity();

      if (cost_t < cost) {
        double step_norm = 0.0, p_norm = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
          step_norm += (trial[k] - p[k]) * (trial[k] - p[k]);
          p_norm += p[k] * p[k];
        }
        const double rel_step = std::sqrt(step_norm) / std::max(std::sqrt(p_norm), 1e-300);
        const double rel_cost = (cost - cost_t) / std::max(cost, 1e-300);
        p = std::move(trial);
        r = rt;
        cost = cost_t;
        result.cost_history.push_back(cost);
        lambda = std::max(lambda * 0.1, 1e-15);
        accepted = true;
        if ((rel_step < kTolerance && rel_cost < kTolerance) || cost <= perfect_cost) converged = true;
      } else {
        lambda *= 10.0;
        if (lambda > 1e16) {
          // No descent direction left within rounding: this is the minimum.
          converged = true;
          break;
        }
      }
    }
  }

  result.params = p;
  result.iterations = iter;
  result.converged = converged;
  result.chi2 = cost;
  const double dof = static_cast<double>(obj.n()) - static_cast<double>(obj.np());
  result.reduced_chi2 = cost / dof;
  const Eigen::MatrixXd j = obj.jacobian(p, r);
  result.covariance = covariance_of(j);
  if (problem.sigma.empty()) result.covariance *= result.reduced_chi2;
  return result;
}

Estimate visibility(double amplitude, double vis, double offset, double visibility_sigma) {
  if (!(amplitude > 0.0)) fail(ErrorCode::DomainError, "fringe amplitude must be > 0");
  const double hi = amplitude * (1.0 + std::abs(vis)) + offset;
  const double lo = amplitude * (1.0 - std::abs(vis)) + offset;
  const double scale = amplitude / (amplitude + offset);
  return Estimate{(hi - lo) / (hi + lo), visibility_sigma * scale};
}

Estimate visibility(const FitResult& fringe_fit) {
  if (fringe_fit.params.size() != 3) fail(ErrorCode::DomainError, "visibility expects a fringe fit");
  return visibility(fringe_fit.params[0], fringe_fit.params[1], 0.0, fringe_fit.stderr_of(1));
}

}  // namespace afcmem::fit
