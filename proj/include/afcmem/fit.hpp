#pragma once

// Damped Gauss-Newton (Levenberg-Marquardt) least squares with a small zoo of
// model functions used throughout the toolkit.

#include <Eigen/Dense>

#include "afcmem/core.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace afcmem::fit {

using ModelFn = std::function<double(double x, std::span<const double> p)>;

struct Model {
  std::string name;
  std::vector<std::string> param_names;
  ModelFn eval;

  std::size_t n_params() const { return param_names.size(); }
};

// Power-transmission dip: (b0 + b1 (x - x0)) * (1 - D (1 + e u)^2 / ((1 + e^2)(1 + u^2))),
// u = 2 (x - x0) / fwhm. e is the inverse Fano asymmetry (e = 1/q); e = 0 is a
// pure Lorentzian. Params: center, fwhm, depth, inv_q, baseline, slope.
Model fano_dip();
// amplitude * exp(-x / tau). Params: amplitude, tau.
Model exp_decay();
// amplitude * (1 + visibility cos(x - phase)). Params: amplitude, visibility, phase.
Model fringe();
// amplitude * exp(-4 ln2 (x - center)^2 / fwhm^2) + offset.
Model gaussian_pulse();

// Looks up one of the models above by its name ("fano", "exp_decay", "fringe",
// "gaussian_pulse").
std::optional<Model> model_by_name(std::string_view name);

struct Bounds {
  std::vector<double> lower;
  std::vector<double> upper;
};

struct FitProblem {
  Model model;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> sigma;  // empty when unknown
  std::vector<double> initial_guess;
  std::optional<Bounds> bounds;
};

struct FitResult {
  std::vector<double> params;
  Eigen::MatrixXd covariance;
  double chi2 = 0.0;
  double reduced_chi2 = 0.0;
  bool converged = false;
  int iterations = 0;
  // Cost after every accepted step, starting with the initial guess.
  std::vector<double> cost_history;

  double stderr_of(std::size_t i) const;
};

const FitProblem& validate(const FitProblem& problem);

// Minimizes sum(((y - model(x; p)) / sigma)^2). Throws SingularJacobian when the
// Jacobian is rank deficient at the initial guess and FitDiverged on non-finite
// residuals. Parameters left undetermined at the optimum get infinite variance;
// hitting the iteration cap returns the best point with converged = false.
FitResult fit(const FitProblem& problem);

struct Estimate {
  double value = 0.0;
  double sigma = 0.0;
};

// Modulation depth of a fitted fringe, (max - min) / (max + min) of the curve.
Estimate visibility(const FitResult& fringe_fit);
Estimate visibility(double amplitude, double visibility, double offset = 0.0,
                    double visibility_sigma = 0.0);

}  // namespace afcmem::fit
