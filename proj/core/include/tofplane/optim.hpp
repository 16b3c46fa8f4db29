#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tofplane/dual.hpp"
#include "tofplane/error.hpp"

namespace tofplane {

/// One named optimizer scalar. `scale` is the parameter's natural step unit;
/// optimizers work in value/scale coordinates so one learning rate serves all
/// parameters. Bounds, when set, are enforced by clamping in natural units.
struct Parameter {
  std::string name;
  double value = 0.0;
  double scale = 1.0;
  std::optional<double> lower;
  std::optional<double> upper;
};

class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::vector<Parameter> params);

  std::size_t size() const { return params_.size(); }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const std::vector<Parameter>& params() const { return params_; }

  std::vector<double> values() const;
  void set_values(std::span<const double> v);
  double value_of(const std::string& name) const;

 private:
  std::vector<Parameter> params_;
};

struct OptimizerReport {
  int iterations = 0;
  double final_loss = 0.0;        // last trajectory entry
  std::vector<double> trajectory;  // loss at each iterate, length == iterations
  bool converged = false;
  double best_loss = 0.0;
  int nonfinite_steps = 0;
};

/// Scalar objective with an exact gradient. Optimizers call `value` for
/// derivative-free probing and `value_and_gradient` for descent.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual std::size_t dimension() const = 0;
  virtual double value(std::span<const double> x) const = 0;
  virtual double value_and_gradient(std::span<const double> x, std::span<double> grad) const = 0;
};

/// Adapts a scalar-generic callable (invocable with both spans of double and
/// of Dual) into an Objective. Gradients come from forward-mode duals,
/// evaluated in chunks of Dual::kWidth parameters per pass.
template <class F>
class AutodiffObjective final : public Objective {
 public:
  AutodiffObjective(std::size_t dim, F f) : dim_(dim), f_(std::move(f)) {}

  std::size_t dimension() const override { return dim_; }

  double value(std::span<const double> x) const override { return f_(x); }

  double value_and_gradient(std::span<const double> x, std::span<double> grad) const override {
    double v = 0.0;
    std::vector<Dual> dx(dim_);
    for (std::size_t base = 0; base < dim_; base += Dual::kWidth) {
      const std::size_t width = std::min(Dual::kWidth, dim_ - base);
      for (std::size_t i = 0; i < dim_; ++i) dx[i] = Dual(x[i]);
      for (std::size_t i = 0; i < width; ++i) dx[base + i] = Dual::seeded(x[base + i], i);
      const Dual out = f_(std::span<const Dual>(dx));
      v = out.value();
      for (std::size_t i = 0; i < width; ++i) grad[base + i] = out.tangent(i);
    }
    return v;
  }

 private:
  std::size_t dim_;
  F f_;
};

template <class F>
auto make_objective(std::size_t dim, F&& f) {
  return AutodiffObjective<std::decay_t<F>>(dim, std::forward<F>(f));
}

/// Exact gradient at a point. Throws Errc::evaluation_failed (message carries
/// the offending parameter values) if the objective or any partial is
/// non-finite.
std::vector<double> gradient(const Objective& objective, const ParamVector& at);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Runs exactly `steps` Adam updates in scale-normalized coordinates and
/// returns the best-seen iterate (bounds enforced by clamping after each
/// step). Non-finite evaluations after the first are skipped by halving the
/// offending step; the count is recorded in the report.
std::pair<ParamVector, OptimizerReport> minimize_adam(const Objective& objective,
                                                      const ParamVector& init, int steps,
                                                      double lr, const AdamOptions& opts = {});

/// Derivative-free simplex search (reflection 1, expansion 2, contraction 0.5,
/// shrink 0.5) in scale-normalized coordinates. Stops when the simplex
/// diameter drops below `tol` or the evaluation budget is exhausted; the
/// returned point is never worse than the initialization.
std::pair<ParamVector, OptimizerReport> nelder_mead(
    const std::function<double(std::span<const double>)>& objective, const ParamVector& init,
    int max_evals, double tol);

}  // namespace tofplane
