#include "tofplane/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace tofplane {

namespace {

std::string format_point(std::span<const Parameter> params, std::span<const double> x) {
  std::ostringstream os;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) os << ", ";
    os << params[i].name << "=" << x[i];
  }
  return os.str();
}

double clamp_param(const Parameter& p, double v) {
  if (p.lower && v < *p.lower) v = *p.lower;
  if (p.upper && v > *p.upper) v = *p.upper;
  return v;
}

}  // namespace

ParamVector::ParamVector(std::vector<Parameter> params) : params_(std::move(params)) {
  std::set<std::string> names;
  for (const Parameter& p : params_) {
    require(!p.name.empty(), Errc::invalid_argument, "parameter name must not be empty");
    require(names.insert(p.name).second, Errc::invalid_argument,
            "duplicate parameter name: " + p.name);
    require(p.scale > 0.0, Errc::invalid_argument, "parameter scale must be positive: " + p.name);
  }
}

std::vector<double> ParamVector::values() const {
  std::vector<double> v(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) v[i] = params_[i].value;
  return v;
}

void ParamVector::set_values(std::span<const double> v) {
  require(v.size() == params_.size(), Errc::invalid_argument, "parameter count mismatch");
  for (std::size_t i = 0; i < params_.size(); ++i) params_[i].value = v[i];
}

double ParamVector::value_of(const std::string& name) const {
  for (const Parameter& p : params_)
    if (p.name == name) return p.value;
  raise(Errc::invalid_argument, "unknown parameter: " + name);
}

std::vector<double> gradient(const Objective& objective, const ParamVector& at) {
  const std::vector<double> x = at.values();
  std::vector<double> grad(x.size(), 0.0);
  const double v = objective.value_and_gradient(x, grad);
  if (!std::isfinite(v))
    raise(Errc::evaluation_failed,
          "objective is non-finite at " + format_point(at.params(), x));
  for (double g : grad)
    if (!std::isfinite(g))
      raise(Errc::evaluation_failed,
            "gradient is non-finite at " + format_point(at.params(), x));
  return grad;
}

std::pair<ParamVector, OptimizerReport> minimize_adam(const Objective& objective,
                                                      const ParamVector& init, int steps,
                                                      double lr, const AdamOptions& opts) {
  require(steps >= 1, Errc::invalid_argument, "adam needs at least one step");
  require(objective.dimension() == init.size(), Errc::invalid_argument,
          "objective/parameter dimension mismatch");
  const std::size_t n = init.size();

  std::vector<double> x = init.values();
  for (std::size_t i = 0; i < n; ++i) x[i] = clamp_param(init[i], x[i]);

  std::vector<double> grad(n), m(n, 0.0), v(n, 0.0);
  OptimizerReport report;
  report.trajectory.reserve(static_cast<std::size_t>(steps));

  ParamVector best = init;
  best.set_values(x);
  double best_loss = std::numeric_limits<double>::infinity();

  for (int step = 0; step < steps; ++step) {
    const double loss = objective.value_and_gradient(x, grad);
    bool finite = std::isfinite(loss);
    for (std::size_t i = 0; finite && i < n; ++i) finite = std::isfinite(grad[i]);

    if (!finite) {
      if (step == 0)
        raise(Errc::evaluation_failed,
              "objective is non-finite at the initial point " +
                  format_point(init.params(), x));
      // Retreat halfway toward the previous iterate and carry on.
      ++report.nonfinite_steps;
      const std::vector<double> prev = best.values();
      for (std::size_t i = 0; i < n; ++i) x[i] = clamp_param(init[i], 0.5 * (x[i] + prev[i]));
      report.trajectory.push_back(report.trajectory.empty() ? 0.0 : report.trajectory.back());
      continue;
    }

    report.trajectory.push_back(loss);
    if (loss < best_loss) {
      best_loss = loss;
      best.set_values(x);
    }

    const double t = static_cast<double>(step + 1);
    const double bc1 = 1.0 - std::pow(opts.beta1, t);
    const double bc2 = 1.0 - std::pow(opts.beta2, t);
    for (std::size_t i = 0; i < n; ++i) {
      // Work in normalized coordinates: g_hat = dL/d(x/scale) = grad * scale.
      const double g = grad[i] * init[i].scale;
      m[i] = opts.beta1 * m[i] + (1.0 - opts.beta1) * g;
      v[i] = opts.beta2 * v[i] + (1.0 - opts.beta2) * g * g;
      const double update = lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + opts.epsilon);
      x[i] = clamp_param(init[i], x[i] - update * init[i].scale);
    }
  }

  const double final_value = objective.value(x);
  if (std::isfinite(final_value) && final_value < best_loss) {
    best_loss = final_value;
    best.set_values(x);
  }

  report.iterations = steps;
  report.final_loss = report.trajectory.back();
  report.best_loss = best_loss;
  report.converged = report.nonfinite_steps == 0;
  return {best, report};
}

std::pair<ParamVector, OptimizerReport> nelder_mead(
    const std::function<double(std::span<const double>)>& objective, const ParamVector& init,
    int max_evals, double tol) {
  require(init.size() >= 1, Errc::invalid_argument, "nelder-mead needs dimension >= 1");
  require(max_evals >= 1, Errc::invalid_argument, "nelder-mead needs a positive budget");
  const std::size_t n = init.size();

  // Normalized coordinates throughout.
  std::vector<double> scale(n), x0(n);
  for (std::size_t i = 0; i < n; ++i) {
    scale[i] = init[i].scale;
    x0[i] = init[i].value / scale[i];
  }

  constexpr double kInf = std::numeric_limits<double>::infinity();
  int evals = 0;
  const auto eval_raw = [&](const std::vector<double>& xn) {
    std::vector<double> natural(n);
    for (std::size_t i = 0; i < n; ++i) natural[i] = xn[i] * scale[i];
    ++evals;
    return objective(natural);
  };
  // Non-finite probes are treated as +inf so the simplex backs away from them.
  const auto eval = [&](const std::vector<double>& xn) {
    const double r = eval_raw(xn);
    return std::isfinite(r) ? r : kInf;
  };

  constexpr double kReflect = 1.0, kExpand = 2.0, kContract = 0.5, kShrink = 0.5;
  constexpr double kInitStep = 0.1;

  std::vector<std::vector<double>> simplex(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += kInitStep;

  std::vector<double> f(n + 1, kInf);
  f[0] = eval_raw(simplex[0]);
  require(std::isfinite(f[0]), Errc::evaluation_failed,
          "objective is non-finite at the initial point");
  for (std::size_t i = 1; i <= n && evals < max_evals; ++i) f[i] = eval(simplex[i]);

  std::vector<double> best_x = simplex[0];
  double best_f = f[0];
  const auto note_best = [&](const std::vector<double>& x, double fx) {
    if (std::isfinite(fx) && fx < best_f) {
      best_f = fx;
      best_x = x;
    }
  };
  for (std::size_t i = 1; i <= n; ++i) note_best(simplex[i], f[i]);

  OptimizerReport report;
  bool converged = false;

  while (evals < max_evals) {
    std::vector<std::size_t> order(n + 1);
    for (std::size_t i = 0; i <= n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (f[a] == f[b]) return a < b;
      return f[a] < f[b];
    });

    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t d = 0; d < n; ++d)
        diameter = std::max(diameter,
                            std::abs(simplex[order[i]][d] - simplex[order[0]][d]));
    report.trajectory.push_back(f[order[0]]);
    ++report.iterations;
    if (diameter < tol) {
      converged = true;
      break;
    }

    const std::size_t worst = order[n];
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < n; ++d) centroid[d] += simplex[order[i]][d] / double(n);

    const auto blend = [&](double coeff) {
      std::vector<double> p(n);
      for (std::size_t d = 0; d < n; ++d)
        p[d] = centroid[d] + coeff * (centroid[d] - simplex[worst][d]);
      return p;
    };

    const std::vector<double> reflected = blend(kReflect);
    const double fr = eval(reflected);
    note_best(reflected, fr);

    if (fr < f[order[0]]) {
      if (evals >= max_evals) break;
      const std::vector<double> expanded = blend(kExpand);
      const double fe = eval(expanded);
      note_best(expanded, fe);
      simplex[worst] = fe < fr ? expanded : reflected;
      f[worst] = std::min(fe, fr);
    } else if (fr < f[order[n - 1]]) {
      simplex[worst] = reflected;
      f[worst] = fr;
    } else {
      if (evals >= max_evals) break;
      const std::vector<double> contracted = blend(-kContract);
      const double fc = eval(contracted);
      note_best(contracted, fc);
      if (fc < f[worst]) {
        simplex[worst] = contracted;
        f[worst] = fc;
      } else {
        for (std::size_t i = 1; i <= n && evals < max_evals; ++i) {
          const std::size_t idx = order[i];
          for (std::size_t d = 0; d < n; ++d)
            simplex[idx][d] = simplex[order[0]][d] +
                              kShrink * (simplex[idx][d] - simplex[order[0]][d]);
          f[idx] = eval(simplex[idx]);
          note_best(simplex[idx], f[idx]);
        }
      }
    }
  }

  ParamVector result = init;
  std::vector<double> natural(n);
  for (std::size_t i = 0; i < n; ++i) natural[i] = best_x[i] * scale[i];
  result.set_values(natural);

  if (report.trajectory.empty()) {
    report.trajectory.push_back(best_f);
    report.iterations = 1;
  }
  report.final_loss = report.trajectory.back();
  report.best_loss = best_f;
  report.converged = converged;
  return {result, report};
}

}  // namespace tofplane
