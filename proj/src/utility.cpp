#include "apm/utility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace apm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

void GrowthBounds::validate() const {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ModelError("growth bound alpha must lie in [0, 1)");
  }
  if (!(beta > 1.0)) throw ModelError("growth bound beta must exceed 1");
  if (!(C1 > 0.0) || !(C2 > 0.0)) {
    throw ModelError("growth constants C1, C2 must be positive");
  }
}

Utility Utility::appendix_power(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ModelError("appendix_power needs alpha in (0, 1)");
  }
  Utility u;
  u.kind_ = Kind::appendix_power;
  u.alpha_ = alpha;
  return u;
}

Utility Utility::capped_power(double alpha, double c) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(c > 0.0)) {
    throw ModelError("capped_power needs alpha in (0, 1) and c > 0");
  }
  Utility u;
  u.kind_ = Kind::capped_power;
  u.alpha_ = alpha;
  u.c_ = c;
  return u;
}

Utility Utility::exponential(double lambda) {
  if (!(lambda > 0.0)) throw ModelError("exponential needs lambda > 0");
  Utility u;
  u.kind_ = Kind::exponential;
  u.alpha_ = 0.0;
  u.c_ = lambda;
  return u;
}

Utility Utility::power_penalty(double alpha, double kappa, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(kappa > 0.0) || !(beta > 1.0)) {
    throw ModelError("power_penalty needs alpha in (0, 1), kappa > 0, beta > 1");
  }
  Utility u;
  u.kind_ = Kind::power_penalty;
  u.alpha_ = alpha;
  u.c_ = kappa;
  u.power_ = beta;
  return u;
}

Utility Utility::tabulated(std::vector<double> xs, std::vector<double> ys) {
  if (xs.size() < 2 || xs.size() != ys.size()) {
    throw ModelError("tabulated utility needs >= 2 matching nodes");
  }
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1])) {
      throw ModelError("tabulated utility nodes must be strictly increasing");
    }
  }
  Utility u;
  u.kind_ = Kind::tabulated;
  u.alpha_ = 0.0;
  u.xs_ = std::move(xs);
  u.ys_ = std::move(ys);
  return u;
}

std::string_view Utility::kind_name() const noexcept {
  switch (kind_) {
    case Kind::appendix_power:
      return "appendix_power";
    case Kind::capped_power:
      return "capped_power";
    case Kind::exponential:
      return "exponential";
    case Kind::power_penalty:
      return "power_penalty";
    case Kind::tabulated:
      return "tabulated";
  }
  return "unknown";
}

double Utility::value(double x) const {
  double v = 0.0;
  switch (kind_) {
    case Kind::appendix_power:
      v = x <= 0.0 ? alpha_ * x : std::pow(x + 1.0, alpha_) - 1.0;
      break;
    case Kind::capped_power:
      v = x >= 0.0 ? std::pow(x, alpha_) : c_ * x;
      break;
    case Kind::exponential:
      v = -std::expm1(-c_ * x) / c_;
      break;
    case Kind::power_penalty:
      v = x > 0.0 ? std::pow(x + 1.0, alpha_) - 1.0
                  : alpha_ * x - c_ * std::pow(-x, power_);
      break;
    case Kind::tabulated: {
      const std::size_t n = xs_.size();
      std::size_t seg = 0;
      if (x >= xs_[n - 1]) {
        seg = n - 2;
      } else if (x > xs_[0]) {
        seg = static_cast<std::size_t>(
                  std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin()) - 1;
      }
      const double t = (x - xs_[seg]) / (xs_[seg + 1] - xs_[seg]);
      v = ys_[seg] + t * (ys_[seg + 1] - ys_[seg]);
      break;
    }
  }
  return scale_ * v;
}

double Utility::derivative(double x) const {
  double d = 0.0;
  switch (kind_) {
    case Kind::appendix_power:
      d = x <= 0.0 ? alpha_ : alpha_ * std::pow(x + 1.0, alpha_ - 1.0);
      break;
    case Kind::capped_power:
      d = x <= 0.0 ? c_ : alpha_ * std::pow(x, alpha_ - 1.0);
      break;
    case Kind::exponential:
      d = std::exp(-c_ * x);
      break;
    case Kind::power_penalty:
      d = x > 0.0 ? alpha_ * std::pow(x + 1.0, alpha_ - 1.0)
                  : alpha_ + c_ * power_ * std::pow(-x, power_ - 1.0);
      break;
    case Kind::tabulated: {
      const double h = 1e-6 * std::max(1.0, std::abs(x));
      return (value(x + h) - value(x - h)) / (2.0 * h);
    }
  }
  return scale_ * d;
}

Utility Utility::scaled(double c) const {
  if (!(c > 0.0)) throw ModelError("utility scale must be positive");
  Utility u = *this;
  u.scale_ *= c;
  if (u.certificate_) {
    u.certificate_->C1 *= c;
    u.certificate_->C2 *= c;
  }
  return u;
}

std::vector<double> Utility::kinks() const {
  if (kind_ == Kind::tabulated) return xs_;
  if (kind_ == Kind::exponential) return {};
  return {0.0};
}

void Utility::set_certificate(GrowthBounds g) {
  g.validate();
  certificate_ = g;
}

double Utility::upper_growth_exponent() const noexcept {
  switch (kind_) {
    case Kind::appendix_power:
    case Kind::capped_power:
    case Kind::power_penalty:
      return alpha_;
    case Kind::exponential:
      return 0.0;
    case Kind::tabulated:
      return ys_[ys_.size() - 1] > ys_[ys_.size() - 2] ? 1.0 : 0.0;
  }
  return 1.0;
}

double Utility::lower_decay_exponent() const noexcept {
  switch (kind_) {
    case Kind::appendix_power:
    case Kind::capped_power:
      return 1.0;
    case Kind::power_penalty:
      return power_;
    case Kind::exponential:
      return kInf;
    case Kind::tabulated:
      return ys_[1] > ys_[0] ? 1.0 : 0.0;
  }
  return 1.0;
}

namespace {

std::vector<double> log_grid(double lo_exp, double hi_exp, std::size_t points) {
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(points - 1);
    grid[i] = std::pow(10.0, lo_exp + t * (hi_exp - lo_exp));
  }
  return grid;
}

// Slack of the bound at x; negative means violated. NaN when not evaluable.
double upper_slack(const Utility& u, const GrowthBounds& g, double x) {
  const double bound = g.C1 * (std::pow(x, g.alpha) + 1.0);
  const double v = u.value(x);
  const double slack = bound - v;
  const double tol = 1e-12 * (1.0 + std::abs(bound) + std::abs(v));
  return slack + tol;
}

double lower_slack(const Utility& u, const GrowthBounds& g, double x) {
  const double bound = g.C2 * (1.0 - std::pow(-x, g.beta));
  const double v = u.value(x);
  if (!std::isfinite(bound) || !std::isfinite(v)) return kNaN;
  const double slack = bound - v;
  const double tol = 1e-12 * (1.0 + std::abs(bound) + std::abs(v));
  return slack + tol;
}

}  // namespace

GrowthVerdict certify_growth(const Utility& u, const GrowthBounds& g) {
  g.validate();
  const bool closed_form = u.kind() != Utility::Kind::tabulated;

  std::vector<double> grid{0.0};
  const auto base = log_grid(-8.0, 8.0, 4001);
  grid.insert(grid.end(), base.begin(), base.end());
  if (closed_form) {
    const auto ext = log_grid(8.0, 300.0, 2921);
    grid.insert(grid.end(), ext.begin() + 1, ext.end());
  }

  GrowthVerdict verdict;
  verdict.upper = {Verdict::holds, kNaN, "u(x) <= C1 (x^alpha + 1) on the grid and at +inf"};
  for (double x : grid) {
    if (upper_slack(u, g, x) < 0.0) {
      verdict.upper = {Verdict::fails, x, "u(x) > C1 (x^alpha + 1)"};
      break;
    }
  }
  if (verdict.upper.verdict == Verdict::holds &&
      u.upper_growth_exponent() > g.alpha) {
    verdict.upper = {Verdict::fails, kNaN, "u grows faster than x^alpha at +inf"};
  }

  verdict.lower = {Verdict::holds, kNaN, "u(x) <= C2 (1 - |x|^beta) on the grid and at -inf"};
  for (double x : grid) {
    if (x == 0.0) continue;
    if (lower_slack(u, g, -x) < 0.0) {
      verdict.lower = {Verdict::fails, -x, "u(x) > C2 (1 - |x|^beta)"};
      break;
    }
  }
  if (verdict.lower.verdict == Verdict::holds &&
      u.lower_decay_exponent() < g.beta) {
    verdict.lower = {Verdict::fails, kNaN, "u decays slower than -|x|^beta at -inf"};
  }
  return verdict;
}

ShapeCheck check_shape(const Utility& u, double lo, double hi,
                       std::size_t points, double tolerance) {
  ShapeCheck check;
  std::vector<double> x(points);
  std::vector<double> v(points);
  for (std::size_t i = 0; i < points; ++i) {
    x[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    v[i] = u.value(x[i]);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < points; ++i) {
    const double tol = tolerance * std::max(1.0, std::abs(v[i]));
    if (v[i + 1] - v[i] < -tol) {
      check.nondecreasing = false;
      check.witness = x[i];
      return check;
    }
  }
  for (std::size_t i = 1; i + 1 < points; ++i) {
    const double second = v[i + 1] + v[i - 1] - 2.0 * v[i];
    const double tol = tolerance * std::max(1.0, std::abs(v[i]));
    if (second > tol && second - tol > worst) {
      worst = second - tol;
      check.concave = false;
      check.witness = x[i];
    }
  }
  return check;
}

}  // namespace apm
