#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "apm/market.hpp"

namespace apm {

/// Growth certificate: u(x) <= C1 (x^alpha + 1) for x >= 0 and
/// u(x) <= C2 (1 - |x|^beta) for x < 0.
struct GrowthBounds {
  double alpha = 0.5;
  double beta = 2.0;
  double C1 = 1.0;
  double C2 = 1.0;

  /// Throws ModelError unless 0 <= alpha < 1 < beta and C1, C2 > 0.
  void validate() const;
};

/// Concave nondecreasing utility.
///
/// Kinds:
///   appendix_power(a):       a x for x <= 0, (x + 1)^a - 1 for x > 0
///   capped_power(a, c):      x^a for x >= 0, c x for x < 0
///   exponential(l):          (1 - exp(-l x)) / l
///   power_penalty(a, k, b):  (x + 1)^a - 1 for x > 0, a x - k |x|^b for x <= 0
///   tabulated(xs, ys):       piecewise linear, linear extrapolation
///
/// At a kink the derivative is the left derivative.
class Utility {
 public:
  enum class Kind {
    appendix_power,
    capped_power,
    exponential,
    power_penalty,
    tabulated,
  };

  static Utility appendix_power(double alpha);
  static Utility capped_power(double alpha, double c);
  static Utility exponential(double lambda);
  static Utility power_penalty(double alpha, double kappa, double beta);
  static Utility tabulated(std::vector<double> xs, std::vector<double> ys);

  [[nodiscard]] double value(double x) const;
  [[nodiscard]] double derivative(double x) const;
  /// False for tabulated utilities, whose derivative is a central finite
  /// difference.
  [[nodiscard]] bool has_closed_form_derivative() const noexcept {
    return kind_ != Kind::tabulated;
  }

  /// c * u, c > 0. A growth certificate is rescaled along with it.
  [[nodiscard]] Utility scaled(double c) const;

  [[nodiscard]] Kind kind() const noexcept { return kind_; }
  [[nodiscard]] std::string_view kind_name() const noexcept;
  [[nodiscard]] double alpha() const noexcept { return alpha_; }
  [[nodiscard]] double scale() const noexcept { return scale_; }

  /// Points where u or u' is not smooth.
  [[nodiscard]] std::vector<double> kinks() const;

  void set_certificate(GrowthBounds g);
  [[nodiscard]] const std::optional<GrowthBounds>& certificate() const noexcept {
    return certificate_;
  }

  /// Growth exponent of u at +inf (0 for bounded above).
  [[nodiscard]] double upper_growth_exponent() const noexcept;
  /// Decay exponent of -u at -inf (+inf for exponential decay).
  [[nodiscard]] double lower_decay_exponent() const noexcept;

 private:
  Utility() = default;

  Kind kind_ = Kind::appendix_power;
  double alpha_ = 0.5;
  double c_ = 1.0;       // capped_power slope, exponential rate, penalty kappa
  double power_ = 2.0;   // power_penalty exponent
  double scale_ = 1.0;
  std::vector<double> xs_;
  std::vector<double> ys_;
  std::optional<GrowthBounds> certificate_;
};

struct SideVerdict {
  Verdict verdict = Verdict::undecided;
  /// First grid point violating the bound, NaN when none (or only asymptotic).
  double witness = 0.0;
  std::string reason;
};

struct GrowthVerdict {
  SideVerdict upper;  // x >= 0
  SideVerdict lower;  // x < 0
  [[nodiscard]] Verdict overall() const noexcept {
    if (upper.verdict == Verdict::fails || lower.verdict == Verdict::fails) {
      return Verdict::fails;
    }
    if (upper.verdict == Verdict::holds && lower.verdict == Verdict::holds) {
      return Verdict::holds;
    }
    return Verdict::undecided;
  }
};

/// Checks both growth bounds on a log-spaced grid (|x| up to 1e8, extended
/// to 1e300 for the closed-form kinds) and against the asymptotic exponents.
GrowthVerdict certify_growth(const Utility& u, const GrowthBounds& g);

struct ShapeCheck {
  bool nondecreasing = true;
  bool concave = true;
  double witness = 0.0;  // grid point of the worst violation
};

/// First and second differences on an evenly spaced grid.
ShapeCheck check_shape(const Utility& u, double lo = -100.0, double hi = 100.0,
                       std::size_t points = 10'000, double tolerance = 1e-9);

}  // namespace apm
