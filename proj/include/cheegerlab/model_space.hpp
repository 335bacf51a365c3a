#pragma once

// One-dimensional calculus of rotationally symmetric model spaces
// M^m_w = [0, R) x_w S^{m-1}: warping profiles, the mean curvature
// η_w = w'/w of distance spheres, radial curvature K_w = -w''/w, and the
// sphere/ball volumes that enter the isoperimetric quotient q_w.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cheegerlab/error.hpp"
#include "cheegerlab/format.hpp"
#include "cheegerlab/numerics/quadrature.hpp"
#include "cheegerlab/numerics/spline.hpp"

namespace cheegerlab {

/// η_w and K_w are only evaluated for r >= kSingularRadius; there is no
/// extrapolation of their limits at the centre.
inline constexpr double kSingularRadius = 1e-8;

/// Tolerance on w(0) = 0 and w'(0) = 1 for user-supplied profiles.
inline constexpr double kCentreTolerance = 1e-6;

enum class WarpingKind { SpaceForm, Analytic, Tabulated, Comparison };

inline const char* to_string(WarpingKind k) {
  switch (k) {
  case WarpingKind::SpaceForm: return "space_form";
  case WarpingKind::Analytic: return "analytic";
  case WarpingKind::Tabulated: return "tabulated";
  case WarpingKind::Comparison: return "comparison";
  }
  return "unknown";
}

/// Closed-form profile. `log_value`, `eta` and `second_ratio` (= w''/w) are
/// the numerically stable entry points; `value`, `derivative` and
/// `second_derivative` may overflow for fast-growing profiles.
struct AnalyticProfile {
  std::string name;
  double domain_end = std::numeric_limits<double>::infinity();
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  std::function<double(double)> second_derivative;
  std::function<double(double)> log_value;
  std::function<double(double)> eta;
  std::function<double(double)> second_ratio;
};

namespace detail {

/// Implementation interface behind WarpingFunction. Arguments are already
/// range-checked by the wrapper.
class WarpingModel {
public:
  virtual ~WarpingModel() = default;
  virtual WarpingKind kind() const = 0;
  virtual double domain_end() const = 0;
  virtual double value(double r) const = 0;
  virtual double log_value(double r) const = 0;
  virtual double derivative(double r) const { return eta(r) * value(r); }
  virtual double second_derivative(double r) const { return -curvature(r) * value(r); }
  virtual double eta(double r) const = 0;
  virtual double eta_derivative(double r) const = 0;
  virtual double curvature(double r) const { return -(eta_derivative(r) + eta(r) * eta(r)); }
  virtual std::vector<double> knots() const { return {}; }
  virtual std::string describe() const = 0;
};

// log(sinh(x)) for x > 0 without overflow.
inline double log_sinh(double x) {
  if (x > 20.0) return x - std::numbers::ln2 + std::log1p(-std::exp(-2.0 * x));
  return std::log(std::sinh(x));
}

class SpaceFormModel final : public WarpingModel {
public:
  explicit SpaceFormModel(double b) : b_(b), s_(std::sqrt(std::abs(b))) {}

  double curvature_b() const { return b_; }
  WarpingKind kind() const override { return WarpingKind::SpaceForm; }
  double domain_end() const override {
    return b_ > 0 ? std::numbers::pi / s_ : std::numeric_limits<double>::infinity();
  }
  double value(double r) const override {
    if (b_ == 0) return r;
    return b_ < 0 ? std::sinh(s_ * r) / s_ : std::sin(s_ * r) / s_;
  }
  double log_value(double r) const override {
    if (r == 0) return -std::numeric_limits<double>::infinity();
    if (b_ == 0) return std::log(r);
    return b_ < 0 ? log_sinh(s_ * r) - std::log(s_) : std::log(std::sin(s_ * r) / s_);
  }
  double derivative(double r) const override {
    if (b_ == 0) return 1.0;
    return b_ < 0 ? std::cosh(s_ * r) : std::cos(s_ * r);
  }
  double second_derivative(double r) const override { return -b_ * value(r); }
  double eta(double r) const override {
    if (b_ == 0) return 1.0 / r;
    return b_ < 0 ? s_ / std::tanh(s_ * r) : s_ / std::tan(s_ * r);
  }
  double eta_derivative(double r) const override {
    if (b_ == 0) return -1.0 / (r * r);
    const double x = s_ * r;
    if (b_ < 0) {
      const double sh = std::sinh(x);
      return b_ / (sh * sh);
    }
    const double sn = std::sin(x);
    return -b_ / (sn * sn);
  }
  double curvature(double) const override { return b_; }
  std::string describe() const override { return "space_form(b=" + format_double(b_) + ")"; }

private:
  double b_;
  double s_;
};

class AnalyticModel final : public WarpingModel {
public:
  explicit AnalyticModel(AnalyticProfile p) : p_(std::move(p)) {}

  WarpingKind kind() const override { return WarpingKind::Analytic; }
  double domain_end() const override { return p_.domain_end; }
  double value(double r) const override { return p_.value(r); }
  double log_value(double r) const override {
    return p_.log_value ? p_.log_value(r) : std::log(p_.value(r));
  }
  double derivative(double r) const override { return p_.derivative(r); }
  double second_derivative(double r) const override { return p_.second_derivative(r); }
  double eta(double r) const override { return p_.eta ? p_.eta(r) : p_.derivative(r) / p_.value(r); }
  double eta_derivative(double r) const override {
    const double e = eta(r);
    return second_ratio(r) - e * e;
  }
  double curvature(double r) const override { return -second_ratio(r); }
  std::string describe() const override { return "analytic(" + p_.name + ")"; }

private:
  double second_ratio(double r) const {
    return p_.second_ratio ? p_.second_ratio(r) : p_.second_derivative(r) / p_.value(r);
  }
  AnalyticProfile p_;
};

class TabulatedModel final : public WarpingModel {
public:
  explicit TabulatedModel(numerics::CubicSpline spline) : spline_(std::move(spline)) {}

  WarpingKind kind() const override { return WarpingKind::Tabulated; }
  double domain_end() const override { return spline_.x_max(); }
  double value(double r) const override { return spline_.value(r); }
  double log_value(double r) const override { return std::log(spline_.value(r)); }
  double derivative(double r) const override { return spline_.derivative(r); }
  double second_derivative(double r) const override { return spline_.second_derivative(r); }
  double eta(double r) const override { return spline_.derivative(r) / spline_.value(r); }
  double eta_derivative(double r) const override {
    const double e = eta(r);
    return spline_.second_derivative(r) / spline_.value(r) - e * e;
  }
  double curvature(double r) const override { return -spline_.second_derivative(r) / spline_.value(r); }
  std::vector<double> knots() const override {
    return {spline_.knots().begin(), spline_.knots().end()};
  }
  std::string describe() const override {
    return "tabulated(" + std::to_string(spline_.knots().size()) + " samples)";
  }

private:
  numerics::CubicSpline spline_;
};

} // namespace detail

/// Warping function w: [0, R) -> [0, ∞) with w(0) = 0, w'(0) = 1, w > 0 on (0, R).
///
/// Cheap to copy; the profile itself is immutable and shared.
class WarpingFunction {
public:
  /// The Euclidean profile w(r) = r.
  WarpingFunction() : model_(std::make_shared<detail::SpaceFormModel>(0.0)) {}

  /// w_b: sin(√b r)/√b, r or sinh(√-b r)/√-b by the sign of b.
  static WarpingFunction space_form(double b) {
    if (!std::isfinite(b)) throw DomainError("space_form: curvature must be finite");
    return WarpingFunction(std::make_shared<detail::SpaceFormModel>(b));
  }

  static WarpingFunction analytic(AnalyticProfile profile) {
    if (!profile.value || !profile.derivative || !profile.second_derivative)
      throw ParseError("analytic profile '" + profile.name + "' lacks value or derivatives");
    WarpingFunction w(std::make_shared<detail::AnalyticModel>(std::move(profile)));
    w.check_centre();
    return w;
  }

  /// Cubic-spline profile through (r_i, w_i); r must start at 0 and increase strictly.
  static WarpingFunction tabulated(std::vector<double> r, std::vector<double> w) {
    if (r.size() != w.size()) throw ParseError("tabulated profile: r and w sizes differ");
    if (r.empty() || r.front() != 0.0) throw ParseError("tabulated profile: r must start at 0");
    for (std::size_t i = 1; i < r.size(); ++i)
      if (!(w[i] > 0.0)) throw ParseError("tabulated profile: w must be positive for r > 0");
    WarpingFunction out(std::make_shared<detail::TabulatedModel>(
        numerics::CubicSpline(std::move(r), std::move(w))));
    out.check_centre();
    return out;
  }

  /// Reads a two-column CSV with header "r,w".
  static WarpingFunction from_csv(const std::filesystem::path& path) {
    auto [r, w] = read_two_column_csv(path, "r", "w");
    return tabulated(std::move(r), std::move(w));
  }

  /// Named closed-form profiles. Known: "exp-r2" (w = e^{r²} + r - 1).
  static WarpingFunction named(const std::string& name);

  /// Wraps a custom implementation (used for constructed comparison spaces).
  static WarpingFunction from_model(std::shared_ptr<const detail::WarpingModel> model) {
    return WarpingFunction(std::move(model));
  }

  WarpingKind kind() const { return model_->kind(); }
  double domain_end() const { return model_->domain_end(); }
  std::string describe() const { return model_->describe(); }
  std::vector<double> knots() const { return model_->knots(); }
  const detail::WarpingModel& model() const { return *model_; }
  bool same_profile(const WarpingFunction& other) const { return model_ == other.model_; }

  /// Curvature b when this is a space-form profile.
  std::optional<double> space_form_curvature() const {
    if (auto* sf = dynamic_cast<const detail::SpaceFormModel*>(model_.get())) return sf->curvature_b();
    return std::nullopt;
  }

  double value(double r) const {
    check_domain(r);
    return model_->value(r);
  }
  double log_value(double r) const {
    check_domain(r);
    return model_->log_value(r);
  }
  double derivative(double r) const {
    check_domain(r);
    return model_->derivative(r);
  }
  double second_derivative(double r) const {
    check_domain(r);
    return model_->second_derivative(r);
  }
  double eta(double r) const {
    check_regular(r);
    return model_->eta(r);
  }
  double eta_derivative(double r) const {
    check_regular(r);
    return model_->eta_derivative(r);
  }
  double curvature(double r) const {
    check_regular(r);
    return model_->curvature(r);
  }

  static std::pair<std::vector<double>, std::vector<double>>
  read_two_column_csv(const std::filesystem::path& path, const std::string& first,
                      const std::string& second) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::string line;
    const std::string expected = first + "," + second;
    if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
    std::string header;
    for (char c : line)
      if (c != ' ' && c != '\r' && c != '\t') header.push_back(c);
    if (header != expected) throw ParseError(path.string() + ": expected header '" + expected + "'");
    std::vector<double> a, b;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto parts = split(line, ',');
      if (parts.size() != 2)
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected 2 columns");
      a.push_back(parse_double(parts[0]));
      b.push_back(parse_double(parts[1]));
      if (a.size() > 1 && !(a.back() > a[a.size() - 2]))
        throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + first +
                         " must be strictly increasing");
    }
    if (a.empty() || a.front() != 0.0) throw ParseError(path.string() + ": " + first + " must start at 0");
    return {std::move(a), std::move(b)};
  }

private:
  explicit WarpingFunction(std::shared_ptr<const detail::WarpingModel> m) : model_(std::move(m)) {}

  void check_domain(double r) const {
    if (!(r >= 0.0) || !(r < model_->domain_end()))
      throw DomainError(model_->describe() + ": r = " + format_double(r) + " outside [0, " +
                        format_double(model_->domain_end()) + ")");
  }
  void check_regular(double r) const {
    check_domain(r);
    if (r < kSingularRadius)
      throw SingularityError(model_->describe() + ": singular at r = " + format_double(r));
  }
  void check_centre() const {
    if (std::abs(model_->value(0.0)) > kCentreTolerance)
      throw DomainError(model_->describe() + ": w(0) != 0");
    if (std::abs(model_->derivative(0.0) - 1.0) > kCentreTolerance)
      throw DomainError(model_->describe() + ": w'(0) != 1 (got " +
                        format_double(model_->derivative(0.0)) + ")");
  }

  std::shared_ptr<const detail::WarpingModel> model_;
};

/// w(r) = e^{r²} + r - 1, evaluated in the scaled form e^{-r²} w so that η_w
/// and K_w stay finite where w itself overflows.
inline AnalyticProfile exp_r2_profile() {
  AnalyticProfile p;
  p.name = "exp-r2";
  // e^{-r²} w(r) = -expm1(-r²) + r e^{-r²}
  auto scaled = [](double r) { return -std::expm1(-r * r) + r * std::exp(-r * r); };
  p.value = [](double r) { return std::expm1(r * r) + r; };
  p.derivative = [](double r) { return 2 * r * std::exp(r * r) + 1; };
  p.second_derivative = [](double r) { return (4 * r * r + 2) * std::exp(r * r); };
  p.log_value = [scaled](double r) { return r * r + std::log(scaled(r)); };
  p.eta = [scaled](double r) { return (2 * r + std::exp(-r * r)) / scaled(r); };
  p.second_ratio = [scaled](double r) { return (4 * r * r + 2) / scaled(r); };
  return p;
}

inline WarpingFunction WarpingFunction::named(const std::string& name) {
  if (name == "exp-r2") return analytic(exp_r2_profile());
  throw ParseError("unknown analytic profile '" + name + "'");
}

// Operation-style entry points.
inline double eval_w(const WarpingFunction& w, double r) { return w.value(r); }
inline double eta_w(const WarpingFunction& w, double r) { return w.eta(r); }
inline double curvature_K_w(const WarpingFunction& w, double r) { return w.curvature(r); }

/// ω_k: k-dimensional volume of the unit k-sphere, 2π^{(k+1)/2} / Γ((k+1)/2).
inline double unit_sphere_volume(int k) {
  constexpr int kCached = 64;
  static const std::array<double, kCached> table = [] {
    std::array<double, kCached> t{};
    for (int j = 0; j < kCached; ++j) {
      const double half = 0.5 * (j + 1);
      t[j] = 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
    }
    return t;
  }();
  if (k < 0) throw DomainError("unit_sphere_volume: negative dimension");
  if (k < kCached) return table[k];
  const double half = 0.5 * (k + 1);
  return 2.0 * std::exp(half * std::log(std::numbers::pi) - std::lgamma(half));
}

/// The w-model M^m_w.
class ModelSpace {
public:
  ModelSpace(int m, WarpingFunction w) : m_(m), w_(std::move(w)) {
    if (m_ < 2) throw DomainError("model space dimension must be >= 2");
  }

  int dimension() const { return m_; }
  const WarpingFunction& warping() const { return w_; }

  /// Vol(S^w_r) = ω_{m-1} w(r)^{m-1}.
  double sphere_volume(double r) const {
    return unit_sphere_volume(m_ - 1) * std::pow(w_.value(r), m_ - 1);
  }

  /// Vol(B^w_r) = ω_{m-1} ∫_0^r w^{m-1}.
  double ball_volume(double r) const {
    if (r == 0.0) return 0.0;
    return sphere_volume(r) * isoperimetric_quotient(r);
  }

  /// q_w(r) = ∫_0^r w^{m-1}(t) dt / w^{m-1}(r).
  ///
  /// Integrates exp((m-1)(log w(t) - log w(r))) so that profiles which
  /// overflow (e^{r²} at r = 50) still give finite quotients. Panels are
  /// split at profile knots and geometrically towards r, where the
  /// integrand of an expanding profile concentrates.
  double isoperimetric_quotient(double r) const {
    if (r == 0.0) {
      w_.value(r);
      return 0.0;
    }
    const double log_wr = w_.log_value(r);
    const double k = m_ - 1;
    auto integrand = [&](double t) { return std::exp(k * (w_.model().log_value(t) - log_wr)); };
    std::vector<double> cuts = w_.knots();
    for (int j = 1; j <= 40; ++j) cuts.push_back(r - std::ldexp(r, -j));
    return numerics::integrate(integrand, 0.0, r, quotient_quadrature(), cuts).value;
  }

  /// Vol(S^w_r) / Vol(B^w_r) = 1 / q_w(r).
  double sphere_ball_ratio(double r) const { return 1.0 / isoperimetric_quotient(r); }

  static numerics::QuadratureOptions quotient_quadrature() {
    numerics::QuadratureOptions opt;
    opt.abs_tol = 1e-13;
    opt.rel_tol = 1e-10;
    opt.max_intervals = 20000;
    return opt;
  }

private:
  int m_;
  WarpingFunction w_;
};

inline double sphere_volume(const ModelSpace& M, double r) { return M.sphere_volume(r); }
inline double ball_volume(const ModelSpace& M, double r) { return M.ball_volume(r); }
inline double isoperimetric_quotient(const ModelSpace& M, double r) { return M.isoperimetric_quotient(r); }

} // namespace cheegerlab
