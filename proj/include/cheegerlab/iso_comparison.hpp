#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cheegerlab/error.hpp"
#include "cheegerlab/format.hpp"
#include "cheegerlab/model_space.hpp"
#include "cheegerlab/numerics/extrapolation.hpp"
#include "cheegerlab/numerics/grid.hpp"
#include "cheegerlab/numerics/ode.hpp"
#include "cheegerlab/numerics/spline.hpp"
#include "cheegerlab/parallel.hpp"

namespace cheegerlab {

/// Slack on the balance inequalities.
inline constexpr double kBalanceTolerance = 1e-9;
/// Disagreement between the two forms of balance-from-above worth a warning.
inline constexpr double kBalanceCrossCheckTolerance = 1e-6;
/// Relative agreement required between closed-form and integrated W.
inline constexpr double kConstructionTolerance = 1e-7;

namespace detail {

// g(x) = coth x - 1/x, so that s·coth(s r) = 1/r + s·g(s r) without the 1/r.
inline double coth_minus_inverse(double x) {
  if (x < 0.1) {
    const double x2 = x * x;
    return x * (1.0 / 3 + x2 * (-1.0 / 45 + x2 * (2.0 / 945 - x2 / 4725)));
  }
  return 1.0 / std::tanh(x) - 1.0 / x;
}

// g'(x) = 1/x² - 1/sinh² x.
inline double coth_minus_inverse_derivative(double x) {
  if (x < 0.1) {
    const double x2 = x * x;
    return 1.0 / 3 + x2 * (-1.0 / 15 + x2 * (2.0 / 189 - x2 / 675));
  }
  const double sh = std::sinh(x);
  return 1.0 / (x * x) - 1.0 / (sh * sh);
}

// ∫_0^x g = log(sinh x / x).
inline double log_sinhc(double x) {
  if (x < 0.1) {
    const double x2 = x * x;
    return x2 * (1.0 / 6 + x2 * (-1.0 / 180 + x2 / 2835));
  }
  return log_sinh(x) - std::log(x);
}

} // namespace detail

/// Radial upper bound h(r) for the o-radial mean curvature of P.
class BoundingFunction {
public:
  enum class Kind { Zero, Constant, HabPair, Tabulated };

  static BoundingFunction zero() { return BoundingFunction(Kind::Zero); }

  static BoundingFunction constant(double c) {
    if (!std::isfinite(c)) throw DomainError("constant bounding function must be finite");
    BoundingFunction h(Kind::Constant);
    h.c_ = c;
    return h;
  }

  /// h_{a,b} = ((m-1)/m)(η_{w_a} - η_{w_b}); with intermediary w_a this gives W = w_b.
  static BoundingFunction hab(double a, double b) {
    if (!(a < b) || !(b <= 0.0) || !std::isfinite(a))
      throw DomainError("hab bounding function needs a < b <= 0");
    BoundingFunction h(Kind::HabPair);
    h.a_ = a;
    h.b_ = b;
    return h;
  }

  static BoundingFunction tabulated(std::vector<double> r, std::vector<double> values) {
    if (r.size() != values.size()) throw ParseError("tabulated h: r and h sizes differ");
    if (r.empty() || r.front() != 0.0) throw ParseError("tabulated h: r must start at 0");
    for (double v : values)
      if (!std::isfinite(v)) throw ParseError("tabulated h: values must be finite");
    BoundingFunction h(Kind::Tabulated);
    h.spline_ = std::make_shared<numerics::CubicSpline>(std::move(r), std::move(values));
    return h;
  }

  /// Reads a two-column CSV with header "r,h".
  static BoundingFunction from_csv(const std::filesystem::path& path) {
    auto [r, h] = WarpingFunction::read_two_column_csv(path, "r", "h");
    return tabulated(std::move(r), std::move(h));
  }

  Kind kind() const { return kind_; }
  double constant_value() const { return c_; }
  double hab_a() const { return a_; }
  double hab_b() const { return b_; }

  double domain_end() const {
    return spline_ ? spline_->x_max() : std::numeric_limits<double>::infinity();
  }

  std::vector<double> knots() const {
    if (!spline_) return {};
    auto k = spline_->knots();
    return {k.begin(), k.end()};
  }

  /// h(r). The dimension only matters for HabPair.
  double value(double r, int m) const {
    switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return c_;
    case Kind::HabPair: return hab_factor(m) * (scaled_g(a_, r) - scaled_g(b_, r));
    case Kind::Tabulated: return spline_->value(r);
    }
    return 0.0;
  }

  double derivative(double r, int m) const {
    switch (kind_) {
    case Kind::Zero:
    case Kind::Constant: return 0.0;
    case Kind::HabPair: return hab_factor(m) * (scaled_g_prime(a_, r) - scaled_g_prime(b_, r));
    case Kind::Tabulated: return spline_->derivative(r);
    }
    return 0.0;
  }

  /// ∫_0^r h.
  double integral(double r, int m) const {
    switch (kind_) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return c_ * r;
    case Kind::HabPair:
      return hab_factor(m) * (detail::log_sinhc(std::sqrt(-a_) * r) - detail::log_sinhc(std::sqrt(-b_) * r));
    case Kind::Tabulated: return spline_->integral(r);
    }
    return 0.0;
  }

  std::string describe() const {
    switch (kind_) {
    case Kind::Zero: return "zero";
    case Kind::Constant: return "constant(" + format_double(c_) + ")";
    case Kind::HabPair: return "hab(a=" + format_double(a_) + ",b=" + format_double(b_) + ")";
    case Kind::Tabulated: return "tabulated(" + std::to_string(spline_->knots().size()) + " knots)";
    }
    return {};
  }

private:
  explicit BoundingFunction(Kind k) : kind_(k) {}

  static double hab_factor(int m) {
    if (m < 2) throw DomainError("hab bounding function needs m >= 2");
    return static_cast<double>(m - 1) / m;
  }
  // η_{w_b}(r) - 1/r.
  static double scaled_g(double b, double r) {
    const double s = std::sqrt(-b);
    return s * detail::coth_minus_inverse(s * r);
  }
  static double scaled_g_prime(double b, double r) {
    const double s = std::sqrt(-b);
    return s * s * detail::coth_minus_inverse_derivative(s * r);
  }

  Kind kind_;
  double c_ = 0.0;
  double a_ = 0.0;
  double b_ = 0.0;
  std::shared_ptr<const numerics::CubicSpline> spline_;
};

namespace detail {

/// W with log W = log w - (m/(m-1)) ∫_0^r h, the solution of
/// W'/W = η_w - (m/(m-1)) h, W'(0) = 1.
class ComparisonModel final : public WarpingModel {
public:
  ComparisonModel(int m, WarpingFunction w, BoundingFunction h)
      : m_(m), c_(static_cast<double>(m) / (m - 1)), w_(std::move(w)), h_(std::move(h)) {}

  WarpingKind kind() const override { return WarpingKind::Comparison; }
  double domain_end() const override { return std::min(w_.domain_end(), h_.domain_end()); }
  double value(double r) const override { return std::exp(log_value(r)); }
  double log_value(double r) const override {
    return w_.model().log_value(r) - c_ * h_.integral(r, m_);
  }
  double derivative(double r) const override {
    if (r == 0.0) return w_.model().derivative(0.0);
    return value(r) * eta(r);
  }
  double eta(double r) const override { return w_.model().eta(r) - c_ * h_.value(r, m_); }
  double eta_derivative(double r) const override {
    return w_.model().eta_derivative(r) - c_ * h_.derivative(r, m_);
  }
  std::vector<double> knots() const override {
    auto k = w_.knots();
    auto kh = h_.knots();
    k.insert(k.end(), kh.begin(), kh.end());
    std::sort(k.begin(), k.end());
    k.erase(std::unique(k.begin(), k.end()), k.end());
    return k;
  }
  std::string describe() const override {
    return "comparison(m=" + std::to_string(m_) + ", w=" + w_.describe() + ", h=" + h_.describe() + ")";
  }

private:
  int m_;
  double c_;
  WarpingFunction w_;
  BoundingFunction h_;
};

} // namespace detail

enum class ConstructionMethod { ClosedForm, OdeIntegrated };

inline const char* to_string(ConstructionMethod c) {
  return c == ConstructionMethod::ClosedForm ? "closed_form" : "ode_integrated";
}

/// The isoperimetric comparison space M^m_W built from (w, h).
struct IsoComparisonSpace {
  int m = 2;
  WarpingFunction w;
  BoundingFunction h = BoundingFunction::zero();
  WarpingFunction W;
  /// Construction used for evaluation. The other route is kept as a witness.
  ConstructionMethod method = ConstructionMethod::ClosedForm;
  /// Interval [0, R] the space was built on.
  double R = 0.0;
  /// Intermediary the balance conditions are stated against (defaults to w).
  WarpingFunction balance_wrt;
  std::vector<double> ode_radii;
  std::vector<double> ode_log_W;
  /// max |W_ode / W_closed - 1| over ode_radii.
  double cross_check_max_rel = 0.0;

  ModelSpace model() const { return ModelSpace(m, W); }
  double eta_W(double r) const { return W.eta(r); }
  double q_W(double r) const { return model().isoperimetric_quotient(r); }
};

/// Integrates y = log(W/r), y' = η_W - 1/r, pointwise from η_w and h.
/// Independent of the closed form's ∫h and log w.
inline std::vector<double> integrate_W_ode(int m, const WarpingFunction& w, const BoundingFunction& h,
                                           std::span<const double> radii) {
  const double c = static_cast<double>(m) / (m - 1);
  auto rhs = [&](double r, double) { return (w.model().eta(r) - 1.0 / r) - c * h.value(r, m); };
  const double r0 = kSingularRadius;
  numerics::OdeOptions opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-14;
  opt.initial_step = r0;
  const auto y = numerics::integrate_ode(rhs, r0, r0 * rhs(r0, 0.0), radii, opt);
  std::vector<double> log_W(radii.size());
  for (std::size_t i = 0; i < radii.size(); ++i) log_W[i] = y[i] + std::log(radii[i]);
  return log_W;
}

/// Builds W on [0, R] and cross-checks the closed form against the ODE route.
inline IsoComparisonSpace construct_W(int m, const WarpingFunction& w, const BoundingFunction& h, double R,
                                      std::optional<WarpingFunction> balance_wrt = std::nullopt) {
  if (m < 2) throw DomainError("comparison space dimension must be >= 2");
  if (!(R > 0.0) || !std::isfinite(R)) throw DomainError("R must be positive and finite");
  if (!(R < w.domain_end())) throw DomainError("R lies outside the domain of " + w.describe());
  if (!(R <= h.domain_end())) throw DomainError("R lies outside the domain of h = " + h.describe());
  if (!std::isfinite(h.value(0.0, m))) throw DomainError("h(0) must be finite");

  IsoComparisonSpace space;
  space.m = m;
  space.w = w;
  space.h = h;
  space.R = R;
  space.balance_wrt = balance_wrt ? *balance_wrt : w;
  space.W = h.kind() == BoundingFunction::Kind::Zero
                ? w
                : WarpingFunction::from_model(std::make_shared<detail::ComparisonModel>(m, w, h));

  const double r_lo = std::min(1e-3, R / 10);
  space.ode_radii = numerics::log_grid(r_lo, R, 64);
  space.ode_log_W = integrate_W_ode(m, w, h, space.ode_radii);
  for (std::size_t i = 0; i < space.ode_radii.size(); ++i) {
    const double diff = std::abs(std::expm1(space.ode_log_W[i] - space.W.log_value(space.ode_radii[i])));
    if (!(diff <= space.cross_check_max_rel)) space.cross_check_max_rel = diff;
  }
  if (!(space.cross_check_max_rel <= kConstructionTolerance))
    throw NumericError("closed-form and integrated W disagree (relative " +
                       format_double(space.cross_check_max_rel) + ")");
  return space;
}

/// One radius where a balance inequality fails.
struct BalanceWitness {
  double r = 0.0;
  std::string inequality;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct BalanceVerdict {
  bool balanced_above = true;
  bool balanced_below = true;
  std::optional<BalanceWitness> witness_above;
  std::optional<BalanceWitness> witness_below;
  std::vector<std::string> warnings;
  std::size_t grid_points = 0;
  double r_min = 0.0;
  double r_max = 0.0;
};

namespace detail {

inline void require_balance_grid(const IsoComparisonSpace& space, std::span<const double> grid) {
  if (grid.size() < 2) throw DomainError("balance grid needs at least two radii");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= kSingularRadius) || !(grid[i] <= space.R))
      throw DomainError("balance grid radius " + format_double(grid[i]) + " outside [1e-8, R]");
    if (i && !(grid[i] > grid[i - 1])) throw DomainError("balance grid must increase strictly");
  }
}

} // namespace detail

/// η_w >= 0 and η'_W <= 0 on the grid (slack 1e-9), plus the equivalent
/// curvature form -(m-1)(η_w² + K_w) <= m h' as a logged cross-check.
inline BalanceVerdict check_balanced_above(const IsoComparisonSpace& space, std::span<const double> grid) {
  detail::require_balance_grid(space, grid);
  const int m = space.m;
  struct Sample {
    double eta_wrt, eta_W_prime, eta_W_prime_alt, scale;
  };
  std::vector<Sample> s(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const double r = grid[i];
    const double eta_w = space.w.eta(r);
    const double k_w = space.w.curvature(r);
    const double alt = (-(m - 1) * (eta_w * eta_w + k_w) - m * space.h.derivative(r, m)) / (m - 1);
    s[i] = {space.balance_wrt.eta(r), space.W.eta_derivative(r), alt, 1.0 + eta_w * eta_w};
  });

  BalanceVerdict v;
  v.balanced_below = true;
  v.grid_points = grid.size();
  v.r_min = grid.front();
  v.r_max = grid.back();
  std::size_t disagreements = 0;
  std::optional<double> first_disagreement;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (v.balanced_above && s[i].eta_wrt < -kBalanceTolerance) {
      v.balanced_above = false;
      v.witness_above = BalanceWitness{grid[i], "eta_w >= 0", s[i].eta_wrt, 0.0};
    }
    if (v.balanced_above && s[i].eta_W_prime > kBalanceTolerance) {
      v.balanced_above = false;
      v.witness_above = BalanceWitness{grid[i], "eta_W' <= 0", s[i].eta_W_prime, 0.0};
    }
    if (std::abs(s[i].eta_W_prime - s[i].eta_W_prime_alt) > kBalanceCrossCheckTolerance * s[i].scale) {
      ++disagreements;
      if (!first_disagreement) first_disagreement = grid[i];
    }
  }
  if (disagreements)
    v.warnings.push_back("eta_W' and the curvature form disagree beyond 1e-6 at " +
                         std::to_string(disagreements) + " radii (first r = " +
                         format_double(*first_disagreement) + ")");
  return v;
}

/// q_W (η_w - h) >= 1/m on the grid (slack 1e-9).
inline BalanceVerdict check_balanced_below(const IsoComparisonSpace& space, std::span<const double> grid) {
  detail::require_balance_grid(space, grid);
  const int m = space.m;
  const ModelSpace model = space.model();
  std::vector<double> lhs(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    const double r = grid[i];
    lhs[i] = model.isoperimetric_quotient(r) * (space.balance_wrt.eta(r) - space.h.value(r, m));
  });

  BalanceVerdict v;
  v.balanced_above = true;
  v.grid_points = grid.size();
  v.r_min = grid.front();
  v.r_max = grid.back();
  const double target = 1.0 / m;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(lhs[i] >= target - kBalanceTolerance)) {
      v.balanced_below = false;
      v.witness_below = BalanceWitness{grid[i], "q_W (eta_w - h) >= 1/m", lhs[i], target};
      break;
    }
  }
  return v;
}

inline BalanceVerdict check_balance(const IsoComparisonSpace& space, std::span<const double> grid) {
  auto above = check_balanced_above(space, grid);
  const auto below = check_balanced_below(space, grid);
  above.balanced_below = below.balanced_below;
  above.witness_below = below.witness_below;
  above.warnings.insert(above.warnings.end(), below.warnings.begin(), below.warnings.end());
  return above;
}

/// Default balance grid: n log-spaced radii over [1e-3, r_max].
inline std::vector<double> default_balance_grid(double r_max, std::size_t n = 1000) {
  return numerics::log_grid(std::min(1e-3, r_max / 10), r_max, n);
}

/// A Cheeger bound value extracted from the tail of a model-space quantity.
struct CheegerBound {
  /// Empty when the tail does not converge; nothing is fabricated.
  std::optional<double> value;
  numerics::LimitEstimate estimate;
  bool hypothesis_holds = false;
  std::vector<std::string> warnings;
};

namespace detail {

inline void require_probe_range(const IsoComparisonSpace& space, double r_max) {
  if (!(r_max > 0.0) || !(r_max <= space.R))
    throw DomainError("r_max = " + format_double(r_max) + " outside (0, R]");
  if (space.W.space_form_curvature().value_or(0.0) > 0.0 || space.w.space_form_curvature().value_or(0.0) > 0.0)
    throw DomainError("Cheeger bounds need a pole-bearing model (b <= 0)");
}

} // namespace detail

/// lim Vol(S^W_t)/Vol(B^W_t) = lim 1/q_W(t). Upper bound on I_∞ when
/// balanced from below and the volume growth is bounded.
inline CheegerBound cheeger_upper_value(const IsoComparisonSpace& space, double r_max, int doublings = 6) {
  detail::require_probe_range(space, r_max);
  CheegerBound out;
  const ModelSpace model = space.model();
  out.estimate = numerics::estimate_limit([&](double r) { return 1.0 / model.isoperimetric_quotient(r); },
                                          r_max, doublings);
  const auto verdict = check_balanced_below(space, default_balance_grid(r_max, 200));
  out.hypothesis_holds = verdict.balanced_below;
  if (!out.hypothesis_holds)
    out.warnings.push_back("not balanced from below (first failure at r = " +
                           format_double(verdict.witness_below->r) + "); the upper bound is not implied");
  if (out.estimate.converged) out.value = out.estimate.extrapolated;
  else out.warnings.push_back("tail of Vol(S)/Vol(B) did not converge; no value reported");
  return out;
}

/// (m-1) lim η_W(t). Lower bound on I_∞ when balanced from above.
inline CheegerBound cheeger_lower_value(const IsoComparisonSpace& space, double r_max, int doublings = 6) {
  detail::require_probe_range(space, r_max);
  CheegerBound out;
  const int m = space.m;
  out.estimate = numerics::estimate_limit([&](double r) { return (m - 1) * space.W.eta(r); }, r_max, doublings);
  const auto verdict = check_balanced_above(space, default_balance_grid(r_max, 200));
  out.hypothesis_holds = verdict.balanced_above;
  if (!out.hypothesis_holds)
    out.warnings.push_back("not balanced from above (first failure at r = " +
                           format_double(verdict.witness_above->r) + "); the lower bound is not implied");
  const auto& vals = out.estimate.values;
  for (std::size_t i = 1; i < vals.size(); ++i) {
    if (vals[i] > vals[i - 1] + kBalanceTolerance) {
      out.hypothesis_holds = false;
      out.warnings.push_back("eta_W increases between probe radii " + format_double(out.estimate.radii[i - 1]) +
                             " and " + format_double(out.estimate.radii[i]));
      break;
    }
  }
  if (out.estimate.converged) {
    out.value = out.estimate.extrapolated;
    if (*out.value <= 0.0) out.warnings.push_back("lower bound is non-positive and therefore vacuous");
  } else {
    out.warnings.push_back("tail of (m-1) eta_W did not converge; no value reported");
  }
  return out;
}

} // namespace cheegerlab
