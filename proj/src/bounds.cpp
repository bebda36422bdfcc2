#include "vcdd/bounds.hpp"

#include "vcdd/common.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace vcdd {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) throw DomainError(std::string(name) + " must be finite");
}

void check_constants(double a1, double a2) {
  require_finite(a1, "a1");
  require_finite(a2, "a2");
  if (a1 < 0.0 || a1 > 4.0) throw DomainError("a1 must lie in [0, 4], got " + std::to_string(a1));
  if (a2 <= 0.0 || a2 > 2.0) throw DomainError("a2 must lie in (0, 2], got " + std::to_string(a2));
}

double combine(double r_trn, double eps) {
  if (eps <= 0.0) return r_trn;
  return r_trn + 0.5 * eps * (1.0 + std::sqrt(1.0 + 4.0 * r_trn / eps));
}

}  // namespace

std::string_view to_string(BoundVariant v) { return v == BoundVariant::Full ? "eq1" : "eq2"; }

BoundVariant parse_bound_variant(std::string_view s) {
  if (s == "eq1" || s == "full") return BoundVariant::Full;
  if (s == "eq2" || s == "second-descent") return BoundVariant::SecondDescent;
  throw DomainError("unknown bound variant '" + std::string(s) + "' (expected eq1 or eq2)");
}

double confidence_eta(std::uint64_t n) {
  if (n == 0) throw DomainError("sample count n must be positive");
  return std::min(4.0 / std::sqrt(static_cast<double>(n)), 1.0);
}

double epsilon(std::uint64_t n, double h, double a1, double a2) {
  if (n == 0) throw DomainError("sample count n must be positive");
  require_finite(h, "h");
  if (h <= 0.0) throw DomainError("VC-dimension h must be positive");
  check_constants(a1, a2);
  const double nd = static_cast<double>(n);
  const double eta = confidence_eta(n);
  return a1 / nd * (h * (std::log(a2 * nd / h) + 1.0) - std::log(eta / 4.0));
}

void validate(const BoundParams& p) {
  if (p.n == 0) throw DomainError("sample count n must be positive");
  require_finite(p.h, "h");
  require_finite(p.r_trn, "r_trn");
  if (p.h < 1.0) throw DomainError("VC-dimension h must be >= 1, got " + std::to_string(p.h));
  if (p.r_trn < 0.0 || p.r_trn > 1.0)
    throw DomainError("training error must lie in [0, 1], got " + std::to_string(p.r_trn));
  check_constants(p.a1, p.a2);
}

BoundResult vc_bound(const BoundParams& p) {
  validate(p);
  BoundResult out;
  out.eta = confidence_eta(p.n);
  out.epsilon = epsilon(p.n, p.h, p.a1, p.a2);
  out.bound = combine(p.r_trn, out.epsilon);
  return out;
}

double second_descent_bound(std::uint64_t n, double h) {
  if (n == 0) throw DomainError("sample count n must be positive");
  require_finite(h, "h");
  if (h <= 0.0) throw DomainError("VC-dimension h must be positive");
  const double nd = static_cast<double>(n);
  return h / nd * (std::log(nd / h) + 1.0);
}

double linear_vc_dim(double norm_sq, std::uint64_t n_features) {
  if (std::isnan(norm_sq) || norm_sq < 0.0) throw DomainError("norm_sq must be non-negative");
  return std::min(norm_sq, static_cast<double>(n_features)) + 1.0;
}

bool in_regime(BoundVariant variant, std::uint64_t n, double h, double a2) {
  const double nd = static_cast<double>(n);
  if (variant == BoundVariant::SecondDescent) return h <= nd;
  return h <= a2 * nd * std::numbers::e;
}

BoundResult evaluate_bound(BoundVariant variant, const BoundParams& p) {
  if (variant == BoundVariant::Full) return vc_bound(p);
  validate(p);
  BoundResult out;
  out.eta = confidence_eta(p.n);
  out.epsilon = second_descent_bound(p.n, p.h);
  out.bound = combine(p.r_trn, out.epsilon);
  return out;
}

}  // namespace vcdd
