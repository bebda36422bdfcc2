#pragma once

// Closed-form VC generalization bounds for classification and the VC-dimension
// estimate for hyperplanes in a unit-ball feature space. Everything here is a
// pure function.

#include <cstdint>
#include <string_view>

namespace vcdd {

struct BoundConstants {
  double a1 = 1.0;
  double a2 = 1.0;
};

inline constexpr BoundConstants kDefaultConstants{1.0, 1.0};
inline constexpr BoundConstants kNoisyConstants{3.0, 1.0};
inline constexpr BoundConstants kWorstCaseConstants{4.0, 2.0};

// n: training samples, h: VC-dimension estimate (real valued), r_trn: training error.
struct BoundParams {
  std::uint64_t n = 1;
  double h = 1.0;
  double r_trn = 0.0;
  double a1 = kDefaultConstants.a1;
  double a2 = kDefaultConstants.a2;
};

struct BoundResult {
  double eta = 1.0;
  double epsilon = 0.0;
  double bound = 0.0;
};

// Full: relative-deviation bound with confidence term.
// SecondDescent: the simplified epsilon (h/n)(ln(n/h)+1), plugged into the same
// training-error expression so it reduces to epsilon at zero training error.
enum class BoundVariant { Full, SecondDescent };

std::string_view to_string(BoundVariant v);
BoundVariant parse_bound_variant(std::string_view s);

// min(4/sqrt(n), 1)
double confidence_eta(std::uint64_t n);

// (a1/n) * (h (ln(a2 n / h) + 1) - ln(eta/4)). Negative when h is far beyond a2*n*e.
double epsilon(std::uint64_t n, double h, double a1, double a2);

// r + (eps/2)(1 + sqrt(1 + 4r/eps)). A non-positive epsilon is treated as zero,
// which leaves bound == r_trn.
BoundResult vc_bound(const BoundParams& params);

// (h/n)(ln(n/h) + 1). Meant for 0 < h <= n; larger h is evaluated as-is.
double second_descent_bound(std::uint64_t n, double h);

// min(||w||^2, N) + 1
double linear_vc_dim(double norm_sq, std::uint64_t n_features);

// False once the h ln(a2 n / h) term turns negative (h > a2 n e) for the full
// bound, or h > n for the second-descent form.
bool in_regime(BoundVariant variant, std::uint64_t n, double h, double a2);

// Dispatches on the variant. For SecondDescent, a1/a2 do not enter epsilon and eta
// is still reported from confidence_eta.
BoundResult evaluate_bound(BoundVariant variant, const BoundParams& params);

void validate(const BoundParams& params);

}  // namespace vcdd
