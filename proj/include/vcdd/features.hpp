#pragma once

#include "vcdd/common.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>

namespace vcdd {

enum class FeatureKind { ReluRandom, Fourier };

inline constexpr double kDefaultRffSigma = 0.05;

std::string_view to_string(FeatureKind kind);
FeatureKind parse_feature_kind(std::string_view s);

// Per-column affine map fitted on training rows. Columns with zero range map to 0.
struct MinMaxScaler {
  Vector lo;
  Vector hi;
  double out_lo = 0.0;
  double out_hi = 1.0;

  static MinMaxScaler fit(const Matrix& train, double out_lo, double out_hi);
  Matrix apply(const Matrix& x) const;
};

struct ScaledInputs {
  Matrix train;
  Matrix test;
  MinMaxScaler scaler;
};

// Fits [0,1] scaling on the training rows and applies it to both sets; test values
// are not clipped.
ScaledInputs scale_inputs(const Matrix& x_train, const Matrix& x_test);

struct ZScaling {
  MinMaxScaler columns;      // to [-1, 1]
  double sphere_radius = 0;  // > 0: rows additionally divided by this (max train-row norm)
};

// Frozen random feature map. Projections are regenerated from (kind, seed, sigma,
// d, N) so the map is fully described by those plus the fitted scaling.
struct FeatureMap {
  FeatureKind kind = FeatureKind::ReluRandom;
  std::uint64_t seed = 0;
  double sigma = kDefaultRffSigma;  // Fourier only
  Matrix projections;               // N x d
  std::optional<ZScaling> z_scaling;

  Index input_dim() const { return projections.cols(); }
  Index width() const { return projections.rows(); }
  // Real columns produced by apply_features: N for ReLU, 2N (cos, sin pairs) for Fourier.
  Index output_dim() const { return kind == FeatureKind::Fourier ? 2 * width() : width(); }
};

FeatureMap sample_relu_map(Index d, Index n_features, std::uint64_t seed);
FeatureMap sample_rff_map(Index d, Index n_features, double sigma, std::uint64_t seed);

// ReLU: max(<v_i, x>, 0). Fourier: columns (2i, 2i+1) = (cos <v_i, x>, sin <v_i, x>).
Matrix apply_features(const FeatureMap& map, const Matrix& x);

FeatureMap fit_z_scaling(FeatureMap map, const Matrix& z_train, bool sphere_normalize = false);
Matrix apply_z_scaling(const FeatureMap& map, const Matrix& z);

// Binary sidecar; layout documented in docs/formats.md.
void save_feature_map(const FeatureMap& map, const std::filesystem::path& path);
FeatureMap load_feature_map(const std::filesystem::path& path);

}  // namespace vcdd
