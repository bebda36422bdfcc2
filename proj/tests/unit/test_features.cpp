#include "oracles.hpp"
#include "vcdd/common.hpp"
#include "vcdd/features.hpp"
#include "vcdd/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace vcdd;
namespace fs = std::filesystem;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  Matrix m(static_cast<Index>(values.size()), static_cast<Index>(values.begin()->size()));
  Index i = 0;
  for (const auto& r : values) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rng.uniform(0.0, 255.0);
  return m;
}

}  // namespace

TEST_CASE("relu map range and determinism") {
  const FeatureMap a = sample_relu_map(784, 100, 7);
  CHECK(a.width() == 100);
  CHECK(a.input_dim() == 784);
  CHECK(a.projections.minCoeff() >= -1.0);
  CHECK(a.projections.maxCoeff() <= 1.0);
  const FeatureMap b = sample_relu_map(784, 100, 7);
  CHECK(a.projections == b.projections);
  CHECK(sample_relu_map(784, 100, 8).projections != a.projections);
  CHECK_THROWS_AS(sample_relu_map(0, 5, 1), DomainError);
}

TEST_CASE("relu projection moments") {
  const FeatureMap m = sample_relu_map(2, 100000, 1);
  for (Index j = 0; j < 2; ++j) {
    CHECK(std::abs(m.projections.col(j).mean()) <= 0.01);
    // Uniform on [-1,1] has variance 1/3.
    const double var = (m.projections.col(j).array() - m.projections.col(j).mean()).square().mean();
    CHECK(var == doctest::Approx(1.0 / 3.0).epsilon(0.02));
  }
}

TEST_CASE("fourier projection moments") {
  const FeatureMap m = sample_rff_map(2, 100000, 0.05, 1);
  for (Index j = 0; j < 2; ++j) {
    const auto c = m.projections.col(j).array();
    const double sd = std::sqrt((c - c.mean()).square().mean());
    CHECK(std::abs(sd - 0.05) <= 0.02 * 0.05);
  }
  CHECK(sample_rff_map(2, 50, 0.05, 3).projections == sample_rff_map(2, 50, 0.05, 3).projections);
  CHECK_THROWS_AS(sample_rff_map(2, 10, 0.0, 1), DomainError);
  CHECK_THROWS_AS(sample_rff_map(2, 10, -1.0, 1), DomainError);
}

TEST_CASE("input scaling") {
  const Matrix train = rows({{0, 3}, {5, 3}, {10, 3}});
  const ScaledInputs s = scale_inputs(train, rows({{12, 3}, {-5, 7}}));
  CHECK(s.train(0, 0) == 0.0);
  CHECK(s.train(1, 0) == 0.5);
  CHECK(s.train(2, 0) == 1.0);
  CHECK(s.train.col(1).isZero());
  CHECK(s.test(0, 0) == doctest::Approx(1.2));
  CHECK(s.test(1, 0) == doctest::Approx(-0.5));
  CHECK(s.test.col(1).isZero());
  CHECK_THROWS_AS(scale_inputs(Matrix(0, 2), Matrix(1, 2)), DomainError);
}

TEST_CASE("feature evaluation") {
  FeatureMap relu = sample_relu_map(2, 2, 0);
  relu.projections = rows({{1, -1}, {-1, -1}});
  Matrix z = apply_features(relu, rows({{0.5, 0.2}, {0.5, 0.5}}));
  CHECK(z(0, 0) == doctest::Approx(0.3));
  CHECK(z(1, 1) == 0.0);

  FeatureMap rff = sample_rff_map(2, 3, 0.05, 0);
  CHECK(rff.output_dim() == 6);
  rff.projections.row(0).setZero();
  z = apply_features(rff, rows({{0.3, 0.9}}));
  CHECK(z.cols() == 6);
  CHECK(z(0, 0) == 1.0);
  CHECK(z(0, 1) == 0.0);
  const Matrix x = random_matrix(20, 2, 5) / 255.0;
  z = apply_features(sample_rff_map(2, 40, 1.0, 9), x);
  for (Index i = 0; i < z.rows(); ++i)
    for (Index k = 0; k < 40; ++k) CHECK(z(i, 2 * k) * z(i, 2 * k) + z(i, 2 * k + 1) * z(i, 2 * k + 1) == doctest::Approx(1.0));
  CHECK_THROWS_AS(apply_features(relu, Matrix::Zero(1, 3)), DomainError);
}

TEST_CASE("feature rescaling") {
  FeatureMap map = sample_relu_map(1, 2, 0);
  const Matrix z = rows({{0, 7}, {2, 7}, {4, 7}});
  CHECK_THROWS_AS(apply_z_scaling(map, z), UsageError);
  map = fit_z_scaling(map, z);
  const Matrix s = apply_z_scaling(map, z);
  CHECK(s(0, 0) == -1.0);
  CHECK(s(1, 0) == 0.0);
  CHECK(s(2, 0) == 1.0);
  CHECK(s.col(1).isZero());
  CHECK(apply_z_scaling(map, rows({{5, 1}}))(0, 0) == doctest::Approx(1.5));

  const Matrix zs = random_matrix(30, 2, 4);
  const FeatureMap sph = fit_z_scaling(sample_relu_map(1, 2, 0), zs, true);
  const Matrix out = apply_z_scaling(sph, zs);
  CHECK(out.rowwise().norm().maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("pipeline golden hash") {
  const Matrix x_train = random_matrix(12, 6, 100), x_test = random_matrix(4, 6, 101);
  const ScaledInputs s = scale_inputs(x_train, x_test);
  FeatureMap relu = sample_relu_map(6, 9, derive_seed(0, 9));
  relu = fit_z_scaling(relu, apply_features(relu, s.train));
  const Matrix z = apply_z_scaling(relu, apply_features(relu, s.test));
  FeatureMap rff = sample_rff_map(6, 5, 0.05, derive_seed(0, 5));
  rff = fit_z_scaling(rff, apply_features(rff, s.train));
  const Matrix f = apply_z_scaling(rff, apply_features(rff, s.test));
  const std::uint64_t hz = oracle::matrix_hash(z), hf = oracle::matrix_hash(f);
  CHECK(hz == 0xd755ae0ad8745213ULL);
  CHECK(hf == 0xf8a7c9100ca60651ULL);
}

TEST_CASE("sidecar round trip") {
  const fs::path dir = fs::temp_directory_path() / "vcdd_features_test";
  fs::create_directories(dir);
  for (FeatureMap m : {sample_relu_map(5, 7, 3), sample_rff_map(5, 4, 0.2, 8)}) {
    m = fit_z_scaling(m, apply_features(m, random_matrix(10, 5, 2) / 255.0), m.kind == FeatureKind::Fourier);
    save_feature_map(m, dir / "map.bin");
    const FeatureMap back = load_feature_map(dir / "map.bin");
    CHECK(back.kind == m.kind);
    CHECK(back.seed == m.seed);
    CHECK(back.sigma == m.sigma);
    CHECK(back.projections == m.projections);
    REQUIRE(back.z_scaling.has_value());
    CHECK(back.z_scaling->columns.lo == m.z_scaling->columns.lo);
    CHECK(back.z_scaling->columns.hi == m.z_scaling->columns.hi);
    CHECK(back.z_scaling->sphere_radius == m.z_scaling->sphere_radius);
  }
  fs::remove_all(dir);
}

TEST_CASE("feature kind names") {
  CHECK(parse_feature_kind("relu") == FeatureKind::ReluRandom);
  CHECK(parse_feature_kind("rff") == FeatureKind::Fourier);
  CHECK_THROWS_AS(parse_feature_kind("tanh"), DomainError);
}
