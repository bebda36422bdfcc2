#include "vcdd/features.hpp"

#include "vcdd/binary_io.hpp"
#include "vcdd/rng.hpp"

#include <cmath>

namespace vcdd {

namespace {

constexpr char kMapMagic[] = "VCDDFMAP";
constexpr std::uint32_t kMapVersion = 1;

void require_nonempty(Index rows, const char* what) {
  if (rows < 1) throw DomainError(std::string(what) + " must have at least one row");
}

}  // namespace

std::string_view to_string(FeatureKind kind) { return kind == FeatureKind::ReluRandom ? "relu" : "rff"; }

FeatureKind parse_feature_kind(std::string_view s) {
  if (s == "relu") return FeatureKind::ReluRandom;
  if (s == "rff") return FeatureKind::Fourier;
  throw DomainError("unknown feature kind '" + std::string(s) + "' (expected relu or rff)");
}

MinMaxScaler MinMaxScaler::fit(const Matrix& train, double out_lo, double out_hi) {
  require_nonempty(train.rows(), "training matrix");
  MinMaxScaler s;
  s.lo = train.colwise().minCoeff().transpose();
  s.hi = train.colwise().maxCoeff().transpose();
  s.out_lo = out_lo;
  s.out_hi = out_hi;
  return s;
}

Matrix MinMaxScaler::apply(const Matrix& x) const {
  if (x.cols() != lo.size())
    throw DomainError("scaler fitted on " + std::to_string(lo.size()) + " columns, got " + std::to_string(x.cols()));
  Matrix out(x.rows(), x.cols());
  const double span = out_hi - out_lo;
  for (Index j = 0; j < x.cols(); ++j) {
    const double range = hi(j) - lo(j);
    if (!(range > 0.0)) {
      out.col(j).setZero();
      continue;
    }
    // Written so that lo -> out_lo and hi -> out_hi exactly.
    for (Index i = 0; i < x.rows(); ++i) out(i, j) = out_lo + span * ((x(i, j) - lo(j)) / range);
  }
  return out;
}

ScaledInputs scale_inputs(const Matrix& x_train, const Matrix& x_test) {
  require_nonempty(x_train.rows(), "training inputs");
  ScaledInputs out;
  out.scaler = MinMaxScaler::fit(x_train, 0.0, 1.0);
  out.train = out.scaler.apply(x_train);
  out.test = out.scaler.apply(x_test);
  return out;
}

FeatureMap sample_relu_map(Index d, Index n_features, std::uint64_t seed) {
  if (d < 1 || n_features < 1) throw DomainError("feature map needs d >= 1 and N >= 1");
  FeatureMap map;
  map.kind = FeatureKind::ReluRandom;
  map.seed = seed;
  map.projections.resize(n_features, d);
  Rng rng(seed);
  for (Index i = 0; i < n_features; ++i)
    for (Index j = 0; j < d; ++j) map.projections(i, j) = rng.uniform(-1.0, 1.0);
  return map;
}

FeatureMap sample_rff_map(Index d, Index n_features, double sigma, std::uint64_t seed) {
  if (d < 1 || n_features < 1) throw DomainError("feature map needs d >= 1 and N >= 1");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("RFF sigma must be positive");
  FeatureMap map;
  map.kind = FeatureKind::Fourier;
  map.seed = seed;
  map.sigma = sigma;
  map.projections.resize(n_features, d);
  Rng rng(seed);
  for (Index i = 0; i < n_features; ++i)
    for (Index j = 0; j < d; ++j) map.projections(i, j) = rng.normal(0.0, sigma);
  return map;
}

Matrix apply_features(const FeatureMap& map, const Matrix& x) {
  if (x.cols() != map.input_dim())
    throw DomainError("input has " + std::to_string(x.cols()) + " columns, feature map expects " +
                      std::to_string(map.input_dim()));
  Matrix proj = x * map.projections.transpose();
  if (map.kind == FeatureKind::ReluRandom) return proj.cwiseMax(0.0);

  Matrix out(x.rows(), 2 * map.width());
  for (Index i = 0; i < map.width(); ++i) {
    for (Index r = 0; r < x.rows(); ++r) {
      out(r, 2 * i) = std::cos(proj(r, i));
      out(r, 2 * i + 1) = std::sin(proj(r, i));
    }
  }
  return out;
}

FeatureMap fit_z_scaling(FeatureMap map, const Matrix& z_train, bool sphere_normalize) {
  require_nonempty(z_train.rows(), "training features");
  if (z_train.cols() != map.output_dim())
    throw DomainError("feature matrix has " + std::to_string(z_train.cols()) + " columns, map produces " +
                      std::to_string(map.output_dim()));
  ZScaling zs;
  zs.columns = MinMaxScaler::fit(z_train, -1.0, 1.0);
  if (sphere_normalize) {
    const double r = zs.columns.apply(z_train).rowwise().norm().maxCoeff();
    zs.sphere_radius = r > 0.0 ? r : 0.0;
  }
  map.z_scaling = std::move(zs);
  return map;
}

Matrix apply_z_scaling(const FeatureMap& map, const Matrix& z) {
  if (!map.z_scaling) throw UsageError("z-scaling applied before fit_z_scaling");
  Matrix out = map.z_scaling->columns.apply(z);
  if (map.z_scaling->sphere_radius > 0.0) out /= map.z_scaling->sphere_radius;
  return out;
}

void save_feature_map(const FeatureMap& map, const std::filesystem::path& path) {
  detail::ByteWriter w;
  w.raw(std::string(kMapMagic, 8));
  w.u32_le(kMapVersion);
  w.u8(map.kind == FeatureKind::ReluRandom ? 0 : 1);
  w.u64_le(map.seed);
  w.f64_le(map.sigma);
  w.u64_le(static_cast<std::uint64_t>(map.input_dim()));
  w.u64_le(static_cast<std::uint64_t>(map.width()));
  w.u8(map.z_scaling ? 1 : 0);
  if (map.z_scaling) {
    const auto& zs = *map.z_scaling;
    w.f64_le(zs.sphere_radius);
    w.u64_le(static_cast<std::uint64_t>(zs.columns.lo.size()));
    for (Index j = 0; j < zs.columns.lo.size(); ++j) w.f64_le(zs.columns.lo(j));
    for (Index j = 0; j < zs.columns.hi.size(); ++j) w.f64_le(zs.columns.hi(j));
  }
  detail::write_file(path.string(), w.bytes());
}

FeatureMap load_feature_map(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path.string());
  detail::ByteReader r(bytes, "feature map " + path.string());
  const auto magic = r.take(8, "magic");
  if (std::string(magic.begin(), magic.end()) != std::string(kMapMagic, 8)) r.fail("bad magic", 0);
  const auto version = r.u32_le("version");
  if (version != kMapVersion) r.fail("unsupported version " + std::to_string(version), 8);
  const auto kind_at = r.offset();
  const auto kind = r.u8("kind");
  if (kind > 1) r.fail("unknown feature kind " + std::to_string(kind), kind_at);
  const auto seed = r.u64_le("seed");
  const double sigma = r.f64_le("sigma");
  const auto d = static_cast<Index>(r.u64_le("input dimension"));
  const auto n = static_cast<Index>(r.u64_le("feature count"));

  FeatureMap map = kind == 0 ? sample_relu_map(d, n, seed) : sample_rff_map(d, n, sigma, seed);
  if (r.u8("fitted flag") != 0) {
    ZScaling zs;
    zs.sphere_radius = r.f64_le("sphere radius");
    const auto cols_at = r.offset();
    const auto cols = static_cast<Index>(r.u64_le("scaling columns"));
    if (cols != map.output_dim()) r.fail("scaling column count does not match the map", cols_at);
    zs.columns.lo.resize(cols);
    zs.columns.hi.resize(cols);
    zs.columns.out_lo = -1.0;
    zs.columns.out_hi = 1.0;
    for (Index j = 0; j < cols; ++j) zs.columns.lo(j) = r.f64_le("scaling minimum");
    for (Index j = 0; j < cols; ++j) zs.columns.hi(j) = r.f64_le("scaling maximum");
    map.z_scaling = std::move(zs);
  }
  if (r.remaining() != 0) r.fail("trailing bytes", r.offset());
  return map;
}

}  // namespace vcdd
