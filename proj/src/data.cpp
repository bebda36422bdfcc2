#include "vcdd/data.hpp"

#include "vcdd/binary_io.hpp"
#include "vcdd/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numeric>

namespace vcdd {

namespace {

std::string fmt_g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RawImageSet load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels) {
  RawImageSet set;
  set.source = "mnist";
  {
    const auto bytes = detail::read_file(images.string());
    detail::ByteReader r(bytes, images.string());
    const std::uint32_t magic = r.u32_be("image magic");
    if (magic != kIdxImageMagic) r.fail("bad IDX image magic (expected 00 00 08 03)", 0);
    set.count = r.u32_be("image count");
    set.rows = r.u32_be("row count");
    set.cols = r.u32_be("column count");
    const auto payload = r.take(static_cast<std::uint64_t>(set.count) * set.rows * set.cols, "pixel payload");
    set.pixels.assign(payload.begin(), payload.end());
  }
  {
    const auto bytes = detail::read_file(labels.string());
    detail::ByteReader r(bytes, labels.string());
    const std::uint32_t magic = r.u32_be("label magic");
    if (magic != kIdxLabelMagic) r.fail("bad IDX label magic (expected 00 00 08 01)", 0);
    const std::uint32_t count = r.u32_be("label count");
    if (count != set.count)
      r.fail("label count " + std::to_string(count) + " does not match image count " + std::to_string(set.count), 4);
    const auto payload = r.take(count, "label payload");
    set.labels.assign(payload.begin(), payload.end());
  }
  return set;
}

void write_mnist(const RawImageSet& set, const std::filesystem::path& images, const std::filesystem::path& labels) {
  if (set.channels != 1) throw DomainError("IDX images are single-channel");
  detail::ByteWriter wi;
  wi.u32_be(kIdxImageMagic);
  wi.u32_be(static_cast<std::uint32_t>(set.count));
  wi.u32_be(static_cast<std::uint32_t>(set.rows));
  wi.u32_be(static_cast<std::uint32_t>(set.cols));
  wi.raw(set.pixels);
  detail::write_file(images.string(), wi.bytes());

  detail::ByteWriter wl;
  wl.u32_be(kIdxLabelMagic);
  wl.u32_be(static_cast<std::uint32_t>(set.count));
  wl.raw(set.labels);
  detail::write_file(labels.string(), wl.bytes());
}

RawImageSet load_cifar10(std::span<const std::filesystem::path> batches) {
  RawImageSet set;
  set.source = "cifar10";
  set.rows = 32;
  set.cols = 32;
  set.channels = 3;
  for (const auto& path : batches) {
    const auto bytes = detail::read_file(path.string());
    detail::ByteReader r(bytes, path.string());
    if (bytes.empty()) r.fail("empty CIFAR-10 batch", 0);
    if (bytes.size() % kCifarRecordBytes != 0)
      r.fail("length " + std::to_string(bytes.size()) + " is not a multiple of 3073",
             bytes.size() - bytes.size() % kCifarRecordBytes);
    const std::size_t records = bytes.size() / kCifarRecordBytes;
    for (std::size_t k = 0; k < records; ++k) {
      const std::uint64_t at = r.offset();
      const std::uint8_t label = r.u8("label");
      if (label > 9) r.fail("label " + std::to_string(label) + " outside 0..9", at);
      set.labels.push_back(label);
      const auto px = r.take(kCifarRecordBytes - 1, "pixels");
      set.pixels.insert(set.pixels.end(), px.begin(), px.end());
    }
    set.count += records;
  }
  if (set.count == 0) throw DomainError("no CIFAR-10 batches given");
  return set;
}

void write_cifar10(const RawImageSet& set, const std::filesystem::path& path) {
  if (set.dim() != kCifarRecordBytes - 1) throw DomainError("CIFAR-10 records hold 3072 pixel bytes");
  detail::ByteWriter w;
  for (std::size_t i = 0; i < set.count; ++i) {
    w.u8(set.labels[i]);
    w.raw(set.image(i));
  }
  detail::write_file(path.string(), w.bytes());
}

std::string_view cifar10_class_name(int label) {
  static constexpr std::array<std::string_view, 10> names = {"airplane", "automobile", "bird",  "cat",  "deer",
                                                             "dog",      "frog",       "horse", "ship", "truck"};
  if (label < 0 || label > 9) throw DomainError("CIFAR-10 label out of range: " + std::to_string(label));
  return names[static_cast<std::size_t>(label)];
}

void BinaryDataset::validate() const {
  if (x_train.rows() != y_train.size() || x_test.rows() != y_test.size())
    throw DomainError("dataset row counts do not match label counts");
  if (x_train.cols() != x_test.cols()) throw DomainError("train and test have different dimensions");
  const auto pm1 = [](const Vector& y) { return ((y.array() == 1.0) || (y.array() == -1.0)).all(); };
  if (!pm1(y_train) || !pm1(y_test)) throw DomainError("labels must be exactly +1 or -1");
}

BinaryDataset make_binary_task(const RawImageSet& raw, int class_a, int class_b, Index n_train, Index n_test,
                               std::uint64_t seed) {
  if (class_a == class_b) throw DomainError("class pair must name two different classes");
  if (n_train < 2 || n_train % 2 || n_test < 0 || n_test % 2)
    throw DomainError("n_train and n_test must be even (equal per-class draws), n_train >= 2");

  const std::size_t per_train = static_cast<std::size_t>(n_train / 2);
  const std::size_t per_test = static_cast<std::size_t>(n_test / 2);
  std::array<std::vector<std::size_t>, 2> pools;
  const std::array<int, 2> classes = {class_a, class_b};
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < raw.count; ++i)
      if (raw.labels[i] == classes[c]) pools[c].push_back(i);
    if (pools[c].size() < per_train + per_test)
      throw DomainError("class " + std::to_string(classes[c]) + " has " + std::to_string(pools[c].size()) +
                        " samples, need " + std::to_string(per_train + per_test));
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(classes[c])));
    rng.shuffle(std::span<std::size_t>(pools[c]));
  }

  BinaryDataset ds;
  const Index d = static_cast<Index>(raw.dim());
  const auto fill = [&](Matrix& x, Vector& y, std::vector<std::size_t>& idx, std::size_t offset, std::size_t per) {
    x.resize(static_cast<Index>(2 * per), d);
    y.resize(static_cast<Index>(2 * per));
    for (std::size_t k = 0; k < per; ++k) {
      for (int c = 0; c < 2; ++c) {
        const std::size_t src = pools[c][offset + k];
        const Index row = static_cast<Index>(2 * k + c);
        const auto px = raw.image(src);
        for (Index j = 0; j < d; ++j) x(row, j) = px[static_cast<std::size_t>(j)];
        y(row) = c == 0 ? 1.0 : -1.0;
        idx.push_back(src);
      }
    }
  };
  fill(ds.x_train, ds.y_train, ds.provenance.train_indices, 0, per_train);
  fill(ds.x_test, ds.y_test, ds.provenance.test_indices, per_train, per_test);
  ds.provenance.source = raw.source;
  ds.provenance.class_a = class_a;
  ds.provenance.class_b = class_b;
  ds.provenance.seed = seed;
  return ds;
}

BinaryDataset corrupt_labels(BinaryDataset ds, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 0.5)) throw DomainError("label-noise fraction must lie in [0, 0.5]");
  const auto n = static_cast<std::size_t>(ds.n_train());
  const auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n)));
  if (k == 0) return ds;
  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  Rng rng(derive_seed(seed, 0x4c41424cULL));
  rng.shuffle(std::span<Index>(perm));
  for (std::size_t i = 0; i < k; ++i) ds.y_train(perm[i]) = -ds.y_train(perm[i]);
  ds.provenance.noise.push_back("labels:" + fmt_g(fraction) + ":flipped=" + std::to_string(k));
  return ds;
}

BinaryDataset corrupt_pixels(BinaryDataset ds, double sigma_hat, std::uint64_t seed, bool train_only) {
  if (!(sigma_hat >= 0.0) || !std::isfinite(sigma_hat)) throw DomainError("pixel-noise sigma must be non-negative");
  if (sigma_hat == 0.0) return ds;
  const auto noisy = [sigma_hat](Matrix& x, std::uint64_t s) {
    Rng rng(s);
    for (Index i = 0; i < x.rows(); ++i)
      for (Index j = 0; j < x.cols(); ++j) x(i, j) = std::clamp(x(i, j) + rng.normal(0.0, sigma_hat), 0.0, 1.0);
  };
  noisy(ds.x_train, derive_seed(seed, 0x50545241ULL));
  if (!train_only) noisy(ds.x_test, derive_seed(seed, 0x50545354ULL));
  ds.provenance.noise.push_back("pixels:" + fmt_g(sigma_hat) + (train_only ? ":train-only" : ""));
  return ds;
}

BinaryDataset synth_gaussians(Index d, Index n_train, Index n_test, double separation, std::uint64_t seed) {
  if (d < 1) throw DomainError("synthetic data needs d >= 1");
  if (n_train < 1 || n_test < 0) throw DomainError("synthetic data needs n_train >= 1, n_test >= 0");
  if (!(separation >= 0.0) || !std::isfinite(separation)) throw DomainError("separation must be non-negative");
  const auto draw = [&](Matrix& x, Vector& y, Index n, std::uint64_t s) {
    Rng rng(s);
    x.resize(n, d);
    y.resize(n);
    for (Index i = 0; i < n; ++i) {
      y(i) = i % 2 == 0 ? 1.0 : -1.0;
      for (Index j = 0; j < d; ++j) x(i, j) = rng.normal();
      x(i, 0) += y(i) * 0.5 * separation;
    }
  };
  BinaryDataset ds;
  draw(ds.x_train, ds.y_train, n_train, derive_seed(seed, 0));
  draw(ds.x_test, ds.y_test, n_test, derive_seed(seed, 1));
  ds.provenance.source = "synthetic:d=" + std::to_string(d) + ":sep=" + fmt_g(separation);
  ds.provenance.seed = seed;
  return ds;
}

BinaryDataset subsample_train(const BinaryDataset& ds, Index n) {
  if (n < 1 || n > ds.n_train())
    throw DomainError("requested " + std::to_string(n) + " training rows, " + std::to_string(ds.n_train()) +
                      " available");
  BinaryDataset out;
  out.x_train = ds.x_train.topRows(n);
  out.y_train = ds.y_train.head(n);
  out.x_test = ds.x_test;
  out.y_test = ds.y_test;
  out.provenance = ds.provenance;
  if (!out.provenance.train_indices.empty()) out.provenance.train_indices.resize(static_cast<std::size_t>(n));
  return out;
}

namespace {

constexpr char kDataMagic[8] = {'V', 'C', 'D', 'D', 'D', 'A', 'T', 'A'};
constexpr std::uint32_t kDataVersion = 1;

void put_matrix(detail::ByteWriter& w, const Matrix& x) {
  for (Index i = 0; i < x.rows(); ++i)
    for (Index j = 0; j < x.cols(); ++j) w.f32_le(static_cast<float>(x(i, j)));
}

Matrix get_matrix(detail::ByteReader& r, Index rows, Index cols, const char* field) {
  Matrix x(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) x(i, j) = r.f32_le(field);
  return x;
}

}  // namespace

void save_dataset(const BinaryDataset& ds, const std::filesystem::path& path) {
  ds.validate();
  nlohmann::ordered_json h;
  h["n_train"] = ds.n_train();
  h["n_test"] = ds.n_test();
  h["dim"] = ds.dim();
  h["source"] = ds.provenance.source;
  h["class_a"] = ds.provenance.class_a;
  h["class_b"] = ds.provenance.class_b;
  h["seed"] = ds.provenance.seed;
  h["noise"] = ds.provenance.noise;
  h["train_indices"] = ds.provenance.train_indices;
  h["test_indices"] = ds.provenance.test_indices;
  const std::string header = h.dump();

  detail::ByteWriter w;
  for (char c : kDataMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32_le(kDataVersion);
  w.u32_le(static_cast<std::uint32_t>(header.size()));
  w.raw(header);
  put_matrix(w, ds.x_train);
  put_matrix(w, ds.y_train);
  put_matrix(w, ds.x_test);
  put_matrix(w, ds.y_test);
  detail::write_file(path.string(), w.bytes());
}

BinaryDataset load_dataset(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path.string());
  detail::ByteReader r(bytes, path.string());
  const auto magic = r.take(8, "magic");
  if (!std::equal(magic.begin(), magic.end(), kDataMagic)) r.fail("not a vcdd dataset cache", 0);
  const std::uint32_t version = r.u32_le("version");
  if (version != kDataVersion) r.fail("unsupported cache version " + std::to_string(version), 8);
  const std::uint32_t header_len = r.u32_le("header length");
  const std::uint64_t header_at = r.offset();
  const auto hb = r.take(header_len, "header");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(hb.begin(), hb.end());
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("malformed JSON header: ") + e.what(), header_at);
  }

  BinaryDataset ds;
  Index n_train = 0, n_test = 0, dim = 0;
  try {
    n_train = h.at("n_train").get<Index>();
    n_test = h.at("n_test").get<Index>();
    dim = h.at("dim").get<Index>();
    ds.provenance.source = h.at("source").get<std::string>();
    ds.provenance.class_a = h.at("class_a").get<int>();
    ds.provenance.class_b = h.at("class_b").get<int>();
    ds.provenance.seed = h.at("seed").get<std::uint64_t>();
    ds.provenance.noise = h.at("noise").get<std::vector<std::string>>();
    ds.provenance.train_indices = h.at("train_indices").get<std::vector<std::size_t>>();
    ds.provenance.test_indices = h.at("test_indices").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    r.fail(std::string("incomplete header: ") + e.what(), header_at);
  }
  if (n_train < 0 || n_test < 0 || dim < 0) r.fail("negative sizes in header", header_at);
  const std::uint64_t expect = 4ull * static_cast<std::uint64_t>((n_train + n_test) * (dim + 1));
  if (r.remaining() != expect)
    r.fail("payload is " + std::to_string(r.remaining()) + " bytes, header implies " + std::to_string(expect),
           r.offset() + std::min(r.remaining(), expect));
  ds.x_train = get_matrix(r, n_train, dim, "train features");
  ds.y_train = get_matrix(r, n_train, 1, "train labels");
  ds.x_test = get_matrix(r, n_test, dim, "test features");
  ds.y_test = get_matrix(r, n_test, 1, "test labels");
  ds.validate();
  return ds;
}

}  // namespace vcdd
