#include "vcdd/common.hpp"
#include "vcdd/data.hpp"
#include "vcdd/rng.hpp"
#include "vcdd/solvers.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

using namespace vcdd;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RawImageSet fake_images(std::size_t count, std::size_t rows, std::size_t cols, std::size_t channels, int classes) {
  RawImageSet s;
  s.count = count;
  s.rows = rows;
  s.cols = cols;
  s.channels = channels;
  Rng rng(99);
  for (std::size_t i = 0; i < count; ++i) {
    s.labels.push_back(static_cast<std::uint8_t>(i % static_cast<std::size_t>(classes)));
    for (std::size_t k = 0; k < s.dim(); ++k) s.pixels.push_back(static_cast<std::uint8_t>(rng.below(256)));
  }
  return s;
}

std::vector<std::uint8_t> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

template <typename F>
std::uint64_t format_offset(F&& f) {
  try {
    f();
  } catch (const FormatError& e) {
    return e.offset();
  }
  return ~0ULL;
}

// Normal CDF.
double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("idx round trip and header checks") {
  TempDir dir("vcdd_idx");
  const RawImageSet s = fake_images(7, 4, 3, 1, 10);
  const fs::path im = dir.path / "img", lb = dir.path / "lbl";
  write_mnist(s, im, lb);
  const auto bytes = slurp(im);
  CHECK(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 4) == std::vector<std::uint8_t>{0, 0, 8, 3});
  CHECK(slurp(lb)[3] == 1);
  const RawImageSet back = load_mnist(im, lb);
  CHECK(back.count == 7);
  CHECK(back.rows == 4);
  CHECK(back.cols == 3);
  CHECK(back.pixels == s.pixels);
  CHECK(back.labels == s.labels);

  // Swapped files: wrong magic at offset 0.
  CHECK(format_offset([&] { load_mnist(lb, im); }) == 0);

  // Truncated pixel payload: header is 16 bytes, payload 84; keep 50 payload bytes.
  auto cut = bytes;
  cut.resize(16 + 50);
  spit(dir.path / "cut", cut);
  CHECK(format_offset([&] { load_mnist(dir.path / "cut", lb); }) == 16 + 50);

  // Label count mismatch is reported at the count field.
  auto lbytes = slurp(lb);
  lbytes[7] = 6;
  lbytes.pop_back();
  spit(dir.path / "lbl6", lbytes);
  CHECK(format_offset([&] { load_mnist(im, dir.path / "lbl6"); }) == 4);

  CHECK_THROWS_AS(load_mnist(dir.path / "missing", lb), IoError);
}

TEST_CASE("cifar round trip and record checks") {
  TempDir dir("vcdd_cifar");
  const RawImageSet s = fake_images(10, 32, 32, 3, 10);
  const fs::path p = dir.path / "batch.bin";
  write_cifar10(s, p);
  CHECK(fs::file_size(p) == 30730);
  const std::vector<fs::path> one{p};
  const RawImageSet back = load_cifar10(one);
  CHECK(back.count == 10);
  CHECK(back.channels == 3);
  CHECK(back.pixels == s.pixels);
  CHECK(back.labels == s.labels);
  const std::vector<fs::path> two{p, p};
  CHECK(load_cifar10(two).count == 20);

  spit(dir.path / "empty.bin", {});
  const std::vector<fs::path> empty{dir.path / "empty.bin"};
  CHECK(format_offset([&] { load_cifar10(empty); }) == 0);

  auto bytes = slurp(p);
  bytes.resize(3073 * 2 + 100);
  spit(dir.path / "short.bin", bytes);
  const std::vector<fs::path> shortb{dir.path / "short.bin"};
  CHECK(format_offset([&] { load_cifar10(shortb); }) == 3073 * 2);

  bytes = slurp(p);
  bytes[3073] = 12;
  spit(dir.path / "label.bin", bytes);
  const std::vector<fs::path> badl{dir.path / "label.bin"};
  CHECK(format_offset([&] { load_cifar10(badl); }) == 3073);

  CHECK(cifar10_class_name(1) == "automobile");
  CHECK(cifar10_class_name(3) == "cat");
  CHECK(cifar10_class_name(0) == "airplane");
  CHECK(cifar10_class_name(9) == "truck");
  CHECK_THROWS_AS(cifar10_class_name(10), DomainError);
}

TEST_CASE("binary task extraction") {
  const RawImageSet raw = fake_images(3000, 2, 2, 1, 10);  // 300 per class
  const BinaryDataset ds = make_binary_task(raw, 5, 8, 200, 300, 11);
  CHECK(ds.n_train() == 200);
  CHECK(ds.n_test() == 300);
  CHECK(ds.y_train.sum() == 0.0);
  CHECK(ds.y_test.sum() == 0.0);
  for (Index i = 0; i < ds.n_train(); ++i) CHECK(ds.y_train(i) == (i % 2 == 0 ? 1.0 : -1.0));
  std::set<std::size_t> train(ds.provenance.train_indices.begin(), ds.provenance.train_indices.end());
  CHECK(train.size() == 200);
  for (std::size_t t : ds.provenance.test_indices) CHECK(train.count(t) == 0);
  for (Index i = 0; i < ds.n_train(); ++i) {
    const std::size_t src = ds.provenance.train_indices[static_cast<std::size_t>(i)];
    CHECK(raw.labels[src] == (ds.y_train(i) > 0 ? 5 : 8));
    CHECK(ds.x_train(i, 3) == raw.image(src)[3]);
  }
  const BinaryDataset again = make_binary_task(raw, 5, 8, 200, 300, 11);
  CHECK(again.provenance.train_indices == ds.provenance.train_indices);
  CHECK(again.x_train == ds.x_train);
  CHECK(make_binary_task(raw, 5, 8, 200, 300, 12).provenance.train_indices != ds.provenance.train_indices);
  CHECK_THROWS_AS(make_binary_task(raw, 5, 8, 400, 300, 1), DomainError);
  CHECK_THROWS_AS(make_binary_task(raw, 5, 8, 201, 300, 1), DomainError);
  CHECK_THROWS_AS(make_binary_task(raw, 5, 5, 200, 300, 1), DomainError);
}

TEST_CASE("paper split sizes") {
  const RawImageSet raw = fake_images(30000, 1, 2, 1, 10);
  const BinaryDataset ds = make_binary_task(raw, 5, 8, 800, 2000, 0);
  CHECK((ds.y_train.array() > 0).count() == 400);
  CHECK((ds.y_train.array() < 0).count() == 400);
  const BinaryDataset small = make_binary_task(raw, 5, 8, 200, 2000, 0);
  CHECK((small.y_train.array() > 0).count() == 100);
}

TEST_CASE("label corruption") {
  const BinaryDataset ds = synth_gaussians(3, 800, 100, 2.0, 4);
  CHECK(corrupt_labels(ds, 0.0, 1).y_train == ds.y_train);
  const BinaryDataset noisy = corrupt_labels(ds, 0.05, 1);
  CHECK((noisy.y_train.array() != ds.y_train.array()).count() == 40);
  CHECK(noisy.y_test == ds.y_test);
  CHECK(noisy.x_train == ds.x_train);
  CHECK(noisy.x_test == ds.x_test);
  CHECK(corrupt_labels(noisy, 0.05, 1).y_train == ds.y_train);
  CHECK((corrupt_labels(ds, 0.1, 1).y_train.array() != ds.y_train.array()).count() == 80);
  CHECK((corrupt_labels(synth_gaussians(3, 799, 0, 2.0, 4), 0.05, 2).y_train.array() !=
         synth_gaussians(3, 799, 0, 2.0, 4).y_train.array())
            .count() == 39);
  CHECK_THROWS_AS(corrupt_labels(ds, 0.6, 1), DomainError);
  CHECK_THROWS_AS(corrupt_labels(ds, -0.1, 1), DomainError);
}

TEST_CASE("pixel corruption") {
  BinaryDataset ds;
  ds.x_train = Matrix::Constant(1000, 1000, 0.5);
  ds.x_test = Matrix::Constant(10, 1000, 0.5);
  ds.y_train = Vector::Ones(1000);
  ds.y_test = Vector::Ones(10);
  CHECK(corrupt_pixels(ds, 0.0, 3).x_train == ds.x_train);
  const BinaryDataset noisy = corrupt_pixels(ds, 0.1, 3);
  const auto d = (noisy.x_train.array() - 0.5);
  const double sd = std::sqrt(d.square().mean() - d.mean() * d.mean());
  CHECK(std::abs(sd - 0.1) <= 0.001);
  CHECK(noisy.x_test != ds.x_test);
  CHECK(corrupt_pixels(ds, 0.1, 3, true).x_test == ds.x_test);
  CHECK(corrupt_pixels(ds, 0.1, 3).x_train == noisy.x_train);

  const BinaryDataset wide = corrupt_pixels(ds, 2.0, 3);
  CHECK(wide.x_train.minCoeff() == 0.0);
  CHECK(wide.x_train.maxCoeff() == 1.0);
  CHECK_THROWS_AS(corrupt_pixels(ds, -1.0, 3), DomainError);
}

TEST_CASE("synthetic gaussians") {
  const BinaryDataset a = synth_gaussians(10, 50, 20, 4.0, 1), b = synth_gaussians(10, 50, 20, 4.0, 1);
  CHECK(a.x_train == b.x_train);
  CHECK(a.x_test == b.x_test);
  CHECK(a.y_train(0) == 1.0);
  CHECK(a.y_train(1) == -1.0);
  CHECK(synth_gaussians(10, 50, 20, 4.0, 2).x_train != a.x_train);

  // No separation: chance level.
  const BinaryDataset flat = synth_gaussians(10, 2000, 5000, 0.0, 3);
  const LinearModel m0 = fit_min_norm_ls(flat.x_train, flat.y_train);
  CHECK(std::abs(zero_one_error(m0, flat.x_test, flat.y_test) - 0.5) <= 0.03);

  // Separation 4: Bayes error Phi(-2).
  const BinaryDataset sep = synth_gaussians(10, 4000, 20000, 4.0, 3);
  const LinearModel m = fit_min_norm_ls(sep.x_train, sep.y_train);
  const double bayes = phi(-2.0);
  CHECK(bayes == doctest::Approx(0.02275).epsilon(1e-3));
  const double err = zero_one_error(m, sep.x_test, sep.y_test);
  CHECK(err <= bayes + 0.02);
  CHECK(err >= bayes - 0.01);
}

TEST_CASE("subsampling takes a prefix") {
  const BinaryDataset ds = synth_gaussians(4, 100, 10, 1.0, 0);
  const BinaryDataset s = subsample_train(ds, 40);
  CHECK(s.x_train == ds.x_train.topRows(40));
  CHECK(s.y_train == ds.y_train.head(40));
  CHECK(s.x_test == ds.x_test);
  CHECK_THROWS_AS(subsample_train(ds, 101), DomainError);
}

TEST_CASE("dataset cache round trip") {
  TempDir dir("vcdd_cache");
  const RawImageSet raw = fake_images(400, 3, 3, 1, 10);
  BinaryDataset ds = make_binary_task(raw, 1, 2, 20, 40, 5);
  ds.x_train /= 255.0;
  ds.x_test /= 255.0;
  ds = corrupt_labels(ds, 0.1, 2);
  save_dataset(ds, dir.path / "d.bin");
  const BinaryDataset back = load_dataset(dir.path / "d.bin");
  CHECK(back.x_train == ds.x_train.cast<float>().cast<double>());
  CHECK(back.x_test == ds.x_test.cast<float>().cast<double>());
  CHECK(back.y_train == ds.y_train);
  CHECK(back.y_test == ds.y_test);
  CHECK(back.provenance.source == ds.provenance.source);
  CHECK(back.provenance.class_a == 1);
  CHECK(back.provenance.class_b == 2);
  CHECK(back.provenance.seed == 5);
  CHECK(back.provenance.noise == ds.provenance.noise);
  CHECK(back.provenance.train_indices == ds.provenance.train_indices);
  CHECK(back.provenance.test_indices == ds.provenance.test_indices);

  auto bytes = slurp(dir.path / "d.bin");
  bytes[0] = 'X';
  spit(dir.path / "bad.bin", bytes);
  CHECK(format_offset([&] { load_dataset(dir.path / "bad.bin"); }) == 0);
  bytes = slurp(dir.path / "d.bin");
  bytes.resize(bytes.size() - 3);
  spit(dir.path / "short.bin", bytes);
  CHECK_THROWS_AS(load_dataset(dir.path / "short.bin"), FormatError);
}
