#pragma once

#include "vcdd/common.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vcdd {

// Decoded image collection: `count` images of rows x cols x channels bytes each,
// stored contiguously (CIFAR images keep their planar R, G, B layout).
struct RawImageSet {
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> labels;
  std::size_t count = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t channels = 1;
  std::string source;

  std::size_t dim() const { return rows * cols * channels; }
  std::span<const std::uint8_t> image(std::size_t i) const { return {pixels.data() + i * dim(), dim()}; }
};

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;
inline constexpr std::size_t kCifarRecordBytes = 3073;

// IDX pair (big-endian headers, u8 payload). Format errors carry the byte offset.
RawImageSet load_mnist(const std::filesystem::path& images, const std::filesystem::path& labels);
void write_mnist(const RawImageSet& set, const std::filesystem::path& images, const std::filesystem::path& labels);

// CIFAR-10 binary batches: 1 label byte + 3072 pixel bytes per record.
RawImageSet load_cifar10(std::span<const std::filesystem::path> batches);
void write_cifar10(const RawImageSet& set, const std::filesystem::path& path);

// airplane, automobile, bird, cat, deer, dog, frog, horse, ship, truck
std::string_view cifar10_class_name(int label);

struct Provenance {
  std::string source;
  int class_a = -1;  // labelled +1
  int class_b = -1;  // labelled -1
  std::uint64_t seed = 0;
  std::vector<std::string> noise;
  std::vector<std::size_t> train_indices;  // source index per row (extracted tasks only)
  std::vector<std::size_t> test_indices;
};

struct BinaryDataset {
  Matrix x_train;
  Matrix x_test;
  Vector y_train;
  Vector y_test;
  Provenance provenance;

  Index n_train() const { return x_train.rows(); }
  Index n_test() const { return x_test.rows(); }
  Index dim() const { return x_train.cols(); }
  void validate() const;
};

// Equal per-class draws without overlap. Train and test rows alternate
// class_a / class_b, so every even-length prefix of the training set is balanced.
BinaryDataset make_binary_task(const RawImageSet& raw, int class_a, int class_b, Index n_train, Index n_test,
                               std::uint64_t seed);

// Flips exactly floor(fraction * n_train) training labels; test labels untouched.
BinaryDataset corrupt_labels(BinaryDataset ds, double fraction, std::uint64_t seed);

// Adds N(0, sigma_hat^2) to every pixel and clips to [0, 1]. Train and test use
// independent streams so a training prefix sees the same noise at any size.
BinaryDataset corrupt_pixels(BinaryDataset ds, double sigma_hat, std::uint64_t seed, bool train_only = false);

// Two unit-variance spherical Gaussians centred at +/-(separation/2) e_1, labels
// alternating +1 / -1.
BinaryDataset synth_gaussians(Index d, Index n_train, Index n_test, double separation, std::uint64_t seed);

// First n training rows (test set unchanged).
BinaryDataset subsample_train(const BinaryDataset& ds, Index n);

// Cached container: magic, version, JSON provenance header, little-endian float32 payload.
void save_dataset(const BinaryDataset& ds, const std::filesystem::path& path);
BinaryDataset load_dataset(const std::filesystem::path& path);

}  // namespace vcdd
