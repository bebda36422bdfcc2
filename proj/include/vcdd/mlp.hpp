#pragma once

// Single-hidden-layer network: score = W2 . BN(ReLU(W1 x + b1)) + b2, trained with
// mini-batch SGD and classical (heavy-ball) momentum.

#include "vcdd/common.hpp"
#include "vcdd/data.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vcdd {

enum class Loss { Squared, Logistic };

std::string_view to_string(Loss loss);
Loss parse_loss(std::string_view s);

struct TrainConfig {
  double lr0 = 0.001;
  double momentum = 0.95;
  double decay = 0.10;  // lr *= (1 - decay) every decay_interval epochs
  int decay_interval = 500;
  int epochs = 6000;
  int batch_size = 32;
  std::uint64_t seed = 0;
  Loss loss = Loss::Squared;
  double bn_momentum = 0.1;  // running-stat averaging factor per batch
  double bn_eps = 1e-5;
  // History schedule: every epoch up to dense_epochs, then every `stride`.
  int dense_epochs = 200;
  int stride = 10;

  void validate() const;
};

struct MlpModel {
  Matrix w1;  // N x d
  Vector b1;
  Vector gamma;
  Vector beta;
  Vector running_mean;
  Vector running_var;
  Vector w2;  // N
  double b2 = 0.0;
  double bn_eps = 1e-5;

  Index width() const { return w1.rows(); }
  Index input_dim() const { return w1.cols(); }
  double output_norm_sq() const { return w2.squaredNorm(); }
  bool finite() const;
};

double xavier_bound(Index fan_in, Index fan_out);

// Xavier-uniform weights, zero biases, BN scale 1 / shift 0, running stats (0, 1).
MlpModel init_xavier(Index d, Index width, std::uint64_t seed);

enum class Mode { Train, Eval };

struct ForwardPass {
  Mode mode = Mode::Eval;
  Matrix pre;         // W1 x + b1
  Matrix normalized;  // BN output before scale/shift
  Matrix scaled;      // gamma * normalized + beta
  Vector batch_mean;
  Vector batch_var;   // biased, train mode only
  Vector inv_std;
  Vector scores;
};

// Pure: does not touch running statistics (see update_running_stats).
// Train mode needs at least two rows.
ForwardPass forward(const MlpModel& model, const Matrix& x, Mode mode);
void update_running_stats(MlpModel& model, const ForwardPass& pass, double momentum);

struct MlpGradients {
  Matrix w1;
  Vector b1;
  Vector gamma;
  Vector beta;
  Vector w2;
  double b2 = 0.0;
};

// Mean loss over the batch.
double batch_loss(const Vector& scores, const Vector& y, Loss loss);
MlpGradients backward(const MlpModel& model, const Matrix& x, const ForwardPass& pass, const Vector& y, Loss loss);

double learning_rate(const TrainConfig& cfg, int epoch);

// Eval-mode 0/1 error, zero scores counted as +1.
double mlp_error(const MlpModel& model, const Matrix& x, const Vector& y);

struct HistoryEntry {
  int epoch = 0;  // completed epochs
  double lr = 0.0;
  double train_loss = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
  double output_norm_sq = 0.0;
};

struct TrainResult {
  MlpModel model;
  std::vector<HistoryEntry> history;
  bool diverged = false;
  std::string message;
  std::optional<int> gate_epoch;  // first epoch with train error < gate
};

inline constexpr double kTrainErrorGate = 0.01;

// `record_epochs`, when non-empty, replaces the dense/stride history schedule.
// The final epoch is always recorded.
TrainResult train_sgd(const BinaryDataset& data, Index width, const TrainConfig& cfg,
                      std::span<const int> record_epochs = {});

// ||W2||^2 + 1
double estimate_vc_dim(const MlpModel& model);

void save_mlp(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_mlp(const std::filesystem::path& path);

void write_history_csv(const std::vector<HistoryEntry>& history, const std::filesystem::path& path);

}  // namespace vcdd
