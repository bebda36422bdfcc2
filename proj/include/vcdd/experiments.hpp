#pragma once

// Width, epoch and sample-size sweeps over the random-feature learners and the
// MLP, with per-point VC-bound predictions.

#include "vcdd/bounds.hpp"
#include "vcdd/common.hpp"
#include "vcdd/data.hpp"
#include "vcdd/features.hpp"
#include "vcdd/mlp.hpp"
#include "vcdd/solvers.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vcdd {

enum class SweepAxis { Width, Epochs, Samples };
enum class Learner { LS, SVM, MLP };

std::string_view to_string(SweepAxis axis);
std::string_view to_string(Learner learner);
SweepAxis parse_sweep_axis(std::string_view s);
Learner parse_learner(std::string_view s);

struct NoiseSpec {
  double label_fraction = 0.0;
  double pixel_sigma = 0.0;
  bool pixel_train_only = false;
};

inline constexpr double kLsInterpolationResidual = 1e-6;

struct SweepConfig {
  SweepAxis axis = SweepAxis::Width;
  Learner learner = Learner::LS;
  FeatureKind features = FeatureKind::ReluRandom;
  double rff_sigma = kDefaultRffSigma;
  bool sphere_normalize = false;
  // Width sweep: N values (empty -> default_width_grid). Sample sweep: n values.
  // Epoch sweep: epochs at which history is kept (empty -> dense/stride schedule).
  std::vector<Index> grid;
  std::vector<Index> widths;  // fixed N for sample sweeps (first entry) and epoch sweeps (all)
  bool densify = true;        // SVM width sweeps: refine around the observed SV count
  BoundConstants constants = kDefaultConstants;
  BoundVariant variant = BoundVariant::Full;
  NoiseSpec noise;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  SvmOptions svm;
  LsOptions ls;
  TrainConfig mlp;
  unsigned workers = 0;  // 0 -> hardware concurrency

  void validate() const;
};

// One (axis value, seed) record. Fields that do not apply are NaN (reals) or -1.
struct SweepRow {
  Index axis_value = 0;
  std::uint64_t seed = 0;
  Index n_train = 0;
  Index width = 0;
  Index epoch = -1;
  double train_error = 0.0;
  double test_error = 0.0;
  double train_residual = 0.0;
  double norm_sq = 0.0;
  double h = 0.0;
  double bound = 0.0;
  double epsilon = 0.0;
  double eta = 0.0;
  Index n_support = -1;
  Index gate_epoch = -1;
  bool interpolating = false;
  std::string flags;  // '|'-separated: out_of_regime, not_converged, above_gate, diverged, skipped, failed
  double wall_seconds = 0.0;

  // Aggregates over seeds sharing (width, axis_value).
  Index n_seeds = 0;
  double train_error_mean = 0.0;
  double test_error_mean = 0.0;
  double test_error_min = 0.0;
  double test_error_max = 0.0;
  double bound_mean = 0.0;
  double bound_min = 0.0;
  double bound_max = 0.0;
  double norm_sq_mean = 0.0;
  double norm_sq_min = 0.0;
  double norm_sq_max = 0.0;

  bool has_flag(std::string_view f) const;
  void add_flag(std::string_view f);
};

struct MlpRun {
  Index width = 0;
  std::uint64_t seed = 0;
  std::vector<HistoryEntry> history;
  std::optional<int> gate_epoch;
  bool diverged = false;
};

struct SweepResult {
  SweepAxis axis = SweepAxis::Width;
  Learner learner = Learner::LS;
  FeatureKind features = FeatureKind::ReluRandom;
  BoundVariant variant = BoundVariant::Full;
  BoundConstants constants = kDefaultConstants;
  std::vector<SweepRow> rows;  // sorted by (width, axis_value, seed order)
  std::vector<MlpRun> runs;
};

// Label noise on the full training set, then the training prefix, then [0,1]
// input scaling fitted on that prefix, then pixel noise.
BinaryDataset prepare_inputs(const BinaryDataset& base, const NoiseSpec& noise, std::uint64_t seed,
                             std::optional<Index> n_train = std::nullopt);

// Random-feature map seed for width N under a replication seed.
std::uint64_t feature_seed(std::uint64_t seed, Index width);

// Samples a width-N feature map, builds the scaled feature matrices, fits and
// scores one learner (LS or SVM). Bound columns are filled from `constants`.
SweepRow fit_random_feature_point(const BinaryDataset& scaled, const SweepConfig& cfg, Index width,
                                  std::uint64_t seed);

// ~30 log-spaced integers from 2 to 2.5 n, three times denser within +/-20% of
// `anticipated` (which is itself included) when given.
std::vector<Index> default_width_grid(Index n, std::optional<Index> anticipated);
std::vector<Index> densify_around(const std::vector<Index>& grid, Index centre, Index n);

using ProgressFn = std::function<void(const SweepRow&)>;

SweepResult sweep_width(const BinaryDataset& base, const SweepConfig& cfg, const ProgressFn& progress = {});
SweepResult sweep_epochs(const BinaryDataset& base, const SweepConfig& cfg, const ProgressFn& progress = {});
SweepResult sweep_samples(const BinaryDataset& base, const SweepConfig& cfg, const ProgressFn& progress = {});
SweepResult run_sweep(const BinaryDataset& base, const SweepConfig& cfg, const ProgressFn& progress = {});

// Width sweeps: smallest grid value at which every seed interpolates.
// Sample sweeps: largest n such that every seed interpolates at all n' <= n.
// LS rows interpolate at zero training error with relative residual <= 1e-6,
// SVM rows at zero training error, MLP rows below the 1% gate.
std::optional<Index> interpolation_threshold(const SweepResult& result);

// Smallest width-sweep grid value at which every seed has exactly zero training error.
std::optional<Index> zero_error_threshold(const SweepResult& result);

// Rows for one axis value (all seeds).
std::vector<const SweepRow*> rows_at(const SweepResult& result, Index axis_value);

// Recomputes h and the bound columns of every row; returns one message per mismatch.
std::vector<std::string> audit(const SweepResult& result);

// Fills bound columns from the row's (n_train, h, train_error).
void apply_bound(SweepRow& row, BoundVariant variant, BoundConstants constants);

void compute_aggregates(SweepResult& result);

}  // namespace vcdd
