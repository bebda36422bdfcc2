#include "vcdd/experiments.hpp"

#include "vcdd/rng.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace vcdd {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::Width: return "width";
    case SweepAxis::Epochs: return "epochs";
    case SweepAxis::Samples: return "samples";
  }
  return "?";
}

std::string_view to_string(Learner learner) {
  switch (learner) {
    case Learner::LS: return "ls";
    case Learner::SVM: return "svm";
    case Learner::MLP: return "mlp";
  }
  return "?";
}

SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "width") return SweepAxis::Width;
  if (s == "epochs") return SweepAxis::Epochs;
  if (s == "samples") return SweepAxis::Samples;
  throw DomainError("unknown sweep axis '" + std::string(s) + "'");
}

Learner parse_learner(std::string_view s) {
  if (s == "ls") return Learner::LS;
  if (s == "svm") return Learner::SVM;
  if (s == "mlp") return Learner::MLP;
  throw DomainError("unknown learner '" + std::string(s) + "' (expected ls, svm or mlp)");
}

void SweepConfig::validate() const {
  if (seeds.empty()) throw DomainError("a sweep needs at least one seed");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1]) throw DomainError("sweep grid must be strictly increasing");
  if (!grid.empty() && grid.front() < 1) throw DomainError("sweep grid values must be positive");
  if (axis == SweepAxis::Epochs && learner != Learner::MLP) throw DomainError("epoch sweeps need the mlp learner");
  if (axis == SweepAxis::Samples && widths.empty()) throw DomainError("sample sweeps need a fixed width");
  for (Index w : widths)
    if (w < 1) throw DomainError("widths must be positive");
  if (!(constants.a1 >= 0.0 && constants.a1 <= 4.0)) throw DomainError("a1 must lie in [0, 4]");
  if (!(constants.a2 > 0.0 && constants.a2 <= 2.0)) throw DomainError("a2 must lie in (0, 2]");
  if (!(noise.label_fraction >= 0.0 && noise.label_fraction <= 0.5))
    throw DomainError("label-noise fraction must lie in [0, 0.5]");
  if (!(noise.pixel_sigma >= 0.0)) throw DomainError("pixel-noise sigma must be non-negative");
  if (features == FeatureKind::Fourier && !(rff_sigma > 0.0)) throw DomainError("RFF sigma must be positive");
  if (!(svm.C > 0.0)) throw DomainError("SVM C must be positive");
  if (learner == Learner::MLP) mlp.validate();
}

bool SweepRow::has_flag(std::string_view f) const {
  std::string_view rest = flags;
  while (!rest.empty()) {
    const auto bar = rest.find('|');
    if (rest.substr(0, bar) == f) return true;
    if (bar == std::string_view::npos) break;
    rest.remove_prefix(bar + 1);
  }
  return false;
}

void SweepRow::add_flag(std::string_view f) {
  if (has_flag(f)) return;
  if (!flags.empty()) flags += '|';
  flags += f;
}

BinaryDataset prepare_inputs(const BinaryDataset& base, const NoiseSpec& noise, std::uint64_t seed,
                             std::optional<Index> n_train) {
  BinaryDataset ds = corrupt_labels(base, noise.label_fraction, derive_seed(seed, 0x6c6162656cULL));
  if (n_train) ds = subsample_train(ds, *n_train);
  ScaledInputs s = scale_inputs(ds.x_train, ds.x_test);
  ds.x_train = std::move(s.train);
  ds.x_test = std::move(s.test);
  return corrupt_pixels(std::move(ds), noise.pixel_sigma, derive_seed(seed, 0x706978656cULL), noise.pixel_train_only);
}

std::uint64_t feature_seed(std::uint64_t seed, Index width) {
  return derive_seed(seed, static_cast<std::uint64_t>(width));
}

void apply_bound(SweepRow& row, BoundVariant variant, BoundConstants constants) {
  BoundParams p;
  p.n = static_cast<std::uint64_t>(row.n_train);
  p.h = row.h;
  p.r_trn = row.train_error;
  p.a1 = constants.a1;
  p.a2 = constants.a2;
  const BoundResult r = evaluate_bound(variant, p);
  row.eta = r.eta;
  row.epsilon = r.epsilon;
  row.bound = r.bound;
  if (!in_regime(variant, p.n, p.h, p.a2)) row.add_flag("out_of_regime");
}

namespace {

void apply_mlp_bound(SweepRow& row, BoundVariant variant, BoundConstants constants) {
  if (row.train_error < kTrainErrorGate) {
    apply_bound(row, variant, constants);
  } else {
    row.eta = confidence_eta(static_cast<std::uint64_t>(row.n_train));
    row.epsilon = kNaN;
    row.bound = kNaN;
    row.add_flag("above_gate");
  }
}

}  // namespace

SweepRow fit_random_feature_point(const BinaryDataset& scaled, const SweepConfig& cfg, Index width,
                                  std::uint64_t seed) {
  const std::uint64_t fseed = feature_seed(seed, width);
  FeatureMap map = cfg.features == FeatureKind::Fourier ? sample_rff_map(scaled.dim(), width, cfg.rff_sigma, fseed)
                                                        : sample_relu_map(scaled.dim(), width, fseed);
  Matrix z = apply_features(map, scaled.x_train);
  map = fit_z_scaling(std::move(map), z, cfg.sphere_normalize);
  z = apply_z_scaling(map, z);
  const Matrix zt = apply_z_scaling(map, apply_features(map, scaled.x_test));

  SweepRow row;
  row.seed = seed;
  row.width = width;
  row.n_train = scaled.n_train();
  LinearModel model;
  if (cfg.learner == Learner::LS) {
    model = fit_min_norm_ls(z, scaled.y_train, cfg.ls);
    row.train_residual = model.meta().residual;
  } else if (cfg.learner == Learner::SVM) {
    SvmFit fit = fit_linear_svm(z, scaled.y_train, cfg.svm);
    row.n_support = fit.n_support;
    row.train_residual = kNaN;
    if (!fit.model.meta().converged) row.add_flag("not_converged");
    model = std::move(fit.model);
  } else {
    throw DomainError("random-feature points need the ls or svm learner");
  }
  row.train_error = zero_one_error(model, z, scaled.y_train);
  row.test_error = zero_one_error(model, zt, scaled.y_test);
  row.norm_sq = model.norm_sq();
  row.h = linear_vc_dim(row.norm_sq, static_cast<std::uint64_t>(width));
  row.interpolating = row.train_error == 0.0 &&
                      (cfg.learner != Learner::LS || row.train_residual <= kLsInterpolationResidual);
  apply_bound(row, cfg.variant, cfg.constants);
  return row;
}

std::vector<Index> densify_around(const std::vector<Index>& grid, Index centre, Index n) {
  const double hi = std::max(3.0, std::round(2.5 * static_cast<double>(n)));
  const double base_ratio = std::pow(hi / 2.0, 1.0 / 29.0);
  const double fine = std::pow(base_ratio, 1.0 / 3.0);
  const double c = static_cast<double>(centre);
  std::set<Index> out(grid.begin(), grid.end());
  out.insert(centre);
  for (double v = c * fine; v <= 1.2 * c; v *= fine) out.insert(static_cast<Index>(std::llround(v)));
  for (double v = c / fine; v >= 0.8 * c; v /= fine) out.insert(static_cast<Index>(std::llround(v)));
  out.erase(0);
  return {out.begin(), out.end()};
}

std::vector<Index> default_width_grid(Index n, std::optional<Index> anticipated) {
  if (n < 1) throw DomainError("grid needs n >= 1");
  const double hi = std::max(3.0, std::round(2.5 * static_cast<double>(n)));
  const Index top = static_cast<Index>(hi);
  const int count = static_cast<int>(std::min<Index>(30, top - 1));
  std::vector<Index> grid;
  for (int k = 0; k < count; ++k) {
    Index v = static_cast<Index>(std::llround(2.0 * std::pow(hi / 2.0, k / static_cast<double>(count - 1))));
    // Keep points distinct while leaving room for the remaining ones below the top.
    if (!grid.empty()) v = std::max(v, grid.back() + 1);
    grid.push_back(std::min<Index>(v, top - (count - 1 - k)));
  }
  if (anticipated && *anticipated >= 1) grid = densify_around(grid, *anticipated, n);
  return grid;
}

namespace {

struct Task {
  Index axis_value = 0;
  Index width = 0;
  std::size_t seed_index = 0;
};

template <typename F>
void parallel_for(std::size_t count, unsigned workers, F&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) fn(i);
    });
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SweepRow failed_row(const std::string& flag) {
  SweepRow row;
  row.train_error = row.test_error = row.train_residual = row.norm_sq = kNaN;
  row.h = row.bound = row.epsilon = row.eta = kNaN;
  row.add_flag(flag);
  return row;
}

SweepRow mlp_row(const HistoryEntry& e, Index n_train, Index width, std::uint64_t seed, const TrainResult& tr) {
  SweepRow row;
  row.seed = seed;
  row.width = width;
  row.n_train = n_train;
  row.epoch = e.epoch;
  row.train_error = e.train_error;
  row.test_error = e.test_error;
  row.train_residual = kNaN;
  row.norm_sq = e.output_norm_sq;
  row.h = e.output_norm_sq + 1.0;
  row.gate_epoch = tr.gate_epoch ? *tr.gate_epoch : -1;
  row.interpolating = e.train_error < kTrainErrorGate;
  return row;
}

class Runner {
 public:
  Runner(const SweepConfig& cfg, const ProgressFn& progress) : cfg_(cfg), progress_(progress) {}

  // fn(task) -> rows; failures become flagged rows.
  template <typename F>
  std::vector<SweepRow> run(const std::vector<Task>& tasks, F&& fn) {
    std::vector<std::vector<SweepRow>> out(tasks.size());
    parallel_for(tasks.size(), cfg_.workers, [&](std::size_t i) {
      const Task& t = tasks[i];
      const auto t0 = std::chrono::steady_clock::now();
      std::vector<SweepRow> rows;
      try {
        rows = fn(t);
      } catch (const std::exception& e) {
        SweepRow r = failed_row("failed");
        r.seed = cfg_.seeds[t.seed_index];
        r.width = t.width;
        rows.push_back(r);
      }
      const double dt = seconds_since(t0);
      for (auto& r : rows) {
        r.axis_value = r.epoch >= 0 && cfg_.axis == SweepAxis::Epochs ? r.epoch : t.axis_value;
        r.wall_seconds = dt;
      }
      if (progress_) {
        std::lock_guard lock(mutex_);
        for (const auto& r : rows) progress_(r);
      }
      out[i] = std::move(rows);
    });
    std::vector<SweepRow> flat;
    for (auto& v : out)
      for (auto& r : v) flat.push_back(std::move(r));
    return flat;
  }

 private:
  const SweepConfig& cfg_;
  const ProgressFn& progress_;
  std::mutex mutex_;
};

std::vector<BinaryDataset> prepare_all(const BinaryDataset& base, const SweepConfig& cfg) {
  std::vector<BinaryDataset> out;
  out.reserve(cfg.seeds.size());
  for (auto s : cfg.seeds) out.push_back(prepare_inputs(base, cfg.noise, s));
  return out;
}

TrainConfig mlp_config(const SweepConfig& cfg, std::uint64_t seed, Index width) {
  TrainConfig tc = cfg.mlp;
  tc.seed = derive_seed(seed, static_cast<std::uint64_t>(width));
  return tc;
}

SweepResult make_result(const SweepConfig& cfg) {
  SweepResult r;
  r.axis = cfg.axis;
  r.learner = cfg.learner;
  r.features = cfg.features;
  r.variant = cfg.variant;
  r.constants = cfg.constants;
  return r;
}

void finish(SweepResult& result, const SweepConfig& cfg) {
  std::map<std::uint64_t, std::size_t> seed_order;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) seed_order.emplace(cfg.seeds[i], i);
  std::stable_sort(result.rows.begin(), result.rows.end(), [&](const SweepRow& a, const SweepRow& b) {
    if (a.width != b.width) return a.width < b.width;
    if (a.axis_value != b.axis_value) return a.axis_value < b.axis_value;
    return seed_order[a.seed] < seed_order[b.seed];
  });
  std::stable_sort(result.runs.begin(), result.runs.end(), [&](const MlpRun& a, const MlpRun& b) {
    if (a.width != b.width) return a.width < b.width;
    return seed_order[a.seed] < seed_order[b.seed];
  });
  compute_aggregates(result);
}

}  // namespace

SweepResult sweep_width(const BinaryDataset& base, const SweepConfig& cfg, const ProgressFn& progress) {
  if (cfg.axis != SweepAxis::Width) throw DomainError("sweep_width needs the width axis");
  cfg.validate();
  base.validate();
  const Index n = base.n_train();
  const std::vector<BinaryDataset> prepared = prepare_all(base, cfg);
  std::vector<Index> grid = cfg.grid;
  if (grid.empty()) grid = default_width_grid(n, cfg.learner == Learner::LS ? std::optional<Index>(n) : std::nullopt);

  SweepResult result = make_result(cfg);
  std::mutex runs_mutex;
  Runner runner(cfg, progress);
  const auto point = [&](const Task& t) -> std::vector<SweepRow> {
    const std::uint64_t seed = cfg.seeds[t.seed_index];
    const BinaryDataset& data = prepared[t.seed_index];
    if (cfg.learner != Learner::MLP) return {fit_random_feature_point(data, cfg, t.width, seed)};
    TrainResult tr = train_sgd(data, t.width, mlp_config(cfg, seed, t.width));
    std::vector<SweepRow> rows;
    if (tr.diverged || tr.history.empty()) {
      SweepRow r = failed_row("diverged");
      r.seed = seed;
      r.width = t.width;
      r.n_train = data.n_train();
      rows.push_back(r);
    } else {
      SweepRow r = mlp_row(tr.history.back(), data.n_train(), t.width, seed, tr);
      r.epoch = -1;
      apply_mlp_bound(r, cfg.variant, cfg.constants);
      rows.push_back(r);
    }
    std::lock_guard lock(runs_mutex);
    result.runs.push_back({t.width, seed, std::move(tr.history), tr.gate_epoch, tr.diverged});
    return rows;
  };

  const auto tasks_for = [&](const std::vector<Index>& widths) {
    std::vector<Task> tasks;
    for (Index w : widths)
      for (std::size_t s = 0; s < cfg.seeds.size(); ++s) tasks.push_back({w, w, s});
    return tasks;
  };
  result.rows = runner.run(tasks_for(grid), point);

  if (cfg.learner == Learner::SVM && cfg.densify && cfg.grid.empty()) {
    // Refine around the SV count seen at the first zero-error grid point.
    std::map<Index, std::pair<bool, double>> by_width;  // all zero error, SV sum
    for (const auto& r : result.rows) {
      auto& e = by_width.try_emplace(r.width, true, 0.0).first->second;
      e.first = e.first && r.train_error == 0.0;
      e.second += static_cast<double>(r.n_support);
    }
    for (const auto& [w, e] : by_width) {
      if (!e.first) continue;
      const auto centre = static_cast<Index>(std::llround(e.second / static_cast<double>(cfg.seeds.size())));
      std::vector<Index> extra;
      for (Index v : densify_around({}, std::max<Index>(centre, 1), n))
        if (!by_width.contains(v)) extra.push_back(v);
      auto more = runner.run(tasks_for(extra), point);
      std::move(more.begin(), more.end(), std::back_inserter(result.rows));
      break;
    }
  }
  finish(result, cfg);
  return result;
}

SweepResult sweep_epochs(const BinaryDataset& base, const SweepConfig& cfg, const ProgressFn& progress) {
  if (cfg.axis != SweepAxis::Epochs) throw DomainError("sweep_epochs needs the epochs axis");
  cfg.validate();
  base.validate();
  const std::vector<Index> widths = cfg.widths.empty() ? std::vector<Index>{10, 100} : cfg.widths;
  std::vector<int> record;
  for (Index e : cfg.grid) record.push_back(static_cast<int>(e));

  const std::vector<BinaryDataset> prepared = prepare_all(base, cfg);
  SweepResult result = make_result(cfg);
  std::mutex runs_mutex;
  Runner runner(cfg, progress);
  std::vector<Task> tasks;
  for (Index w : widths)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) tasks.push_back({0, w, s});

  result.rows = runner.run(tasks, [&](const Task& t) -> std::vector<SweepRow> {
    const std::uint64_t seed = cfg.seeds[t.seed_index];
    const BinaryDataset& data = prepared[t.seed_index];
    TrainResult tr = train_sgd(data, t.width, mlp_config(cfg, seed, t.width), record);
    std::vector<SweepRow> rows;
    for (const auto& e : tr.history) {
      SweepRow r = mlp_row(e, data.n_train(), t.width, seed, tr);
      apply_mlp_bound(r, cfg.variant, cfg.constants);
      rows.push_back(r);
    }
    if (tr.diverged) {
      SweepRow r = failed_row("diverged");
      r.seed = seed;
      r.width = t.width;
      r.n_train = data.n_train();
      r.epoch = tr.history.empty() ? 0 : tr.history.back().epoch + 1;
      rows.push_back(r);
    }
    std::lock_guard lock(runs_mutex);
    result.runs.push_back({t.width, seed, std::move(tr.history), tr.gate_epoch, tr.diverged});
    return rows;
  });
  finish(result, cfg);
  return result;
}

SweepResult sweep_samples(const BinaryDataset& base, const SweepConfig& cfg, const ProgressFn& progress) {
  if (cfg.axis != SweepAxis::Samples) throw DomainError("sweep_samples needs the samples axis");
  cfg.validate();
  base.validate();
  const Index width = cfg.widths.front();
  std::vector<Index> grid = cfg.grid;
  if (grid.empty()) {
    for (Index v = 100; v <= base.n_train(); v += 100) grid.push_back(v);
    if (grid.empty()) grid.push_back(base.n_train());
  }

  SweepResult result = make_result(cfg);
  std::mutex runs_mutex;
  Runner runner(cfg, progress);
  std::vector<Task> tasks;
  for (Index v : grid)
    for (std::size_t s = 0; s < cfg.seeds.size(); ++s) tasks.push_back({v, width, s});

  result.rows = runner.run(tasks, [&](const Task& t) -> std::vector<SweepRow> {
    const std::uint64_t seed = cfg.seeds[t.seed_index];
    if (t.axis_value > base.n_train()) {
      SweepRow r = failed_row("skipped");
      r.seed = seed;
      r.width = width;
      r.n_train = t.axis_value;
      return {r};
    }
    const BinaryDataset data = prepare_inputs(base, cfg.noise, seed, t.axis_value);
    if (cfg.learner != Learner::MLP) return {fit_random_feature_point(data, cfg, width, seed)};
    TrainResult tr = train_sgd(data, width, mlp_config(cfg, seed, width));
    if (tr.diverged || tr.history.empty()) {
      SweepRow r = failed_row("diverged");
      r.seed = seed;
      r.width = width;
      r.n_train = t.axis_value;
      return {r};
    }
    SweepRow r = mlp_row(tr.history.back(), data.n_train(), width, seed, tr);
    r.epoch = -1;
    apply_mlp_bound(r, cfg.variant, cfg.constants);
    std::lock_guard lock(runs_mutex);
    result.runs.push_back({width, seed, std::move(tr.history), tr.gate_epoch, tr.diverged});
    return {r};
  });
  finish(result, cfg);
  return result;
}

SweepResult run_sweep(const BinaryDataset& base, const SweepConfig& cfg, const ProgressFn& progress) {
  switch (cfg.axis) {
    case SweepAxis::Width: return sweep_width(base, cfg, progress);
    case SweepAxis::Epochs: return sweep_epochs(base, cfg, progress);
    case SweepAxis::Samples: return sweep_samples(base, cfg, progress);
  }
  throw DomainError("unknown sweep axis");
}

namespace {

// axis value -> every seed interpolates (failed/skipped rows count as not interpolating)
std::map<Index, bool> interpolation_by_axis(const SweepResult& result, bool zero_error_only) {
  std::map<Index, bool> out;
  for (const auto& r : result.rows) {
    const bool ok = !r.has_flag("failed") && !r.has_flag("skipped") && !r.has_flag("diverged") &&
                    (zero_error_only ? r.train_error == 0.0 : r.interpolating);
    auto [it, fresh] = out.try_emplace(r.axis_value, ok);
    if (!fresh) it->second = it->second && ok;
  }
  return out;
}

}  // namespace

std::optional<Index> interpolation_threshold(const SweepResult& result) {
  const auto by_axis = interpolation_by_axis(result, false);
  if (result.axis == SweepAxis::Samples) {
    std::optional<Index> last;
    for (const auto& [v, ok] : by_axis) {
      if (!ok) break;
      last = v;
    }
    return last;
  }
  for (const auto& [v, ok] : by_axis)
    if (ok) return v;
  return std::nullopt;
}

std::optional<Index> zero_error_threshold(const SweepResult& result) {
  for (const auto& [v, ok] : interpolation_by_axis(result, true))
    if (ok) return v;
  return std::nullopt;
}

std::vector<const SweepRow*> rows_at(const SweepResult& result, Index axis_value) {
  std::vector<const SweepRow*> out;
  for (const auto& r : result.rows)
    if (r.axis_value == axis_value) out.push_back(&r);
  return out;
}

std::vector<std::string> audit(const SweepResult& result) {
  std::vector<std::string> issues;
  const auto same = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const SweepRow& r = result.rows[i];
    if (r.has_flag("failed") || r.has_flag("skipped") || r.has_flag("diverged")) continue;
    const std::string where = "row " + std::to_string(i + 1) + " (axis " + std::to_string(r.axis_value) + ", seed " +
                              std::to_string(r.seed) + "): ";
    const double h = result.learner == Learner::MLP ? r.norm_sq + 1.0
                                                    : linear_vc_dim(r.norm_sq, static_cast<std::uint64_t>(r.width));
    if (!same(h, r.h)) {
      issues.push_back(where + "h does not match the stored norm_sq");
      continue;
    }
    SweepRow expect = r;
    expect.flags.clear();
    if (result.learner == Learner::MLP) apply_mlp_bound(expect, result.variant, result.constants);
    else apply_bound(expect, result.variant, result.constants);
    if (!same(expect.bound, r.bound) || !same(expect.epsilon, r.epsilon) || !same(expect.eta, r.eta))
      issues.push_back(where + "bound columns do not recompute");
    if (expect.has_flag("out_of_regime") != r.has_flag("out_of_regime"))
      issues.push_back(where + "out_of_regime flag disagrees");
    if (!std::isnan(r.bound) && r.bound < r.train_error) issues.push_back(where + "bound below training error");
  }
  return issues;
}

void compute_aggregates(SweepResult& result) {
  struct Acc {
    Index n = 0;
    double tr = 0, te = 0, te_min = kNaN, te_max = kNaN;
    Index nb = 0;
    double b = 0, b_min = kNaN, b_max = kNaN;
    double ns = 0, ns_min = kNaN, ns_max = kNaN;
  };
  const auto upd_min = [](double& m, double v) { m = std::isnan(m) ? v : std::min(m, v); };
  const auto upd_max = [](double& m, double v) { m = std::isnan(m) ? v : std::max(m, v); };
  std::map<std::pair<Index, Index>, Acc> acc;
  for (const auto& r : result.rows) {
    auto& a = acc[{r.width, r.axis_value}];
    if (r.has_flag("failed") || r.has_flag("skipped") || r.has_flag("diverged")) continue;
    ++a.n;
    a.tr += r.train_error;
    a.te += r.test_error;
    upd_min(a.te_min, r.test_error);
    upd_max(a.te_max, r.test_error);
    a.ns += r.norm_sq;
    upd_min(a.ns_min, r.norm_sq);
    upd_max(a.ns_max, r.norm_sq);
    if (!std::isnan(r.bound)) {
      ++a.nb;
      a.b += r.bound;
      upd_min(a.b_min, r.bound);
      upd_max(a.b_max, r.bound);
    }
  }
  for (auto& r : result.rows) {
    const Acc& a = acc[{r.width, r.axis_value}];
    const double n = static_cast<double>(a.n);
    r.n_seeds = a.n;
    r.train_error_mean = a.n ? a.tr / n : kNaN;
    r.test_error_mean = a.n ? a.te / n : kNaN;
    r.test_error_min = a.te_min;
    r.test_error_max = a.te_max;
    r.norm_sq_mean = a.n ? a.ns / n : kNaN;
    r.norm_sq_min = a.ns_min;
    r.norm_sq_max = a.ns_max;
    r.bound_mean = a.nb ? a.b / static_cast<double>(a.nb) : kNaN;
    r.bound_min = a.b_min;
    r.bound_max = a.b_max;
  }
}

}  // namespace vcdd
