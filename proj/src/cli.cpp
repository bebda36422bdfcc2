#include "vcdd/cli.hpp"

#include "vcdd/bounds.hpp"
#include "vcdd/data.hpp"
#include "vcdd/experiments.hpp"
#include "vcdd/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

namespace vcdd {

namespace fs = std::filesystem;

namespace {

std::string text(const std::string& v) { return v; }
std::string text(bool v) { return v ? "true" : "false"; }
std::string text(std::int64_t v) { return std::to_string(v); }
std::string text(std::uint64_t v) { return std::to_string(v); }
std::string text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Every flag registered here is mirrored one-to-one in the run manifest.
class Registry {
 public:
  explicit Registry(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* option(const std::string& name, T& var, const std::string& help) {
    entries_.emplace_back(name, [&var] { return text(var); });
    return app_->add_option("--" + name, var, help);
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& help) {
    entries_.emplace_back(name, [&var] { return text(var); });
    return app_->add_flag("--" + name, var, help);
  }

  Manifest manifest(const std::string& command) const {
    Manifest m;
    m.emplace_back("command", command);
    for (const auto& [k, get] : entries_) {
      std::string v = get();
      if (!v.empty()) m.emplace_back(k, std::move(v));
    }
    return m;
  }

 private:
  CLI::App* app_;
  std::vector<std::pair<std::string, std::function<std::string()>>> entries_;
};

struct DataFlags {
  std::string dataset = "mnist:5v8";
  std::string mnist_dir = "data/mnist";
  std::string cifar_dir = "data/cifar-10-batches-bin";
  std::int64_t ntrain = 0;
  std::int64_t ntest = 2000;
  std::uint64_t data_seed = 0;
  std::int64_t synth_dim = 50;
  double synth_separation = 2.0;
};

struct SweepFlags {
  DataFlags data;
  std::string learner = "ls";
  std::string features = "relu";
  double sigma = kDefaultRffSigma;
  bool sphere_normalize = false;
  std::string grid;
  std::string widths;
  std::string seeds = "0,1,2,3,4";
  bool single_run = false;
  double a1 = kDefaultConstants.a1;
  double a2 = kDefaultConstants.a2;
  bool noisy_preset = false;
  bool worst_case_preset = false;
  std::string variant = "eq1";
  double label_noise = 0.0;
  double pixel_noise = 0.0;
  bool pixel_noise_train_only = false;
  double c = kDefaultSvmC;
  double svm_tol = 1e-3;
  std::int64_t svm_max_iter = 10'000'000;
  bool no_densify = false;
  double lr = 0.001;
  double momentum = 0.95;
  double decay = 0.10;
  std::int64_t decay_interval = 500;
  std::int64_t epochs = 6000;
  std::int64_t batch_size = 32;
  std::string loss = "squared";
  double bn_momentum = 0.1;
  double bn_eps = 1e-5;
  std::int64_t history_dense = 200;
  std::int64_t history_stride = 10;
  std::int64_t workers = 0;
  std::string out;
  bool quiet = false;
};

void add_data_flags(Registry& reg, DataFlags& d) {
  reg.option("dataset", d.dataset,
             "mnist:AvB, cifar10:AvB, synthetic, or cache:PATH (class A labelled +1)");
  reg.option("mnist-dir", d.mnist_dir, "directory holding train-images-idx3-ubyte and train-labels-idx1-ubyte");
  reg.option("cifar-dir", d.cifar_dir, "directory holding data_batch_{1..5}.bin");
  reg.option("ntrain", d.ntrain, "training samples, half per class (0: 800 width, 1200 samples, 200 epochs)")
      ->check(CLI::NonNegativeNumber);
  reg.option("ntest", d.ntest, "test samples, half per class")->check(CLI::NonNegativeNumber);
  reg.option("data-seed", d.data_seed, "seed for class-balanced extraction or synthetic draws");
  reg.option("synth-dim", d.synth_dim, "synthetic Gaussian dimension")->check(CLI::PositiveNumber);
  reg.option("synth-separation", d.synth_separation, "distance between synthetic class means")
      ->check(CLI::NonNegativeNumber);
}

void add_sweep_flags(Registry& reg, SweepFlags& f) {
  add_data_flags(reg, f.data);
  reg.option("learner", f.learner, "ls, svm or mlp")->check(CLI::IsMember({"ls", "svm", "mlp"}));
  reg.option("features", f.features, "random features: relu or rff")->check(CLI::IsMember({"relu", "rff"}));
  reg.option("sigma", f.sigma, "RFF projection standard deviation")->check(CLI::PositiveNumber);
  reg.flag("sphere-normalize", f.sphere_normalize, "also divide features by the largest training-row norm");
  reg.option("grid", f.grid, "comma-separated axis values (empty: default grid)");
  reg.option("widths", f.widths, "comma-separated fixed widths (samples: first entry, default 500; epochs: 10,100)");
  reg.option("seeds", f.seeds, "comma-separated replication seeds");
  reg.flag("single-run", f.single_run, "use seed 0 only");
  reg.option("a1", f.a1, "bound constant a1")->check(CLI::Range(0.0, 4.0));
  reg.option("a2", f.a2, "bound constant a2 in (0, 2]")->check(CLI::Range(1e-300, 2.0));
  reg.flag("noisy-preset", f.noisy_preset, "a1=3, a2=1");
  reg.flag("worst-case-preset", f.worst_case_preset, "a1=4, a2=2");
  reg.option("variant", f.variant, "bound form: eq1 (full) or eq2 (second descent)")
      ->check(CLI::IsMember({"eq1", "eq2"}));
  reg.option("label-noise", f.label_noise, "fraction of training labels flipped")->check(CLI::Range(0.0, 0.5));
  reg.option("pixel-noise", f.pixel_noise, "Gaussian pixel noise sigma after [0,1] scaling")
      ->check(CLI::NonNegativeNumber);
  reg.flag("pixel-noise-train-only", f.pixel_noise_train_only, "leave test pixels clean");
  reg.option("c", f.c, "SVM box constraint")->check(CLI::PositiveNumber);
  reg.option("svm-tol", f.svm_tol, "SVM KKT tolerance")->check(CLI::PositiveNumber);
  reg.option("svm-max-iter", f.svm_max_iter, "SVM pair-update cap")->check(CLI::PositiveNumber);
  reg.flag("no-densify", f.no_densify, "SVM: skip grid refinement around the support-vector count");
  reg.option("lr", f.lr, "MLP initial learning rate")->check(CLI::PositiveNumber);
  reg.option("momentum", f.momentum, "MLP momentum")->check(CLI::Range(0.0, 0.999999));
  reg.option("decay", f.decay, "fractional lr reduction per decay interval")->check(CLI::Range(0.0, 0.999999));
  reg.option("decay-interval", f.decay_interval, "epochs between lr reductions")->check(CLI::PositiveNumber);
  reg.option("epochs", f.epochs, "MLP training epochs")->check(CLI::PositiveNumber);
  reg.option("batch-size", f.batch_size, "MLP mini-batch size")->check(CLI::Range(2, 1 << 30));
  reg.option("loss", f.loss, "MLP loss: squared or logistic")->check(CLI::IsMember({"squared", "logistic"}));
  reg.option("bn-momentum", f.bn_momentum, "batch-norm running-stat factor")->check(CLI::Range(1e-12, 1.0));
  reg.option("bn-eps", f.bn_eps, "batch-norm variance epsilon")->check(CLI::NonNegativeNumber);
  reg.option("history-dense", f.history_dense, "record every epoch up to this one")->check(CLI::NonNegativeNumber);
  reg.option("history-stride", f.history_stride, "then every this many epochs")->check(CLI::PositiveNumber);
  reg.option("workers", f.workers, "worker threads (0: available cores)")->check(CLI::NonNegativeNumber);
  reg.option("out", f.out, "run directory (default: $VCDD_OUTPUT_ROOT or runs/, plus a manifest hash)");
  reg.flag("quiet", f.quiet, "no per-point progress on stderr");
}

template <typename T>
std::vector<T> parse_list(const std::string& s, const std::string& flag) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(item.c_str(), &end, 10);
    if (*end != '\0' || item.front() == '-') throw DomainError("--" + flag + ": '" + item + "' is not a non-negative integer");
    out.push_back(static_cast<T>(v));
  }
  return out;
}

std::pair<int, int> parse_pair(const std::string& spec) {
  const auto v = spec.find('v');
  if (v == std::string::npos) throw DomainError("--dataset: class pair must look like 5v8, got '" + spec + "'");
  try {
    return {std::stoi(spec.substr(0, v)), std::stoi(spec.substr(v + 1))};
  } catch (const std::exception&) {
    throw DomainError("--dataset: class pair must look like 5v8, got '" + spec + "'");
  }
}

void require_file(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("missing input file " + p.string());
}

BinaryDataset load_base(const DataFlags& d) {
  const std::string& spec = d.dataset;
  if (spec.rfind("cache:", 0) == 0) {
    const fs::path p = spec.substr(6);
    require_file(p);
    BinaryDataset ds = load_dataset(p);
    if (d.ntrain > 0 && d.ntrain < ds.n_train()) ds = subsample_train(ds, d.ntrain);
    return ds;
  }
  if (spec == "synthetic") return synth_gaussians(d.synth_dim, d.ntrain, d.ntest, d.synth_separation, d.data_seed);
  if (spec.rfind("mnist:", 0) == 0) {
    const auto [a, b] = parse_pair(spec.substr(6));
    const fs::path dir = d.mnist_dir;
    const fs::path images = dir / "train-images-idx3-ubyte", labels = dir / "train-labels-idx1-ubyte";
    require_file(images);
    require_file(labels);
    return make_binary_task(load_mnist(images, labels), a, b, d.ntrain, d.ntest, d.data_seed);
  }
  if (spec.rfind("cifar10:", 0) == 0) {
    const auto [a, b] = parse_pair(spec.substr(8));
    std::vector<fs::path> batches;
    for (int i = 1; i <= 5; ++i) {
      const fs::path p = fs::path(d.cifar_dir) / ("data_batch_" + std::to_string(i) + ".bin");
      if (fs::exists(p)) batches.push_back(p);
    }
    if (batches.empty()) throw IoError("no data_batch_*.bin files in " + d.cifar_dir);
    return make_binary_task(load_cifar10(batches), a, b, d.ntrain, d.ntest, d.data_seed);
  }
  throw DomainError("--dataset: unknown source '" + spec + "'");
}

std::string hex8(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  char buf[20];
  std::snprintf(buf, sizeof buf, "%08llx", static_cast<unsigned long long>(h & 0xffffffffULL));
  return buf;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

SweepConfig build_config(SweepFlags& f, SweepAxis axis) {
  if (f.noisy_preset && f.worst_case_preset) throw DomainError("--noisy-preset and --worst-case-preset are exclusive");
  if (f.noisy_preset) f.a1 = kNoisyConstants.a1, f.a2 = kNoisyConstants.a2;
  if (f.worst_case_preset) f.a1 = kWorstCaseConstants.a1, f.a2 = kWorstCaseConstants.a2;
  if (f.single_run) f.seeds = "0";
  if (f.data.ntrain == 0) f.data.ntrain = axis == SweepAxis::Epochs ? 200 : axis == SweepAxis::Samples ? 1200 : 800;
  if (axis == SweepAxis::Samples && f.widths.empty()) f.widths = "500";

  SweepConfig cfg;
  cfg.axis = axis;
  cfg.learner = parse_learner(f.learner);
  cfg.features = parse_feature_kind(f.features);
  cfg.rff_sigma = f.sigma;
  cfg.sphere_normalize = f.sphere_normalize;
  cfg.grid = parse_list<Index>(f.grid, "grid");
  cfg.widths = parse_list<Index>(f.widths, "widths");
  cfg.seeds = parse_list<std::uint64_t>(f.seeds, "seeds");
  cfg.densify = !f.no_densify;
  cfg.constants = {f.a1, f.a2};
  cfg.variant = parse_bound_variant(f.variant);
  cfg.noise = {f.label_noise, f.pixel_noise, f.pixel_noise_train_only};
  cfg.svm.C = f.c;
  cfg.svm.tolerance = f.svm_tol;
  cfg.svm.max_iterations = f.svm_max_iter;
  cfg.mlp.lr0 = f.lr;
  cfg.mlp.momentum = f.momentum;
  cfg.mlp.decay = f.decay;
  cfg.mlp.decay_interval = static_cast<int>(f.decay_interval);
  cfg.mlp.epochs = static_cast<int>(f.epochs);
  cfg.mlp.batch_size = static_cast<int>(f.batch_size);
  cfg.mlp.loss = parse_loss(f.loss);
  cfg.mlp.bn_momentum = f.bn_momentum;
  cfg.mlp.bn_eps = f.bn_eps;
  cfg.mlp.dense_epochs = static_cast<int>(f.history_dense);
  cfg.mlp.stride = static_cast<int>(f.history_stride);
  cfg.workers = static_cast<unsigned>(f.workers);
  if (cfg.seeds.empty()) throw DomainError("--seeds: at least one seed is required");
  cfg.validate();
  return cfg;
}

const std::vector<std::string> kManifestNotes = {
    "# feature maps are redrawn per grid point from derive_seed(seed, N) (xoshiro256** seeded by splitmix64)",
    "# default width grid: 30 log-spaced points from 2 to 2.5n, 3x denser within +/-20% of the anticipated threshold",
    "# inputs scaled to [0,1] and features to [-1,1] with train-only statistics; test values are not clipped",
    "# RFF features are (cos, sin) pairs; h uses N complex features"};

int run_sweep_command(SweepFlags& f, const Registry& reg, const std::string& command, SweepAxis axis,
                      std::ostream& out, std::ostream& err) {
  const SweepConfig cfg = build_config(f, axis);

  Manifest manifest = reg.manifest(command);
  fs::path dir = f.out;
  if (dir.empty()) {
    std::string key;
    for (const auto& [k, v] : manifest)
      if (k != "out" && k != "workers" && k != "quiet") key += k + "=" + v + "\n";
    const char* root = std::getenv("VCDD_OUTPUT_ROOT");
    dir = fs::path(root && *root ? root : "runs") / (command + "-" + hex8(key));
    f.out = dir.string();
    manifest = reg.manifest(command);
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create run directory " + dir.string() + ": " + ec.message());

  {
    write_manifest(manifest, dir / "manifest.txt");
    std::ofstream notes(dir / "manifest.txt", std::ios::app);
    for (const auto& n : kManifestNotes) notes << n << '\n';
    std::ofstream version(dir / "VERSION", std::ios::trunc);
    version << "vcdd " << VCDD_VERSION << '\n';
    if (!notes || !version) throw IoError("cannot write manifest in " + dir.string());
  }

  const BinaryDataset base = load_base(f.data);
  ProgressFn progress;
  if (!f.quiet)
    progress = [&err, axis](const SweepRow& r) {
      if (axis == SweepAxis::Epochs) return;
      err << to_string(axis) << '=' << r.axis_value << " seed=" << r.seed << " train=" << fmt(r.train_error)
          << " test=" << fmt(r.test_error) << " norm2=" << fmt(r.norm_sq) << " bound=" << fmt(r.bound)
          << (r.n_support >= 0 ? " sv=" + std::to_string(r.n_support) : std::string())
          << (r.flags.empty() ? std::string() : " [" + r.flags + "]") << '\n';
    };
  const SweepResult result = run_sweep(base, cfg, progress);

  write_csv(result, dir / "results.csv");
  write_timing_csv(result, dir / "timing.csv");
  render_svg(result, dir / "figure.svg");
  if (!result.runs.empty()) {
    fs::create_directories(dir / "histories");
    for (const auto& run : result.runs)
      write_history_csv(run.history, dir / "histories" /
                                         ("mlp_N" + std::to_string(run.width) + "_seed" + std::to_string(run.seed) + ".csv"));
  }

  out << "run directory: " << dir.string() << '\n';
  out << "rows: " << result.rows.size() << '\n';
  if (axis != SweepAxis::Epochs) {
    const auto t = interpolation_threshold(result);
    out << "interpolation threshold: " << (t ? std::to_string(*t) : "none") << '\n';
  } else {
    for (const auto& run : result.runs)
      out << "N=" << run.width << " seed=" << run.seed
          << " gate epoch: " << (run.gate_epoch ? std::to_string(*run.gate_epoch) : "none")
          << (run.diverged ? " (diverged)" : "") << '\n';
  }
  const auto issues = audit(result);
  out << "audit: " << (issues.empty() ? "consistent" : std::to_string(issues.size()) + " issues") << '\n';
  return issues.empty() ? kExitOk : kExitDomain;
}

// Expands --manifest FILE into --key=value tokens placed ahead of the explicit
// arguments, so flags on the command line take precedence.
std::vector<std::string> expand_manifest(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::vector<std::string> rest;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--manifest" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--manifest=", 0) == 0) {
      path = args[i].substr(11);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (path.empty()) return args;
  if (rest.empty()) throw DomainError("--manifest needs a subcommand");
  const Manifest m = read_manifest(path);
  out.push_back(rest.front());
  for (const auto& [k, v] : m) {
    if (k == "command") {
      if (v != rest.front())
        throw DomainError("--manifest: file records command '" + v + "', not '" + rest.front() + "'");
      continue;
    }
    out.push_back("--" + k + "=" + v);
  }
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

int dispatch(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  if (args.size() >= 2 && args[0] == "bound" && args[1] == "eval") {
    args.erase(args.begin());
    args[0] = "bound-eval";
  }
  args = expand_manifest(args);

  CLI::App app{"VC-bound and double-descent experiments", "vcdd"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("vcdd ") + VCDD_VERSION);

  // bound-eval
  auto* be = app.add_subcommand("bound-eval", "evaluate the VC bound for one parameter set");
  be->set_help_flag("--help", "print this help message and exit");
  double be_h = 1.0, be_r = 0.0, be_a1 = 1.0, be_a2 = 1.0;
  std::int64_t be_n = 1;
  bool be_noisy = false, be_worst = false;
  std::string be_variant = "eq1";
  be->add_option("--n", be_n, "training samples")->required()->check(CLI::PositiveNumber);
  be->add_option("--h", be_h, "VC-dimension estimate (>= 1)")->required()->check(CLI::Range(1.0, 1e300));
  be->add_option("--rtrn", be_r, "training error")->check(CLI::Range(0.0, 1.0));
  be->add_option("--a1", be_a1, "bound constant a1")->check(CLI::Range(0.0, 4.0));
  be->add_option("--a2", be_a2, "bound constant a2 in (0, 2]")->check(CLI::Range(1e-300, 2.0));
  be->add_flag("--noisy-preset", be_noisy, "a1=3, a2=1");
  be->add_flag("--worst-case-preset", be_worst, "a1=4, a2=2");
  be->add_option("--variant", be_variant, "eq1 (full) or eq2 (second descent)")->check(CLI::IsMember({"eq1", "eq2"}));

  // sweeps
  struct SweepCmd {
    std::string name;
    SweepAxis axis;
    CLI::App* app;
    SweepFlags flags;
    std::unique_ptr<Registry> reg;
  };
  std::vector<std::unique_ptr<SweepCmd>> sweeps;
  for (auto [name, axis, help] : {std::tuple{"sweep-width", SweepAxis::Width, "test/train error and bound versus width N"},
                                  std::tuple{"sweep-epochs", SweepAxis::Epochs, "MLP error and bound versus epochs"},
                                  std::tuple{"sweep-samples", SweepAxis::Samples, "error and bound versus training size n"}}) {
    auto cmd = std::make_unique<SweepCmd>();
    cmd->name = name;
    cmd->axis = axis;
    cmd->app = app.add_subcommand(name, help);
    cmd->reg = std::make_unique<Registry>(cmd->app);
    if (axis == SweepAxis::Epochs) cmd->flags.learner = "mlp";
    add_sweep_flags(*cmd->reg, cmd->flags);
    cmd->app->add_option("--manifest", "replay the flags stored in a run manifest (explicit flags win)");
    sweeps.push_back(std::move(cmd));
  }

  // dataset-prepare
  auto* dp = app.add_subcommand("dataset-prepare", "extract a binary task and cache it");
  DataFlags dflags;
  dflags.ntrain = 800;
  Registry dreg(dp);
  add_data_flags(dreg, dflags);
  std::string dp_output;
  dp->add_option("--output", dp_output, "cache file to write")->required();

  // audit-csv
  auto* ac = app.add_subcommand("audit-csv", "recompute h and bound columns of a results CSV");
  std::string ac_csv;
  ac->add_option("csv,--csv", ac_csv, "results.csv to audit")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitDomain;
  }

  if (be->parsed()) {
    if (be_noisy && be_worst) throw DomainError("--noisy-preset and --worst-case-preset are exclusive");
    if (be_noisy) be_a1 = kNoisyConstants.a1, be_a2 = kNoisyConstants.a2;
    if (be_worst) be_a1 = kWorstCaseConstants.a1, be_a2 = kWorstCaseConstants.a2;
    const BoundParams p{static_cast<std::uint64_t>(be_n), be_h, be_r, be_a1, be_a2};
    const BoundVariant v = parse_bound_variant(be_variant);
    const BoundResult r = evaluate_bound(v, p);
    out << "eta=" << text(r.eta) << '\n'
        << "epsilon=" << text(r.epsilon) << '\n'
        << "bound=" << text(r.bound) << '\n'
        << "in_regime=" << text(in_regime(v, p.n, p.h, p.a2)) << '\n';
    return kExitOk;
  }
  for (auto& cmd : sweeps)
    if (cmd->app->parsed()) return run_sweep_command(cmd->flags, *cmd->reg, cmd->name, cmd->axis, out, err);
  if (dp->parsed()) {
    const BinaryDataset ds = load_base(dflags);
    save_dataset(ds, dp_output);
    out << "wrote " << dp_output << ": " << ds.n_train() << " train, " << ds.n_test() << " test, dim " << ds.dim()
        << '\n';
    return kExitOk;
  }
  if (ac->parsed()) {
    require_file(ac_csv);
    const SweepResult r = read_csv(ac_csv);
    const auto issues = audit(r);
    for (const auto& i : issues) out << i << '\n';
    out << "audit: " << r.rows.size() << " rows, " << issues.size() << " issues\n";
    return issues.empty() ? kExitOk : kExitDomain;
  }
  return kExitDomain;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    return dispatch(args, out, err);
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDomain;
  }
}

}  // namespace vcdd
