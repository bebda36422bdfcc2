#include "vcdd/mlp.hpp"

#include "vcdd/binary_io.hpp"
#include "vcdd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace vcdd {

std::string_view to_string(Loss loss) { return loss == Loss::Squared ? "squared" : "logistic"; }

Loss parse_loss(std::string_view s) {
  if (s == "squared") return Loss::Squared;
  if (s == "logistic") return Loss::Logistic;
  throw DomainError("unknown loss '" + std::string(s) + "' (expected squared or logistic)");
}

void TrainConfig::validate() const {
  if (!(lr0 > 0.0) || !std::isfinite(lr0)) throw DomainError("learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0, 1)");
  if (!(decay >= 0.0 && decay < 1.0)) throw DomainError("lr decay must lie in [0, 1)");
  if (decay_interval < 1) throw DomainError("decay interval must be at least 1 epoch");
  if (epochs < 1) throw DomainError("epochs must be at least 1");
  if (batch_size < 2) throw DomainError("batch size must be at least 2 (batch norm needs a variance)");
  if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) throw DomainError("batch-norm momentum must lie in (0, 1]");
  if (!(bn_eps >= 0.0)) throw DomainError("batch-norm eps must be non-negative");
  if (dense_epochs < 0 || stride < 1) throw DomainError("history schedule needs dense_epochs >= 0 and stride >= 1");
}

bool MlpModel::finite() const {
  return w1.allFinite() && b1.allFinite() && gamma.allFinite() && beta.allFinite() && running_mean.allFinite() &&
         running_var.allFinite() && w2.allFinite() && std::isfinite(b2);
}

double xavier_bound(Index fan_in, Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

MlpModel init_xavier(Index d, Index width, std::uint64_t seed) {
  if (d < 1 || width < 1) throw DomainError("network needs d >= 1 and width >= 1");
  Rng rng(seed);
  MlpModel m;
  const double r1 = xavier_bound(d, width);
  m.w1.resize(width, d);
  for (Index i = 0; i < width; ++i)
    for (Index j = 0; j < d; ++j) m.w1(i, j) = rng.uniform(-r1, r1);
  const double r2 = xavier_bound(width, 1);
  m.w2.resize(width);
  for (Index i = 0; i < width; ++i) m.w2(i) = rng.uniform(-r2, r2);
  m.b1 = Vector::Zero(width);
  m.gamma = Vector::Ones(width);
  m.beta = Vector::Zero(width);
  m.running_mean = Vector::Zero(width);
  m.running_var = Vector::Ones(width);
  m.b2 = 0.0;
  return m;
}

ForwardPass forward(const MlpModel& model, const Matrix& x, Mode mode) {
  if (x.cols() != model.input_dim())
    throw DomainError("input has " + std::to_string(x.cols()) + " columns, network expects " +
                      std::to_string(model.input_dim()));
  if (mode == Mode::Train && x.rows() < 2) throw DomainError("train-mode batch norm needs at least two rows");

  ForwardPass p;
  p.mode = mode;
  p.pre = x * model.w1.transpose();
  p.pre.rowwise() += model.b1.transpose();
  const Matrix hidden = p.pre.cwiseMax(0.0);

  if (mode == Mode::Train) {
    const double b = static_cast<double>(x.rows());
    p.batch_mean = hidden.colwise().mean().transpose();
    p.normalized = hidden.rowwise() - p.batch_mean.transpose();
    p.batch_var = p.normalized.array().square().colwise().sum().transpose() / b;
    p.inv_std = (p.batch_var.array() + model.bn_eps).rsqrt();
  } else {
    p.normalized = hidden.rowwise() - model.running_mean.transpose();
    p.inv_std = (model.running_var.array() + model.bn_eps).rsqrt();
  }
  p.normalized = p.normalized * p.inv_std.asDiagonal();
  p.scaled = p.normalized * model.gamma.asDiagonal();
  p.scaled.rowwise() += model.beta.transpose();
  p.scores = (p.scaled * model.w2).array() + model.b2;
  return p;
}

void update_running_stats(MlpModel& model, const ForwardPass& pass, double momentum) {
  if (pass.mode != Mode::Train) throw UsageError("running statistics come from a train-mode pass");
  const double b = static_cast<double>(pass.pre.rows());
  const Vector unbiased = pass.batch_var * (b / (b - 1.0));
  model.running_mean = (1.0 - momentum) * model.running_mean + momentum * pass.batch_mean;
  model.running_var = (1.0 - momentum) * model.running_var + momentum * unbiased;
}

namespace {

double softplus(double t) { return t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

double batch_loss(const Vector& scores, const Vector& y, Loss loss) {
  if (scores.size() != y.size() || y.size() == 0) throw DomainError("loss needs matching, non-empty scores and labels");
  double total = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    if (loss == Loss::Squared) {
      const double r = scores(i) - y(i);
      total += r * r;
    } else {
      total += softplus(-y(i) * scores(i));
    }
  }
  return total / static_cast<double>(y.size());
}

MlpGradients backward(const MlpModel& model, const Matrix& x, const ForwardPass& pass, const Vector& y, Loss loss) {
  const Index rows = x.rows();
  if (y.size() != rows || pass.scores.size() != rows) throw DomainError("backward: batch size mismatch");
  const double b = static_cast<double>(rows);

  Vector g(rows);
  for (Index i = 0; i < rows; ++i) {
    if (loss == Loss::Squared) g(i) = 2.0 * (pass.scores(i) - y(i)) / b;
    else g(i) = -y(i) * sigmoid(-y(i) * pass.scores(i)) / b;
  }

  MlpGradients grad;
  grad.w2 = pass.scaled.transpose() * g;
  grad.b2 = g.sum();
  const Matrix du = g * model.w2.transpose();
  grad.gamma = du.cwiseProduct(pass.normalized).colwise().sum().transpose();
  grad.beta = du.colwise().sum().transpose();
  const Matrix dxhat = du * model.gamma.asDiagonal();

  Matrix dh;
  if (pass.mode == Mode::Train) {
    const Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
    const Eigen::RowVectorXd sum_dx = dxhat.cwiseProduct(pass.normalized).colwise().sum();
    dh = b * dxhat;
    dh.rowwise() -= sum_d;
    dh -= pass.normalized * sum_dx.asDiagonal();
    dh = dh * (pass.inv_std / b).asDiagonal();
  } else {
    dh = dxhat * pass.inv_std.asDiagonal();
  }
  const Matrix da = dh.cwiseProduct((pass.pre.array() > 0.0).cast<double>().matrix());
  grad.w1 = da.transpose() * x;
  grad.b1 = da.colwise().sum().transpose();
  return grad;
}

double learning_rate(const TrainConfig& cfg, int epoch) {
  return cfg.lr0 * std::pow(1.0 - cfg.decay, epoch / cfg.decay_interval);
}

double mlp_error(const MlpModel& model, const Matrix& x, const Vector& y) {
  if (x.rows() == 0) return 0.0;
  const ForwardPass p = forward(model, x, Mode::Eval);
  Index wrong = 0;
  for (Index i = 0; i < y.size(); ++i)
    if ((p.scores(i) >= 0.0 ? 1.0 : -1.0) != y(i)) ++wrong;
  return static_cast<double>(wrong) / static_cast<double>(y.size());
}

namespace {

struct Velocity {
  Matrix w1;
  Vector b1, gamma, beta, w2;
  double b2 = 0.0;

  explicit Velocity(const MlpModel& m)
      : w1(Matrix::Zero(m.w1.rows(), m.w1.cols())),
        b1(Vector::Zero(m.b1.size())),
        gamma(Vector::Zero(m.gamma.size())),
        beta(Vector::Zero(m.beta.size())),
        w2(Vector::Zero(m.w2.size())) {}
};

// v = mu v + g; theta -= lr v
void sgd_step(MlpModel& m, Velocity& v, const MlpGradients& g, double lr, double mu) {
  v.w1 = mu * v.w1 + g.w1;
  v.b1 = mu * v.b1 + g.b1;
  v.gamma = mu * v.gamma + g.gamma;
  v.beta = mu * v.beta + g.beta;
  v.w2 = mu * v.w2 + g.w2;
  v.b2 = mu * v.b2 + g.b2;
  m.w1 -= lr * v.w1;
  m.b1 -= lr * v.b1;
  m.gamma -= lr * v.gamma;
  m.beta -= lr * v.beta;
  m.w2 -= lr * v.w2;
  m.b2 -= lr * v.b2;
}

bool recorded(const TrainConfig& cfg, std::span<const int> explicit_epochs, int epoch) {
  if (epoch == cfg.epochs) return true;
  if (!explicit_epochs.empty()) return std::find(explicit_epochs.begin(), explicit_epochs.end(), epoch) != explicit_epochs.end();
  return epoch <= cfg.dense_epochs || epoch % cfg.stride == 0;
}

}  // namespace

TrainResult train_sgd(const BinaryDataset& data, Index width, const TrainConfig& cfg, std::span<const int> record_epochs) {
  cfg.validate();
  data.validate();
  const Index n = data.n_train();
  if (n < 2) throw DomainError("training needs at least two samples");

  TrainResult res;
  res.model = init_xavier(data.dim(), width, derive_seed(cfg.seed, 1));
  res.model.bn_eps = cfg.bn_eps;
  MlpModel& m = res.model;
  Velocity vel(m);
  Rng order_rng(derive_seed(cfg.seed, 2));

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const Index bs = cfg.batch_size;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = learning_rate(cfg, epoch);
    order_rng.shuffle(std::span<Index>(order));
    double loss_sum = 0.0;
    Index start = 0;
    while (start < n) {
      Index stop = std::min(start + bs, n);
      if (n - stop == 1) stop = n;  // never leave a single-row batch
      const std::vector<Index> idx(order.begin() + start, order.begin() + stop);
      const Matrix xb = data.x_train(idx, Eigen::all);
      const Vector yb = data.y_train(idx);

      const ForwardPass pass = forward(m, xb, Mode::Train);
      const double loss = batch_loss(pass.scores, yb, cfg.loss);
      if (!std::isfinite(loss)) {
        res.diverged = true;
        res.message = "non-finite loss at epoch " + std::to_string(epoch + 1);
        return res;
      }
      loss_sum += loss * static_cast<double>(stop - start);
      update_running_stats(m, pass, cfg.bn_momentum);
      sgd_step(m, vel, backward(m, xb, pass, yb, cfg.loss), lr, cfg.momentum);
      start = stop;
    }
    if (!m.finite()) {
      res.diverged = true;
      res.message = "non-finite parameters at epoch " + std::to_string(epoch + 1);
      return res;
    }

    const int done = epoch + 1;
    const double train_err = mlp_error(m, data.x_train, data.y_train);
    if (!res.gate_epoch && train_err < kTrainErrorGate) res.gate_epoch = done;
    if (recorded(cfg, record_epochs, done)) {
      HistoryEntry h;
      h.epoch = done;
      h.lr = lr;
      h.train_loss = loss_sum / static_cast<double>(n);
      h.train_error = train_err;
      h.test_error = mlp_error(m, data.x_test, data.y_test);
      h.output_norm_sq = m.output_norm_sq();
      res.history.push_back(h);
    }
  }
  return res;
}

double estimate_vc_dim(const MlpModel& model) { return model.output_norm_sq() + 1.0; }

namespace {

constexpr char kMlpMagic[8] = {'V', 'C', 'D', 'D', 'M', 'L', 'P', '1'};

void put(detail::ByteWriter& w, const Vector& v) {
  for (Index i = 0; i < v.size(); ++i) w.f64_le(v(i));
}

Vector get(detail::ByteReader& r, Index n, const char* field) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = r.f64_le(field);
  return v;
}

}  // namespace

void save_mlp(const MlpModel& model, const std::filesystem::path& path) {
  detail::ByteWriter w;
  for (char c : kMlpMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u64_le(static_cast<std::uint64_t>(model.input_dim()));
  w.u64_le(static_cast<std::uint64_t>(model.width()));
  w.f64_le(model.bn_eps);
  w.f64_le(model.b2);
  for (Index i = 0; i < model.width(); ++i)
    for (Index j = 0; j < model.input_dim(); ++j) w.f64_le(model.w1(i, j));
  put(w, model.b1);
  put(w, model.gamma);
  put(w, model.beta);
  put(w, model.running_mean);
  put(w, model.running_var);
  put(w, model.w2);
  detail::write_file(path.string(), w.bytes());
}

MlpModel load_mlp(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path.string());
  detail::ByteReader r(bytes, path.string());
  const auto magic = r.take(8, "magic");
  if (!std::equal(magic.begin(), magic.end(), kMlpMagic)) r.fail("not a vcdd MLP checkpoint", 0);
  const auto d = static_cast<Index>(r.u64_le("input dim"));
  const auto width = static_cast<Index>(r.u64_le("width"));
  if (d < 1 || width < 1) r.fail("empty network", 8);
  if (r.remaining() < static_cast<std::uint64_t>(16 + 8 * (width * d + 6 * width)))
    r.fail("payload shorter than header implies", r.offset() + r.remaining());
  MlpModel m;
  m.bn_eps = r.f64_le("bn eps");
  m.b2 = r.f64_le("b2");
  m.w1.resize(width, d);
  for (Index i = 0; i < width; ++i)
    for (Index j = 0; j < d; ++j) m.w1(i, j) = r.f64_le("w1");
  m.b1 = get(r, width, "b1");
  m.gamma = get(r, width, "gamma");
  m.beta = get(r, width, "beta");
  m.running_mean = get(r, width, "running mean");
  m.running_var = get(r, width, "running var");
  m.w2 = get(r, width, "w2");
  if (r.remaining() != 0) r.fail("trailing bytes", r.offset());
  return m;
}

void write_history_csv(const std::vector<HistoryEntry>& history, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "epoch,lr,train_loss,train_error,test_error,output_norm_sq\n";
  char buf[256];
  for (const auto& h : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", h.epoch, h.lr, h.train_loss, h.train_error,
                  h.test_error, h.output_norm_sq);
    out << buf;
  }
  if (!out) throw IoError("write failure on " + path.string());
}

}  // namespace vcdd
