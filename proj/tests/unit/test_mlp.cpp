#include "oracles.hpp"
#include "vcdd/common.hpp"
#include "vcdd/mlp.hpp"
#include "vcdd/rng.hpp"
#include "vcdd/solvers.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

using namespace vcdd;
namespace fs = std::filesystem;

namespace {

Matrix gaussian(Index r, Index c, Rng& rng, double sd = 1.0) {
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rng.normal(0.0, sd);
  return m;
}

MlpModel random_model(Index d, Index width, std::uint64_t seed) {
  Rng rng(seed);
  MlpModel m = init_xavier(d, width, seed);
  m.w1 = gaussian(width, d, rng);
  m.b1 = gaussian(width, 1, rng, 0.3).col(0).array() + 0.5;
  m.gamma = gaussian(width, 1, rng).col(0).array() + 1.0;
  m.beta = gaussian(width, 1, rng).col(0);
  m.w2 = gaussian(width, 1, rng).col(0);
  m.b2 = 0.2;
  return m;
}

std::vector<double> flatten(const MlpGradients& g) {
  std::vector<double> out;
  for (Index i = 0; i < g.w1.rows(); ++i)
    for (Index j = 0; j < g.w1.cols(); ++j) out.push_back(g.w1(i, j));
  for (const Vector* v : {&g.b1, &g.gamma, &g.beta, &g.w2})
    for (Index i = 0; i < v->size(); ++i) out.push_back((*v)(i));
  out.push_back(g.b2);
  return out;
}

Vector labels(Index n) {
  Vector y(n);
  for (Index i = 0; i < n; ++i) y(i) = i % 2 == 0 ? 1.0 : -1.0;
  return y;
}

BinaryDataset toy(Index n, Index d, std::uint64_t seed) {
  Rng rng(seed);
  BinaryDataset ds;
  ds.x_train = gaussian(n, d, rng);
  ds.y_train = labels(n);
  for (Index i = 0; i < n; ++i) ds.x_train(i, 0) += 1.5 * ds.y_train(i);
  ds.x_test = gaussian(n, d, rng);
  ds.y_test = labels(n);
  for (Index i = 0; i < n; ++i) ds.x_test(i, 0) += 1.5 * ds.y_test(i);
  return ds;
}

}  // namespace

TEST_CASE("xavier initialisation") {
  CHECK(xavier_bound(100, 1) == doctest::Approx(std::sqrt(6.0 / 101.0)).epsilon(1e-15));
  CHECK(xavier_bound(100, 1) == doctest::Approx(0.24373).epsilon(1e-4));
  const MlpModel m = init_xavier(100, 30, 9);
  CHECK(m.w1.cwiseAbs().maxCoeff() <= xavier_bound(100, 30));
  CHECK(m.w2.cwiseAbs().maxCoeff() <= xavier_bound(30, 1));
  CHECK(m.b1.isZero());
  CHECK(m.b2 == 0.0);
  CHECK(m.beta.isZero());
  CHECK((m.gamma.array() == 1.0).all());
  CHECK(m.running_mean.isZero());
  CHECK((m.running_var.array() == 1.0).all());
  const MlpModel again = init_xavier(100, 30, 9);
  CHECK(again.w1 == m.w1);
  CHECK(again.w2 == m.w2);
  CHECK(init_xavier(100, 30, 10).w1 != m.w1);
}

TEST_CASE("forward pass by hand") {
  MlpModel m = init_xavier(3, 5, 1);
  m.w1.setZero();
  m.w2.setZero();
  m.b2 = 0.75;
  const Matrix x = Matrix::Ones(4, 3);
  CHECK((forward(m, x, Mode::Eval).scores.array() == 0.75).all());
  CHECK((forward(m, x, Mode::Train).scores.array() == 0.75).all());

  MlpModel u = init_xavier(2, 1, 1);
  u.w1 << 0.5, -1.0;
  u.b1 << 0.1;
  u.running_mean << 0.2;
  u.running_var << 0.25;
  u.bn_eps = 0.0;
  u.gamma << 2.0;
  u.beta << 0.5;
  u.w2 << 3.0;
  u.b2 = -1.0;
  const Matrix xin{{2.0, 0.3}};
  // relu(0.8) -> (0.8 - 0.2) / 0.5 = 1.2 -> 2 * 1.2 + 0.5 = 2.9 -> 3 * 2.9 - 1 = 7.7
  CHECK(std::abs(forward(u, xin, Mode::Eval).scores(0) - 7.7) <= 1e-12);
  CHECK_THROWS_AS(forward(u, xin, Mode::Train), DomainError);
}

TEST_CASE("train-mode batch normalisation statistics") {
  Rng rng(3);
  MlpModel m = random_model(4, 6, 3);
  m.bn_eps = 1e-14;
  const Matrix x = gaussian(64, 4, rng);
  const ForwardPass p = forward(m, x, Mode::Train);
  for (Index j = 0; j < 6; ++j) {
    const auto col = p.normalized.col(j).array();
    if ((p.pre.col(j).array() <= 0.0).all()) continue;
    CHECK(std::abs(col.mean()) <= 1e-8);
    CHECK(std::abs(col.square().mean() - 1.0) <= 1e-6);
  }
  MlpModel r = m;
  update_running_stats(r, p, 0.1);
  const Matrix h = p.pre.cwiseMax(0.0);
  const Index j = 0;
  const double mean = h.col(j).mean();
  const double var = (h.col(j).array() - mean).square().sum() / 63.0;
  CHECK(r.running_mean(j) == doctest::Approx(0.1 * mean));
  CHECK(r.running_var(j) == doctest::Approx(0.9 + 0.1 * var));
  CHECK_THROWS_AS(update_running_stats(r, forward(m, x, Mode::Eval), 0.1), UsageError);
}

TEST_CASE("backprop agrees with central differences") {
  Rng rng(5);
  const Matrix x = gaussian(6, 3, rng);
  const Vector y{{1.0, -1.0, 1.0, -1.0, -1.0, 1.0}};
  for (Loss loss : {Loss::Squared, Loss::Logistic}) {
    const MlpModel m = random_model(3, 4, 5);
    const ForwardPass p = forward(m, x, Mode::Train);
    const std::vector<double> got = flatten(backward(m, x, p, y, loss));
    oracle::Net net = oracle::Net::from(m);
    CHECK(net.loss(x, y, loss == Loss::Logistic) == doctest::Approx(batch_loss(p.scores, y, loss)).epsilon(1e-12));
    const std::vector<double> num = net.numeric_gradient(x, y, loss == Loss::Logistic, 1e-5);
    REQUIRE(got.size() == num.size());
    REQUIRE(got.size() == 3 * 4 + 4 * 4 + 1);
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i)
      worst = std::max(worst, std::abs(got[i] - num[i]) / std::max({std::abs(got[i]), std::abs(num[i]), 1e-6}));
    CHECK(worst <= 1e-4);
    if (loss == Loss::Squared) {
      const std::vector<double> exact = net.squared_gradient(x, y);
      for (std::size_t i = 0; i < got.size(); ++i) CHECK(std::abs(got[i] - exact[i]) <= 1e-12 * (1.0 + std::abs(exact[i])));
    }
  }
}

TEST_CASE("learning rate schedule") {
  TrainConfig cfg;
  CHECK(learning_rate(cfg, 0) == 0.001);
  CHECK(learning_rate(cfg, 499) == 0.001);
  CHECK(learning_rate(cfg, 500) == doctest::Approx(0.0009));
  CHECK(learning_rate(cfg, 1000) == doctest::Approx(0.00081).epsilon(1e-12));
}

TEST_CASE("full-batch training without momentum is gradient descent") {
  const BinaryDataset ds = toy(12, 3, 8);
  TrainConfig cfg;
  cfg.lr0 = 0.05;
  cfg.momentum = 0.0;
  cfg.batch_size = 12;
  cfg.epochs = 10;
  cfg.seed = 4;
  const TrainResult r = train_sgd(ds, 5, cfg);
  oracle::Net net = oracle::Net::from(init_xavier(3, 5, derive_seed(cfg.seed, 1)));
  for (int step = 0; step < 10; ++step) {
    const std::vector<double> g = net.squared_gradient(ds.x_train, ds.y_train);
    const auto params = net.params();
    for (std::size_t i = 0; i < params.size(); ++i) *params[i] -= cfg.lr0 * g[i];
  }
  const oracle::Net got = oracle::Net::from(r.model);
  double worst = 0.0;
  for (std::size_t i = 0; i < got.w1.size(); ++i) worst = std::max(worst, std::abs(got.w1[i] - net.w1[i]));
  for (int i = 0; i < 5; ++i)
    worst = std::max({worst, std::abs(got.b1[i] - net.b1[i]), std::abs(got.gamma[i] - net.gamma[i]),
                      std::abs(got.beta[i] - net.beta[i]), std::abs(got.w2[i] - net.w2[i])});
  worst = std::max(worst, std::abs(got.b2 - net.b2));
  CHECK(worst <= 1e-10);
}

TEST_CASE("separable toy problem is fitted") {
  Rng rng(12);
  BinaryDataset ds;
  ds.x_train = gaussian(20, 2, rng, 0.3);
  ds.y_train = labels(20);
  for (Index i = 0; i < 20; ++i) ds.x_train(i, 0) += ds.y_train(i);
  ds.x_test = ds.x_train;
  ds.y_test = ds.y_train;
  // An exact separator exists.
  REQUIRE(zero_one_error(fit_min_norm_ls(ds.x_train, ds.y_train), ds.x_train, ds.y_train) == 0.0);
  TrainConfig cfg;
  cfg.epochs = 2000;
  const TrainResult r = train_sgd(ds, 10, cfg);
  CHECK_FALSE(r.diverged);
  CHECK(r.history.back().epoch == 2000);
  CHECK(r.history.back().train_error == 0.0);
  CHECK(r.gate_epoch.has_value());
}

TEST_CASE("training is deterministic and records the schedule") {
  const BinaryDataset ds = toy(45, 4, 2);
  TrainConfig cfg;
  cfg.epochs = 23;
  cfg.dense_epochs = 5;
  cfg.stride = 10;
  const TrainResult a = train_sgd(ds, 7, cfg), b = train_sgd(ds, 7, cfg);
  REQUIRE(a.history.size() == b.history.size());
  std::vector<int> epochs;
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    epochs.push_back(a.history[i].epoch);
    const HistoryEntry &x = a.history[i], &z = b.history[i];
    CHECK((x.epoch == z.epoch && x.lr == z.lr && x.train_loss == z.train_loss && x.train_error == z.train_error &&
           x.test_error == z.test_error && x.output_norm_sq == z.output_norm_sq));
  }
  CHECK(epochs == std::vector<int>{1, 2, 3, 4, 5, 10, 20, 23});
  CHECK(a.model.w1 == b.model.w1);
  const std::vector<int> custom{3, 7};
  const TrainResult c = train_sgd(ds, 7, cfg, custom);
  REQUIRE(c.history.size() == 3);
  CHECK(c.history[0].epoch == 3);
  CHECK(c.history[2].epoch == 23);
  cfg.seed = 1;
  CHECK(train_sgd(ds, 7, cfg).model.w1 != a.model.w1);
}

TEST_CASE("divergence is reported") {
  const BinaryDataset ds = toy(40, 3, 6);
  TrainConfig cfg;
  cfg.lr0 = 1e12;
  cfg.epochs = 50;
  const TrainResult r = train_sgd(ds, 8, cfg);
  CHECK(r.diverged);
  CHECK_FALSE(r.message.empty());
}

TEST_CASE("vc estimate and configuration checks") {
  MlpModel m = init_xavier(3, 2, 0);
  m.w2.setZero();
  CHECK(estimate_vc_dim(m) == 1.0);
  m.w2 << 3.0, 4.0;
  CHECK(estimate_vc_dim(m) == 26.0);
  TrainConfig cfg;
  cfg.batch_size = 1;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = {};
  cfg.momentum = 1.0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  CHECK(parse_loss("logistic") == Loss::Logistic);
  CHECK_THROWS_AS(parse_loss("hinge"), DomainError);
}

TEST_CASE("checkpoint round trip") {
  const fs::path p = fs::temp_directory_path() / "vcdd_mlp.bin";
  MlpModel m = random_model(5, 3, 77);
  m.running_mean << 0.1, 0.2, 0.3;
  m.bn_eps = 1e-7;
  save_mlp(m, p);
  const MlpModel back = load_mlp(p);
  CHECK(back.w1 == m.w1);
  CHECK(back.b1 == m.b1);
  CHECK(back.gamma == m.gamma);
  CHECK(back.beta == m.beta);
  CHECK(back.running_mean == m.running_mean);
  CHECK(back.running_var == m.running_var);
  CHECK(back.w2 == m.w2);
  CHECK(back.b2 == m.b2);
  CHECK(back.bn_eps == m.bn_eps);
  fs::remove(p);
}
