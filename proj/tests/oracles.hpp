#pragma once

// Reference implementations used only by the tests. None of them call into the
// code under test except for shared plain data types.

#include "vcdd/common.hpp"
#include "vcdd/mlp.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <vector>

namespace oracle {

using Mp = boost::multiprecision::cpp_bin_float_50;

struct MpBound {
  Mp eta, epsilon, bound;
};

inline MpBound vc_bound(std::uint64_t n, double h, double r, double a1, double a2) {
  using boost::multiprecision::log;
  using boost::multiprecision::sqrt;
  const Mp N(n), H(h), R(r), A1(a1), A2(a2);
  MpBound out;
  out.eta = Mp(4) / sqrt(N);
  if (out.eta > 1) out.eta = 1;
  out.epsilon = A1 / N * (H * (log(A2 * N / H) + 1) - log(out.eta / 4));
  out.bound = R + out.epsilon / 2 * (1 + sqrt(1 + 4 * R / out.epsilon));
  return out;
}

inline double rel_err(double got, const Mp& want) {
  const Mp diff = abs(Mp(got) - want);
  if (want == 0) return static_cast<double>(diff);
  return static_cast<double>(diff / abs(want));
}

// Minimum-norm least squares on [Z 1] through a complete orthogonal decomposition.
inline Eigen::VectorXd min_norm_ls(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, bool bias) {
  Eigen::MatrixXd a(z.rows(), z.cols() + (bias ? 1 : 0));
  a.leftCols(z.cols()) = z;
  if (bias) a.col(z.cols()).setOnes();
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  cod.setThreshold(1e-10);
  return cod.solve(y);
}

// Exhaustive active-set solution of the soft-margin dual for a handful of points:
// every assignment of each alpha to {0, C, free} is tried and the best feasible
// stationary point kept. Returns the dual objective.
inline std::optional<double> svm_dual_bruteforce(const Eigen::MatrixXd& z, const Eigen::VectorXd& y, double c) {
  const int n = static_cast<int>(z.rows());
  const Eigen::MatrixXd q = (z * z.transpose()).cwiseProduct(y * y.transpose());
  const auto dual = [&](const Eigen::VectorXd& a) { return a.sum() - 0.5 * a.dot(q * a); };
  std::optional<double> best;
  int combos = 1;
  for (int i = 0; i < n; ++i) combos *= 3;
  for (int code = 0; code < combos; ++code) {
    std::vector<int> state(n);
    int rest = code;
    for (int i = 0; i < n; ++i) {
      state[i] = rest % 3;  // 0: at zero, 1: at C, 2: free
      rest /= 3;
    }
    std::vector<int> free;
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (state[i] == 1) alpha(i) = c;
      if (state[i] == 2) free.push_back(i);
    }
    const int f = static_cast<int>(free.size());
    if (f > 0) {
      // Stationarity on the free set with multiplier b for sum(y alpha) = 0:
      // (Q alpha)_i - 1 + b y_i = 0, i in F.
      Eigen::MatrixXd k = Eigen::MatrixXd::Zero(f + 1, f + 1);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(f + 1);
      for (int a = 0; a < f; ++a) {
        const int i = free[a];
        for (int b = 0; b < f; ++b) k(a, b) = q(i, free[b]);
        k(a, f) = y(i);
        k(f, a) = y(i);
        double fixed = 0.0;
        for (int j = 0; j < n; ++j)
          if (state[j] == 1) fixed += q(i, j) * c;
        rhs(a) = 1.0 - fixed;
      }
      double ysum = 0.0;
      for (int j = 0; j < n; ++j)
        if (state[j] == 1) ysum += y(j) * c;
      rhs(f) = -ysum;
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(k);
      const Eigen::VectorXd sol = cod.solve(rhs);
      if ((k * sol - rhs).norm() > 1e-8 * (1.0 + rhs.norm())) continue;
      for (int a = 0; a < f; ++a) alpha(free[a]) = sol(a);
    }
    if ((alpha.array() < -1e-12).any() || (alpha.array() > c + 1e-12).any()) continue;
    if (std::abs(alpha.dot(y)) > 1e-9 * (1.0 + c)) continue;
    const double d = dual(alpha);
    if (!best || d > *best) best = d;
  }
  return best;
}

// Scalar re-implementation of the network loss for finite differences and the
// gradient-descent reference. Train-mode batch norm, biased batch variance.
struct Net {
  int d = 0, width = 0;
  std::vector<double> w1, b1, gamma, beta, w2;  // w1 row-major width x d
  double b2 = 0.0;
  double eps = 1e-5;

  static Net from(const vcdd::MlpModel& m) {
    Net net;
    net.d = static_cast<int>(m.input_dim());
    net.width = static_cast<int>(m.width());
    for (int i = 0; i < net.width; ++i)
      for (int j = 0; j < net.d; ++j) net.w1.push_back(m.w1(i, j));
    for (int i = 0; i < net.width; ++i) {
      net.b1.push_back(m.b1(i));
      net.gamma.push_back(m.gamma(i));
      net.beta.push_back(m.beta(i));
      net.w2.push_back(m.w2(i));
    }
    net.b2 = m.b2;
    net.eps = m.bn_eps;
    return net;
  }

  std::vector<double*> params() {
    std::vector<double*> p;
    for (auto* v : {&w1, &b1, &gamma, &beta, &w2})
      for (auto& x : *v) p.push_back(&x);
    p.push_back(&b2);
    return p;
  }

  // Mean loss over rows of x; squared or logistic.
  double loss(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool logistic) const {
    const int rows = static_cast<int>(x.rows());
    std::vector<std::vector<double>> h(rows, std::vector<double>(width));
    for (int r = 0; r < rows; ++r)
      for (int i = 0; i < width; ++i) {
        double s = b1[i];
        for (int j = 0; j < d; ++j) s += w1[i * d + j] * x(r, j);
        h[r][i] = s > 0 ? s : 0.0;
      }
    std::vector<double> score(rows, b2);
    for (int i = 0; i < width; ++i) {
      double mean = 0.0;
      for (int r = 0; r < rows; ++r) mean += h[r][i];
      mean /= rows;
      double var = 0.0;
      for (int r = 0; r < rows; ++r) var += (h[r][i] - mean) * (h[r][i] - mean);
      var /= rows;
      for (int r = 0; r < rows; ++r) score[r] += w2[i] * (gamma[i] * (h[r][i] - mean) / std::sqrt(var + eps) + beta[i]);
    }
    double total = 0.0;
    for (int r = 0; r < rows; ++r) {
      if (logistic) total += std::log1p(std::exp(-y(r) * score[r]));
      else total += (score[r] - y(r)) * (score[r] - y(r));
    }
    return total / rows;
  }

  std::vector<double> numeric_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, bool logistic,
                                       double step) {
    std::vector<double> g;
    for (double* p : params()) {
      const double keep = *p;
      *p = keep + step;
      const double up = loss(x, y, logistic);
      *p = keep - step;
      const double down = loss(x, y, logistic);
      *p = keep;
      g.push_back((up - down) / (2.0 * step));
    }
    return g;
  }

  // Analytic gradient of the squared loss, written out per scalar.
  std::vector<double> squared_gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const {
    const int rows = static_cast<int>(x.rows());
    std::vector<std::vector<double>> pre(rows, std::vector<double>(width)), xhat = pre;
    std::vector<double> inv(width);
    for (int r = 0; r < rows; ++r)
      for (int i = 0; i < width; ++i) {
        double s = b1[i];
        for (int j = 0; j < d; ++j) s += w1[i * d + j] * x(r, j);
        pre[r][i] = s;
      }
    for (int i = 0; i < width; ++i) {
      double mean = 0.0, var = 0.0;
      for (int r = 0; r < rows; ++r) mean += std::max(pre[r][i], 0.0);
      mean /= rows;
      for (int r = 0; r < rows; ++r) var += std::pow(std::max(pre[r][i], 0.0) - mean, 2);
      var /= rows;
      inv[i] = 1.0 / std::sqrt(var + eps);
      for (int r = 0; r < rows; ++r) xhat[r][i] = (std::max(pre[r][i], 0.0) - mean) * inv[i];
    }
    std::vector<double> ds(rows);
    for (int r = 0; r < rows; ++r) {
      double s = b2;
      for (int i = 0; i < width; ++i) s += w2[i] * (gamma[i] * xhat[r][i] + beta[i]);
      ds[r] = 2.0 * (s - y(r)) / rows;
    }
    std::vector<double> gw1(w1.size(), 0.0), gb1(width, 0.0), gg(width, 0.0), gbeta(width, 0.0), gw2(width, 0.0);
    double gb2 = 0.0;
    for (int r = 0; r < rows; ++r) gb2 += ds[r];
    for (int i = 0; i < width; ++i) {
      std::vector<double> dx(rows);
      double sum_dx = 0.0, sum_dx_xhat = 0.0;
      for (int r = 0; r < rows; ++r) {
        gw2[i] += ds[r] * (gamma[i] * xhat[r][i] + beta[i]);
        const double du = ds[r] * w2[i];
        gg[i] += du * xhat[r][i];
        gbeta[i] += du;
        dx[r] = du * gamma[i];
        sum_dx += dx[r];
        sum_dx_xhat += dx[r] * xhat[r][i];
      }
      for (int r = 0; r < rows; ++r) {
        const double dh = inv[i] / rows * (rows * dx[r] - sum_dx - xhat[r][i] * sum_dx_xhat);
        const double da = pre[r][i] > 0 ? dh : 0.0;
        gb1[i] += da;
        for (int j = 0; j < d; ++j) gw1[i * d + j] += da * x(r, j);
      }
    }
    std::vector<double> g;
    for (auto* v : {&gw1, &gb1, &gg, &gbeta, &gw2}) g.insert(g.end(), v->begin(), v->end());
    g.push_back(gb2);
    return g;
  }
};

inline std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) h = (h ^ p[i]) * 0x100000001b3ULL;
  return h;
}

inline std::uint64_t matrix_hash(const Eigen::MatrixXd& m) {
  std::uint64_t h = fnv1a(nullptr, 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      h = fnv1a(&v, sizeof v, h);
    }
  return h;
}

}  // namespace oracle
