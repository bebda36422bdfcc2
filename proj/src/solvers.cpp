#include "vcdd/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace vcdd {

LinearModel::LinearModel(Vector w, double b, FitMeta meta)
    : w_(std::move(w)), b_(b), norm_sq_(w_.squaredNorm()), meta_(std::move(meta)) {}

Vector LinearModel::scores(const Matrix& z) const {
  if (z.cols() != w_.size())
    throw DomainError("model has " + std::to_string(w_.size()) + " weights, input has " + std::to_string(z.cols()) +
                      " columns");
  return (z * w_).array() + b_;
}

Vector LinearModel::predict(const Matrix& z) const {
  return scores(z).unaryExpr([](double s) { return s >= 0.0 ? 1.0 : -1.0; });
}

void check_labels(const Vector& y, Index rows) {
  if (y.size() != rows)
    throw DomainError("label count " + std::to_string(y.size()) + " does not match " + std::to_string(rows) + " rows");
  for (Index i = 0; i < y.size(); ++i)
    if (y(i) != 1.0 && y(i) != -1.0) throw DomainError("labels must be exactly +1 or -1");
}

LinearModel fit_min_norm_ls(const Matrix& z, const Vector& y, const LsOptions& opts) {
  if (z.rows() < 1 || z.cols() < 1) throw DomainError("least squares needs a non-empty design matrix");
  check_labels(y, z.rows());

  const Index p = z.cols();
  Matrix a(z.rows(), opts.fit_bias ? p + 1 : p);
  a.leftCols(p) = z;
  if (opts.fit_bias) a.col(p).setOnes();

  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = static_cast<double>(std::max(a.rows(), a.cols())) * (s.size() ? s(0) : 0.0) * opts.rcond;
  Index rank = 0;
  while (rank < s.size() && s(rank) > cutoff) ++rank;

  Vector coef = Vector::Zero(a.cols());
  if (rank > 0) {
    const Vector uty = svd.matrixU().leftCols(rank).transpose() * y;
    coef = svd.matrixV().leftCols(rank) * uty.cwiseQuotient(s.head(rank));
  }

  FitMeta meta;
  meta.solver = "ls";
  meta.rank = rank;
  meta.residual = (a * coef - y).norm() / y.norm();
  const double bias = opts.fit_bias ? coef(p) : 0.0;
  return LinearModel(coef.head(p), bias, std::move(meta));
}

SvmFit fit_linear_svm(const Matrix& z, const Vector& y, const SvmOptions& opts) {
  const Index n = z.rows();
  if (n < 2 || z.cols() < 1) throw DomainError("SVM needs at least two samples and one feature");
  check_labels(y, n);
  if ((y.array() > 0).all() || (y.array() < 0).all()) throw DomainError("SVM needs samples from both classes");
  if (!(opts.C > 0.0) || !std::isfinite(opts.C)) throw DomainError("SVM box constraint C must be positive");

  const double C = opts.C;
  constexpr double kTau = 1e-12;

  // Q_ij = y_i y_j <z_i, z_j>
  Matrix q = z * z.transpose();
  q = q.cwiseProduct(y * y.transpose());
  const Vector qd = q.diagonal();

  Vector alpha = Vector::Zero(n);
  Vector grad = Vector::Constant(n, -1.0);  // Q alpha - 1

  // Bias: average over free vectors, else midpoint of the feasible interval.
  const auto bias_rho = [&] {
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double sum_free = 0.0;
    Index n_free = 0;
    for (Index t = 0; t < n; ++t) {
      const double yg = y(t) * grad(t);
      if (alpha(t) >= C) {
        if (y(t) < 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else if (alpha(t) <= 0) {
        if (y(t) > 0) ub = std::min(ub, yg);
        else lb = std::max(lb, yg);
      } else {
        ++n_free;
        sum_free += yg;
      }
    }
    return n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
  };
  // Relative primal-dual gap from the gradient: y_i <w, z_i> = grad_i + 1.
  const auto relative_gap = [&] {
    const double b = -bias_rho();
    const double wn = alpha.dot(grad + Vector::Ones(n));
    const double hinge = (1.0 - (grad.array() + 1.0 + y.array() * b)).max(0.0).sum();
    const double primal = 0.5 * wn + C * hinge;
    const double dual = alpha.sum() - 0.5 * wn;
    return (primal - dual) / std::max({std::abs(primal), std::abs(dual), 1e-300});
  };

  std::int64_t iter = 0;
  bool converged = false;
  double violation = 0.0;
  double stop_tol = opts.tolerance;
  for (;;) {
    double m_up = -std::numeric_limits<double>::infinity();
    double m_low = std::numeric_limits<double>::infinity();
    Index i = -1;
    Index j = -1;
    for (Index t = 0; t < n; ++t) {
      const double v = -y(t) * grad(t);
      const bool up = (y(t) > 0 && alpha(t) < C) || (y(t) < 0 && alpha(t) > 0);
      const bool low = (y(t) > 0 && alpha(t) > 0) || (y(t) < 0 && alpha(t) < C);
      if (up && v > m_up) {
        m_up = v;
        i = t;
      }
      if (low && v < m_low) {
        m_low = v;
        j = t;
      }
    }
    violation = (i < 0 || j < 0) ? 0.0 : m_up - m_low;
    if (violation <= stop_tol) {
      if (relative_gap() <= opts.gap_tolerance || stop_tol < 1e-12) {
        converged = true;
        break;
      }
      stop_tol *= 0.1;
      continue;
    }
    if (iter >= opts.max_iterations) break;
    ++iter;

    const double old_i = alpha(i);
    const double old_j = alpha(j);
    if (y(i) != y(j)) {
      double quad = qd(i) + qd(j) + 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad(i) - grad(j)) / quad;
      const double diff = alpha(i) - alpha(j);
      alpha(i) += delta;
      alpha(j) += delta;
      if (diff > 0) {
        if (alpha(j) < 0) {
          alpha(j) = 0;
          alpha(i) = diff;
        }
      } else if (alpha(i) < 0) {
        alpha(i) = 0;
        alpha(j) = -diff;
      }
      if (diff > 0) {
        if (alpha(i) > C) {
          alpha(i) = C;
          alpha(j) = C - diff;
        }
      } else if (alpha(j) > C) {
        alpha(j) = C;
        alpha(i) = C + diff;
      }
    } else {
      double quad = qd(i) + qd(j) - 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad(i) - grad(j)) / quad;
      const double sum = alpha(i) + alpha(j);
      alpha(i) -= delta;
      alpha(j) += delta;
      if (sum > C) {
        if (alpha(i) > C) {
          alpha(i) = C;
          alpha(j) = sum - C;
        }
        if (alpha(j) > C) {
          alpha(j) = C;
          alpha(i) = sum - C;
        }
      } else {
        if (alpha(j) < 0) {
          alpha(j) = 0;
          alpha(i) = sum;
        }
        if (alpha(i) < 0) {
          alpha(i) = 0;
          alpha(j) = sum;
        }
      }
    }
    const double di = alpha(i) - old_i;
    const double dj = alpha(j) - old_j;
    grad.noalias() += q.col(i) * di + q.col(j) * dj;
  }

  const double rho = bias_rho();

  Vector w = z.transpose() * alpha.cwiseProduct(y);
  const double b = -rho;

  FitMeta meta;
  meta.solver = "svm";
  meta.iterations = iter;
  meta.converged = converged;
  meta.kkt_violation = violation;
  const Vector margins = ((z * w).array() + b).matrix().cwiseProduct(y);
  const double wn = w.squaredNorm();
  meta.primal = 0.5 * wn + C * (1.0 - margins.array()).max(0.0).sum();
  meta.dual = alpha.sum() - 0.5 * wn;
  const double scale = std::max({std::abs(meta.primal), std::abs(meta.dual), 1e-300});
  meta.duality_gap = (meta.primal - meta.dual) / scale;

  SvmFit fit;
  fit.C = C;
  fit.n_support = (alpha.array() > opts.support_threshold * C).count();
  fit.alphas = std::move(alpha);
  fit.model = LinearModel(std::move(w), b, std::move(meta));
  return fit;
}

double zero_one_error(const LinearModel& model, const Matrix& z, const Vector& y) {
  if (y.size() != z.rows()) throw DomainError("label count does not match rows");
  if (z.rows() == 0) return 0.0;
  const Vector s = model.scores(z);
  Index wrong = 0;
  for (Index i = 0; i < s.size(); ++i) {
    const double pred = s(i) >= 0.0 ? 1.0 : -1.0;
    if (pred != y(i)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(z.rows());
}

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_linear_model(const LinearModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const auto& m = model.meta();
  out << "vcdd-linear-model 1\n"
      << "solver " << (m.solver.empty() ? "-" : m.solver) << '\n'
      << "features " << model.w().size() << '\n'
      << "bias " << fmt17(model.b()) << '\n'
      << "norm_sq " << fmt17(model.norm_sq()) << '\n'
      << "iterations " << m.iterations << '\n'
      << "rank " << m.rank << '\n'
      << "residual " << fmt17(m.residual) << '\n'
      << "converged " << (m.converged ? 1 : 0) << '\n'
      << "kkt_violation " << fmt17(m.kkt_violation) << '\n'
      << "primal " << fmt17(m.primal) << '\n'
      << "dual " << fmt17(m.dual) << '\n'
      << "duality_gap " << fmt17(m.duality_gap) << '\n'
      << "weights\n";
  for (Index i = 0; i < model.w().size(); ++i) out << fmt17(model.w()(i)) << '\n';
  if (!out) throw IoError("write failure on " + path.string());
}

LinearModel load_linear_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string line;
  std::getline(in, line);
  if (line != "vcdd-linear-model 1") throw DomainError(path.string() + ": not a vcdd linear model (version 1)");

  FitMeta meta;
  Index features = -1;
  double bias = 0.0;
  while (std::getline(in, line) && line != "weights") {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "solver") ls >> meta.solver;
    else if (key == "features") ls >> features;
    else if (key == "bias") ls >> bias;
    else if (key == "iterations") ls >> meta.iterations;
    else if (key == "rank") ls >> meta.rank;
    else if (key == "residual") ls >> meta.residual;
    else if (key == "converged") {
      int c = 1;
      ls >> c;
      meta.converged = c != 0;
    } else if (key == "kkt_violation") ls >> meta.kkt_violation;
    else if (key == "primal") ls >> meta.primal;
    else if (key == "dual") ls >> meta.dual;
    else if (key == "duality_gap") ls >> meta.duality_gap;
  }
  if (line != "weights" || features < 0) throw DomainError(path.string() + ": missing header fields");
  if (meta.solver == "-") meta.solver.clear();
  Vector w(features);
  for (Index i = 0; i < features; ++i) {
    if (!std::getline(in, line)) throw DomainError(path.string() + ": expected " + std::to_string(features) + " weights");
    w(i) = std::strtod(line.c_str(), nullptr);
  }
  return LinearModel(std::move(w), bias, std::move(meta));
}

}  // namespace vcdd
