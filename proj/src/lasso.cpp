#include "micutil/lasso.hpp"

#include <cmath>
#include <stdexcept>

namespace micutil {

LassoProblem::LassoProblem(size_t n_vars)
    : gram_(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_vars),
                                  static_cast<Eigen::Index>(n_vars))),
      xty_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_vars))) {
  if (n_vars == 0) throw std::invalid_argument("LassoProblem: need >= 1 variable");
}

void LassoProblem::add_row(std::span<const double> x, double target, double weight) {
  const auto n = gram_.rows();
  if (x.size() != static_cast<size_t>(n)) {
    throw std::invalid_argument("LassoProblem::add_row: row length mismatch");
  }
  if (!(weight > 0.0) || !std::isfinite(weight) || !std::isfinite(target)) {
    throw std::invalid_argument("LassoProblem::add_row: bad weight or target");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("LassoProblem::add_row: non-finite value");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double wxi = weight * x[static_cast<size_t>(i)];
    xty_(i) += wxi * target;
    for (Eigen::Index j = 0; j <= i; ++j) {
      gram_(i, j) += wxi * x[static_cast<size_t>(j)];
    }
  }
  yty_ += weight * target * target;
  ++rows_;
}

void LassoProblem::merge(const LassoProblem& other) {
  if (other.gram_.rows() != gram_.rows()) {
    throw std::invalid_argument("LassoProblem::merge: variable count mismatch");
  }
  gram_ += other.gram_;
  xty_ += other.xty_;
  yty_ += other.yty_;
  rows_ += other.rows_;
}

void LassoProblem::scale_weights(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw std::invalid_argument("LassoProblem::scale_weights: scale must be positive");
  }
  gram_ *= s;
  xty_ *= s;
  yty_ *= s;
}

double LassoProblem::objective(const Eigen::VectorXd& w, double lambda) const {
  // Quadratic expansion of the weighted residual sum, using only the
  // lower triangle of the accumulated Gram matrix.
  const auto n = gram_.rows();
  double quad = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    quad += gram_(i, i) * w(i) * w(i);
    for (Eigen::Index j = 0; j < i; ++j) quad += 2.0 * gram_(i, j) * w(i) * w(j);
  }
  return yty_ - 2.0 * xty_.dot(w) + quad + lambda * w.cwiseAbs().sum();
}

double LassoProblem::lambda_max() const {
  return 2.0 * xty_.cwiseAbs().maxCoeff();
}

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

namespace {
Eigen::MatrixXd full_gram(const LassoProblem& prob) {
  Eigen::MatrixXd g = prob.gram();
  g.triangularView<Eigen::StrictlyUpper>() = g.transpose();
  return g;
}
}  // namespace

LassoSolution coordinate_descent(const LassoProblem& prob, double lambda,
                                 double tol, size_t max_sweeps) {
  if (lambda < 0.0) throw std::invalid_argument("coordinate_descent: lambda must be >= 0");
  const Eigen::MatrixXd g = full_gram(prob);
  const Eigen::VectorXd& c = prob.xty();
  const auto n = g.rows();

  LassoSolution sol;
  sol.w = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd gw = Eigen::VectorXd::Zero(n);  // G w, kept incrementally

  for (size_t sweep = 1; sweep <= max_sweeps; ++sweep) {
    double max_delta = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double gii = g(i, i);
      double wi = 0.0;
      if (gii > 0.0) {
        const double b = c(i) - (gw(i) - gii * sol.w(i));
        wi = soft_threshold(b, 0.5 * lambda) / gii;
      }
      const double delta = wi - sol.w(i);
      if (delta != 0.0) {
        gw += delta * g.col(i);
        sol.w(i) = wi;
        max_delta = std::max(max_delta, std::fabs(delta));
      }
    }
    sol.sweeps = sweep;
    if (max_delta <= tol) {
      sol.converged = true;
      break;
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (sol.w(i) != 0.0) sol.support.push_back(static_cast<size_t>(i));
  }
  return sol;
}

double kkt_residual(const LassoProblem& prob, double lambda,
                    const Eigen::VectorXd& w) {
  const Eigen::MatrixXd g = full_gram(prob);
  // Gradient of the smooth part: 2(Gw - xty).
  const Eigen::VectorXd grad = 2.0 * (g * w - prob.xty());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    double v;
    if (w(i) > 0.0) {
      v = std::fabs(grad(i) + lambda);
    } else if (w(i) < 0.0) {
      v = std::fabs(grad(i) - lambda);
    } else {
      v = std::max(0.0, std::fabs(grad(i)) - lambda);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

std::vector<double> zero_mean(std::span<const double> values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  if (!values.empty()) mean /= static_cast<double>(values.size());
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) v -= mean;
  return out;
}

void add_frame_rows(LassoProblem& prob, const std::vector<Eigen::MatrixXd>& m,
                    std::span<const double> gamma_centered, double row_weight) {
  for (const auto& mp : m) {
    if (static_cast<size_t>(mp.rows()) != gamma_centered.size()) {
      throw std::invalid_argument("add_frame_rows: row count mismatch");
    }
    for (Eigen::Index q = 0; q < mp.rows(); ++q) {
      // Row view without copying: Eigen rows are strided, so copy once.
      Eigen::VectorXd row = mp.row(q);
      prob.add_row(std::span<const double>(row.data(), static_cast<size_t>(row.size())),
                   gamma_centered[static_cast<size_t>(q)], row_weight);
    }
  }
}

}  // namespace micutil
