#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace micutil {

// Weighted l1-regularized least squares over feature-importance
// weights:
//   J(w) = sum_r omega_r (t_r - x_r . w)^2 + lambda * |w|_1.
// Rows are accumulated into sufficient statistics (Gram matrix,
// cross-correlation, target energy), so arbitrarily many rows cost
// O(I^2) memory. Solved by cyclic coordinate descent.

class LassoProblem {
 public:
  explicit LassoProblem(size_t n_vars);

  // One weighted row. x.size() == n_vars; all values finite and
  // weight > 0 (throws std::invalid_argument otherwise).
  void add_row(std::span<const double> x, double target, double weight);

  size_t n_vars() const { return static_cast<size_t>(gram_.rows()); }
  size_t n_rows() const { return rows_; }
  const Eigen::MatrixXd& gram() const { return gram_; }     // sum w x x^T
  const Eigen::VectorXd& xty() const { return xty_; }       // sum w t x
  double yty() const { return yty_; }                       // sum w t^2

  // Adds another problem's accumulated rows (same n_vars).
  void merge(const LassoProblem& other);

  // Rescales every accumulated row weight by s > 0. Used to average
  // merged per-trial problems, so a batch's solution is invariant to
  // duplicating the trial set at any lambda.
  void scale_weights(double s);

  // J(w) for this problem at the given lambda.
  double objective(const Eigen::VectorXd& w, double lambda) const;

  // Smallest lambda for which the all-zero vector is optimal:
  // max_i |2 * xty_i|.
  double lambda_max() const;

 private:
  Eigen::MatrixXd gram_;
  Eigen::VectorXd xty_;
  double yty_ = 0.0;
  size_t rows_ = 0;
};

struct LassoSolution {
  Eigen::VectorXd w;
  std::vector<size_t> support;  // indices with w != 0
  size_t sweeps = 0;
  bool converged = false;
};

// Cyclic coordinate descent from the zero vector. Converged when the
// largest coordinate change in a full sweep is <= tol.
LassoSolution coordinate_descent(const LassoProblem& prob, double lambda,
                                 double tol = 1e-8, size_t max_sweeps = 10000);

// Maximum KKT violation of w for the given lambda; a certified
// optimum has residual ~0.
double kkt_residual(const LassoProblem& prob, double lambda,
                    const Eigen::VectorXd& w);

double soft_threshold(double z, double t);

// Target preparation: subtracts the mean so the fit explains relative
// channel quality rather than the absolute coherence level.
std::vector<double> zero_mean(std::span<const double> values);

// Appends the N x I rows of one frame: row q of channel matrix M_p
// explains target gamma_centered[q], each with the given row weight.
void add_frame_rows(LassoProblem& prob, const std::vector<Eigen::MatrixXd>& m,
                    std::span<const double> gamma_centered, double row_weight);

}  // namespace micutil
