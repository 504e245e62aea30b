#include "micutil/utility_estimator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "micutil/stats.hpp"

namespace micutil {

std::vector<Eigen::MatrixXd> build_channel_matrices(const PccTensor& pcc) {
  const size_t n = pcc.n;
  const size_t ni = pcc.n_feat;
  std::vector<Eigen::MatrixXd> out(n);
  for (size_t p = 0; p < n; ++p) {
    Eigen::MatrixXd m(n, ni);
    for (size_t q = 0; q < n; ++q) {
      for (size_t i = 0; i < ni; ++i) {
        m(static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(i)) =
            pcc.at(p, q, i);
      }
    }
    out[p] = std::move(m);
  }
  return out;
}

Eigen::VectorXd power_iterate(const Eigen::VectorXd& a_prev,
                              const Eigen::MatrixXd& M) {
  if (M.rows() != a_prev.size()) {
    throw std::invalid_argument("power_iterate: dimension mismatch");
  }
  Eigen::VectorXd v = M * (M.transpose() * a_prev);
  const double norm = v.norm();
  if (norm < 1e-12) return a_prev;
  return v / norm;
}

Eigen::VectorXd fiedler_vector(const Eigen::MatrixXd& W,
                               const Eigen::VectorXd& d) {
  const Eigen::Index n = W.rows();
  if (n < 2 || W.cols() != n || d.size() != n) {
    throw std::invalid_argument("fiedler_vector: need square W, matching d, n >= 2");
  }
  Eigen::VectorXd dis(n);  // D^-1/2
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(d(i) > 0.0)) throw std::invalid_argument("fiedler_vector: degrees must be positive");
    dis(i) = 1.0 / std::sqrt(d(i));
  }
  // Symmetric normalized Laplacian; eigenvalues ascend in the solver.
  Eigen::MatrixXd lsym = (-W).cwiseProduct(dis * dis.transpose());
  lsym.diagonal().array() += 1.0;  // I - D^-1/2 W D^-1/2
  // Force exact symmetry against rounding before the solve.
  lsym = 0.5 * (lsym + lsym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lsym);
  if (es.info() != Eigen::Success) {
    throw std::runtime_error("fiedler_vector: eigendecomposition failed");
  }
  Eigen::VectorXd t = dis.asDiagonal() * es.eigenvectors().col(1);
  const double norm = t.norm();
  if (norm > 0.0) t /= norm;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::fabs(t(i)) > 1e-12) {
      if (t(i) < 0.0) t = -t;
      break;
    }
  }
  return t;
}

double ncut_score(const Eigen::MatrixXd& W, uint32_t subset) {
  const Eigen::Index n = W.rows();
  double cut = 0.0, vol_a = 0.0, vol_b = 0.0;
  for (Eigen::Index p = 0; p < n; ++p) {
    const bool in_a = (subset >> p) & 1u;
    for (Eigen::Index q = 0; q < n; ++q) {
      const double w = W(p, q);
      if (in_a) {
        vol_a += w;
        if (!((subset >> q) & 1u)) cut += w;
      } else {
        vol_b += w;
      }
    }
  }
  if (vol_a <= 0.0 || vol_b <= 0.0) {
    return std::numeric_limits<double>::infinity();
  }
  return cut * (1.0 / vol_a + 1.0 / vol_b);
}

UtilityVector disambiguate_sign(const Eigen::VectorXd& t,
                                const Eigen::VectorXd& e) {
  if (t.size() != e.size()) {
    throw std::invalid_argument("disambiguate_sign: dimension mismatch");
  }
  UtilityVector out;
  out.fiedler = t;
  double r = pearson(std::span<const double>(t.data(), static_cast<size_t>(t.size())),
                     std::span<const double>(e.data(), static_cast<size_t>(e.size())));
  if (!std::isfinite(r)) r = 0.0;
  out.flip_corr = r;
  out.u = (r >= 0.0) ? t : Eigen::VectorXd(-t);
  return out;
}

UtilityEstimator::UtilityEstimator(size_t n_channels) : n_(n_channels) {
  if (n_channels < 2) throw std::invalid_argument("UtilityEstimator: need >= 2 channels");
  const auto n = static_cast<Eigen::Index>(n_);
  // Uniform start for every channel direction; identity similarity.
  a_ = Eigen::MatrixXd::Constant(n, n, 1.0 / std::sqrt(static_cast<double>(n_)));
  prev_s_ = Eigen::MatrixXd::Identity(n, n);
}

UtilityVector UtilityEstimator::step(const PccTensor& pcc,
                                     const Eigen::VectorXd& entropy_neg) {
  if (pcc.n != n_ || entropy_neg.size() != static_cast<Eigen::Index>(n_)) {
    throw std::invalid_argument("UtilityEstimator::step: dimension mismatch");
  }
  const auto n = static_cast<Eigen::Index>(n_);
  const auto mats = build_channel_matrices(pcc);

  for (Eigen::Index p = 0; p < n; ++p) {
    a_.col(p) = power_iterate(a_.col(p), mats[static_cast<size_t>(p)]);
  }

  // Self-normalized similarity columns; a vanishing own component
  // keeps the previous frame's column for that channel.
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index p = 0; p < n; ++p) {
    const double own = a_(p, p);
    if (std::fabs(own) < 1e-6) {
      s.col(p) = prev_s_.col(p);
    } else {
      s.col(p) = a_.col(p) / own;
    }
  }
  prev_s_ = s;

  graph_.S = s;
  graph_.W = 0.5 * (s.cwiseAbs() + s.cwiseAbs().transpose());
  graph_.d = graph_.W.rowwise().sum();
  graph_.L = Eigen::MatrixXd::Identity(n, n) -
             graph_.d.cwiseInverse().asDiagonal() * graph_.W;

  const Eigen::VectorXd t = fiedler_vector(graph_.W, graph_.d);
  return disambiguate_sign(t, entropy_neg);
}

}  // namespace micutil
