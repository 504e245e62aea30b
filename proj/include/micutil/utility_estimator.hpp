#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "micutil/feature_tracker.hpp"

namespace micutil {

// Turns the tracked correlation tensor into a per-channel utility
// vector. Per frame: one power-iteration step per channel extracts the
// dominant left singular direction of that channel's correlation
// profile, the self-normalized directions form a similarity graph, and
// the graph's Fiedler vector (relaxed minimum normalized cut) ranks the
// channels. Entropy side information orients the sign so higher values
// mean more useful.

struct SimilarityGraph {
  Eigen::MatrixXd S;  // column p = a_p / [a_p]_p
  Eigen::MatrixXd W;  // (|S| + |S|^T) / 2, unit diagonal
  Eigen::VectorXd d;  // row sums of W, each >= 1
  Eigen::MatrixXd L;  // I - D^-1 W
};

struct UtilityVector {
  Eigen::VectorXd u;        // unit 2-norm, sign-disambiguated
  Eigen::VectorXd fiedler;  // raw Fiedler vector; u == +-fiedler
  double flip_corr = 0.0;   // correlation against the entropy cue
};

// Channel matrices M_p with [M_p](q, i) = r[p][q][feature i].
std::vector<Eigen::MatrixXd> build_channel_matrices(const PccTensor& pcc);

// One normalized power-iteration step on M M^T. Returns a_prev
// unchanged when the image norm falls below 1e-12.
Eigen::VectorXd power_iterate(const Eigen::VectorXd& a_prev,
                              const Eigen::MatrixXd& M);

// Fiedler vector of W: eigenvector of the second-smallest eigenvalue
// of D^-1/2 (D - W) D^-1/2, mapped back through D^-1/2, unit 2-norm.
// Sign is fixed deterministically (first component of magnitude
// > 1e-12 is made positive). Ties between equal eigenvalues resolve
// by ascending eigenvalue order of the dense symmetric solver.
Eigen::VectorXd fiedler_vector(const Eigen::MatrixXd& W,
                               const Eigen::VectorXd& d);

// Normalized cut of the bipartition {A, complement}: subset bit p set
// means channel p is in A. cut(A) * (1/vol(A) + 1/vol(~A)); an empty
// or zero-volume side yields +infinity.
double ncut_score(const Eigen::MatrixXd& W, uint32_t subset);

// u = t when pearson(t, e) >= 0, else -t. Zero variance in either
// argument counts as correlation 0 (no flip).
UtilityVector disambiguate_sign(const Eigen::VectorXd& t,
                                const Eigen::VectorXd& e);

class UtilityEstimator {
 public:
  explicit UtilityEstimator(size_t n_channels);

  // One frame: pcc is the current correlation tensor, entropy_neg the
  // per-channel negated differential entropy cue.
  UtilityVector step(const PccTensor& pcc, const Eigen::VectorXd& entropy_neg);

  // Similarity graph assembled in the most recent step.
  const SimilarityGraph& graph() const { return graph_; }
  // Per-channel fused direction vectors a_p (columns).
  const Eigen::MatrixXd& directions() const { return a_; }
  size_t n_channels() const { return n_; }

 private:
  size_t n_;
  Eigen::MatrixXd a_;       // column p = a_p, unit norm
  Eigen::MatrixXd prev_s_;  // last accepted similarity columns
  SimilarityGraph graph_;
};

}  // namespace micutil
