#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

namespace topicnet::ad {

// One value in the computation graph. Vectors are stored as single-column
// matrices; scalars as 1x1.
struct Node {
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  bool requires_grad = false;

  void ensure_grad() {
    if (grad.rows() != value.rows() || grad.cols() != value.cols())
      grad = Eigen::MatrixXd::Zero(value.rows(), value.cols());
  }
};

using Var = std::shared_ptr<Node>;

// Reverse pass over the fixed forward graph of one loss evaluation. Every op
// computes its value eagerly and records a backward closure; backward() runs
// the closures in reverse order.
class Tape {
 public:
  Var leaf(const Eigen::MatrixXd& value, bool requires_grad = false);
  Var constant(double value);

  Var add(const Var& a, const Var& b);
  Var add(const std::vector<Var>& terms);
  Var scale(const Var& a, double factor);
  Var sum(const Var& a);

  Var matvec(const Var& w, const Var& x);
  // w * x for a sparse count vector given as (index, count) pairs.
  Var matvec_sparse(const Var& w, const std::vector<std::pair<int, double>>& x);

  Var relu(const Var& a);
  Var softplus(const Var& a);
  Var exp(const Var& a);
  Var clamp_min(const Var& a, double floor);  // subgradient passes only above the floor
  Var concat_rows(const Var& a, const Var& b);

  // Log expected-likelihood kernel matrix between two embedding stacks:
  // entry (i, k) = log EL kernel of row i of (mean_a, log_var_a) against
  // row k of (mean_b, log_var_b).
  Var log_kernel_matrix(const Var& mean_a, const Var& log_var_a,
                        const Var& mean_b, const Var& log_var_b);
  Var softmax_columns(const Var& a);

  // theta = lambda * w^(1/k) with w = -ln(1-u) held fixed.
  Var weibull_sample(const Var& k, const Var& lambda, const Eigen::VectorXd& w);
  // theta = lambda * Gamma(1 + 1/k).
  Var weibull_mean(const Var& k, const Var& lambda);

  // Negative Poisson log likelihood of sparse counts under the given rate
  // vector, including the log x! constant. Scalar.
  Var poisson_nll(const std::vector<std::pair<int, double>>& counts, const Var& rate,
                  double rate_floor);

  // Sum over components of the analytic KL(Weibull(k_i, lambda_i) ||
  // Gamma(shape_i, rate_c)). Scalar. k is clamped at k_min inside.
  Var kl_weibull_gamma_sum(const Var& k, const Var& lambda, const Var& shape,
                           double rate_c, double k_min = 1e-3);

  // Max-margin taxonomy penalty for one (child layer, parent layer) pair.
  // children[j] lists the child-layer indices under parent topic j. Parents
  // with an empty child set or empty complement contribute zero; their count
  // is reported through skipped_parents. Scalar.
  // literal = use the printed sign m - max_pos + min_neg instead of the
  // intent-consistent hinge m + max_pos - min_neg.
  Var margin_prior_layer(const Var& mean_c, const Var& log_var_c,
                         const Var& mean_p, const Var& log_var_p,
                         const std::vector<std::vector<int>>& children,
                         double margin, double gamma_threshold,
                         bool literal = false, int* skipped_parents = nullptr);

  void backward(const Var& root);

  std::size_t size() const { return ops_.size(); }

 private:
  Var make(Eigen::MatrixXd value, bool requires_grad);
  void record(std::function<void()> op) { ops_.push_back(std::move(op)); }

  std::vector<std::function<void()>> ops_;
};

}  // namespace topicnet::ad
