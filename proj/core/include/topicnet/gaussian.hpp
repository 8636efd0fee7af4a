#pragma once

#include <Eigen/Dense>

namespace topicnet {

// A word or topic represented as a diagonal-covariance Gaussian in the shared
// embedding space. Variances are stored as elementwise log sigma^2 so they
// stay positive under unconstrained gradient steps.
struct GaussianEmbedding {
  Eigen::VectorXd mean;
  Eigen::VectorXd log_var;

  int dim() const { return static_cast<int>(mean.size()); }
};

// log of the expected likelihood kernel: the Gaussian density at zero with
// mean mu_a - mu_b and covariance Sigma_a + Sigma_b. Symmetric in (a, b).
double log_el_kernel(const Eigen::VectorXd& mean_a, const Eigen::VectorXd& log_var_a,
                     const Eigen::VectorXd& mean_b, const Eigen::VectorXd& log_var_b);
double log_el_kernel(const GaussianEmbedding& a, const GaussianEmbedding& b);

// KL(N_a || N_b) for diagonal Gaussians, computed elementwise. Asymmetric.
double gaussian_kl(const Eigen::VectorXd& mean_a, const Eigen::VectorXd& log_var_a,
                   const Eigen::VectorXd& mean_b, const Eigen::VectorXd& log_var_b);
double gaussian_kl(const GaussianEmbedding& a, const GaussianEmbedding& b);

// Hinge-relaxed KL: max(0, KL(a||b) - gamma_threshold). Zero when a is
// sufficiently encapsulated in b.
double thresholded_divergence(const GaussianEmbedding& a, const GaussianEmbedding& b,
                              double gamma_threshold);
double thresholded_divergence_kl(double kl, double gamma_threshold);

// Reference order-embedding penalty ||max(0, y - x)||^2 over nonnegative
// coordinate vectors. Test oracle only; never used in training.
double order_penalty_oracle(const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// All-pairs KL between the rows of two embedding stacks: entry (i, j) is
// KL(row i of A || row j of B). Rows are means, log-variances row-aligned.
Eigen::MatrixXd pairwise_gaussian_kl(const Eigen::MatrixXd& mean_a, const Eigen::MatrixXd& log_var_a,
                                     const Eigen::MatrixXd& mean_b, const Eigen::MatrixXd& log_var_b);

// Gradients of gaussian_kl with respect to all four argument rows.
struct GaussianKlGrad {
  Eigen::VectorXd d_mean_a, d_log_var_a, d_mean_b, d_log_var_b;
};
GaussianKlGrad gaussian_kl_grad(const Eigen::VectorXd& mean_a, const Eigen::VectorXd& log_var_a,
                                const Eigen::VectorXd& mean_b, const Eigen::VectorXd& log_var_b);

}  // namespace topicnet
