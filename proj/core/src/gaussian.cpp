#include "topicnet/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace topicnet {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;

void check_dims(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const char* what) {
  if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}
}  // namespace

double log_el_kernel(const Eigen::VectorXd& mean_a, const Eigen::VectorXd& log_var_a,
                     const Eigen::VectorXd& mean_b, const Eigen::VectorXd& log_var_b) {
  check_dims(mean_a, mean_b, "log_el_kernel");
  check_dims(log_var_a, log_var_b, "log_el_kernel");
  const Eigen::ArrayXd s = log_var_a.array().exp() + log_var_b.array().exp();
  const Eigen::ArrayXd diff = (mean_a - mean_b).array();
  return (-0.5 * (kLog2Pi + s.log()) - diff.square() / (2.0 * s)).sum();
}

double log_el_kernel(const GaussianEmbedding& a, const GaussianEmbedding& b) {
  return log_el_kernel(a.mean, a.log_var, b.mean, b.log_var);
}

double gaussian_kl(const Eigen::VectorXd& mean_a, const Eigen::VectorXd& log_var_a,
                   const Eigen::VectorXd& mean_b, const Eigen::VectorXd& log_var_b) {
  check_dims(mean_a, mean_b, "gaussian_kl");
  const Eigen::ArrayXd ratio = (log_var_a - log_var_b).array().exp();
  const Eigen::ArrayXd diff = (mean_a - mean_b).array();
  const Eigen::ArrayXd inv_vb = (-log_var_b.array()).exp();
  return 0.5 * (ratio + diff.square() * inv_vb - 1.0 + (log_var_b - log_var_a).array()).sum();
}

double gaussian_kl(const GaussianEmbedding& a, const GaussianEmbedding& b) {
  return gaussian_kl(a.mean, a.log_var, b.mean, b.log_var);
}

double thresholded_divergence_kl(double kl, double gamma_threshold) {
  return std::max(0.0, kl - gamma_threshold);
}

double thresholded_divergence(const GaussianEmbedding& a, const GaussianEmbedding& b,
                              double gamma_threshold) {
  return thresholded_divergence_kl(gaussian_kl(a, b), gamma_threshold);
}

double order_penalty_oracle(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  check_dims(x, y, "order_penalty_oracle");
  return (y - x).array().max(0.0).square().sum();
}

Eigen::MatrixXd pairwise_gaussian_kl(const Eigen::MatrixXd& mean_a, const Eigen::MatrixXd& log_var_a,
                                     const Eigen::MatrixXd& mean_b, const Eigen::MatrixXd& log_var_b) {
  const Eigen::Index ka = mean_a.rows(), kb = mean_b.rows();
  Eigen::MatrixXd out(ka, kb);
  for (Eigen::Index i = 0; i < ka; ++i)
    for (Eigen::Index j = 0; j < kb; ++j)
      out(i, j) = gaussian_kl(mean_a.row(i), log_var_a.row(i), mean_b.row(j), log_var_b.row(j));
  return out;
}

GaussianKlGrad gaussian_kl_grad(const Eigen::VectorXd& mean_a, const Eigen::VectorXd& log_var_a,
                                const Eigen::VectorXd& mean_b, const Eigen::VectorXd& log_var_b) {
  const Eigen::ArrayXd inv_vb = (-log_var_b.array()).exp();
  const Eigen::ArrayXd ratio = (log_var_a - log_var_b).array().exp();
  const Eigen::ArrayXd diff = (mean_a - mean_b).array();
  GaussianKlGrad g;
  g.d_mean_a = (diff * inv_vb).matrix();
  g.d_mean_b = -g.d_mean_a;
  g.d_log_var_a = (0.5 * (ratio - 1.0)).matrix();
  g.d_log_var_b = (0.5 * (1.0 - ratio - diff.square() * inv_vb)).matrix();
  return g;
}

}  // namespace topicnet
