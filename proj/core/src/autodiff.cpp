#include "topicnet/autodiff.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <cmath>
#include <stdexcept>

#include "topicnet/gaussian.hpp"

namespace topicnet::ad {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kEulerGamma = 0.57721566490153286061;

double digamma(double x) { return boost::math::digamma(x); }
}  // namespace

Var Tape::make(Eigen::MatrixXd value, bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  node->ensure_grad();
  return node;
}

Var Tape::leaf(const Eigen::MatrixXd& value, bool requires_grad) {
  return make(value, requires_grad);
}

Var Tape::constant(double value) {
  return make(Eigen::MatrixXd::Constant(1, 1, value), false);
}

Var Tape::add(const Var& a, const Var& b) {
  if (a->value.rows() != b->value.rows() || a->value.cols() != b->value.cols())
    throw std::invalid_argument("add: shape mismatch");
  Var out = make(a->value + b->value, a->requires_grad || b->requires_grad);
  record([a, b, out] {
    if (a->requires_grad) a->grad += out->grad;
    if (b->requires_grad) b->grad += out->grad;
  });
  return out;
}

Var Tape::add(const std::vector<Var>& terms) {
  if (terms.empty()) throw std::invalid_argument("add: empty term list");
  Var acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = add(acc, terms[i]);
  return acc;
}

Var Tape::scale(const Var& a, double factor) {
  Var out = make(a->value * factor, a->requires_grad);
  record([a, out, factor] {
    if (a->requires_grad) a->grad += factor * out->grad;
  });
  return out;
}

Var Tape::sum(const Var& a) {
  Var out = make(Eigen::MatrixXd::Constant(1, 1, a->value.sum()), a->requires_grad);
  record([a, out] {
    if (a->requires_grad) a->grad.array() += out->grad(0, 0);
  });
  return out;
}

Var Tape::matvec(const Var& w, const Var& x) {
  if (w->value.cols() != x->value.rows() || x->value.cols() != 1)
    throw std::invalid_argument("matvec: shape mismatch");
  Var out = make(w->value * x->value, w->requires_grad || x->requires_grad);
  record([w, x, out] {
    if (w->requires_grad) w->grad += out->grad * x->value.transpose();
    if (x->requires_grad) x->grad += w->value.transpose() * out->grad;
  });
  return out;
}

Var Tape::matvec_sparse(const Var& w, const std::vector<std::pair<int, double>>& x) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(w->value.rows());
  for (const auto& [id, count] : x) v += count * w->value.col(id);
  Var out = make(v, w->requires_grad);
  record([w, x, out] {
    if (!w->requires_grad) return;
    for (const auto& [id, count] : x) w->grad.col(id) += count * out->grad.col(0);
  });
  return out;
}

Var Tape::relu(const Var& a) {
  Var out = make(a->value.cwiseMax(0.0), a->requires_grad);
  record([a, out] {
    if (a->requires_grad)
      a->grad.array() += (a->value.array() > 0.0).cast<double>() * out->grad.array();
  });
  return out;
}

Var Tape::softplus(const Var& a) {
  // log(1 + e^x), stable for large |x|
  Eigen::MatrixXd v = a->value.unaryExpr(
      [](double x) { return x > 30.0 ? x : std::log1p(std::exp(x)); });
  Var out = make(std::move(v), a->requires_grad);
  record([a, out] {
    if (a->requires_grad)
      a->grad.array() +=
          a->value.array().unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); }) *
          out->grad.array();
  });
  return out;
}

Var Tape::exp(const Var& a) {
  Var out = make(a->value.array().exp().matrix(), a->requires_grad);
  record([a, out] {
    if (a->requires_grad) a->grad.array() += out->value.array() * out->grad.array();
  });
  return out;
}

Var Tape::clamp_min(const Var& a, double floor) {
  Var out = make(a->value.cwiseMax(floor), a->requires_grad);
  record([a, out, floor] {
    if (a->requires_grad)
      a->grad.array() += (a->value.array() > floor).cast<double>() * out->grad.array();
  });
  return out;
}

Var Tape::concat_rows(const Var& a, const Var& b) {
  if (a->value.cols() != 1 || b->value.cols() != 1)
    throw std::invalid_argument("concat_rows: column vectors expected");
  Eigen::VectorXd v(a->value.rows() + b->value.rows());
  v << a->value.col(0), b->value.col(0);
  Var out = make(v, a->requires_grad || b->requires_grad);
  const Eigen::Index na = a->value.rows();
  record([a, b, out, na] {
    if (a->requires_grad) a->grad += out->grad.topRows(na);
    if (b->requires_grad) b->grad += out->grad.bottomRows(out->grad.rows() - na);
  });
  return out;
}

Var Tape::log_kernel_matrix(const Var& mean_a, const Var& log_var_a,
                            const Var& mean_b, const Var& log_var_b) {
  const Eigen::Index ka = mean_a->value.rows(), kb = mean_b->value.rows();
  const Eigen::Index n = mean_a->value.cols();
  if (mean_b->value.cols() != n) throw std::invalid_argument("log_kernel_matrix: dim mismatch");
  Eigen::MatrixXd va = mean_a->value, vb = mean_b->value;  // aliases for clarity
  Eigen::MatrixXd ea = log_var_a->value.array().exp();
  Eigen::MatrixXd eb = log_var_b->value.array().exp();
  Eigen::MatrixXd out_v(ka, kb);
  for (Eigen::Index i = 0; i < ka; ++i) {
    for (Eigen::Index j = 0; j < kb; ++j) {
      const Eigen::ArrayXd s = ea.row(i).transpose().array() + eb.row(j).transpose().array();
      const Eigen::ArrayXd diff = (va.row(i) - vb.row(j)).transpose().array();
      out_v(i, j) = (-0.5 * (kLog2Pi + s.log()) - diff.square() / (2.0 * s)).sum();
    }
  }
  bool rg = mean_a->requires_grad || log_var_a->requires_grad || mean_b->requires_grad ||
            log_var_b->requires_grad;
  Var out = make(std::move(out_v), rg);
  record([mean_a, log_var_a, mean_b, log_var_b, out, ea, eb] {
    if (!out->requires_grad) return;
    const Eigen::Index ka = mean_a->value.rows(), kb = mean_b->value.rows();
    for (Eigen::Index i = 0; i < ka; ++i) {
      for (Eigen::Index j = 0; j < kb; ++j) {
        const double g = out->grad(i, j);
        if (g == 0.0) continue;
        const Eigen::ArrayXd sa = ea.row(i).transpose().array();
        const Eigen::ArrayXd sb = eb.row(j).transpose().array();
        const Eigen::ArrayXd s = sa + sb;
        const Eigen::ArrayXd diff =
            (mean_a->value.row(i) - mean_b->value.row(j)).transpose().array();
        const Eigen::ArrayXd d_mu = -diff / s;  // d/d mean_a
        const Eigen::ArrayXd d_s = -0.5 / s + diff.square() / (2.0 * s.square());
        if (mean_a->requires_grad) mean_a->grad.row(i) += (g * d_mu).matrix().transpose();
        if (mean_b->requires_grad) mean_b->grad.row(j) -= (g * d_mu).matrix().transpose();
        if (log_var_a->requires_grad)
          log_var_a->grad.row(i) += (g * d_s * sa).matrix().transpose();
        if (log_var_b->requires_grad)
          log_var_b->grad.row(j) += (g * d_s * sb).matrix().transpose();
      }
    }
  });
  return out;
}

Var Tape::softmax_columns(const Var& a) {
  Eigen::MatrixXd y(a->value.rows(), a->value.cols());
  for (Eigen::Index j = 0; j < a->value.cols(); ++j) {
    Eigen::ArrayXd col = a->value.col(j).array();
    col -= col.maxCoeff();
    Eigen::ArrayXd e = col.exp();
    y.col(j) = (e / e.sum()).matrix();
  }
  Var out = make(std::move(y), a->requires_grad);
  record([a, out] {
    if (!a->requires_grad) return;
    for (Eigen::Index j = 0; j < a->value.cols(); ++j) {
      const Eigen::ArrayXd yj = out->value.col(j).array();
      const Eigen::ArrayXd gj = out->grad.col(j).array();
      const double dot = (yj * gj).sum();
      a->grad.col(j).array() += yj * (gj - dot);
    }
  });
  return out;
}

Var Tape::weibull_sample(const Var& k, const Var& lambda, const Eigen::VectorXd& w) {
  const Eigen::ArrayXd ka = k->value.col(0).array();
  const Eigen::ArrayXd la = lambda->value.col(0).array();
  const Eigen::ArrayXd wa = w.array();
  Eigen::VectorXd theta = (la * wa.pow(1.0 / ka)).matrix();
  Var out = make(theta, k->requires_grad || lambda->requires_grad);
  record([k, lambda, out, w] {
    const Eigen::ArrayXd ka = k->value.col(0).array();
    const Eigen::ArrayXd th = out->value.col(0).array();
    const Eigen::ArrayXd g = out->grad.col(0).array();
    if (lambda->requires_grad)
      lambda->grad.col(0).array() += g * th / lambda->value.col(0).array();
    if (k->requires_grad)
      k->grad.col(0).array() += g * th * w.array().log() * (-1.0 / ka.square());
  });
  return out;
}

Var Tape::weibull_mean(const Var& k, const Var& lambda) {
  const Eigen::ArrayXd ka = k->value.col(0).array();
  Eigen::ArrayXd gam = (1.0 + 1.0 / ka).unaryExpr([](double z) { return std::tgamma(z); });
  Eigen::VectorXd theta = (lambda->value.col(0).array() * gam).matrix();
  Var out = make(theta, k->requires_grad || lambda->requires_grad);
  record([k, lambda, out, gam] {
    const Eigen::ArrayXd ka = k->value.col(0).array();
    const Eigen::ArrayXd g = out->grad.col(0).array();
    if (lambda->requires_grad) lambda->grad.col(0).array() += g * gam;
    if (k->requires_grad) {
      Eigen::ArrayXd psi = (1.0 + 1.0 / ka).unaryExpr([](double z) { return digamma(z); });
      k->grad.col(0).array() +=
          g * lambda->value.col(0).array() * gam * psi * (-1.0 / ka.square());
    }
  });
  return out;
}

Var Tape::poisson_nll(const std::vector<std::pair<int, double>>& counts, const Var& rate,
                      double rate_floor) {
  double nll = rate->value.sum();
  for (const auto& [id, c] : counts) {
    nll += -c * std::log(rate->value(id, 0) + rate_floor) + std::lgamma(c + 1.0);
  }
  Var out = make(Eigen::MatrixXd::Constant(1, 1, nll), rate->requires_grad);
  record([counts, rate, out, rate_floor] {
    if (!rate->requires_grad) return;
    const double g = out->grad(0, 0);
    rate->grad.array() += g;
    for (const auto& [id, c] : counts)
      rate->grad(id, 0) -= g * c / (rate->value(id, 0) + rate_floor);
  });
  return out;
}

Var Tape::kl_weibull_gamma_sum(const Var& k, const Var& lambda, const Var& shape,
                               double rate_c, double k_min) {
  const Eigen::Index m = k->value.rows();
  const double log_c = std::log(rate_c);
  double total = 0.0;
  Eigen::ArrayXd keff(m), gam(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double ki = std::max(k->value(i, 0), k_min);
    const double li = lambda->value(i, 0);
    const double ai = shape->value(i, 0);
    const double gi = std::tgamma(1.0 + 1.0 / ki);
    keff(i) = ki;
    gam(i) = gi;
    total += kEulerGamma * ai / ki - ai * std::log(li) + std::log(ki) + rate_c * li * gi -
             kEulerGamma - 1.0 - ai * log_c + std::lgamma(ai);
  }
  bool rg = k->requires_grad || lambda->requires_grad || shape->requires_grad;
  Var out = make(Eigen::MatrixXd::Constant(1, 1, total), rg);
  record([k, lambda, shape, out, rate_c, log_c, k_min, keff, gam] {
    if (!out->requires_grad) return;
    const double g = out->grad(0, 0);
    for (Eigen::Index i = 0; i < k->value.rows(); ++i) {
      const double ki = keff(i);
      const double li = lambda->value(i, 0);
      const double ai = shape->value(i, 0);
      if (k->requires_grad && k->value(i, 0) > k_min) {
        const double psi = digamma(1.0 + 1.0 / ki);
        k->grad(i, 0) += g * (-kEulerGamma * ai / (ki * ki) + 1.0 / ki -
                              rate_c * li * gam(i) * psi / (ki * ki));
      }
      if (lambda->requires_grad) lambda->grad(i, 0) += g * (-ai / li + rate_c * gam(i));
      if (shape->requires_grad)
        shape->grad(i, 0) += g * (kEulerGamma / ki - std::log(li) - log_c + digamma(ai));
    }
  });
  return out;
}

Var Tape::margin_prior_layer(const Var& mean_c, const Var& log_var_c,
                             const Var& mean_p, const Var& log_var_p,
                             const std::vector<std::vector<int>>& children,
                             double margin, double gamma_threshold, bool literal,
                             int* skipped_parents) {
  const Eigen::Index kc = mean_c->value.rows();
  const Eigen::Index kp = mean_p->value.rows();
  if (static_cast<Eigen::Index>(children.size()) != kp)
    throw std::invalid_argument("margin_prior_layer: children size mismatch");

  struct ActiveTerm {
    int parent;
    int pos_child;   // index attaining max over D, or -1 when its d is flat
    int neg_child;   // index attaining min over the complement, or -1
  };
  std::vector<ActiveTerm> active;
  double total = 0.0;
  int skipped = 0;

  std::vector<char> is_child(kc);
  for (Eigen::Index j = 0; j < kp; ++j) {
    const auto& d_set = children[j];
    if (d_set.empty() || static_cast<Eigen::Index>(d_set.size()) == kc) {
      ++skipped;
      continue;
    }
    std::fill(is_child.begin(), is_child.end(), 0);
    for (int i : d_set) is_child[i] = 1;

    double max_pos = -1.0, min_neg = -1.0;
    int arg_pos = -1, arg_neg = -1;
    for (Eigen::Index i = 0; i < kc; ++i) {
      const double kl = gaussian_kl(mean_c->value.row(i), log_var_c->value.row(i),
                                    mean_p->value.row(j), log_var_p->value.row(j));
      const double d = thresholded_divergence_kl(kl, gamma_threshold);
      if (is_child[i]) {
        if (arg_pos < 0 || d > max_pos) { max_pos = d; arg_pos = static_cast<int>(i); }
      } else {
        if (arg_neg < 0 || d < min_neg) { min_neg = d; arg_neg = static_cast<int>(i); }
      }
    }
    const double sign = literal ? -1.0 : 1.0;
    const double hinge = margin + sign * (max_pos - min_neg);
    if (hinge > 0.0) {
      total += hinge;
      // grad flows through d only where the KL sits above the threshold
      ActiveTerm term{static_cast<int>(j), -1, -1};
      if (max_pos > 0.0) term.pos_child = arg_pos;
      if (min_neg > 0.0) term.neg_child = arg_neg;
      if (term.pos_child >= 0 || term.neg_child >= 0) active.push_back(term);
    }
  }
  if (skipped_parents) *skipped_parents = skipped;

  bool rg = mean_c->requires_grad || log_var_c->requires_grad || mean_p->requires_grad ||
            log_var_p->requires_grad;
  Var out = make(Eigen::MatrixXd::Constant(1, 1, total), rg);
  record([mean_c, log_var_c, mean_p, log_var_p, out, literal, active = std::move(active)] {
    if (!out->requires_grad) return;
    const double g = out->grad(0, 0);
    if (g == 0.0) return;
    const double hinge_sign = literal ? -1.0 : 1.0;
    auto accumulate = [&](int i, int j, double sign) {
      GaussianKlGrad kg =
          gaussian_kl_grad(mean_c->value.row(i), log_var_c->value.row(i),
                           mean_p->value.row(j), log_var_p->value.row(j));
      if (mean_c->requires_grad) mean_c->grad.row(i) += sign * g * kg.d_mean_a.transpose();
      if (log_var_c->requires_grad)
        log_var_c->grad.row(i) += sign * g * kg.d_log_var_a.transpose();
      if (mean_p->requires_grad) mean_p->grad.row(j) += sign * g * kg.d_mean_b.transpose();
      if (log_var_p->requires_grad)
        log_var_p->grad.row(j) += sign * g * kg.d_log_var_b.transpose();
    };
    for (const auto& term : active) {
      if (term.pos_child >= 0) accumulate(term.pos_child, term.parent, hinge_sign);
      if (term.neg_child >= 0) accumulate(term.neg_child, term.parent, -hinge_sign);
    }
  });
  return out;
}

void Tape::backward(const Var& root) {
  if (root->value.size() != 1) throw std::invalid_argument("backward: scalar root expected");
  root->grad(0, 0) = 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) (*it)();
}

}  // namespace topicnet::ad
