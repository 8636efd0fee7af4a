#include "topicnet/model.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "topicnet/gaussian.hpp"

namespace topicnet {

namespace {

Eigen::MatrixXd to_matrix(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw std::runtime_error("checkpoint: ragged tensor");
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

nlohmann::json from_matrix(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> rows(m.rows());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    rows[r].resize(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) rows[r][c] = m(r, c);
  }
  return rows;
}

void check_finite(const Eigen::MatrixXd& m, const std::string& where) {
  if (!m.allFinite()) throw std::runtime_error("nonfinite activation in " + where);
}

}  // namespace

std::vector<ParamTensor*> ModelParams::trainables() {
  std::vector<ParamTensor*> out;
  auto push = [&](ParamTensor& t) {
    if (!t.empty()) out.push_back(&t);
  };
  for (auto& t : mean) push(t);
  for (auto& t : log_var) push(t);
  for (auto& t : w1) push(t);
  for (auto& t : b1) push(t);
  for (auto& t : skip_proj) push(t);
  for (auto& t : w2) push(t);
  for (auto& t : b2) push(t);
  for (auto& t : w3) push(t);
  for (auto& t : b3) push(t);
  push(log_gamma_shape);
  return out;
}

std::vector<const ParamTensor*> ModelParams::trainables() const {
  auto mut = const_cast<ModelParams*>(this)->trainables();
  return {mut.begin(), mut.end()};
}

void ModelParams::validate() const {
  const int T = depth();
  if (T < 1) throw std::runtime_error("ModelParams: need at least one latent layer");
  for (int t = 0; t <= T; ++t) {
    if (layer_sizes[t] < 1) throw std::runtime_error("ModelParams: layer size must be >= 1");
    if (mean[t].value.rows() != layer_sizes[t] || mean[t].value.cols() != embed_dim)
      throw std::runtime_error("ModelParams: embedding shape mismatch at layer " +
                               std::to_string(t));
  }
  if (log_gamma_shape.value.rows() != layer_sizes[T])
    throw std::runtime_error("ModelParams: gamma shape size mismatch");
}

ModelParams init_params(const std::vector<int>& layer_sizes, const std::vector<int>& hidden_sizes,
                        int embed_dim, std::uint64_t seed) {
  if (layer_sizes.size() < 2) throw std::runtime_error("init_params: need K_0..K_T");
  const int T = static_cast<int>(layer_sizes.size()) - 1;
  if (static_cast<int>(hidden_sizes.size()) != T + 1)
    throw std::runtime_error("init_params: hidden_sizes must have T+1 entries");

  ModelParams p;
  p.layer_sizes = layer_sizes;
  p.hidden_sizes = hidden_sizes;
  p.embed_dim = embed_dim;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> embed_init(0.0, 0.02);
  auto uniform_fan_in = [&](Eigen::Index rows, Eigen::Index cols) {
    const double a = std::sqrt(1.0 / static_cast<double>(cols));
    std::uniform_real_distribution<double> u(-a, a);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = u(rng);
    return m;
  };

  p.mean.resize(T + 1);
  p.log_var.resize(T + 1);
  for (int t = 0; t <= T; ++t) {
    Eigen::MatrixXd m(layer_sizes[t], embed_dim);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = embed_init(rng);
    p.mean[t] = {"mean." + std::to_string(t), m};
    p.log_var[t] = {"log_var." + std::to_string(t),
                    Eigen::MatrixXd::Constant(layer_sizes[t], embed_dim, std::log(0.05))};
  }

  p.w1.resize(T + 1);
  p.b1.resize(T + 1);
  p.skip_proj.resize(T + 1);
  for (int t = 0; t <= T; ++t) {
    const int in = t == 0 ? layer_sizes[0] : hidden_sizes[t - 1];
    p.w1[t] = {"w1." + std::to_string(t), uniform_fan_in(hidden_sizes[t], in)};
    // slightly positive bias keeps ReLU units active at init; an all-dead
    // hidden layer parks every later pre-activation exactly on the kink
    p.b1[t] = {"b1." + std::to_string(t),
               Eigen::VectorXd::Constant(hidden_sizes[t], 0.1)};
    if (t >= 1 && hidden_sizes[t] != hidden_sizes[t - 1])
      p.skip_proj[t] = {"skip_proj." + std::to_string(t),
                        uniform_fan_in(hidden_sizes[t], hidden_sizes[t - 1])};
  }

  p.w2.resize(T + 1);
  p.b2.resize(T + 1);
  p.w3.resize(T + 1);
  p.b3.resize(T + 1);
  for (int t = 1; t <= T; ++t) {
    const int in = t == T ? hidden_sizes[T] : hidden_sizes[t] + layer_sizes[t];
    p.w2[t] = {"w2." + std::to_string(t), uniform_fan_in(layer_sizes[t], in)};
    p.b2[t] = {"b2." + std::to_string(t), Eigen::VectorXd::Zero(layer_sizes[t])};
    p.w3[t] = {"w3." + std::to_string(t), uniform_fan_in(layer_sizes[t], in)};
    p.b3[t] = {"b3." + std::to_string(t), Eigen::VectorXd::Zero(layer_sizes[t])};
  }

  p.log_gamma_shape = {"log_gamma_shape",
                       Eigen::VectorXd::Constant(layer_sizes[T], std::log(0.1))};
  p.validate();
  return p;
}

Eigen::MatrixXd compute_phi(const ModelParams& params, int layer) {
  const int T = params.depth();
  if (layer < 1 || layer > T) throw std::runtime_error("compute_phi: layer out of range");
  const auto& lo_mean = params.mean[layer - 1].value;
  const auto& lo_lv = params.log_var[layer - 1].value;
  const auto& hi_mean = params.mean[layer].value;
  const auto& hi_lv = params.log_var[layer].value;
  Eigen::MatrixXd phi(lo_mean.rows(), hi_mean.rows());
  for (Eigen::Index k = 0; k < hi_mean.rows(); ++k) {
    Eigen::ArrayXd logits(lo_mean.rows());
    for (Eigen::Index i = 0; i < lo_mean.rows(); ++i)
      logits(i) = log_el_kernel(lo_mean.row(i), lo_lv.row(i), hi_mean.row(k), hi_lv.row(k));
    logits -= logits.maxCoeff();
    Eigen::ArrayXd e = logits.exp();
    phi.col(k) = (e / e.sum()).matrix();
  }
  return phi;
}

Eigen::VectorXd decode(const ModelParams& params, const Eigen::VectorXd& theta_1) {
  if ((theta_1.array() < 0.0).any()) throw std::runtime_error("decode: negative theta");
  return compute_phi(params, 1) * theta_1;
}

Eigen::VectorXd prior_shape(const ModelParams& params, int layer,
                            const Eigen::VectorXd* theta_next) {
  const int T = params.depth();
  if (layer == T) {
    if (theta_next) throw std::runtime_error("prior_shape: top layer takes no theta_next");
    return params.gamma_shape();
  }
  if (!theta_next) throw std::runtime_error("prior_shape: theta_next required below top layer");
  Eigen::VectorXd shape = compute_phi(params, layer + 1) * (*theta_next);
  return shape.cwiseMax(params.shape_floor);
}

Eigen::VectorXd sample_weibull(const Eigen::VectorXd& k, const Eigen::VectorXd& lambda,
                               const Eigen::VectorXd& u) {
  if ((u.array() <= 0.0).any() || (u.array() >= 1.0).any())
    throw std::runtime_error("sample_weibull: u must lie in (0,1)");
  return (lambda.array() * (-(1.0 - u.array()).log()).pow(1.0 / k.array())).matrix();
}

TapeParams lift_params(ad::Tape& tape, const ModelParams& params, bool requires_grad) {
  TapeParams tp;
  auto lift = [&](const ParamTensor& t) {
    return t.empty() ? ad::Var{} : tape.leaf(t.value, requires_grad);
  };
  for (const auto& t : params.mean) tp.mean.push_back(lift(t));
  for (const auto& t : params.log_var) tp.log_var.push_back(lift(t));
  for (const auto& t : params.w1) tp.w1.push_back(lift(t));
  for (const auto& t : params.b1) tp.b1.push_back(lift(t));
  for (const auto& t : params.skip_proj) tp.skip_proj.push_back(lift(t));
  for (const auto& t : params.w2) tp.w2.push_back(lift(t));
  for (const auto& t : params.b2) tp.b2.push_back(lift(t));
  for (const auto& t : params.w3) tp.w3.push_back(lift(t));
  for (const auto& t : params.b3) tp.b3.push_back(lift(t));
  tp.log_gamma_shape = lift(params.log_gamma_shape);
  return tp;
}

std::vector<ad::Var> compute_phi_vars(ad::Tape& tape, const ModelParams& params,
                                      const TapeParams& tp) {
  const int T = params.depth();
  std::vector<ad::Var> phi(T + 1);
  for (int t = 1; t <= T; ++t) {
    ad::Var logits = tape.log_kernel_matrix(tp.mean[t - 1], tp.log_var[t - 1], tp.mean[t],
                                            tp.log_var[t]);
    phi[t] = tape.softmax_columns(logits);
  }
  return phi;
}

DocForward forward_document(ad::Tape& tape, const ModelParams& params, const TapeParams& tp,
                            const std::vector<ad::Var>& phi, const Document& doc, bool sample,
                            std::mt19937_64& rng) {
  const int T = params.depth();
  DocForward out;
  out.weibull_k.resize(T + 1);
  out.weibull_lambda.resize(T + 1);
  out.theta.resize(T + 1);
  out.prior_shape.resize(T + 1);
  out.hidden_up.resize(T + 1);

  // upward deterministic pass with skip connections
  {
    ad::Var pre = tape.add(tape.matvec_sparse(tp.w1[0], doc), tp.b1[0]);
    out.hidden_up[0] = tape.relu(pre);
    check_finite(out.hidden_up[0]->value, "upward layer 0");
  }
  for (int t = 1; t <= T; ++t) {
    ad::Var pre = tape.add(tape.matvec(tp.w1[t], out.hidden_up[t - 1]), tp.b1[t]);
    ad::Var identity = tp.skip_proj[t] ? tape.matvec(tp.skip_proj[t], out.hidden_up[t - 1])
                                       : out.hidden_up[t - 1];
    out.hidden_up[t] = tape.add(identity, tape.relu(pre));
    check_finite(out.hidden_up[t]->value, "upward layer " + std::to_string(t));
  }

  // downward stochastic pass, top to bottom
  std::uniform_real_distribution<double> unif(std::numeric_limits<double>::min(), 1.0);
  for (int t = T; t >= 1; --t) {
    ad::Var h;
    if (t == T) {
      h = out.hidden_up[T];
      out.prior_shape[T] = tape.exp(tp.log_gamma_shape);
    } else {
      ad::Var coupled = tape.matvec(phi[t + 1], out.theta[t + 1]);
      out.prior_shape[t] = tape.clamp_min(coupled, params.shape_floor);
      h = tape.concat_rows(out.hidden_up[t], coupled);
    }
    // floor the heads: a raw softplus can reach ~1e-30 early in training,
    // where theta = lambda * w^(1/k) and the Weibull mean tgamma(1 + 1/k)
    // overflow long before the shape floor used inside the analytic KL binds
    out.weibull_k[t] =
        tape.clamp_min(tape.softplus(tape.add(tape.matvec(tp.w2[t], h), tp.b2[t])), 0.1);
    out.weibull_lambda[t] =
        tape.clamp_min(tape.softplus(tape.add(tape.matvec(tp.w3[t], h), tp.b3[t])), 1e-6);
    if (sample) {
      Eigen::VectorXd w(params.layer_sizes[t]);
      for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = -std::log1p(-unif(rng));
      out.theta[t] = tape.weibull_sample(out.weibull_k[t], out.weibull_lambda[t], w);
    } else {
      out.theta[t] = tape.weibull_mean(out.weibull_k[t], out.weibull_lambda[t]);
    }
    check_finite(out.theta[t]->value, "theta layer " + std::to_string(t));
  }

  out.rate = tape.matvec(phi[1], out.theta[1]);
  return out;
}

LatentState encode(const ModelParams& params, const Document& doc, bool sample,
                   std::mt19937_64& rng) {
  ad::Tape tape;
  TapeParams tp = lift_params(tape, params, /*requires_grad=*/false);
  std::vector<ad::Var> phi = compute_phi_vars(tape, params, tp);
  DocForward fwd = forward_document(tape, params, tp, phi, doc, sample, rng);

  const int T = params.depth();
  LatentState state;
  state.weibull_k.resize(T + 1);
  state.weibull_lambda.resize(T + 1);
  state.theta.resize(T + 1);
  state.hidden_up.resize(T + 1);
  for (int t = 0; t <= T; ++t) state.hidden_up[t] = fwd.hidden_up[t]->value.col(0);
  for (int t = 1; t <= T; ++t) {
    state.weibull_k[t] = fwd.weibull_k[t]->value.col(0);
    state.weibull_lambda[t] = fwd.weibull_lambda[t]->value.col(0);
    state.theta[t] = fwd.theta[t]->value.col(0);
  }
  return state;
}

void save_checkpoint(const ModelParams& params, const std::string& path,
                     const std::string& config_hash, std::uint64_t seed, long step) {
  nlohmann::ordered_json j;
  j["format"] = "topicnet-checkpoint-v1";
  j["layer_sizes"] = params.layer_sizes;
  j["hidden_sizes"] = params.hidden_sizes;
  j["embed_dim"] = params.embed_dim;
  j["scale_c"] = params.scale_c;
  j["shape_floor"] = params.shape_floor;
  j["rate_floor"] = params.rate_floor;
  j["k_floor"] = params.k_floor;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  j["step"] = step;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::object();
  for (const ParamTensor* t : params.trainables()) tensors[t->name] = from_matrix(t->value);
  j["tensors"] = std::move(tensors);
  // optimizer moments travel with the weights so a resumed run replays the
  // exact update sequence of an uninterrupted one
  nlohmann::ordered_json m1 = nlohmann::ordered_json::object();
  nlohmann::ordered_json m2 = nlohmann::ordered_json::object();
  for (const ParamTensor* t : params.trainables()) {
    if (t->adam_m.size() > 0) m1[t->name] = from_matrix(t->adam_m);
    if (t->adam_v.size() > 0) m2[t->name] = from_matrix(t->adam_v);
  }
  j["adam_m"] = std::move(m1);
  j["adam_v"] = std::move(m2);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump();
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  nlohmann::json j;
  in >> j;
  if (j.value("format", "") != "topicnet-checkpoint-v1")
    throw std::runtime_error("unrecognized checkpoint format");

  Checkpoint ckpt;
  ckpt.config_hash = j.value("config_hash", "");
  ckpt.seed = j.value("seed", std::uint64_t{0});
  ckpt.step = j.value("step", 0L);

  // rebuild shapes via init, then overwrite every tensor
  ckpt.params = init_params(j.at("layer_sizes").get<std::vector<int>>(),
                            j.at("hidden_sizes").get<std::vector<int>>(),
                            j.at("embed_dim").get<int>(), /*seed=*/0);
  ckpt.params.scale_c = j.value("scale_c", 1.0);
  ckpt.params.shape_floor = j.value("shape_floor", 1e-3);
  ckpt.params.rate_floor = j.value("rate_floor", 1e-10);
  ckpt.params.k_floor = j.value("k_floor", 1e-3);
  const auto& tensors = j.at("tensors");
  for (ParamTensor* t : ckpt.params.trainables()) {
    Eigen::MatrixXd m = to_matrix(tensors.at(t->name));
    if (m.rows() != t->value.rows() || m.cols() != t->value.cols())
      throw std::runtime_error("checkpoint: shape mismatch for tensor " + t->name);
    t->value = std::move(m);
    if (j.contains("adam_m") && j.at("adam_m").contains(t->name))
      t->adam_m = to_matrix(j.at("adam_m").at(t->name));
    if (j.contains("adam_v") && j.at("adam_v").contains(t->name))
      t->adam_v = to_matrix(j.at("adam_v").at(t->name));
  }
  return ckpt;
}

}  // namespace topicnet
