#include "decom/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace decom {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::A: return "decom_a";
    case Variant::N: return "decom_n";
    case Variant::I: return "decom_i";
  }
  return "?";
}

std::string to_string(PolicyMode m) {
  return m == PolicyMode::Deterministic ? "deterministic" : "stochastic";
}

int BasePolicy::act_dim() const {
  return mode == PolicyMode::Deterministic ? net.output_dim() : net.output_dim() / 2;
}

std::vector<double> BasePolicy::mean_action(const std::vector<double>& obs) const {
  Tensor out = net.forward(Tensor::row(obs));
  const int d = act_dim();
  std::vector<double> mean(d);
  if (mode == PolicyMode::Deterministic) {
    for (int k = 0; k < d; ++k) mean[k] = box_half * out.data[k];
  } else {
    for (int k = 0; k < d; ++k) mean[k] = box_half * std::tanh(out.data[k]);
  }
  return mean;
}

std::vector<double> BasePolicy::log_std(const std::vector<double>& obs) const {
  if (mode == PolicyMode::Deterministic) {
    throw std::logic_error("BasePolicy::log_std: deterministic policy has no log_std");
  }
  Tensor out = net.forward(Tensor::row(obs));
  const int d = act_dim();
  std::vector<double> ls(d);
  for (int k = 0; k < d; ++k) ls[k] = clamp_log_std(out.data[d + k]);
  return ls;
}

DecomJointPolicy::DecomJointPolicy(const CcmgSpec& spec, PolicyMode mode, Variant variant,
                                   double lambda, const std::vector<int>& hidden,
                                   Activation hidden_act, Rng& init_rng)
    : n_agents_(spec.n_agents),
      act_dim_(spec.act_dim),
      obs_dim_(spec.obs_dim),
      action_low_(spec.action_low),
      action_high_(spec.action_high),
      box_half_(spec.action_half()),
      mode_(mode),
      variant_(variant),
      lambda_(lambda),
      neighbors_(spec.neighbors) {
  if (lambda_ < 0.0) throw std::invalid_argument("DecomJointPolicy: lambda must be >= 0");
  for (const auto& ns : neighbors_) max_degree_ = std::max(max_degree_, static_cast<int>(ns.size()));
  switch (variant_) {
    case Variant::A: perturb_in_dim_ = obs_dim_ + act_dim_ + max_degree_ * act_dim_; break;
    case Variant::N: perturb_in_dim_ = obs_dim_ + act_dim_; break;
    case Variant::I: perturb_in_dim_ = obs_dim_; break;
  }
  const int base_out = mode_ == PolicyMode::Deterministic ? act_dim_ : 2 * act_dim_;
  const Activation base_out_act =
      mode_ == PolicyMode::Deterministic ? Activation::Tanh : Activation::Identity;
  for (int i = 0; i < n_agents_; ++i) {
    BasePolicy bp;
    bp.net = Mlp::make(obs_dim_, hidden, base_out, hidden_act, base_out_act, init_rng);
    bp.mode = mode_;
    bp.box_half = box_half_;
    base_.push_back(std::move(bp));
    perturb_.push_back(
        Mlp::make(perturb_in_dim_, hidden, act_dim_, hidden_act, Activation::Tanh, init_rng));
  }
  for (int i = 0; i < n_agents_; ++i) {
    base_target_.push_back(base_[i].net);
    perturb_target_.push_back(perturb_[i]);
  }
}

void DecomJointPolicy::set_lambda(double l) {
  if (l < 0.0) throw std::invalid_argument("DecomJointPolicy: lambda must be >= 0");
  lambda_ = l;
}

BaseActResult DecomJointPolicy::base_act(int agent, const std::vector<double>& obs, bool explore,
                                         OuProcess* noise, Rng& rng) const {
  if (agent < 0 || agent >= n_agents_) throw std::out_of_range("base_act: bad agent id");
  if (static_cast<int>(obs.size()) != obs_dim_) {
    throw std::invalid_argument("base_act: observation dim mismatch");
  }
  BaseActResult out;
  const BasePolicy& bp = base_[agent];
  if (mode_ == PolicyMode::Deterministic) {
    out.action = bp.mean_action(obs);
    if (explore && noise != nullptr) {
      const auto& n = noise->sample();
      for (int k = 0; k < act_dim_; ++k) out.action[k] += n[k];
    }
  } else {
    const std::vector<double> mean = bp.mean_action(obs);
    const std::vector<double> ls = bp.log_std(obs);
    if (explore) {
      GaussianSample gs = gaussian_head_sample(mean, ls, rng);
      out.action = std::move(gs.value);
      out.log_density = gs.log_density;
    } else {
      out.action = mean;
      out.log_density = gaussian_log_density(mean, ls, mean);
    }
  }
  return out;
}

std::vector<double> DecomJointPolicy::perturb_input(
    int /*agent*/, const std::vector<double>& obs, const std::vector<double>& base_action,
    const std::vector<std::vector<double>>& neighbor_base) const {
  std::vector<double> in;
  in.reserve(perturb_in_dim_);
  in.insert(in.end(), obs.begin(), obs.end());
  if (variant_ != Variant::I) {
    in.insert(in.end(), base_action.begin(), base_action.end());
  }
  if (variant_ == Variant::A) {
    if (static_cast<int>(neighbor_base.size()) > max_degree_) {
      throw std::invalid_argument("compose: more neighbor actions than max degree");
    }
    for (const auto& nb : neighbor_base) in.insert(in.end(), nb.begin(), nb.end());
    const int pad = (max_degree_ - static_cast<int>(neighbor_base.size())) * act_dim_;
    in.insert(in.end(), pad, 0.0);
  }
  return in;
}

ComposeResult DecomJointPolicy::compose(int agent, const std::vector<double>& obs,
                                        const std::vector<double>& base_action,
                                        const std::vector<std::vector<double>>& neighbor_base,
                                        double lambda) const {
  if (agent < 0 || agent >= n_agents_) throw std::out_of_range("compose: bad agent id");
  ComposeResult out;
  out.preclamp = base_action;
  if (lambda != 0.0) {
    const std::vector<double> in = perturb_input(agent, obs, base_action, neighbor_base);
    Tensor g = perturb_[agent].forward(Tensor::row(in));
    for (int k = 0; k < act_dim_; ++k) out.preclamp[k] += lambda * box_half_ * g.data[k];
  }
  out.clamped.resize(act_dim_);
  for (int k = 0; k < act_dim_; ++k) {
    out.clamped[k] = std::clamp(out.preclamp[k], action_low_, action_high_);
  }
  return out;
}

DecomJointPolicy::JointActResult DecomJointPolicy::joint_act(
    const std::vector<std::vector<double>>& obs, bool explore,
    std::vector<OuProcess>* base_noise, std::vector<OuProcess>* perturb_noise, Rng& rng) const {
  if (static_cast<int>(obs.size()) != n_agents_) {
    throw std::invalid_argument("joint_act: expected one observation per agent");
  }
  JointActResult out;
  out.base.resize(n_agents_);
  out.preclamp.resize(n_agents_);
  out.action.resize(n_agents_);
  out.log_density.assign(n_agents_, 0.0);

  // Phase 1: base actions, then a single broadcast round.
  for (int i = 0; i < n_agents_; ++i) {
    OuProcess* noise =
        (base_noise != nullptr && i < static_cast<int>(base_noise->size())) ? &(*base_noise)[i]
                                                                            : nullptr;
    BaseActResult r = base_act(i, obs[i], explore, noise, rng);
    out.base[i] = std::move(r.action);
    if (r.log_density) out.log_density[i] = *r.log_density;
  }
  ++broadcast_count_;

  // Phase 2: perturbations on top of the shared base actions.
  for (int i = 0; i < n_agents_; ++i) {
    std::vector<std::vector<double>> nb;
    for (int j : neighbors_[i]) nb.push_back(out.base[j]);
    ComposeResult c = compose(i, obs[i], out.base[i], nb, lambda_);
    if (explore && mode_ == PolicyMode::Stochastic && perturb_noise != nullptr &&
        i < static_cast<int>(perturb_noise->size())) {
      const auto& n = (*perturb_noise)[i].sample();
      for (int k = 0; k < act_dim_; ++k) c.preclamp[k] += lambda_ * n[k];
      for (int k = 0; k < act_dim_; ++k) {
        c.clamped[k] = std::clamp(c.preclamp[k], action_low_, action_high_);
      }
    }
    out.preclamp[i] = std::move(c.preclamp);
    out.action[i] = std::move(c.clamped);
  }
  return out;
}

DecomJointPolicy::JointActResult DecomJointPolicy::joint_act_target(
    const std::vector<std::vector<double>>& obs, Rng& rng) const {
  if (static_cast<int>(obs.size()) != n_agents_) {
    throw std::invalid_argument("joint_act_target: expected one observation per agent");
  }
  JointActResult out;
  out.base.resize(n_agents_);
  out.preclamp.resize(n_agents_);
  out.action.resize(n_agents_);
  out.log_density.assign(n_agents_, 0.0);
  for (int i = 0; i < n_agents_; ++i) {
    Tensor raw = base_target_[i].forward(Tensor::row(obs[i]));
    std::vector<double> b(act_dim_);
    if (mode_ == PolicyMode::Deterministic) {
      for (int k = 0; k < act_dim_; ++k) b[k] = box_half_ * raw.data[k];
    } else {
      std::vector<double> mean(act_dim_), ls(act_dim_);
      for (int k = 0; k < act_dim_; ++k) {
        mean[k] = box_half_ * std::tanh(raw.data[k]);
        ls[k] = clamp_log_std(raw.data[act_dim_ + k]);
      }
      GaussianSample gs = gaussian_head_sample(mean, ls, rng);
      b = std::move(gs.value);
      out.log_density[i] = gs.log_density;
    }
    out.base[i] = std::move(b);
  }
  ++broadcast_count_;
  for (int i = 0; i < n_agents_; ++i) {
    std::vector<double> pre = out.base[i];
    if (lambda_ != 0.0) {
      std::vector<std::vector<double>> nb;
      for (int j : neighbors_[i]) nb.push_back(out.base[j]);
      const std::vector<double> in = perturb_input(i, obs[i], out.base[i], nb);
      Tensor g = perturb_target_[i].forward(Tensor::row(in));
      for (int k = 0; k < act_dim_; ++k) pre[k] += lambda_ * box_half_ * g.data[k];
    }
    out.action[i].resize(act_dim_);
    for (int k = 0; k < act_dim_; ++k) {
      out.action[i][k] = std::clamp(pre[k], action_low_, action_high_);
    }
    out.preclamp[i] = std::move(pre);
  }
  return out;
}

void DecomJointPolicy::soft_update_targets(double delta_base, double delta_perturb) {
  for (int i = 0; i < n_agents_; ++i) {
    soft_update(base_target_[i], base_[i].net, delta_base);
    soft_update(perturb_target_[i], perturb_[i], delta_perturb);
  }
}

DecomJointPolicy::TapeBindings DecomJointPolicy::bind(Tape& tape, bool base_grad,
                                                      bool perturb_grad) const {
  TapeBindings bd;
  for (int i = 0; i < n_agents_; ++i) bd.base.push_back(base_[i].net.bind(tape, base_grad));
  for (int i = 0; i < n_agents_; ++i) bd.perturb.push_back(perturb_[i].bind(tape, perturb_grad));
  return bd;
}

DecomJointPolicy::BaseHead DecomJointPolicy::base_forward_on_tape(Tape& tape,
                                                                  const TapeBindings& bd,
                                                                  int agent, Var obs) const {
  BaseHead head;
  Var raw = base_[agent].net.forward(tape, bd.base[agent], obs);
  if (mode_ == PolicyMode::Deterministic) {
    head.mean = tape.scale(raw, box_half_);  // net output already tanh-squashed
    head.log_std = -1;
  } else {
    Var mean_raw = tape.slice_cols(raw, 0, act_dim_);
    head.mean = tape.scale(tape.tanh_act(mean_raw), box_half_);
    head.log_std = tape.clamp(tape.slice_cols(raw, act_dim_, act_dim_), kLogStdMin, kLogStdMax);
  }
  return head;
}

Var DecomJointPolicy::perturb_forward_on_tape(Tape& tape, const TapeBindings& bd, int agent,
                                              Var obs, const std::vector<Var>& base_rows) const {
  std::vector<Var> parts{obs};
  if (variant_ != Variant::I) parts.push_back(base_rows[agent]);
  if (variant_ == Variant::A) {
    for (int j : neighbors_[agent]) parts.push_back(base_rows[j]);
    const int pad = (max_degree_ - static_cast<int>(neighbors_[agent].size())) * act_dim_;
    if (pad > 0) parts.push_back(tape.constant(Tensor(tape.value(obs).rows(), pad, 0.0)));
  }
  Var in = parts.size() == 1 ? parts[0] : tape.concat_cols(parts);
  Var g = perturb_[agent].forward(tape, bd.perturb[agent], in);
  return tape.scale(g, box_half_);
}

Var DecomJointPolicy::compose_on_tape(Tape& tape, Var base_rows, Var perturb_out) const {
  return tape.add(base_rows, tape.scale(perturb_out, lambda_));
}

Var DecomJointPolicy::log_density_on_tape(Tape& tape, const BaseHead& head,
                                          const Tensor& samples) const {
  if (head.log_std < 0) {
    throw std::logic_error("log_density_on_tape: deterministic head has no density");
  }
  constexpr double kLogTwoPi = 1.8378770664093454836;
  Var diff = tape.sub(tape.constant(samples), head.mean);
  Var inv_sd = tape.exp_act(tape.scale(head.log_std, -1.0));
  Var z = tape.mul(diff, inv_sd);
  Var term = tape.add(tape.scale(tape.square(z), -0.5), tape.scale(head.log_std, -1.0));
  term = tape.add_scalar(term, -0.5 * kLogTwoPi);
  return tape.row_sum(term);
}

namespace {

std::vector<Tensor> net_tensors(const Mlp& net) {
  std::vector<Tensor> out;
  for (const auto& l : net.layers) {
    out.push_back(l.w);
    out.push_back(l.b);
  }
  return out;
}

void load_net(Mlp& net, const std::vector<Tensor>& tensors, const std::string& name) {
  if (tensors.size() != 2 * net.layers.size()) {
    throw std::runtime_error("checkpoint: tensor count mismatch for '" + name + "'");
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (!net.layers[l].w.same_shape(tensors[2 * l]) ||
        !net.layers[l].b.same_shape(tensors[2 * l + 1])) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + name + "'");
    }
    net.layers[l].w = tensors[2 * l];
    net.layers[l].b = tensors[2 * l + 1];
  }
}

}  // namespace

void DecomJointPolicy::to_checkpoint(Checkpoint& ckpt) const {
  for (int i = 0; i < n_agents_; ++i) {
    ckpt.add("base_" + std::to_string(i), net_tensors(base_[i].net));
    ckpt.add("perturb_" + std::to_string(i), net_tensors(perturb_[i]));
    ckpt.add("base_" + std::to_string(i) + "_target", net_tensors(base_target_[i]));
    ckpt.add("perturb_" + std::to_string(i) + "_target", net_tensors(perturb_target_[i]));
  }
}

void DecomJointPolicy::from_checkpoint(const Checkpoint& ckpt) {
  for (int i = 0; i < n_agents_; ++i) {
    const std::string bi = "base_" + std::to_string(i);
    const std::string pi = "perturb_" + std::to_string(i);
    for (const std::string& name : {bi, pi, bi + "_target", pi + "_target"}) {
      if (!ckpt.has(name)) throw std::runtime_error("checkpoint: missing entry '" + name + "'");
    }
    load_net(base_[i].net, *ckpt.find(bi), bi);
    load_net(perturb_[i], *ckpt.find(pi), pi);
    load_net(base_target_[i], *ckpt.find(bi + "_target"), bi + "_target");
    load_net(perturb_target_[i], *ckpt.find(pi + "_target"), pi + "_target");
  }
}

std::vector<Tensor*> DecomJointPolicy::base_params() {
  std::vector<Tensor*> out;
  for (auto& bp : base_) {
    auto p = bp.net.params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<Tensor*> DecomJointPolicy::perturb_params() {
  std::vector<Tensor*> out;
  for (auto& net : perturb_) {
    auto p = net.params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

std::vector<const Tensor*> DecomJointPolicy::perturb_params() const {
  std::vector<const Tensor*> out;
  for (const auto& net : perturb_) {
    auto p = net.params();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

}  // namespace decom
