#include "factgym/grpo.hpp"

#include <algorithm>
#include <cmath>

#include "factgym/parallel.hpp"
#include "factgym/textmetrics.hpp"

namespace factgym::grpo {

namespace {

constexpr double kLogRatioClamp = 30.0;

// d KL / d logp_current.
double kl_grad(double logp_current, double logp_ref, KlEstimator estimator) {
  const double raw = logp_ref - logp_current;
  if (std::abs(raw) > kLogRatioClamp) return 0.0;
  switch (estimator) {
    case KlEstimator::K3: return -std::expm1(raw);
    case KlEstimator::K2: return -raw;
  }
  return 0.0;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct ItemWork {
  GroupRollout rollout;
  std::vector<double> grad;
  LossResult loss;
  std::size_t md_responses = 0;
  double md_reward = 0.0;
  double text_len = 0.0;
};

}  // namespace

void validate(const GrpoConfig& cfg) {
  if (cfg.group_size < 2) throw Error(Errc::GroupTooSmall, "group_size must be at least 2");
  if (!(cfg.clip_eps > 0.0 && cfg.clip_eps < 1.0)) throw Error(Errc::InvalidArgument, "clip_eps must be in (0,1)");
  if (!(cfg.kl_coeff >= 0.0)) throw Error(Errc::InvalidArgument, "kl_coeff must be non-negative");
  if (!(cfg.std_floor > 0.0)) throw Error(Errc::InvalidArgument, "std_floor must be positive");
  if (cfg.steps < 0) throw Error(Errc::InvalidArgument, "steps must be non-negative");
  if (cfg.batch_samples_per_step < 1) throw Error(Errc::InvalidArgument, "batch_samples_per_step must be positive");
  if (cfg.inner_epochs < 1) throw Error(Errc::InvalidArgument, "inner_epochs must be positive");
  if (!std::isfinite(cfg.learning_rate)) throw Error(Errc::InvalidArgument, "learning_rate must be finite");
}

std::vector<double> group_advantages(std::span<const double> rewards, double std_floor) {
  const std::size_t g = rewards.size();
  if (g < 2) throw Error(Errc::GroupTooSmall, "group needs at least two rewards");
  const double n = static_cast<double>(g);

  // Centered as G*r_i - sum(r): a constant shift of exactly representable
  // rewards cancels without rounding.
  double sum = 0.0;
  for (double r : rewards) sum += r;
  std::vector<double> centered(g);
  double sq = 0.0;
  for (std::size_t i = 0; i < g; ++i) {
    centered[i] = n * rewards[i] - sum;
    sq += centered[i] * centered[i];
  }
  const double pop_std = std::sqrt(sq) / (n * std::sqrt(n));
  std::vector<double> adv(g, 0.0);
  if (!(pop_std >= std_floor)) return adv;

  const double scale = std::sqrt(n) / std::sqrt(sq);
  double partial = 0.0;
  for (std::size_t i = 0; i + 1 < g; ++i) {
    adv[i] = centered[i] * scale;
    partial += adv[i];
  }
  // The last entry absorbs the rounding residue, so summing in index order
  // gives exactly zero.
  adv[g - 1] = -partial;
  return adv;
}

double kl_estimate(double logp_current, double logp_ref, KlEstimator estimator) {
  const double d = std::clamp(logp_ref - logp_current, -kLogRatioClamp, kLogRatioClamp);
  switch (estimator) {
    case KlEstimator::K3: return std::max(0.0, std::expm1(d) - d);
    case KlEstimator::K2: return 0.5 * d * d;
  }
  return 0.0;
}

LossResult grpo_loss(const GroupRollout& rollout, const GrpoConfig& cfg) {
  const auto& rs = rollout.responses;
  if (rs.size() != rollout.advantages.size()) throw Error(Errc::LengthMismatch, "advantages vs responses");
  if (rs.empty()) throw Error(Errc::GroupTooSmall, "empty rollout");
  LossResult out;
  double sum = 0.0;
  std::size_t clipped = 0;
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const double a = rollout.advantages[i];
    const double ratio = std::exp(rs[i].logp_current - rs[i].logp_old);
    const double unclipped = ratio * a;
    const double clipped_term = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a;
    if (clipped_term < unclipped) ++clipped;
    const double kl = kl_estimate(rs[i].logp_current, rs[i].logp_ref, cfg.kl_estimator);
    sum += std::min(unclipped, clipped_term) - cfg.kl_coeff * kl;
    out.diagnostics.mean_ratio += ratio;
    out.diagnostics.mean_kl += kl;
  }
  const double g = static_cast<double>(rs.size());
  out.loss = -sum / g;
  out.diagnostics.mean_ratio /= g;
  out.diagnostics.mean_kl /= g;
  out.diagnostics.clip_frac = static_cast<double>(clipped) / g;
  return out;
}

std::vector<double> grpo_loss_logp_grad(const GroupRollout& rollout, const GrpoConfig& cfg) {
  const auto& rs = rollout.responses;
  const double g = static_cast<double>(rs.size());
  std::vector<double> coeff(rs.size());
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const double a = rollout.advantages[i];
    const double ratio = std::exp(rs[i].logp_current - rs[i].logp_old);
    const double unclipped = ratio * a;
    const double clipped_term = std::clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * a;
    // The clipped branch is flat in logp_current whenever it is the strict min.
    const double surrogate_grad = unclipped <= clipped_term ? unclipped : 0.0;
    coeff[i] = -(surrogate_grad - cfg.kl_coeff * kl_grad(rs[i].logp_current, rs[i].logp_ref, cfg.kl_estimator)) / g;
  }
  return coeff;
}

StepReport grpo_step(policy::PolicyInterface& policy_current, const policy::PolicyInterface& policy_old,
                     const policy::PolicyInterface& policy_ref, std::span<const policy::SynthItem> batch,
                     const GrpoConfig& cfg, const rewards::ScoreDeps& deps, std::size_t step_index,
                     std::vector<GroupRollout>* rollouts_out) {
  validate(cfg);
  const auto n_params = policy_current.params().size();
  if (policy_old.params().size() != n_params || policy_ref.params().size() != n_params) {
    throw Error(Errc::DimensionMismatch, "policies must share parameter shape");
  }
  const auto group = static_cast<std::size_t>(cfg.group_size);
  std::vector<ItemWork> work(batch.size());

  parallel_for(batch.size(), cfg.threads, [&](std::size_t b) {
    const auto& item = batch[b];
    auto& w = work[b];
    w.rollout.sample_id = item.sample.id;
    Rng rng = Rng::for_key(cfg.seed, item.sample.id, step_index);
    for (std::size_t k = 0; k < group; ++k) {
      RolloutResponse r;
      r.action = policy_old.sample(item.features, rng);
      r.text = policy::render(item, r.action);
      r.logp_old = policy_old.log_prob(item.features, r.action);
      r.logp_ref = policy_ref.log_prob(item.features, r.action);
      const auto scored = rewards::score_text(r.text, item.sample, deps);
      w.rollout.rewards.push_back(scored.breakdown.total);
      w.text_len += static_cast<double>(text::decode_utf8(r.text).size());
      if (item.sample.task == TaskKind::MD) {
        ++w.md_responses;
        w.md_reward += scored.breakdown.total;
      }
      w.rollout.responses.push_back(std::move(r));
    }
    w.rollout.advantages = group_advantages(w.rollout.rewards, cfg.std_floor);
  });

  StepReport report;
  report.step = step_index;
  for (int epoch = 0; epoch < cfg.inner_epochs; ++epoch) {
    parallel_for(batch.size(), cfg.threads, [&](std::size_t b) {
      const auto& item = batch[b];
      auto& w = work[b];
      for (auto& r : w.rollout.responses) r.logp_current = policy_current.log_prob(item.features, r.action);
      w.loss = grpo_loss(w.rollout, cfg);
      const auto coeff = grpo_loss_logp_grad(w.rollout, cfg);
      w.grad.assign(n_params, 0.0);
      for (std::size_t k = 0; k < group; ++k) {
        policy_current.accumulate_grad_log_prob(item.features, w.rollout.responses[k].action, coeff[k], w.grad);
      }
    });

    std::vector<double> grad(n_params, 0.0);
    double loss = 0.0, clip = 0.0, kl = 0.0;
    for (const auto& w : work) {
      for (std::size_t p = 0; p < n_params; ++p) grad[p] += w.grad[p];
      loss += w.loss.loss;
      clip += w.loss.diagnostics.clip_frac;
      kl += w.loss.diagnostics.mean_kl;
    }
    if (epoch == 0 && !work.empty()) {
      const double nb = static_cast<double>(work.size());
      report.loss = loss / nb;
      report.clip_frac = clip / nb;
      report.mean_kl = kl / nb;
    }
    std::vector<double> params(policy_current.params().begin(), policy_current.params().end());
    for (std::size_t p = 0; p < n_params; ++p) params[p] -= cfg.learning_rate * grad[p];
    policy_current.set_params(params);
  }

  double reward = 0.0, md_reward = 0.0, len = 0.0;
  std::size_t md = 0;
  for (std::size_t b = 0; b < work.size(); ++b) {
    for (double r : work[b].rollout.rewards) reward += r;
    md_reward += work[b].md_reward;
    md += work[b].md_responses;
    len += work[b].text_len;
    switch (batch[b].sample.task) {
      case TaskKind::MD: ++report.n_md; break;
      case TaskKind::OCR: ++report.n_ocr; break;
      case TaskKind::CAP: ++report.n_cap; break;
    }
  }
  const double total_responses = static_cast<double>(work.size() * group);
  if (total_responses > 0) {
    report.mean_reward = reward / total_responses;
    report.mean_response_len = len / total_responses;
  }
  if (md > 0) report.mean_md_reward = md_reward / static_cast<double>(md);

  if (rollouts_out) {
    rollouts_out->clear();
    for (auto& w : work) rollouts_out->push_back(std::move(w.rollout));
  }
  return report;
}

TrainResult train_grpo(const GrpoConfig& cfg, const policy::SynthConfig& env_cfg, const rewards::ScoreDeps& deps,
                       std::optional<policy::ToyPolicy> init, const StepCallback& on_step) {
  validate(cfg);
  policy::validate(env_cfg);
  TrainResult result{{}, init ? std::move(*init) : policy::ToyPolicy{}};
  const policy::ToyPolicy reference = result.policy;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_samples_per_step);

  for (int s = 0; s < cfg.steps; ++s) {
    const policy::ToyPolicy sampler = result.policy;
    std::vector<policy::SynthItem> batch;
    batch.reserve(batch_size);
    for (std::size_t j = 0; j < batch_size; ++j) {
      batch.push_back(policy::draw_item(env_cfg, cfg.task_mix, "train",
                                        static_cast<std::uint64_t>(s) * batch_size + j));
    }
    auto report = grpo_step(result.policy, sampler, reference, batch, cfg, deps, static_cast<std::size_t>(s));
    report.step = static_cast<std::size_t>(s) + 1;
    if (!std::isfinite(report.loss) || !all_finite(result.policy.params())) {
      result.policy = sampler;
      throw Error(Errc::NonFinite, "non-finite loss at step " + std::to_string(report.step));
    }
    result.log.push_back(report);
    if (cfg.checkpoint_every > 0 && report.step % static_cast<std::size_t>(cfg.checkpoint_every) == 0) {
      policy::save_params(cfg.checkpoint_dir / policy::checkpoint_name(report.step), result.policy.params());
    }
    if (on_step) on_step(report, result.policy);
  }
  return result;
}

}  // namespace factgym::grpo
