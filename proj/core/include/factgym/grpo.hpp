#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "factgym/policy.hpp"
#include "factgym/rewards.hpp"
#include "factgym/synth_env.hpp"

namespace factgym::grpo {

enum class KlEstimator {
  K3,  // exp(d) - d - 1 with d = logp_ref - logp_current
  K2,  // d^2 / 2
};

struct GrpoConfig {
  int group_size = 5;
  double clip_eps = 0.2;
  double kl_coeff = 0.04;
  double learning_rate = 0.05;  // sized for the toy policy
  int steps = 172;
  int batch_samples_per_step = 32;
  std::uint64_t seed = 42;
  double std_floor = 1e-8;
  int inner_epochs = 1;  // >1 reuses each rollout batch, which activates the clip
  KlEstimator kl_estimator = KlEstimator::K3;
  policy::TaskMix task_mix;
  int threads = 1;
  int checkpoint_every = 0;  // 0 disables checkpoints
  std::filesystem::path checkpoint_dir;
};

void validate(const GrpoConfig& cfg);

struct RolloutResponse {
  policy::Action action;
  std::string text;
  double logp_current = 0.0;
  double logp_old = 0.0;
  double logp_ref = 0.0;
};

struct GroupRollout {
  std::string sample_id;
  std::vector<RolloutResponse> responses;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

/// (r_i - mean) / max(pop_std, std_floor); all zeros when pop_std < std_floor.
/// Errc::GroupTooSmall for fewer than two rewards.
std::vector<double> group_advantages(std::span<const double> rewards, double std_floor);

// Non-negative KL sample estimate between current and reference log-probs.
// The log-ratio is clamped to +-30 before exponentiation.
double kl_estimate(double logp_current, double logp_ref, KlEstimator estimator = KlEstimator::K3);

struct LossDiagnostics {
  double mean_ratio = 0.0;
  double clip_frac = 0.0;
  double mean_kl = 0.0;
};

struct LossResult {
  double loss = 0.0;
  LossDiagnostics diagnostics;
};

/// Negated clipped surrogate with KL penalty, averaged over the group:
/// -(1/G) sum_i [min(rho_i A_i, clip(rho_i, 1-eps, 1+eps) A_i) - beta KL_i].
LossResult grpo_loss(const GroupRollout& rollout, const GrpoConfig& cfg);

// d loss / d logp_current_i for each response. The parameter gradient is
// sum_i coeff_i * grad log pi(a_i | x).
std::vector<double> grpo_loss_logp_grad(const GroupRollout& rollout, const GrpoConfig& cfg);

struct StepReport {
  std::size_t step = 0;
  double mean_reward = 0.0;
  double mean_md_reward = 0.0;
  double loss = 0.0;
  double clip_frac = 0.0;
  double mean_kl = 0.0;
  double mean_response_len = 0.0;
  std::size_t n_md = 0, n_ocr = 0, n_cap = 0;

  bool operator==(const StepReport&) const = default;
};

/// One iteration of the group-relative update: sample G actions per item from
/// `policy_old`, score them, normalize rewards per group, and apply one SGD
/// step per inner epoch to `policy_current`. The gradient is summed over the
/// batch in item order, so the result does not depend on cfg.threads.
StepReport grpo_step(policy::PolicyInterface& policy_current, const policy::PolicyInterface& policy_old,
                     const policy::PolicyInterface& policy_ref, std::span<const policy::SynthItem> batch,
                     const GrpoConfig& cfg, const rewards::ScoreDeps& deps, std::size_t step_index,
                     std::vector<GroupRollout>* rollouts_out = nullptr);

using TrainingLog = std::vector<StepReport>;

struct TrainResult {
  TrainingLog log;
  policy::ToyPolicy policy;
};

using StepCallback = std::function<void(const StepReport&, const policy::PolicyInterface&)>;

/// Runs cfg.steps group-relative updates on the synthetic environment,
/// starting from `init` (zero params when absent). The reference policy is
/// frozen at initialization; the sampling policy is refreshed every step.
/// Errc::NonFinite when a loss or parameter becomes non-finite.
TrainResult train_grpo(const GrpoConfig& cfg, const policy::SynthConfig& env_cfg, const rewards::ScoreDeps& deps,
                       std::optional<policy::ToyPolicy> init = std::nullopt, const StepCallback& on_step = {});

}  // namespace factgym::grpo
