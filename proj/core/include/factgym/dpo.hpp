#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factgym/policy.hpp"
#include "factgym/synth_env.hpp"

namespace factgym::dpo {

struct RenderedResponse {
  std::string text;
  std::optional<policy::Action> action;  // required for toy-policy training
};

struct PreferencePair {
  std::string sample_id;
  std::optional<policy::Features> features;  // required for toy-policy training
  RenderedResponse preferred;
  RenderedResponse dispreferred;
};

// Errc::InvalidArgument when preferred and dispreferred coincide (same text,
// or same action when both are present).
void validate(const PreferencePair& pair);

struct DpoConfig {
  double beta = 0.1;
  double learning_rate = 0.5;  // sized for the toy policy
  int epochs = 1;
  int batch_size = 4;
  double max_grad_norm = 1.0;
  std::uint64_t seed = 42;
};

void validate(const DpoConfig& cfg);

// Implicit reward: logp_current - logp_ref.
double dpo_reward(double logp_current, double logp_ref);

/// -log sigmoid(beta * (r_w - r_l)), evaluated as a stable softplus.
double dpo_loss(double r_w, double r_l, double beta);

// d dpo_loss / d (r_w - r_l).
double dpo_loss_margin_grad(double r_w, double r_l, double beta);

struct PairTerms {
  double loss = 0.0;
  double margin = 0.0;  // beta * (r_w - r_l)
};

PairTerms pair_terms(const policy::PolicyInterface& current, const policy::PolicyInterface& ref,
                     const PreferencePair& pair, double beta);

// Mean loss and margin over `pairs`; the gradient of the mean loss is added
// into `grad_out` when it is non-empty.
PairTerms batch_terms(const policy::PolicyInterface& current, const policy::PolicyInterface& ref,
                      std::span<const PreferencePair> pairs, double beta, std::span<double> grad_out = {});

struct BatchLog {
  std::size_t batch = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  double margin = 0.0;
  double grad_norm = 0.0;  // before clipping
};

using DpoLog = std::vector<BatchLog>;

/// Minibatch SGD on the mean pair loss with global-norm clipping. Pair order
/// is reshuffled each epoch from cfg.seed. `reference` is never modified.
/// Errc::NonFinite when an update would leave non-finite values; `current`
/// then keeps the parameters of the last good batch.
DpoLog train_dpo(policy::PolicyInterface& current, const policy::PolicyInterface& reference,
                 std::span<const PreferencePair> pairs, const DpoConfig& cfg);

/// Preference pairs from the synthetic environment: the preferred response is
/// the correct label, well-formed, with keywords and (for fakes) the fake
/// entity cited; the dispreferred one has the wrong label or broken format.
std::vector<PreferencePair> synth_preference_pairs(const policy::SynthConfig& env_cfg, std::size_t n,
                                                   std::uint64_t seed);

nlohmann::ordered_json pair_to_json(const PreferencePair& pair);
PreferencePair pair_from_json(const nlohmann::json& j);
std::vector<PreferencePair> read_pairs_jsonl(std::istream& in);

}  // namespace factgym::dpo
