#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "factgym/domain.hpp"
#include "factgym/policy.hpp"
#include "factgym/rewards.hpp"

namespace factgym::policy {

struct SynthConfig {
  int n_entities_pool = 12;   // names per entity type
  double swap_prob = 0.5;     // probability a sample is fabricated
  double signal_noise = 0.1;  // probability the mismatch feature is flipped
  std::uint64_t seed = 42;
};

// Throws Errc::InvalidArgument when a field is out of range.
void validate(const SynthConfig& cfg);

/// One environment item.
///
/// Feature layout: [0] noisy mismatch indicator, [1..4] one-hot slot cue,
/// [5..7] standard-normal distractors. For MD samples the cue is the entity
/// type of the manipulated entity (a random type for real samples) and
/// candidate slot k holds an entity of type k, so a fabricated sample's fake
/// entity always sits in the cued slot. For OCR/CAP samples the cue marks
/// which answer option is the ground truth.
struct SynthItem {
  Sample sample;
  Features features{};
  std::vector<Entity> candidates;        // length M (MD)
  std::vector<std::string> answer_options;  // length M (OCR/CAP)
};

SynthItem gen_sample(const SynthConfig& cfg, Rng& rng, std::string id);
SynthItem gen_aux_sample(TaskKind task, const SynthConfig& cfg, Rng& rng, std::string id);

/// Deterministic template rendering of an MD action. Well-formed output is
/// `<think>...</think><answer>label</answer>`; style on injects "First,",
/// "However," and "In conclusion,"; entity_choice < M names that candidate;
/// malformed output drops the closing think tag.
std::string render_response(const Action& a, const std::vector<Entity>& candidates);

// Auxiliary-task rendering: the answer block carries the chosen option, or
// nothing when entity_choice == M.
std::string render_aux_response(const Action& a, const std::vector<std::string>& options);

std::string render(const SynthItem& item, const Action& a);

struct TaskMix {
  double md = 1.0;
  double ocr = 0.0;
  double cap = 0.0;
};

// Item for a (seed, stream, index) key, with its task drawn from `mix`.
SynthItem draw_item(const SynthConfig& cfg, const TaskMix& mix, std::string_view stream, std::uint64_t index);

struct PolicyEval {
  std::size_t n = 0;
  double mean_reward = 0.0;
  double accuracy = 0.0;     // parsed label equals truth
  double format_rate = 0.0;  // well-formed responses
  double entity_rate = 0.0;  // fake samples whose judge verdict is true
};

/// Mean MD reward and detection accuracy of `policy` on `n` held-out MD
/// samples. Greedy decoding takes the mode of every head.
PolicyEval evaluate_md(const PolicyInterface& policy, const SynthConfig& cfg, std::size_t n, std::uint64_t seed,
                       const rewards::ScoreDeps& deps, bool greedy = true);

}  // namespace factgym::policy
