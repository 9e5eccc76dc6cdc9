#include <cmath>
#include <filesystem>

#include "common.hpp"
#include "factgym/dpo.hpp"
#include "factgym/grpo.hpp"

namespace factgym::cli {

namespace {

policy::ToyPolicy initial_policy(const Params& p) {
  const auto init = p.str("init");
  if (init.empty()) return policy::ToyPolicy{};
  return policy::ToyPolicy(policy::load_params(init));
}

std::filesystem::path checkpoint_dir(const Params& p) {
  std::filesystem::path dir = p.str("checkpoint_dir");
  if (!dir.empty()) std::filesystem::create_directories(dir);
  return dir;
}

nlohmann::ordered_json step_to_json(const grpo::StepReport& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["mean_reward"] = r.mean_reward;
  j["mean_md_reward"] = r.mean_md_reward;
  j["loss"] = r.loss;
  j["clip_frac"] = r.clip_frac;
  j["mean_kl"] = r.mean_kl;
  j["mean_response_len"] = r.mean_response_len;
  j["task_mix"] = {{"md", r.n_md}, {"ocr", r.n_ocr}, {"cap", r.n_cap}};
  return j;
}

nlohmann::ordered_json eval_to_json(const policy::PolicyEval& e) {
  nlohmann::ordered_json j;
  j["n"] = e.n;
  j["mean_reward"] = e.mean_reward;
  j["accuracy"] = e.accuracy;
  j["format_rate"] = e.format_rate;
  j["entity_rate"] = e.entity_rate;
  return j;
}

// Saves the last finite parameters before reporting a numerical failure.
[[noreturn]] void fail_non_finite(const Error& e, const std::filesystem::path& dir, std::span<const double> params,
                                  std::ostream& err) {
  if (!dir.empty()) {
    const auto path = dir / "last_good.fgp";
    policy::save_params(path, params);
    err << "last good parameters kept in " << path.string() << '\n';
  }
  throw e;
}

}  // namespace

void register_train_grpo(Command& c) {
  auto& p = *c.params;
  add_common_params(p);
  const grpo::GrpoConfig d;
  p.add("steps", d.steps, "Training steps");
  p.add("batch_size", d.batch_samples_per_step, "Samples per step");
  p.add("group_size", d.group_size, "Responses sampled per sample (G)");
  p.add("clip_eps", d.clip_eps, "Ratio clip range");
  p.add("kl_coeff", d.kl_coeff, "KL penalty coefficient");
  p.add("lr", d.learning_rate, "SGD learning rate");
  p.add("std_floor", d.std_floor, "Reward std below which a group's advantages are zero");
  p.add("inner_epochs", d.inner_epochs, "Updates per rollout batch");
  p.add("kl_estimator", "k3", "KL estimator: k3 or k2");
  p.add("task_mix_md", d.task_mix.md, "Relative weight of detection samples");
  p.add("task_mix_ocr", d.task_mix.ocr, "Relative weight of OCR samples");
  p.add("task_mix_cap", d.task_mix.cap, "Relative weight of caption samples");
  p.add("eval_samples", 1000, "Held-out samples for the final evaluation (0 disables)");
  p.add("log", "", "Training log JSONL");
  p.add("checkpoint_dir", "", "Directory for policy checkpoints");
  p.add("checkpoint_every", d.checkpoint_every, "Checkpoint interval in steps (0 disables)");
  p.add("init", "", "Initial policy checkpoint");
  add_synth_params(p);
  add_reward_params(p);
  add_judge_params(p);
}

int cmd_train_grpo(Command& c, Io& io) {
  const auto& p = *c.params;
  grpo::GrpoConfig cfg;
  cfg.steps = static_cast<int>(p.integer("steps"));
  cfg.batch_samples_per_step = static_cast<int>(p.integer("batch_size"));
  cfg.group_size = static_cast<int>(p.integer("group_size"));
  cfg.clip_eps = p.num("clip_eps");
  cfg.kl_coeff = p.num("kl_coeff");
  cfg.learning_rate = p.num("lr");
  cfg.std_floor = p.num("std_floor");
  cfg.inner_epochs = static_cast<int>(p.integer("inner_epochs"));
  const auto est = p.str("kl_estimator");
  if (est == "k3") {
    cfg.kl_estimator = grpo::KlEstimator::K3;
  } else if (est == "k2") {
    cfg.kl_estimator = grpo::KlEstimator::K2;
  } else {
    throw Error(Errc::InvalidArgument, "kl_estimator must be k3 or k2");
  }
  cfg.task_mix = {p.num("task_mix_md"), p.num("task_mix_ocr"), p.num("task_mix_cap")};
  cfg.seed = p.u64("seed");
  cfg.threads = threads(p);
  cfg.checkpoint_dir = checkpoint_dir(p);
  cfg.checkpoint_every = static_cast<int>(p.integer("checkpoint_every"));
  if (cfg.checkpoint_every > 0 && cfg.checkpoint_dir.empty()) {
    throw Error(Errc::MissingField, "checkpoint_dir is required when checkpoint_every > 0");
  }
  const auto eval_samples = p.integer("eval_samples");
  if (eval_samples < 0) throw Error(Errc::InvalidArgument, "eval_samples must be non-negative");
  const auto env = synth_config(p);
  auto deps = reward_deps(p);
  auto judge = make_judge(judge_config(p));
  deps.judge = judge.get();
  auto init = initial_policy(p);

  std::vector<std::string> log_lines;
  policy::ParamVector last_good(init.params().begin(), init.params().end());
  grpo::TrainResult result;
  try {
    result = grpo::train_grpo(cfg, env, deps, std::move(init),
                              [&](const grpo::StepReport& r, const policy::PolicyInterface& pol) {
                                log_lines.push_back(step_to_json(r).dump());
                                last_good.assign(pol.params().begin(), pol.params().end());
                              });
  } catch (const Error& e) {
    if (e.code() != Errc::NonFinite) throw;
    if (const auto log = p.str("log"); !log.empty()) write_jsonl(log, log_lines, p.resolved(), io.out);
    fail_non_finite(e, cfg.checkpoint_dir, last_good, io.err);
  }

  if (const auto log = p.str("log"); !log.empty()) write_jsonl(log, log_lines, p.resolved(), io.out);
  if (!cfg.checkpoint_dir.empty()) policy::save_params(cfg.checkpoint_dir / "final.fgp", result.policy.params());

  nlohmann::ordered_json final_metrics;
  final_metrics["steps"] = result.log.size();
  if (result.log.empty()) {
    final_metrics["first_mean_reward"] = nullptr;
    final_metrics["final_mean_reward"] = nullptr;
  } else {
    final_metrics["first_mean_reward"] = result.log.front().mean_reward;
    final_metrics["final_mean_reward"] = result.log.back().mean_reward;
  }
  if (eval_samples > 0) {
    final_metrics["eval"] =
        eval_to_json(policy::evaluate_md(result.policy, env, static_cast<std::size_t>(eval_samples), cfg.seed, deps));
  }
  nlohmann::ordered_json doc;
  doc["final"] = final_metrics;
  doc["config"] = p.resolved();
  write_json("", doc, io.out);
  return 0;
}

void register_train_dpo(Command& c) {
  auto& p = *c.params;
  add_common_params(p);
  const dpo::DpoConfig d;
  p.add("pairs", "", "Preference-pair JSONL (synthetic pairs when empty)");
  p.add("n_pairs", 5000, "Synthetic pairs to generate when no pair file is given");
  p.add("beta", d.beta, "Preference temperature");
  p.add("lr", d.learning_rate, "SGD learning rate");
  p.add("epochs", d.epochs, "Passes over the pairs");
  p.add("batch_size", d.batch_size, "Pairs per update");
  p.add("max_grad_norm", d.max_grad_norm, "Global gradient-norm clip");
  p.add("log", "", "Per-batch log JSONL");
  p.add("checkpoint_dir", "", "Directory for the final policy checkpoint");
  p.add("init", "", "Initial and reference policy checkpoint");
  add_synth_params(p);
}

int cmd_train_dpo(Command& c, Io& io) {
  const auto& p = *c.params;
  dpo::DpoConfig cfg;
  cfg.beta = p.num("beta");
  cfg.learning_rate = p.num("lr");
  cfg.epochs = static_cast<int>(p.integer("epochs"));
  cfg.batch_size = static_cast<int>(p.integer("batch_size"));
  cfg.max_grad_norm = p.num("max_grad_norm");
  cfg.seed = p.u64("seed");
  dpo::validate(cfg);
  const auto dir = checkpoint_dir(p);

  std::vector<dpo::PreferencePair> pairs;
  if (const auto path = p.str("pairs"); !path.empty()) {
    auto in = open_input(path);
    pairs = dpo::read_pairs_jsonl(in);
  } else {
    const auto n = p.integer("n_pairs");
    if (n < 1) throw Error(Errc::InvalidArgument, "n_pairs must be positive");
    pairs = dpo::synth_preference_pairs(synth_config(p), static_cast<std::size_t>(n), cfg.seed);
  }

  const auto reference = initial_policy(p);
  policy::ToyPolicy current = reference;
  const auto before = dpo::batch_terms(current, reference, pairs, cfg.beta);
  dpo::DpoLog log;
  try {
    log = dpo::train_dpo(current, reference, pairs, cfg);
  } catch (const Error& e) {
    if (e.code() != Errc::NonFinite) throw;
    fail_non_finite(e, dir, current.params(), io.err);
  }
  const auto after = dpo::batch_terms(current, reference, pairs, cfg.beta);

  if (const auto path = p.str("log"); !path.empty()) {
    std::vector<std::string> lines;
    for (const auto& b : log) {
      nlohmann::ordered_json j;
      j["batch"] = b.batch;
      j["epoch"] = b.epoch;
      j["loss"] = b.loss;
      j["margin"] = b.margin;
      j["grad_norm"] = b.grad_norm;
      lines.push_back(j.dump());
    }
    write_jsonl(path, lines, p.resolved(), io.out);
  }
  if (!dir.empty()) policy::save_params(dir / "final.fgp", current.params());

  nlohmann::ordered_json final_metrics;
  final_metrics["pairs"] = pairs.size();
  final_metrics["batches"] = log.size();
  final_metrics["initial_loss"] = before.loss;
  final_metrics["initial_margin"] = before.margin;
  final_metrics["final_loss"] = after.loss;
  final_metrics["final_margin"] = after.margin;
  nlohmann::ordered_json doc;
  doc["final"] = final_metrics;
  doc["config"] = p.resolved();
  write_json("", doc, io.out);
  return 0;
}

}  // namespace factgym::cli
