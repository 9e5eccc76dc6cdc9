#include "common.hpp"

#include <filesystem>
#include <thread>

#include "factgym/chat_client.hpp"
#include "factgym/error.hpp"

namespace factgym::cli {

namespace {

double field(const nlohmann::json& obj, const char* branch, const char* key, double fallback) {
  auto b = obj.find(branch);
  if (b == obj.end()) return fallback;
  if (!b->is_object()) throw Error(Errc::Schema, std::string("weights.") + branch + " must be an object");
  auto v = b->find(key);
  if (v == b->end()) return fallback;
  if (!v->is_number()) throw Error(Errc::Schema, std::string("weights.") + branch + "." + key + " must be a number");
  return v->get<double>();
}

}  // namespace

Command make_command(CLI::App& root, const std::string& name, const std::string& description,
                     int (*run)(Command&, Io&)) {
  Command c;
  c.app = root.add_subcommand(name, description);
  c.params = std::make_unique<Params>(*c.app, name);
  c.run = run;
  return c;
}

void add_common_params(Params& p) {
  p.add("seed", std::uint64_t{42}, "Random seed");
  p.add("threads", 1, "Worker threads (0: hardware concurrency)");
}

void add_judge_params(Params& p) {
  p.add("judge_url", "", "Chat-completion URL of a remote judge (lexical judge when empty)");
  p.add("judge_model", "gpt-4o-mini", "Model name sent to the remote judge");
  p.add("judge_timeout_ms", 10000, "Remote judge timeout in milliseconds");
  p.add("judge_max_in_flight", 4, "Maximum concurrent remote judge calls");
  p.add("judge_strict", false, "Fail instead of falling back to the lexical judge");
}

void add_reward_params(Params& p) {
  p.add("weights", weights_to_json(RewardWeights{}), "Reward weights (config file only)");
  const rewards::KeywordPolicy kp;
  p.add("keywords", kp.keywords, "Reflective keywords (config file only)");
  p.add("keyword_min_distinct", kp.min_distinct, "Distinct keywords needed for the word reward");
}

void add_synth_params(Params& p) {
  const policy::SynthConfig d;
  p.add("swap_prob", d.swap_prob, "Probability that a synthetic sample is fabricated");
  p.add("signal_noise", d.signal_noise, "Probability that the mismatch feature is flipped");
  p.add("n_entities_pool", d.n_entities_pool, "Entity names per type in the synthetic pool");
}

std::optional<RemoteJudgeConfig> judge_config(const Params& p) {
  const auto url = p.str("judge_url");
  if (url.empty()) return std::nullopt;
  RemoteJudgeConfig cfg;
  cfg.endpoint.url = url;
  cfg.endpoint.model = p.str("judge_model");
  cfg.endpoint.token = env_or_empty(kJudgeTokenEnv);
  const auto timeout = p.integer("judge_timeout_ms");
  if (timeout <= 0) throw Error(Errc::InvalidArgument, "judge_timeout_ms must be positive");
  cfg.endpoint.timeout = std::chrono::milliseconds(timeout);
  cfg.max_in_flight = static_cast<int>(p.integer("judge_max_in_flight"));
  if (cfg.max_in_flight < 1) throw Error(Errc::InvalidArgument, "judge_max_in_flight must be positive");
  cfg.strict = p.flag("judge_strict");
  return cfg;
}

rewards::ScoreDeps reward_deps(const Params& p) {
  rewards::ScoreDeps deps;
  const auto& w = p.get("weights");
  auto& rw = deps.weights;
  rw.real_branch = {field(w, "real", "acc", rw.real_branch.acc), field(w, "real", "format", rw.real_branch.format),
                    field(w, "real", "word", rw.real_branch.word)};
  rw.fake_branch = {field(w, "fake", "acc", rw.fake_branch.acc), field(w, "fake", "format", rw.fake_branch.format),
                    field(w, "fake", "word", rw.fake_branch.word), field(w, "fake", "entity", rw.fake_branch.entity)};
  rw.aux = {field(w, "aux", "acc", rw.aux.acc), field(w, "aux", "format", rw.aux.format)};
  validate_weights(rw);

  deps.keywords.keywords.clear();
  for (const auto& k : p.get("keywords")) {
    if (!k.is_string()) throw Error(Errc::Schema, "keywords must be strings");
    deps.keywords.keywords.push_back(k.get<std::string>());
  }
  deps.keywords.min_distinct = static_cast<int>(p.integer("keyword_min_distinct"));
  rewards::validate(deps.keywords);
  return deps;
}

policy::SynthConfig synth_config(const Params& p) {
  policy::SynthConfig cfg;
  cfg.swap_prob = p.num("swap_prob");
  cfg.signal_noise = p.num("signal_noise");
  cfg.n_entities_pool = static_cast<int>(p.integer("n_entities_pool"));
  cfg.seed = p.u64("seed");
  policy::validate(cfg);
  return cfg;
}

int threads(const Params& p) {
  const auto t = p.integer("threads");
  if (t < 0) throw Error(Errc::InvalidArgument, "threads must be non-negative");
  if (t == 0) return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return static_cast<int>(t);
}

std::ifstream open_input(const std::string& path) {
  if (path.empty()) throw Error(Errc::MissingField, "input path");
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return in;
}

void write_jsonl(const std::string& path, const std::vector<std::string>& lines, const nlohmann::ordered_json& config,
                 std::ostream& stdout_stream) {
  if (path.empty()) {
    for (const auto& l : lines) stdout_stream << l << '\n';
    return;
  }
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::Io, "cannot write " + path);
    for (const auto& l : lines) out << l << '\n';
  }
  nlohmann::ordered_json sidecar;
  sidecar["config"] = config;
  write_json(path + ".run.json", sidecar, stdout_stream);
}

void write_json(const std::string& path, const nlohmann::ordered_json& doc, std::ostream& stdout_stream) {
  if (path.empty()) {
    stdout_stream << doc.dump(2) << '\n';
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << doc.dump(2) << '\n';
}

nlohmann::ordered_json weights_to_json(const RewardWeights& w) {
  nlohmann::ordered_json j;
  j["real"] = {{"acc", w.real_branch.acc}, {"format", w.real_branch.format}, {"word", w.real_branch.word}};
  j["fake"] = {{"acc", w.fake_branch.acc},
               {"format", w.fake_branch.format},
               {"word", w.fake_branch.word},
               {"entity", w.fake_branch.entity}};
  j["aux"] = {{"acc", w.aux.acc}, {"format", w.aux.format}};
  return j;
}

}  // namespace factgym::cli
