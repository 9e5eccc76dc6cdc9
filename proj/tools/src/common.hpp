#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "factgym/judge.hpp"
#include "factgym/rewards.hpp"
#include "factgym/synth_env.hpp"
#include "params.hpp"

namespace factgym::cli {

struct Io {
  std::ostream& out;
  std::ostream& err;
};

struct Command {
  CLI::App* app = nullptr;
  std::unique_ptr<Params> params;
  std::string config_path;
  int (*run)(Command&, Io&) = nullptr;
};

Command make_command(CLI::App& root, const std::string& name, const std::string& description,
                     int (*run)(Command&, Io&));

void add_common_params(Params& p);
void add_judge_params(Params& p);
void add_reward_params(Params& p);
void add_synth_params(Params& p);

std::optional<RemoteJudgeConfig> judge_config(const Params& p);
rewards::ScoreDeps reward_deps(const Params& p);
policy::SynthConfig synth_config(const Params& p);
int threads(const Params& p);

std::ifstream open_input(const std::string& path);

// Writes JSONL lines to `path` (standard output when empty). A file output
// gets a `<path>.run.json` sidecar holding the resolved config.
void write_jsonl(const std::string& path, const std::vector<std::string>& lines, const nlohmann::ordered_json& config,
                 std::ostream& stdout_stream);

// Writes a JSON document to `path`, or to `stdout_stream` when empty.
void write_json(const std::string& path, const nlohmann::ordered_json& doc, std::ostream& stdout_stream);

nlohmann::ordered_json weights_to_json(const RewardWeights& w);

int cmd_score(Command& c, Io& io);
int cmd_fabricate(Command& c, Io& io);
int cmd_train_grpo(Command& c, Io& io);
int cmd_train_dpo(Command& c, Io& io);
int cmd_eval(Command& c, Io& io);
int cmd_gradcheck(Command& c, Io& io);

void register_score(Command& c);
void register_fabricate(Command& c);
void register_train_grpo(Command& c);
void register_train_dpo(Command& c);
void register_eval(Command& c);
void register_gradcheck(Command& c);

}  // namespace factgym::cli
