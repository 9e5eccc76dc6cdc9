#include "cli.hpp"

#include <vector>

#include "common.hpp"
#include "factgym/error.hpp"

namespace factgym::cli {

namespace {

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::NonFinite: return kNumericalError;
    case Errc::Timeout:
    case Errc::Transport:
    case Errc::UnparseableVerdict: return kRemoteError;
    default: return kInputError;
  }
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"factgym: verifiable rewards, GRPO/DPO training and fabrication for misinformation detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "factgym 0.1.0");

  std::vector<Command> commands;
  commands.push_back(make_command(app, "score", "Score responses against samples", cmd_score));
  register_score(commands.back());
  commands.push_back(make_command(app, "fabricate", "Fabricate a labelled dataset from embeddings", cmd_fabricate));
  register_fabricate(commands.back());
  commands.push_back(make_command(app, "train-grpo", "Train the toy policy with GRPO", cmd_train_grpo));
  register_train_grpo(commands.back());
  commands.push_back(make_command(app, "train-dpo", "Train the toy policy with DPO", cmd_train_dpo));
  register_train_dpo(commands.back());
  commands.push_back(make_command(app, "eval", "Detection and explainability metrics", cmd_eval));
  register_eval(commands.back());
  commands.push_back(make_command(app, "gradcheck", "Check analytic gradients against finite differences",
                                  cmd_gradcheck));
  register_gradcheck(commands.back());
  for (auto& c : commands) c.app->add_option("--config", c.config_path, "JSON config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kInputError;
  }

  Io io{out, err};
  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      c.params->resolve(c.config_path);
      nlohmann::ordered_json log;
      log["command"] = c.app->get_name();
      log["config"] = c.params->resolved();
      log["sources"] = c.params->sources();
      err << log.dump() << '\n';
      return c.run(c, io);
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return exit_code_for(e.code());
    } catch (const nlohmann::json::exception& e) {
      err << "error: Schema: " << e.what() << '\n';
      return kInputError;
    } catch (const std::filesystem::filesystem_error& e) {
      err << "error: Io: " << e.what() << '\n';
      return kInputError;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kFailure;
    }
  }
  return kFailure;
}

}  // namespace factgym::cli
