#include "common.hpp"
#include "factgym/chat_client.hpp"
#include "factgym/fabricate.hpp"
#include "factgym/json_io.hpp"

namespace factgym::cli {

namespace {

using namespace factgym::fabricate;

// Remote rewriting with the rule rewriter as fallback unless strict.
class FallbackRewriter final : public TitleRewriter {
 public:
  FallbackRewriter(ChatEndpoint endpoint, bool strict) : remote_(std::move(endpoint)), strict_(strict) {}

  FabricationResult rewrite(const EmbeddingRecord& query, std::span<const EmbeddingRecord* const> candidates,
                            Strategy strategy, Rng& rng) override {
    try {
      return remote_.rewrite(query, candidates, strategy, rng);
    } catch (const Error& e) {
      const bool remote_failure =
          e.code() == Errc::Timeout || e.code() == Errc::Transport || e.code() == Errc::Schema;
      if (strict_ || !remote_failure) throw;
      return rule_.rewrite(query, candidates, strategy, rng);
    }
  }

 private:
  RemoteRewriter remote_;
  RuleRewriter rule_;
  bool strict_;
};

std::vector<std::string> sample_lines(const std::vector<Sample>& samples) {
  std::vector<std::string> lines;
  lines.reserve(samples.size());
  for (const auto& s : samples) lines.push_back(serialize_sample(s));
  return lines;
}

}  // namespace

void register_fabricate(Command& c) {
  auto& p = *c.params;
  add_common_params(p);
  p.add("embeddings", "", "Embedding records JSONL");
  p.add("out", "", "Output samples JSONL (the train split when a temporal threshold is set)");
  p.add("test_out", "", "Test split JSONL (default: <out>.test.jsonl)");
  p.add("fabrication_prob", 0.5, "Probability that a record is fabricated");
  p.add("top_k", 3, "Retrieved candidates per fabrication");
  p.add("temporal_threshold", "", "ISO-8601 timestamp; records at or after it go to the test split");
  p.add("normalize", true, "Scale ingested vectors to unit norm");
  p.add("rewriter_url", "", "Chat-completion URL of a remote title rewriter (rule rewriter when empty)");
  p.add("rewriter_model", "gpt-4o-mini", "Model name sent to the remote rewriter");
  p.add("rewriter_timeout_ms", 10000, "Remote rewriter timeout in milliseconds");
  p.add("rewriter_strict", false, "Fail instead of falling back to the rule rewriter");
}

int cmd_fabricate(Command& c, Io& io) {
  const auto& p = *c.params;
  const auto out_path = p.str("out");
  if (out_path.empty()) throw Error(Errc::MissingField, "--out");

  FabricationConfig cfg;
  cfg.fabrication_prob = p.num("fabrication_prob");
  const auto k = p.integer("top_k");
  if (k < 1) throw Error(Errc::InvalidArgument, "top_k must be positive");
  cfg.top_k = static_cast<std::size_t>(k);
  cfg.seed = p.u64("seed");
  cfg.threads = threads(p);
  if (const auto t = p.str("temporal_threshold"); !t.empty()) cfg.temporal_threshold = t;

  auto in = open_input(p.str("embeddings"));
  const auto store = build_store(read_records_jsonl(in, p.flag("normalize")));

  std::unique_ptr<TitleRewriter> rewriter;
  if (const auto url = p.str("rewriter_url"); !url.empty()) {
    ChatEndpoint ep;
    ep.url = url;
    ep.model = p.str("rewriter_model");
    ep.token = env_or_empty(kRewriterTokenEnv);
    ep.timeout = std::chrono::milliseconds(p.integer("rewriter_timeout_ms"));
    rewriter = std::make_unique<FallbackRewriter>(ep, p.flag("rewriter_strict"));
  }

  const auto result = fabricate_dataset(store, cfg, rewriter.get());

  write_jsonl(out_path, sample_lines(result.train), p.resolved(), io.out);
  auto test_path = p.str("test_out");
  if (cfg.temporal_threshold) {
    if (test_path.empty()) test_path = out_path + ".test.jsonl";
    write_jsonl(test_path, sample_lines(result.test), p.resolved(), io.out);
  }
  std::vector<std::string> meta;
  for (const auto& f : result.fabrications) meta.push_back(result_to_json(f).dump());
  write_jsonl(out_path + ".meta.jsonl", meta, p.resolved(), io.out);

  std::size_t n_fake = 0;
  for (const auto* split : {&result.train, &result.test}) {
    for (const auto& s : *split) n_fake += s.label == Label::Fake ? 1 : 0;
  }
  nlohmann::ordered_json report;
  report["n_records"] = store.size();
  report["n_train"] = result.train.size();
  report["n_test"] = result.test.size();
  report["n_fake"] = n_fake;
  report["skipped"] = result.skipped;
  report["skip_reasons"] = result.skip_reasons;
  report["config"] = p.resolved();
  write_json("", report, io.out);
  return 0;
}

}  // namespace factgym::cli
