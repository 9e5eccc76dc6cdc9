#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "factgym/chat_client.hpp"
#include "factgym/domain.hpp"
#include "factgym/rng.hpp"

namespace factgym::fabricate {

inline constexpr const char* kRewriterTokenEnv = "FACTGYM_REWRITER_TOKEN";
inline constexpr std::size_t kDefaultTopK = 3;

struct EmbeddingRecord {
  std::string id;
  std::vector<double> img_vec;  // unit norm
  std::vector<double> txt_vec;  // unit norm
  std::string title;
  std::vector<Entity> entities;
  std::optional<std::string> timestamp;
};

enum class Strategy { V2V, V2T, T2V, T2T, RANDOM };
inline constexpr int kStrategyCount = 5;

std::string_view to_string(Strategy s) noexcept;
std::optional<Strategy> parse_strategy(std::string_view s);

struct Hit {
  std::size_t index = 0;  // position in the store
  double score = 0.0;     // cosine similarity; 0 for RANDOM draws
};

/// Immutable collection of embedding records with exact cosine retrieval.
class Store {
 public:
  Store() = default;

  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t dim() const noexcept { return dim_; }
  const EmbeddingRecord& operator[](std::size_t i) const { return records_[i]; }
  std::span<const EmbeddingRecord> records() const noexcept { return records_; }
  std::optional<std::size_t> find(std::string_view id) const;

  // Precomputed Euclidean norms, indexed like records().
  double img_norm(std::size_t i) const { return img_norms_[i]; }
  double txt_norm(std::size_t i) const { return txt_norms_[i]; }

 private:
  friend Store build_store(std::vector<EmbeddingRecord> records);
  std::vector<EmbeddingRecord> records_;
  std::vector<double> img_norms_;
  std::vector<double> txt_norms_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::size_t dim_ = 0;
};

/// Errc::DimensionMismatch when vector lengths differ, Errc::DuplicateId on a
/// repeated id, Errc::InvalidArgument when a vector is not unit norm (1e-6).
Store build_store(std::vector<EmbeddingRecord> records);

// Scales a vector to unit Euclidean norm. Errc::InvalidArgument for zero.
void normalize(std::vector<double>& v);

double norm(std::span<const double> v);

/// Top-k neighbours of `query` for a strategy, excluding the query's own id.
///
/// V2V/V2T/T2V/T2T compare the query's image or text vector against the
/// stores' image or text vectors by cosine similarity, best first, ties by
/// ascending id. RANDOM draws k distinct records uniformly from `rng`.
/// Errc::EmptyStore on an empty store, Errc::StoreTooSmall when size <= k.
std::vector<Hit> retrieve(const Store& store, const EmbeddingRecord& query, Strategy strategy,
                          std::size_t k, Rng& rng);

Strategy pick_strategy(Rng& rng);

struct FabricationResult {
  std::string source_id;
  std::string fake_title;
  Entity fake_entity;
  Entity original_entity;
  EntityType etype = EntityType::Person;
  Strategy strategy = Strategy::RANDOM;
  std::vector<std::string> candidate_ids;
};

// Surface comparison key: tokens joined by single spaces.
std::string normalized_surface(std::string_view surface);

/// Replaces one uniformly chosen entity of the query title with a same-type
/// entity drawn from the candidates.
///
/// Candidates sharing the target's normalized surface are excluded. The first
/// occurrence of the target surface is replaced. Errors: NoTypedCandidate
/// when no same-type alternative exists, EntityNotInTitle when the target
/// surface is absent from the title, AmbiguousSurface when the fabricated
/// title still contains the original surface.
FabricationResult swap_entity(const EmbeddingRecord& query, std::span<const EmbeddingRecord* const> candidates,
                              Rng& rng, Strategy strategy = Strategy::RANDOM);

// Checks the FabricationResult invariants against its source title.
// Errc::InvalidArgument naming the first violated invariant.
void check_result(const FabricationResult& r, std::string_view source_title);

/// Title rewriter contract: given the query record, its retrieved
/// candidates, and the strategy that found them, produce a fabrication.
class TitleRewriter {
 public:
  virtual ~TitleRewriter() = default;
  virtual FabricationResult rewrite(const EmbeddingRecord& query,
                                    std::span<const EmbeddingRecord* const> candidates, Strategy strategy,
                                    Rng& rng) = 0;
};

class RuleRewriter final : public TitleRewriter {
 public:
  FabricationResult rewrite(const EmbeddingRecord& query, std::span<const EmbeddingRecord* const> candidates,
                            Strategy strategy, Rng& rng) override {
    return swap_entity(query, candidates, rng, strategy);
  }
};

/// Rewriter backed by a chat-completion endpoint. The reply must contain
/// labeled lines "Fake title:", "Fake entity:", "Original entity:" and
/// "Entity type:"; anything else is Errc::Schema.
class RemoteRewriter final : public TitleRewriter {
 public:
  explicit RemoteRewriter(ChatEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

  FabricationResult rewrite(const EmbeddingRecord& query, std::span<const EmbeddingRecord* const> candidates,
                            Strategy strategy, Rng& rng) override;

  static std::string build_prompt(const EmbeddingRecord& query, std::span<const EmbeddingRecord* const> candidates);
  static FabricationResult parse_reply(std::string_view reply, const EmbeddingRecord& query);

 private:
  ChatEndpoint endpoint_;
};

struct FabricationConfig {
  double fabrication_prob = 0.5;
  std::size_t top_k = kDefaultTopK;
  std::uint64_t seed = 42;
  // Records strictly before the threshold go to train, the rest to test.
  // Timestamps compare as ISO-8601 strings.
  std::optional<std::string> temporal_threshold;
  int threads = 1;
};

struct FabricationOutput {
  std::vector<Sample> train;
  std::vector<Sample> test;
  std::vector<FabricationResult> fabrications;
  std::size_t skipped = 0;
  std::map<std::string, std::size_t> skip_reasons;
};

/// Streams every record of the store into a real or fabricated MD sample.
/// Records whose fabrication fails with NoTypedCandidate, AmbiguousSurface or
/// EntityNotInTitle are skipped and counted.
FabricationOutput fabricate_dataset(const Store& store, const FabricationConfig& cfg,
                                    TitleRewriter* rewriter = nullptr);

nlohmann::ordered_json result_to_json(const FabricationResult& r);
EmbeddingRecord record_from_json(const nlohmann::json& j, bool normalize_vectors);
nlohmann::ordered_json record_to_json(const EmbeddingRecord& r);
std::vector<EmbeddingRecord> read_records_jsonl(std::istream& in, bool normalize_vectors);

}  // namespace factgym::fabricate
