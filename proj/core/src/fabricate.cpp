#include "factgym/fabricate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "factgym/json_io.hpp"
#include "factgym/parallel.hpp"
#include "factgym/textmetrics.hpp"

namespace factgym::fabricate {

namespace {

constexpr double kUnitTolerance = 1e-6;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool query_uses_image(Strategy s) { return s == Strategy::V2V || s == Strategy::V2T; }
bool index_uses_image(Strategy s) { return s == Strategy::V2V || s == Strategy::T2V; }

std::string trim_copy(std::string_view s) {
  const auto* ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::vector<double> vector_from_json(const nlohmann::json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw Error(Errc::MissingField, field);
  if (!it->is_array()) throw Error(Errc::Schema, std::string(field) + " must be an array");
  std::vector<double> v;
  v.reserve(it->size());
  for (const auto& x : *it) {
    if (!x.is_number()) throw Error(Errc::Schema, std::string(field) + " must hold numbers");
    v.push_back(x.get<double>());
  }
  return v;
}

}  // namespace

std::string_view to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::V2V: return "V2V";
    case Strategy::V2T: return "V2T";
    case Strategy::T2V: return "T2V";
    case Strategy::T2T: return "T2T";
    case Strategy::RANDOM: return "RANDOM";
  }
  return "RANDOM";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
  for (int i = 0; i < kStrategyCount; ++i) {
    const auto st = static_cast<Strategy>(i);
    if (to_string(st) == s) return st;
  }
  return std::nullopt;
}

std::optional<std::size_t> Store::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

void normalize(std::vector<double>& v) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw Error(Errc::InvalidArgument, "cannot normalize a zero vector");
  for (double& x : v) x /= n;
}

Store build_store(std::vector<EmbeddingRecord> records) {
  Store store;
  if (!records.empty()) store.dim_ = records.front().img_vec.size();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.img_vec.size() != store.dim_ || r.txt_vec.size() != store.dim_ || store.dim_ == 0) {
      throw Error(Errc::DimensionMismatch, "record " + r.id);
    }
    if (!store.by_id_.emplace(r.id, i).second) throw Error(Errc::DuplicateId, r.id);
    const double ni = norm(r.img_vec);
    const double nt = norm(r.txt_vec);
    if (std::abs(ni - 1.0) >= kUnitTolerance || std::abs(nt - 1.0) >= kUnitTolerance) {
      throw Error(Errc::InvalidArgument, "record " + r.id + " vectors are not unit norm");
    }
    store.img_norms_.push_back(ni);
    store.txt_norms_.push_back(nt);
  }
  store.records_ = std::move(records);
  return store;
}

std::vector<Hit> retrieve(const Store& store, const EmbeddingRecord& query, Strategy strategy, std::size_t k,
                          Rng& rng) {
  if (store.empty()) throw Error(Errc::EmptyStore, "store has no records");
  if (store.size() <= k) {
    throw Error(Errc::StoreTooSmall, "store of " + std::to_string(store.size()) + " cannot serve top-" +
                                         std::to_string(k));
  }
  const auto self = store.find(query.id);

  if (strategy == Strategy::RANDOM) {
    std::vector<std::size_t> pool;
    pool.reserve(store.size());
    for (std::size_t i = 0; i < store.size(); ++i) {
      if (!self || i != *self) pool.push_back(i);
    }
    std::vector<Hit> hits;
    for (std::size_t d = 0; d < k; ++d) {
      const auto pick = d + rng.index(pool.size() - d);
      std::swap(pool[d], pool[pick]);
      hits.push_back(Hit{pool[d], 0.0});
    }
    return hits;
  }

  const auto& qvec = query_uses_image(strategy) ? query.img_vec : query.txt_vec;
  if (qvec.size() != store.dim()) throw Error(Errc::DimensionMismatch, "query " + query.id);
  const double qnorm = norm(qvec);
  const bool image_side = index_uses_image(strategy);

  auto better = [&](const Hit& a, const Hit& b) {
    if (a.score != b.score) return a.score > b.score;
    return store[a.index].id < store[b.index].id;
  };

  std::vector<Hit> best;
  best.reserve(k + 1);
  for (std::size_t i = 0; i < store.size(); ++i) {
    if (self && i == *self) continue;
    const auto& rec = store[i];
    const auto& vec = image_side ? rec.img_vec : rec.txt_vec;
    const double rnorm = image_side ? store.img_norm(i) : store.txt_norm(i);
    const Hit h{i, dot(qvec, vec) / (qnorm * rnorm)};
    if (best.size() == k && !better(h, best.back())) continue;
    best.insert(std::upper_bound(best.begin(), best.end(), h, better), h);
    if (best.size() > k) best.pop_back();
  }
  return best;
}

Strategy pick_strategy(Rng& rng) { return static_cast<Strategy>(rng.index(kStrategyCount)); }

std::string normalized_surface(std::string_view surface) {
  const auto tokens = text::tokenize(surface);
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

FabricationResult swap_entity(const EmbeddingRecord& query, std::span<const EmbeddingRecord* const> candidates,
                              Rng& rng, Strategy strategy) {
  if (query.entities.empty()) throw Error(Errc::InvalidArgument, "query " + query.id + " has no entities");
  const Entity& target = query.entities[rng.index(query.entities.size())];
  const auto target_key = normalized_surface(target.surface);

  std::vector<const Entity*> pool;
  std::vector<std::string> seen{target_key};
  for (const auto* cand : candidates) {
    for (const auto& e : cand->entities) {
      if (e.etype != target.etype) continue;
      auto key = normalized_surface(e.surface);
      if (std::find(seen.begin(), seen.end(), key) != seen.end()) continue;
      seen.push_back(std::move(key));
      pool.push_back(&e);
    }
  }
  if (pool.empty()) {
    throw Error(Errc::NoTypedCandidate, "no " + std::string(to_string(target.etype)) + " candidate for " + query.id);
  }
  const Entity& replacement = *pool[rng.index(pool.size())];

  const auto pos = query.title.find(target.surface);
  if (pos == std::string::npos) throw Error(Errc::EntityNotInTitle, target.surface + " in " + query.id);

  FabricationResult r;
  r.source_id = query.id;
  r.fake_title = query.title.substr(0, pos) + replacement.surface + query.title.substr(pos + target.surface.size());
  r.fake_entity = replacement;
  r.original_entity = target;
  r.etype = target.etype;
  r.strategy = strategy;
  for (const auto* cand : candidates) r.candidate_ids.push_back(cand->id);

  if (r.fake_title.find(target.surface) != std::string::npos) {
    throw Error(Errc::AmbiguousSurface, "'" + target.surface + "' survives in the fabricated title of " + query.id);
  }
  return r;
}

void check_result(const FabricationResult& r, std::string_view source_title) {
  if (r.fake_entity.surface == r.original_entity.surface) throw Error(Errc::InvalidArgument, "surface unchanged");
  if (r.fake_entity.etype != r.original_entity.etype || r.etype != r.original_entity.etype) {
    throw Error(Errc::InvalidArgument, "entity type changed");
  }
  if (r.fake_title.find(r.fake_entity.surface) == std::string::npos) {
    throw Error(Errc::InvalidArgument, "fake title lacks the fake entity");
  }
  if (r.fake_title.find(r.original_entity.surface) != std::string::npos) {
    throw Error(Errc::InvalidArgument, "fake title keeps the original entity");
  }
  if (r.fake_title == source_title) throw Error(Errc::InvalidArgument, "title unchanged");
}

std::string RemoteRewriter::build_prompt(const EmbeddingRecord& query,
                                         std::span<const EmbeddingRecord* const> candidates) {
  std::string p;
  p += "Rewrite a news headline by replacing exactly one named entity with a same-type entity taken from ";
  p += "the related headlines, keeping the sentence fluent.\n";
  p += "Query headline: " + query.title + "\n";
  p += "Query entities:";
  for (const auto& e : query.entities) p += " [" + e.surface + " | " + std::string(to_string(e.etype)) + "]";
  p += "\n";
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    p += "Related headline " + std::to_string(i + 1) + ": " + candidates[i]->title + "\n";
    p += "Related entities " + std::to_string(i + 1) + ":";
    for (const auto& e : candidates[i]->entities) p += " [" + e.surface + " | " + std::string(to_string(e.etype)) + "]";
    p += "\n";
  }
  p += "Answer with exactly these labeled lines:\n";
  p += "Fake title: <rewritten headline>\nFake entity: <inserted entity>\nOriginal entity: <replaced entity>\n";
  p += "Entity type: <person|location|event|organization>\n";
  return p;
}

FabricationResult RemoteRewriter::parse_reply(std::string_view reply, const EmbeddingRecord& query) {
  std::map<std::string, std::string> fields;
  std::size_t start = 0;
  while (start <= reply.size()) {
    const auto end = std::min(reply.find('\n', start), reply.size());
    const auto line = reply.substr(start, end - start);
    const auto colon = line.find(':');
    if (colon != std::string_view::npos) {
      std::string key = trim_copy(line.substr(0, colon));
      for (char& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      fields[key] = trim_copy(line.substr(colon + 1));
    }
    start = end + 1;
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end() || it->second.empty()) throw Error(Errc::Schema, std::string("rewriter reply lacks ") + key);
    return it->second;
  };
  const auto etype = parse_entity_type(need("entity type"));
  if (!etype) throw Error(Errc::Schema, "rewriter reply has an unknown entity type");
  FabricationResult r;
  r.source_id = query.id;
  r.fake_title = need("fake title");
  r.fake_entity = make_entity(need("fake entity"), *etype);
  r.original_entity = make_entity(need("original entity"), *etype);
  r.etype = *etype;
  return r;
}

FabricationResult RemoteRewriter::rewrite(const EmbeddingRecord& query,
                                          std::span<const EmbeddingRecord* const> candidates, Strategy strategy,
                                          Rng& /*rng*/) {
  const auto reply = chat_complete(endpoint_, build_prompt(query, candidates), "rewrite-" + query.id);
  auto r = parse_reply(reply, query);
  r.strategy = strategy;
  for (const auto* c : candidates) r.candidate_ids.push_back(c->id);
  try {
    check_result(r, query.title);
  } catch (const Error& e) {
    throw Error(Errc::Schema, "rewriter reply violates invariants: " + e.detail());
  }
  return r;
}

FabricationOutput fabricate_dataset(const Store& store, const FabricationConfig& cfg, TitleRewriter* rewriter) {
  if (!(cfg.fabrication_prob >= 0.0 && cfg.fabrication_prob <= 1.0)) {
    throw Error(Errc::InvalidArgument, "fabrication_prob must be in [0,1]");
  }
  RuleRewriter rule;
  TitleRewriter& writer = rewriter ? *rewriter : rule;

  struct Outcome {
    std::optional<Sample> sample;
    std::optional<FabricationResult> fabrication;
    std::string skip_reason;
  };
  std::vector<Outcome> outcomes(store.size());

  if (cfg.temporal_threshold) {
    for (const auto& r : store.records()) {
      if (!r.timestamp) throw Error(Errc::MissingField, "timestamp on record " + r.id);
    }
  }

  // Retrieval needs at least k+1 records, so a fabrication attempt on a
  // smaller store reports StoreTooSmall rather than skipping.
  parallel_for(store.size(), cfg.threads, [&](std::size_t i) {
    const auto& rec = store[i];
    Rng rng = Rng::for_key(cfg.seed, rec.id);
    Sample s;
    s.id = rec.id;
    s.task = TaskKind::MD;
    s.title = rec.title;
    s.timestamp = rec.timestamp;
    if (!rng.bernoulli(cfg.fabrication_prob)) {
      s.label = Label::Real;
      outcomes[i].sample = std::move(s);
      return;
    }
    const Strategy strategy = pick_strategy(rng);
    const auto hits = retrieve(store, rec, strategy, cfg.top_k, rng);
    std::vector<const EmbeddingRecord*> candidates;
    for (const auto& h : hits) candidates.push_back(&store[h.index]);
    try {
      auto result = writer.rewrite(rec, candidates, strategy, rng);
      s.title = result.fake_title;
      s.label = Label::Fake;
      s.fake_entity = result.fake_entity;
      s.retrieval_strategy = std::string(to_string(strategy));
      outcomes[i].sample = std::move(s);
      outcomes[i].fabrication = std::move(result);
    } catch (const Error& e) {
      if (e.code() != Errc::NoTypedCandidate && e.code() != Errc::AmbiguousSurface &&
          e.code() != Errc::EntityNotInTitle) {
        throw;
      }
      outcomes[i].skip_reason = std::string(errc_name(e.code()));
    }
  });

  FabricationOutput out;
  for (auto& o : outcomes) {
    if (!o.sample) {
      ++out.skipped;
      ++out.skip_reasons[o.skip_reason];
      continue;
    }
    const bool to_test = cfg.temporal_threshold && *o.sample->timestamp >= *cfg.temporal_threshold;
    (to_test ? out.test : out.train).push_back(std::move(*o.sample));
    if (o.fabrication) out.fabrications.push_back(std::move(*o.fabrication));
  }
  return out;
}

nlohmann::ordered_json result_to_json(const FabricationResult& r) {
  nlohmann::ordered_json j;
  j["source_id"] = r.source_id;
  j["fake_title"] = r.fake_title;
  j["fake_entity"] = entity_to_json(r.fake_entity);
  j["original_entity"] = entity_to_json(r.original_entity);
  j["etype"] = std::string(to_string(r.etype));
  j["strategy"] = std::string(to_string(r.strategy));
  j["candidate_ids"] = r.candidate_ids;
  return j;
}

EmbeddingRecord record_from_json(const nlohmann::json& j, bool normalize_vectors) {
  if (!j.is_object()) throw Error(Errc::Schema, "record must be an object");
  EmbeddingRecord r;
  if (!j.contains("id") || !j["id"].is_string()) throw Error(Errc::MissingField, "id");
  r.id = j["id"].get<std::string>();
  if (j.contains("title")) {
    if (!j["title"].is_string()) throw Error(Errc::Schema, "title must be a string");
    r.title = j["title"].get<std::string>();
  }
  if (j.contains("entities")) {
    if (!j["entities"].is_array()) throw Error(Errc::Schema, "entities must be an array");
    for (const auto& e : j["entities"]) r.entities.push_back(entity_from_json(e));
  }
  r.img_vec = vector_from_json(j, "img_vec");
  r.txt_vec = vector_from_json(j, "txt_vec");
  if (normalize_vectors) {
    normalize(r.img_vec);
    normalize(r.txt_vec);
  }
  if (j.contains("timestamp")) {
    if (!j["timestamp"].is_string()) throw Error(Errc::Schema, "timestamp must be a string");
    r.timestamp = j["timestamp"].get<std::string>();
  }
  return r;
}

nlohmann::ordered_json record_to_json(const EmbeddingRecord& r) {
  nlohmann::ordered_json j;
  j["id"] = r.id;
  j["title"] = r.title;
  j["entities"] = nlohmann::ordered_json::array();
  for (const auto& e : r.entities) j["entities"].push_back(entity_to_json(e));
  j["img_vec"] = r.img_vec;
  j["txt_vec"] = r.txt_vec;
  if (r.timestamp) j["timestamp"] = *r.timestamp;
  return j;
}

std::vector<EmbeddingRecord> read_records_jsonl(std::istream& in, bool normalize_vectors) {
  std::vector<EmbeddingRecord> out;
  for_each_jsonl_line(in, [&](std::size_t number, const std::string& line) {
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line), normalize_vectors));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::Schema, "line " + std::to_string(number) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(number) + ": " + e.detail());
    }
  });
  return out;
}

}  // namespace factgym::fabricate
