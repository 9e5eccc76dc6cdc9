#include "factgym/dpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "factgym/json_io.hpp"

namespace factgym::dpo {

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

nlohmann::ordered_json action_to_json(const policy::Action& a) {
  nlohmann::ordered_json j;
  j["label"] = std::string(to_string(a.label_choice));
  j["entity"] = a.entity_choice;
  j["style"] = a.style_choice;
  j["format"] = a.format_choice;
  return j;
}

policy::Action action_from_json(const nlohmann::json& j) {
  try {
    policy::Action a;
    const auto label = parse_label(j.at("label").get<std::string>());
    if (!label) throw Error(Errc::Schema, "action.label");
    a.label_choice = *label;
    a.entity_choice = j.at("entity").get<std::size_t>();
    if (a.entity_choice > policy::kCandidateSlots) throw Error(Errc::Schema, "action.entity out of range");
    a.style_choice = j.at("style").get<bool>();
    a.format_choice = j.at("format").get<bool>();
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Schema, std::string("action: ") + e.what());
  }
}

RenderedResponse response_from_json(const nlohmann::json& j, const char* side) {
  if (!j.is_object() || !j.contains("text") || !j["text"].is_string()) {
    throw Error(Errc::Schema, std::string(side) + ".text");
  }
  RenderedResponse r{j["text"].get<std::string>(), std::nullopt};
  if (j.contains("action")) r.action = action_from_json(j["action"]);
  return r;
}

const policy::Features& features_of(const PreferencePair& pair) {
  if (!pair.features || !pair.preferred.action || !pair.dispreferred.action) {
    throw Error(Errc::MissingField, "pair " + pair.sample_id + " lacks features or action encodings");
  }
  return *pair.features;
}

}  // namespace

void validate(const PreferencePair& pair) {
  if (pair.preferred.text == pair.dispreferred.text) {
    throw Error(Errc::InvalidArgument, "pair " + pair.sample_id + ": preferred equals dispreferred");
  }
  if (pair.preferred.action && pair.dispreferred.action && *pair.preferred.action == *pair.dispreferred.action) {
    throw Error(Errc::InvalidArgument, "pair " + pair.sample_id + ": identical actions");
  }
}

void validate(const DpoConfig& cfg) {
  if (!(cfg.beta > 0.0)) throw Error(Errc::InvalidArgument, "beta must be positive");
  if (cfg.epochs < 0) throw Error(Errc::InvalidArgument, "epochs must be non-negative");
  if (cfg.batch_size < 1) throw Error(Errc::InvalidArgument, "batch_size must be positive");
  if (!(cfg.max_grad_norm > 0.0)) throw Error(Errc::InvalidArgument, "max_grad_norm must be positive");
  if (!std::isfinite(cfg.learning_rate)) throw Error(Errc::InvalidArgument, "learning_rate must be finite");
}

double dpo_reward(double logp_current, double logp_ref) { return logp_current - logp_ref; }

double dpo_loss(double r_w, double r_l, double beta) { return softplus(-beta * (r_w - r_l)); }

double dpo_loss_margin_grad(double r_w, double r_l, double beta) { return -beta * sigmoid(-beta * (r_w - r_l)); }

PairTerms pair_terms(const policy::PolicyInterface& current, const policy::PolicyInterface& ref,
                     const PreferencePair& pair, double beta) {
  const auto& x = features_of(pair);
  const double r_w = dpo_reward(current.log_prob(x, *pair.preferred.action), ref.log_prob(x, *pair.preferred.action));
  const double r_l =
      dpo_reward(current.log_prob(x, *pair.dispreferred.action), ref.log_prob(x, *pair.dispreferred.action));
  return PairTerms{dpo_loss(r_w, r_l, beta), beta * (r_w - r_l)};
}

PairTerms batch_terms(const policy::PolicyInterface& current, const policy::PolicyInterface& ref,
                      std::span<const PreferencePair> pairs, double beta, std::span<double> grad_out) {
  PairTerms mean;
  if (pairs.empty()) return mean;
  const double n = static_cast<double>(pairs.size());
  for (const auto& pair : pairs) {
    const auto& x = features_of(pair);
    const double r_w =
        dpo_reward(current.log_prob(x, *pair.preferred.action), ref.log_prob(x, *pair.preferred.action));
    const double r_l =
        dpo_reward(current.log_prob(x, *pair.dispreferred.action), ref.log_prob(x, *pair.dispreferred.action));
    mean.loss += dpo_loss(r_w, r_l, beta) / n;
    mean.margin += beta * (r_w - r_l) / n;
    if (!grad_out.empty()) {
      // The reference terms are constants; only the current log-probs move.
      const double g = dpo_loss_margin_grad(r_w, r_l, beta) / n;
      current.accumulate_grad_log_prob(x, *pair.preferred.action, g, grad_out);
      current.accumulate_grad_log_prob(x, *pair.dispreferred.action, -g, grad_out);
    }
  }
  return mean;
}

DpoLog train_dpo(policy::PolicyInterface& current, const policy::PolicyInterface& reference,
                 std::span<const PreferencePair> pairs, const DpoConfig& cfg) {
  validate(cfg);
  if (pairs.empty()) throw Error(Errc::Empty, "no preference pairs");
  for (const auto& p : pairs) {
    validate(p);
    features_of(p);
  }

  DpoLog log;
  std::vector<std::size_t> order(pairs.size());
  std::vector<PreferencePair> minibatch;
  const auto batch_size = static_cast<std::size_t>(cfg.batch_size);
  std::size_t batch_counter = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng::for_key(cfg.seed, "dpo-shuffle", static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);

    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      minibatch.clear();
      for (std::size_t k = start; k < std::min(order.size(), start + batch_size); ++k) {
        minibatch.push_back(pairs[order[k]]);
      }
      std::vector<double> grad(current.params().size(), 0.0);
      const auto terms = batch_terms(current, reference, minibatch, cfg.beta, grad);
      double norm = 0.0;
      for (double g : grad) norm += g * g;
      norm = std::sqrt(norm);
      const double clip = norm > cfg.max_grad_norm ? cfg.max_grad_norm / norm : 1.0;
      std::vector<double> params(current.params().begin(), current.params().end());
      for (std::size_t p = 0; p < params.size(); ++p) params[p] -= cfg.learning_rate * clip * grad[p];
      const bool finite = std::isfinite(terms.loss) && std::isfinite(norm) &&
                          std::all_of(params.begin(), params.end(), [](double v) { return std::isfinite(v); });
      if (!finite) throw Error(Errc::NonFinite, "non-finite update at batch " + std::to_string(batch_counter + 1));
      current.set_params(params);
      log.push_back(BatchLog{++batch_counter, static_cast<std::size_t>(epoch), terms.loss, terms.margin, norm});
    }
  }
  return log;
}

std::vector<PreferencePair> synth_preference_pairs(const policy::SynthConfig& env_cfg, std::size_t n,
                                                   std::uint64_t seed) {
  std::vector<PreferencePair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::for_key(seed, "dpo-pairs", i);
    const auto item = policy::gen_sample(env_cfg, rng, "pair-" + std::to_string(i));
    const Label truth = *item.sample.label;

    policy::Action good;
    good.label_choice = truth;
    good.style_choice = true;
    good.format_choice = true;
    good.entity_choice = policy::kCandidateSlots;
    if (truth == Label::Fake) {
      const auto it = std::find(item.candidates.begin(), item.candidates.end(), *item.sample.fake_entity);
      good.entity_choice = static_cast<std::size_t>(std::distance(item.candidates.begin(), it));
    }

    policy::Action bad = good;
    if (rng.bernoulli(0.5)) {
      bad.label_choice = truth == Label::Fake ? Label::Real : Label::Fake;
    } else {
      bad.format_choice = false;
    }
    bad.style_choice = rng.bernoulli(0.5);
    bad.entity_choice = rng.index(policy::kCandidateSlots + 1);

    PreferencePair pair;
    pair.sample_id = item.sample.id;
    pair.features = item.features;
    pair.preferred = {policy::render(item, good), good};
    pair.dispreferred = {policy::render(item, bad), bad};
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

nlohmann::ordered_json pair_to_json(const PreferencePair& pair) {
  nlohmann::ordered_json j;
  j["sample_id"] = pair.sample_id;
  auto side = [](const RenderedResponse& r) {
    nlohmann::ordered_json s;
    s["text"] = r.text;
    if (r.action) s["action"] = action_to_json(*r.action);
    return s;
  };
  j["preferred"] = side(pair.preferred);
  j["dispreferred"] = side(pair.dispreferred);
  if (pair.features) j["features"] = *pair.features;
  return j;
}

PreferencePair pair_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::Schema, "pair must be an object");
  if (!j.contains("sample_id") || !j["sample_id"].is_string()) throw Error(Errc::MissingField, "sample_id");
  if (!j.contains("preferred")) throw Error(Errc::MissingField, "preferred");
  if (!j.contains("dispreferred")) throw Error(Errc::MissingField, "dispreferred");
  PreferencePair pair;
  pair.sample_id = j["sample_id"].get<std::string>();
  pair.preferred = response_from_json(j["preferred"], "preferred");
  pair.dispreferred = response_from_json(j["dispreferred"], "dispreferred");
  if (j.contains("features")) {
    const auto& f = j["features"];
    if (!f.is_array() || f.size() != policy::kFeatureDim) throw Error(Errc::Schema, "features must have length 8");
    policy::Features x{};
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (!f[k].is_number()) throw Error(Errc::Schema, "features must be numbers");
      x[k] = f[k].get<double>();
    }
    pair.features = x;
  }
  validate(pair);
  return pair;
}

std::vector<PreferencePair> read_pairs_jsonl(std::istream& in) {
  std::vector<PreferencePair> out;
  for_each_jsonl_line(in, [&](std::size_t number, const std::string& line) {
    try {
      out.push_back(pair_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::Schema, "line " + std::to_string(number) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(number) + ": " + e.detail());
    }
  });
  return out;
}

}  // namespace factgym::dpo
