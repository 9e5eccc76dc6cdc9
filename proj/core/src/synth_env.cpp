#include "factgym/synth_env.hpp"

#include <array>

#include "factgym/textmetrics.hpp"

namespace factgym::policy {

namespace {

const std::array<std::vector<std::string>, kEntityTypeCount>& base_pools() {
  static const std::array<std::vector<std::string>, kEntityTypeCount> pools = {{
      {"Biden", "Trump", "Zelensky", "Macron", "Merkel", "Putin", "Modi", "Lula", "Sunak", "Scholz", "Kishida",
       "Erdogan", "Albanese", "Trudeau", "Ramaphosa", "Milei"},
      {"Red Sea", "Mediterranean Sea", "Kyiv", "Gaza", "Taipei", "Nairobi", "Lima", "Oslo", "Manila", "Cairo",
       "Bogota", "Hanoi", "Black Sea", "Lake Geneva", "Jakarta", "Dakar"},
      {"G20 Summit", "World Cup", "Climate Summit", "Olympic Games", "Earth Day", "Davos Forum", "World Expo",
       "Peace Talks", "Election Night", "Boston Marathon", "Nobel Ceremony", "Victory Parade", "Trade Fair",
       "Film Festival", "Book Fair", "Space Launch"},
      {"United Nations", "NATO", "World Bank", "Red Cross", "WHO", "UNICEF", "IMF", "Greenpeace", "OPEC", "Interpol",
       "FIFA", "UNESCO", "European Commission", "African Union", "Amnesty International", "Doctors Without Borders"},
  }};
  return pools;
}

std::string pool_name(EntityType type, std::size_t i) {
  const auto& pool = base_pools()[static_cast<std::size_t>(type)];
  if (i < pool.size()) return pool[i];
  static constexpr std::array<const char*, kEntityTypeCount> prefix = {"Envoy", "Port", "Forum", "Agency"};
  return std::string(prefix[static_cast<std::size_t>(type)]) + " " + std::to_string(i);
}

Entity draw_entity(const SynthConfig& cfg, EntityType type, Rng& rng) {
  return Entity{pool_name(type, rng.index(static_cast<std::size_t>(cfg.n_entities_pool))), type};
}

Entity draw_other(const SynthConfig& cfg, const Entity& not_this, Rng& rng) {
  // Pool size >= 2 is guaranteed by validate().
  for (;;) {
    Entity e = draw_entity(cfg, not_this.etype, rng);
    if (e.surface != not_this.surface) return e;
  }
}

std::string headline(const std::array<Entity, kEntityTypeCount>& e) {
  return e[0].surface + " meets " + e[3].surface + " officials in " + e[1].surface + " ahead of " + e[2].surface;
}

std::string caption_for(const std::array<Entity, kEntityTypeCount>& e) {
  return "Footage shows " + e[0].surface + " with " + e[3].surface + " delegates in " + e[1].surface +
         " before the " + e[2].surface + ".";
}

std::array<Entity, kEntityTypeCount> draw_story(const SynthConfig& cfg, Rng& rng) {
  std::array<Entity, kEntityTypeCount> story;
  for (int t = 0; t < kEntityTypeCount; ++t) story[t] = draw_entity(cfg, static_cast<EntityType>(t), rng);
  return story;
}

void fill_noise(Features& x, Rng& rng) {
  for (std::size_t f = 1 + kEntityTypeCount; f < kFeatureDim; ++f) x[f] = rng.normal();
}

std::string corrupt(const std::string& text, std::size_t edits, Rng& rng) {
  auto cps = text::decode_utf8(text);
  for (std::size_t k = 0; k < edits && !cps.empty(); ++k) {
    const auto pos = rng.index(cps.size());
    cps[pos] = static_cast<char32_t>(U'a' + rng.index(26));
  }
  return text::encode_utf8(cps);
}

std::string think_text(bool style, const std::string& body, const std::string& entity_sentence) {
  if (!style) return "I compare the title with " + body + "." + entity_sentence;
  return "First, I compare the title with " + body + ". However, some details need checking." +
         entity_sentence + " In conclusion, the verdict follows.";
}

std::string wrap(const Action& a, const std::string& think, std::string_view answer) {
  std::string out = "<think>" + think;
  if (a.format_choice) out += "</think>";
  out += "<answer>";
  out += answer;
  out += "</answer>";
  return out;
}

}  // namespace

void validate(const SynthConfig& cfg) {
  if (cfg.n_entities_pool < 2) throw Error(Errc::InvalidArgument, "n_entities_pool must be at least 2");
  if (!(cfg.swap_prob >= 0.0 && cfg.swap_prob <= 1.0)) throw Error(Errc::InvalidArgument, "swap_prob");
  if (!(cfg.signal_noise >= 0.0 && cfg.signal_noise < 0.5)) throw Error(Errc::InvalidArgument, "signal_noise");
}

SynthItem gen_sample(const SynthConfig& cfg, Rng& rng, std::string id) {
  validate(cfg);
  SynthItem item;
  const auto story = draw_story(cfg, rng);
  const bool fake = rng.bernoulli(cfg.swap_prob);
  const auto cue = rng.index(kEntityTypeCount);

  auto shown = story;
  item.sample.id = std::move(id);
  item.sample.task = TaskKind::MD;
  item.sample.caption = caption_for(story);
  if (fake) {
    const Entity replacement = draw_other(cfg, story[cue], rng);
    shown[cue] = replacement;
    item.sample.label = Label::Fake;
    item.sample.fake_entity = replacement;
  } else {
    item.sample.label = Label::Real;
  }
  item.sample.title = headline(shown);
  item.candidates.assign(shown.begin(), shown.end());

  const bool flip = rng.bernoulli(cfg.signal_noise);
  item.features[0] = (fake != flip) ? 1.0 : 0.0;
  item.features[1 + cue] = 1.0;
  fill_noise(item.features, rng);
  return item;
}

SynthItem gen_aux_sample(TaskKind task, const SynthConfig& cfg, Rng& rng, std::string id) {
  if (task == TaskKind::MD) return gen_sample(cfg, rng, std::move(id));
  validate(cfg);
  SynthItem item;
  const auto story = draw_story(cfg, rng);
  const auto correct = rng.index(kCandidateSlots);
  item.sample.id = std::move(id);
  item.sample.task = task;
  item.sample.title = headline(story);

  std::string truth;
  if (task == TaskKind::OCR) {
    truth = "LIVE: " + story[0].surface + " in " + story[1].surface;
    item.sample.ocr_ground_truth = truth;
  } else {
    truth = caption_for(story);
    item.sample.caption = truth;
    item.sample.caption_ground_truth = truth;
  }

  item.answer_options.resize(kCandidateSlots);
  for (std::size_t k = 0; k < kCandidateSlots; ++k) {
    if (k == correct) {
      item.answer_options[k] = truth;
    } else if (task == TaskKind::OCR) {
      item.answer_options[k] = corrupt(truth, 2 + rng.index(6), rng);
    } else {
      item.answer_options[k] = caption_for(draw_story(cfg, rng));
    }
  }
  item.features[0] = 0.0;
  item.features[1 + correct] = 1.0;
  fill_noise(item.features, rng);
  return item;
}

std::string render_response(const Action& a, const std::vector<Entity>& candidates) {
  std::string entity_sentence;
  if (a.entity_choice < kCandidateSlots && a.entity_choice < candidates.size()) {
    entity_sentence = " The mention of " + candidates[a.entity_choice].surface + " does not match the footage.";
  }
  return wrap(a, think_text(a.style_choice, "the caption of the footage", entity_sentence), to_string(a.label_choice));
}

std::string render_aux_response(const Action& a, const std::vector<std::string>& options) {
  std::string_view answer;
  if (a.entity_choice < kCandidateSlots && a.entity_choice < options.size()) answer = options[a.entity_choice];
  return wrap(a, think_text(a.style_choice, "the text visible in the frame", ""), answer);
}

std::string render(const SynthItem& item, const Action& a) {
  if (item.sample.task == TaskKind::MD) return render_response(a, item.candidates);
  return render_aux_response(a, item.answer_options);
}

SynthItem draw_item(const SynthConfig& cfg, const TaskMix& mix, std::string_view stream, std::uint64_t index) {
  Rng rng = Rng::for_key(cfg.seed, stream, index);
  const double total = mix.md + mix.ocr + mix.cap;
  if (!(total > 0.0) || mix.md < 0.0 || mix.ocr < 0.0 || mix.cap < 0.0) {
    throw Error(Errc::InvalidArgument, "task mix must be non-negative with a positive sum");
  }
  const double u = rng.uniform() * total;
  TaskKind task = TaskKind::MD;
  if (u >= mix.md) task = u < mix.md + mix.ocr ? TaskKind::OCR : TaskKind::CAP;
  return gen_aux_sample(task, cfg, rng, std::string(stream) + "-" + std::to_string(index));
}

PolicyEval evaluate_md(const PolicyInterface& policy, const SynthConfig& cfg, std::size_t n, std::uint64_t seed,
                       const rewards::ScoreDeps& deps, bool greedy) {
  PolicyEval ev;
  ev.n = n;
  if (n == 0) return ev;
  std::size_t fakes = 0;
  double reward = 0.0, acc = 0.0, fmt = 0.0, ent = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::for_key(seed, "heldout", i);
    const auto item = gen_sample(cfg, rng, "heldout-" + std::to_string(i));
    Rng act_rng = Rng::for_key(seed, "heldout-act", i);
    const Action a = greedy ? policy.greedy(item.features) : policy.sample(item.features, act_rng);
    const auto result = rewards::score_text(render(item, a), item.sample, deps);
    reward += result.breakdown.total;
    acc += result.breakdown.r_acc;
    fmt += result.breakdown.r_format;
    if (item.sample.label == Label::Fake) {
      ++fakes;
      ent += result.breakdown.r_entity;
    }
  }
  const double dn = static_cast<double>(n);
  ev.mean_reward = reward / dn;
  ev.accuracy = acc / dn;
  ev.format_rate = fmt / dn;
  ev.entity_rate = fakes ? ent / static_cast<double>(fakes) : 0.0;
  return ev;
}

}  // namespace factgym::policy
