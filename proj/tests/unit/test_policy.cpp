#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "../support/oracles.hpp"
#include "factgym/judge.hpp"
#include "factgym/policy.hpp"
#include "factgym/rewards.hpp"
#include "factgym/synth_env.hpp"
#include "factgym/textmetrics.hpp"

using namespace factgym;
using namespace factgym::policy;

namespace {

Features features_for(Rng& rng) {
  Features x{};
  for (double& v : x) v = rng.normal();
  return x;
}

// Joint log-probability from per-head logits, computed independently of the
// policy's own head code.
double oracle_log_prob(const ToyPolicy& pol, const Features& x, const Action& a) {
  const auto p = pol.params();
  auto logits = [&](std::size_t first, std::size_t count) {
    std::vector<double> z(count, 0.0);
    for (std::size_t c = 0; c < count; ++c) {
      for (std::size_t f = 0; f < kFeatureDim; ++f) z[c] += p[(first + c) * kFeatureDim + f] * x[f];
    }
    return oracle::log_softmax(z);
  };
  const std::size_t e0 = ToyPolicy::kLabelCols;
  const std::size_t s0 = e0 + ToyPolicy::kEntityCols;
  const std::size_t f0 = s0 + ToyPolicy::kStyleCols;
  return logits(0, 2)[a.label_choice == Label::Fake ? 1 : 0] + logits(e0, ToyPolicy::kEntityCols)[a.entity_choice] +
         logits(s0, 2)[a.style_choice ? 1 : 0] + logits(f0, 2)[a.format_choice ? 1 : 0];
}

}  // namespace

TEST_CASE("action indexing is a bijection") {
  std::set<std::size_t> seen;
  for (const auto& a : all_actions()) {
    const auto i = action_index(a);
    CHECK(i < kActionCount);
    CHECK(action_from_index(i) == a);
    seen.insert(i);
  }
  CHECK(seen.size() == kActionCount);
}

TEST_CASE("zero params give the uniform policy") {
  const ToyPolicy pol;
  const Features x{1, 0, 1, 0, 0, 0.5, -2, 3};
  for (const auto& a : all_actions()) {
    CHECK(pol.log_prob(x, a) == doctest::Approx(-(3 * std::log(2.0) + std::log(5.0))).epsilon(1e-12));
  }
  CHECK(pol.log_prob(x, all_actions()[0]) == doctest::Approx(-3.6889).epsilon(1e-4));
}

TEST_CASE("log_prob normalizes and matches the oracle") {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pol = ToyPolicy::random(rng, 2.0);
    const auto x = features_for(rng);
    double total = 0.0;
    for (const auto& a : all_actions()) {
      const double lp = pol.log_prob(x, a);
      CHECK(lp == doctest::Approx(oracle_log_prob(pol, x, a)).epsilon(1e-12));
      total += std::exp(lp);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("log_prob stays finite for extreme logits") {
  ToyPolicy pol(ParamVector(ToyPolicy::kParamCount, 500.0));
  std::vector<double> p(pol.params().begin(), pol.params().end());
  p[0] = -800.0;
  pol.set_params(p);
  const Features x{1, 1, 0, 0, 0, 0, 0, 0};
  for (const auto& a : all_actions()) CHECK(std::isfinite(pol.log_prob(x, a)));
}

TEST_CASE("grad_log_prob matches central differences") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto pol = ToyPolicy::random(rng, 1.0);
    const auto x = features_for(rng);
    const auto a = action_from_index(rng.index(kActionCount));
    const auto numeric = oracle::numeric_gradient(
        [&](const std::vector<double>& p) { return oracle_log_prob(ToyPolicy(p), x, a); },
        std::vector<double>(pol.params().begin(), pol.params().end()), 1e-5);
    CHECK(oracle::relative_error(pol.grad_log_prob(x, a), numeric) < 1e-6);
  }
}

TEST_CASE("sampling follows the policy distribution") {
  Rng prng(9);
  const auto pol = ToyPolicy::random(prng, 1.0);
  const Features x{1, 0, 0, 1, 0, 0.1, 0.2, -0.3};
  std::vector<double> counts(kActionCount, 0.0);
  Rng rng(10);
  const int n = 200000;
  for (int i = 0; i < n; ++i) counts[action_index(pol.sample(x, rng))] += 1.0;
  for (const auto& a : all_actions()) {
    const double p = std::exp(pol.log_prob(x, a));
    CHECK(std::abs(counts[action_index(a)] / n - p) < 5.0 * std::sqrt(p * (1 - p) / n) + 1e-4);
  }
  const auto g = pol.greedy(x);
  for (const auto& a : all_actions()) CHECK(pol.log_prob(x, g) >= pol.log_prob(x, a));
}

TEST_CASE("checkpoints round trip bit-exactly and reject foreign files") {
  Rng rng(4);
  const auto pol = ToyPolicy::random(rng, 1.0);
  const auto dir = std::filesystem::temp_directory_path() / "factgym_policy_test";
  std::filesystem::create_directories(dir);
  const auto path = dir / checkpoint_name(12);
  save_params(path, pol.params());
  const auto back = load_params(path);
  CHECK(std::equal(back.begin(), back.end(), pol.params().begin(), pol.params().end()));
  CHECK(checkpoint_name(12) == "step_12.fgp");

  const auto junk = dir / "junk.fgp";
  std::ofstream(junk) << "not a checkpoint";
  CHECK_THROWS_AS(load_params(junk), Error);
  CHECK_THROWS_AS(load_params(dir / "missing.fgp"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("synthetic generator construction rules") {
  SynthConfig cfg;
  cfg.swap_prob = 1.0;
  cfg.signal_noise = 0.0;
  for (int i = 0; i < 100; ++i) {
    Rng rng = Rng::for_key(1, "g", i);
    const auto item = gen_sample(cfg, rng, "x");
    CHECK(item.sample.label == Label::Fake);
    CHECK(item.features[0] == 1.0);
    REQUIRE(item.candidates.size() == kCandidateSlots);
    std::size_t cue = 0;
    for (std::size_t k = 0; k < kCandidateSlots; ++k) {
      if (item.features[1 + k] == 1.0) cue = k;
      CHECK(static_cast<std::size_t>(item.candidates[k].etype) == k);
    }
    CHECK(item.candidates[cue] == *item.sample.fake_entity);
    CHECK(item.sample.title.find(item.sample.fake_entity->surface) != std::string::npos);
    CHECK_NOTHROW(validate_sample(item.sample));
  }
  cfg.swap_prob = 0.0;
  Rng rng(2);
  const auto real = gen_sample(cfg, rng, "r");
  CHECK(real.sample.label == Label::Real);
  CHECK_FALSE(real.sample.fake_entity.has_value());

  Rng a = Rng::for_key(42, "s", 1), b = Rng::for_key(42, "s", 1);
  CHECK(gen_sample(SynthConfig{}, a, "z").sample == gen_sample(SynthConfig{}, b, "z").sample);
}

TEST_CASE("rendered responses compose with the parser, keywords and judge") {
  Rng rng(8);
  const auto item = gen_sample(SynthConfig{}, rng, "x");
  Action a{Label::Fake, 0, true, true};
  const auto text = render_response(a, item.candidates);
  const auto r = text::parse_response(text);
  CHECK(r.well_formed);
  CHECK(r.parsed_label == Label::Fake);
  CHECK(rewards::keyword_reward(r, rewards::KeywordPolicy{}) == 1.0);
  CHECK(lexical_judge({*r.think_span, item.candidates[0]}).correct);

  a.format_choice = false;
  CHECK_FALSE(text::parse_response(render_response(a, item.candidates)).well_formed);

  a = Action{Label::Real, kCandidateSlots, false, true};
  const auto none = text::parse_response(render_response(a, item.candidates));
  for (const auto& c : item.candidates) CHECK(none.think_span->find(c.surface) == std::string::npos);
}

TEST_CASE("auxiliary items reward the cued option") {
  for (auto task : {TaskKind::OCR, TaskKind::CAP}) {
    Rng rng(21);
    const auto item = gen_aux_sample(task, SynthConfig{}, rng, "aux");
    CHECK_NOTHROW(validate_sample(item.sample));
    std::size_t cue = 0;
    for (std::size_t k = 0; k < kCandidateSlots; ++k) {
      if (item.features[1 + k] == 1.0) cue = k;
    }
    const Action a{Label::Real, cue, false, true};
    CHECK(rewards::score_text(render(item, a), item.sample, rewards::ScoreDeps{}).breakdown.total == 1.0);
  }
}

TEST_CASE("task mix draws every task kind") {
  const TaskMix mix{1.0, 1.0, 1.0};
  int md = 0, ocr = 0, cap = 0;
  for (std::uint64_t i = 0; i < 300; ++i) {
    switch (draw_item(SynthConfig{}, mix, "mix", i).sample.task) {
      case TaskKind::MD: ++md; break;
      case TaskKind::OCR: ++ocr; break;
      case TaskKind::CAP: ++cap; break;
    }
  }
  CHECK(md > 60);
  CHECK(ocr > 60);
  CHECK(cap > 60);
  CHECK_THROWS_AS(draw_item(SynthConfig{}, TaskMix{0, 0, 0}, "mix", 0), Error);
}
