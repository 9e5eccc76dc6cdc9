#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "factgym/dpo.hpp"
#include "factgym/evalkit.hpp"
#include "factgym/fabricate.hpp"
#include "factgym/grpo.hpp"
#include "factgym/judge.hpp"
#include "factgym/rewards.hpp"
#include "factgym/synth_env.hpp"
#include "factgym/textmetrics.hpp"

using namespace factgym;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---- rewards ---------------------------------------------------------------

std::string pick(Rng& rng, const std::vector<std::string>& v) { return v[rng.index(v.size())]; }

std::string random_words(Rng& rng, std::size_t max_words) {
  static const std::vector<std::string> vocab{"first",  "however", "in conclusion", "therefore", "finally",
                                              "the",    "caption", "Mediterranean Sea", "Red Sea", "boat",
                                              "\xC3\xA9t\xC3\xA9", "\xE2\x80\x94", "FIRST,", "<think>", "answer"};
  std::string out;
  const std::size_t n = rng.index(max_words + 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += rng.bernoulli(0.8) ? " " : ", ";
    out += pick(rng, vocab);
  }
  return out;
}

std::string random_response(Rng& rng, const std::string& answer) {
  std::string r;
  if (rng.bernoulli(0.1)) r += random_words(rng, 3);
  if (rng.bernoulli(0.9)) r += "<think>";
  r += random_words(rng, 12);
  if (rng.bernoulli(0.85)) r += "</think>";
  if (rng.bernoulli(0.05)) r += "\n";
  if (rng.bernoulli(0.9)) r += "<answer>";
  r += answer;
  if (rng.bernoulli(0.9)) r += "</answer>";
  if (rng.bernoulli(0.05)) r += random_words(rng, 2);
  return r;
}

RewardWeights random_weights(Rng& rng) {
  auto simplex = [&](std::size_t n) {
    std::vector<double> v(n);
    double s = 0;
    for (double& x : v) s += (x = rng.uniform() + 1e-3);
    for (double& x : v) x /= s;
    // Push rounding into the last component so the branch sums to 1 exactly.
    v.back() = 1.0 - std::accumulate(v.begin(), v.end() - 1, 0.0);
    return v;
  };
  RewardWeights w;
  auto r = simplex(3);
  w.real_branch = {r[0], r[1], r[2]};
  auto f = simplex(4);
  w.fake_branch = {f[0], f[1], f[2], f[3]};
  auto a = simplex(2);
  w.aux = {a[0], a[1]};
  return w;
}

Outcome reward_bounds() {
  const auto t0 = Clock::now();
  const std::size_t n = 100000;
  std::size_t checked = 0;
  double worst = 0.0;
  bool ok = true;
  std::string first_failure;
  for (auto task : {TaskKind::MD, TaskKind::OCR, TaskKind::CAP}) {
    for (std::size_t i = 0; i < n; ++i) {
      Rng rng = Rng::for_key(1234, std::string(to_string(task)), i);
      Sample s;
      s.id = "s" + std::to_string(i);
      s.task = task;
      std::string answer;
      if (task == TaskKind::MD) {
        s.label = rng.bernoulli(0.5) ? Label::Fake : Label::Real;
        if (*s.label == Label::Fake) {
          s.fake_entity = make_entity(rng.bernoulli(0.5) ? "Mediterranean Sea" : "Red Sea", EntityType::Location);
        }
        answer = pick(rng, {"real", "fake", "Fake", " REAL ", "maybe", "", "fake real"});
      } else {
        const std::string truth = random_words(rng, 8);
        (task == TaskKind::OCR ? s.ocr_ground_truth : s.caption_ground_truth) = truth;
        answer = rng.bernoulli(0.3) ? truth : random_words(rng, 8);
      }
      rewards::ScoreDeps deps;
      if (rng.bernoulli(0.5)) deps.weights = random_weights(rng);
      const auto res = rewards::score_text(random_response(rng, answer), s, deps);
      const auto& b = res.breakdown;
      const auto& w = deps.weights;
      double expected;
      if (task != TaskKind::MD) {
        expected = w.aux.acc * b.r_acc + w.aux.format * b.r_format;
      } else if (*s.label == Label::Real) {
        expected = w.real_branch.acc * b.r_acc + w.real_branch.format * b.r_format + w.real_branch.word * b.r_word;
      } else {
        expected = w.fake_branch.acc * b.r_acc + w.fake_branch.format * b.r_format +
                   w.fake_branch.word * b.r_word + w.fake_branch.entity * b.r_entity;
      }
      const double gap = std::abs(expected - b.total);
      worst = std::max(worst, gap);
      const bool in_range = b.total >= 0.0 && b.total <= 1.0;
      const bool parts_ok = b.r_acc >= 0.0 && b.r_acc <= 1.0 && (b.r_format == 0.0 || b.r_format == 1.0) &&
                            (b.r_word == 0.0 || b.r_word == 1.0) && (b.r_entity == 0.0 || b.r_entity == 1.0);
      if (!(in_range && parts_ok && gap <= 1e-12)) {
        if (ok) first_failure = " first failure " + std::string(to_string(task)) + " #" + std::to_string(i);
        ok = false;
      }
      ++checked;
    }
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 30.0;
  return {ok, std::to_string(checked) + " pairs, max identity gap " + fmt("%.2e", worst) + ", " + fmt("%.1fs", secs) +
                  " (limit 30s)" + first_failure};
}

// ---- text metrics ------------------------------------------------------------

Outcome metric_oracles() {
  const auto t0 = Clock::now();
  static const std::vector<std::string> glyphs{"a", "b", "c", "d", " ", "\xC3\xA9", "\xE2\x82\xAC", "\xF0\x9F\x98\x80"};
  static const std::vector<std::string> words{"a", "b", "c", "d", "e"};
  std::size_t edit_mismatch = 0, rouge_mismatch = 0, exhaustive_checked = 0;
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::for_key(77, "metrics", i);
    auto glyph_string = [&] {
      std::string s;
      const std::size_t len = rng.index(41);
      for (std::size_t k = 0; k < len; ++k) s += pick(rng, glyphs);
      return s;
    };
    const auto a = glyph_string(), b = glyph_string();
    if (text::edit_distance(a, b) != oracle::edit_distance(a, b)) ++edit_mismatch;

    // Word strings of at most 40 characters.
    auto word_string = [&] {
      std::string s;
      const std::size_t len = rng.index(41);
      while (true) {
        const auto w = pick(rng, words);
        if (s.size() + (s.empty() ? 0 : 1) + w.size() > len) break;
        if (!s.empty()) s += ' ';
        s += w;
      }
      return s;
    };
    const auto c = word_string(), r = word_string();
    const auto ct = oracle::split_spaces(c), rt = oracle::split_spaces(r);
    std::vector<int> ci, ri;
    for (const auto& t : ct) ci.push_back(t[0]);
    for (const auto& t : rt) ri.push_back(t[0]);
    const auto& shorter = ci.size() <= ri.size() ? ci : ri;
    const auto& longer = ci.size() <= ri.size() ? ri : ci;
    const std::size_t lcs = oracle::lcs_exhaustive(shorter, longer);
    ++exhaustive_checked;
    if (text::rouge_l(c, r) != oracle::rouge_l_f1(lcs, ct.size(), rt.size())) ++rouge_mismatch;
  }
  const double secs = seconds_since(t0);
  const bool ok = edit_mismatch == 0 && rouge_mismatch == 0 && secs < 60.0;
  return {ok, std::to_string(n) + " pairs, edit mismatches " + std::to_string(edit_mismatch) +
                  ", rouge mismatches " + std::to_string(rouge_mismatch) + " (" + std::to_string(exhaustive_checked) +
                  " exhaustive LCS), " + fmt("%.1fs", secs) + " (limit 60s)"};
}

// ---- group advantages -------------------------------------------------------

Outcome advantages() {
  const auto t0 = Clock::now();
  double worst_mean = 0.0, worst_std = 0.0;
  std::size_t shift_failures = 0, degenerate_failures = 0;
  const std::size_t n = 10000;
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = Rng::for_key(5, "adv", i);
    const std::size_t g = 2 + rng.index(15);
    std::vector<double> r(g);
    do {
      for (double& v : r) v = rng.bernoulli(0.3) ? std::round(rng.uniform() * 10) / 10 : rng.uniform();
    } while (std::all_of(r.begin(), r.end(), [&](double v) { return v == r[0]; }));
    const auto a = grpo::group_advantages(r, 1e-8);
    long double mean = 0, var = 0;
    for (double v : a) mean += v;
    mean /= g;
    for (double v : a) var += (v - mean) * (v - mean);
    worst_mean = std::max(worst_mean, static_cast<double>(std::fabs(mean)));
    worst_std = std::max(worst_std, static_cast<double>(std::fabs(std::sqrt(var / g) - 1.0L)));

    // Shift invariance on a dyadic grid, where r + c is exactly representable.
    std::vector<double> grid(g);
    do {
      for (double& v : grid) v = static_cast<double>(rng.index(1025)) / 1024.0;
    } while (std::all_of(grid.begin(), grid.end(), [&](double v) { return v == grid[0]; }));
    const double c = (static_cast<double>(rng.index(4097)) - 2048.0) / 64.0;
    std::vector<double> shifted(grid);
    for (double& v : shifted) v += c;
    if (grpo::group_advantages(shifted, 1e-8) != grpo::group_advantages(grid, 1e-8)) ++shift_failures;

    std::vector<double> flat(g, rng.uniform());
    const auto z = grpo::group_advantages(flat, 1e-8);
    if (!std::all_of(z.begin(), z.end(), [](double v) { return v == 0.0; })) ++degenerate_failures;
  }
  const bool ok = worst_mean < 1e-9 && worst_std < 1e-6 && shift_failures == 0 && degenerate_failures == 0;
  return {ok, std::to_string(n) + " groups, max |mean| " + fmt("%.2e", worst_mean) + ", max |std-1| " +
                  fmt("%.2e", worst_std) + ", shift failures " + std::to_string(shift_failures) +
                  ", degenerate failures " + std::to_string(degenerate_failures) + ", " +
                  fmt("%.1fs", seconds_since(t0))};
}

// ---- gradients ----------------------------------------------------------------

using policy::ToyPolicy;

policy::Features random_features(Rng& rng) {
  policy::Features x{};
  x[0] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  x[1 + rng.index(policy::kCandidateSlots)] = 1.0;
  for (std::size_t k = 1 + policy::kCandidateSlots; k < policy::kFeatureDim; ++k) x[k] = rng.normal();
  return x;
}

policy::Action random_action(Rng& rng) { return policy::action_from_index(rng.index(policy::kActionCount)); }

std::vector<double> as_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

Outcome gradients() {
  const auto t0 = Clock::now();
  const double h = 1e-5;
  double err_lp = 0, err_dpo = 0, err_grpo = 0;
  std::size_t redraws = 0;
  for (std::size_t c = 0; c < 100; ++c) {
    Rng rng = Rng::for_key(2024, "grad", c);
    {
      const auto pol = ToyPolicy::random(rng, 1.0);
      const auto x = random_features(rng);
      const auto a = random_action(rng);
      const auto num = oracle::numeric_gradient(
          [&](const std::vector<double>& p) { return ToyPolicy(p).log_prob(x, a); }, as_vec(pol.params()), h);
      err_lp = std::max(err_lp, oracle::relative_error(pol.grad_log_prob(x, a), num));
    }
    {
      const auto cur = ToyPolicy::random(rng, 1.0);
      const auto ref = ToyPolicy::random(rng, 1.0);
      std::vector<dpo::PreferencePair> pairs(1 + rng.index(4));
      for (auto& p : pairs) {
        p.features = random_features(rng);
        const auto w = random_action(rng);
        auto l = random_action(rng);
        while (l == w) l = random_action(rng);
        p.preferred = {"w", w};
        p.dispreferred = {"l", l};
      }
      const double beta = 0.05 + rng.uniform();
      std::vector<double> grad(ToyPolicy::kParamCount, 0.0);
      dpo::batch_terms(cur, ref, pairs, beta, grad);
      const auto num = oracle::numeric_gradient(
          [&](const std::vector<double>& p) { return dpo::batch_terms(ToyPolicy(p), ref, pairs, beta).loss; },
          as_vec(cur.params()), h);
      err_dpo = std::max(err_dpo, oracle::relative_error(grad, num));
    }
    {
      grpo::GrpoConfig cfg;
      const auto cur = ToyPolicy::random(rng, 1.0);
      const auto ref = ToyPolicy::random(rng, 1.0);
      const auto x = random_features(rng);
      const std::size_t g = 2 + rng.index(7);
      for (;;) {
        auto old_params = as_vec(cur.params());
        for (double& v : old_params) v += 0.2 * rng.normal();
        const ToyPolicy old(old_params);
        grpo::GroupRollout ro;
        for (std::size_t i = 0; i < g; ++i) {
          grpo::RolloutResponse r;
          r.action = old.sample(x, rng);
          r.logp_old = old.log_prob(x, r.action);
          r.logp_ref = ref.log_prob(x, r.action);
          r.logp_current = cur.log_prob(x, r.action);
          ro.responses.push_back(r);
          ro.rewards.push_back(rng.uniform());
        }
        ro.advantages = grpo::group_advantages(ro.rewards, cfg.std_floor);
        bool kink = false;
        for (const auto& r : ro.responses) {
          const double ratio = std::exp(r.logp_current - r.logp_old);
          kink |= std::abs(ratio - (1 - cfg.clip_eps)) < 1e3 * h || std::abs(ratio - (1 + cfg.clip_eps)) < 1e3 * h;
        }
        if (kink) {
          ++redraws;
          continue;
        }
        std::vector<double> grad(ToyPolicy::kParamCount, 0.0);
        const auto coeff = grpo::grpo_loss_logp_grad(ro, cfg);
        for (std::size_t i = 0; i < g; ++i) cur.accumulate_grad_log_prob(x, ro.responses[i].action, coeff[i], grad);
        const auto num = oracle::numeric_gradient(
            [&](const std::vector<double>& p) {
              const ToyPolicy q(p);
              auto copy = ro;
              for (auto& r : copy.responses) r.logp_current = q.log_prob(x, r.action);
              return grpo::grpo_loss(copy, cfg).loss;
            },
            as_vec(cur.params()), h);
        err_grpo = std::max(err_grpo, oracle::relative_error(grad, num));
        break;
      }
    }
  }
  const double secs = seconds_since(t0);
  const double worst = std::max({err_lp, err_dpo, err_grpo});
  return {worst < 1e-4 && secs < 60.0, "100 configs at h=1e-5, max rel err log_prob " + fmt("%.2e", err_lp) +
                                          ", dpo " + fmt("%.2e", err_dpo) + ", grpo " + fmt("%.2e", err_grpo) +
                                          " (" + std::to_string(redraws) + " kink redraws), " + fmt("%.1fs", secs) +
                                          " (limit 60s)"};
}

// ---- on-policy identity ---------------------------------------------------------

Outcome on_policy() {
  const auto t0 = Clock::now();
  std::size_t groups = 0, nonzero = 0;
  grpo::GrpoConfig cfg;
  rewards::ScoreDeps deps;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    Rng rng = Rng::for_key(8, "onpolicy", trial);
    const auto pol = ToyPolicy::random(rng, 1.5);
    std::vector<policy::SynthItem> batch;
    for (std::uint64_t i = 0; i < 32; ++i) {
      batch.push_back(policy::draw_item(policy::SynthConfig{}, {1.0, 0.5, 0.5}, "onpolicy" + std::to_string(trial), i));
    }
    std::vector<grpo::GroupRollout> rollouts;
    auto scratch = pol;
    grpo::grpo_step(scratch, pol, pol, batch, cfg, deps, trial, &rollouts);
    for (const auto& ro : rollouts) {
      ++groups;
      if (grpo::grpo_loss(ro, cfg).loss != 0.0) ++nonzero;
    }
  }
  return {groups > 0 && nonzero == 0, std::to_string(groups) + " groups, non-zero losses " + std::to_string(nonzero) +
                                          ", " + fmt("%.1fs", seconds_since(t0))};
}

// ---- end-to-end GRPO ------------------------------------------------------------

Outcome e2e_grpo() {
  const auto t0 = Clock::now();
  grpo::GrpoConfig cfg;
  cfg.seed = 42;
  cfg.steps = 200;
  cfg.batch_samples_per_step = 32;
  policy::SynthConfig env;
  env.seed = 42;
  env.swap_prob = 0.5;
  env.signal_noise = 0.1;
  rewards::ScoreDeps deps;
  const auto result = grpo::train_grpo(cfg, env, deps);
  const auto ev = policy::evaluate_md(result.policy, env, 1000, cfg.seed, deps);
  const std::size_t q = result.log.size() / 4;
  double first = 0, last = 0;
  for (std::size_t i = 0; i < q; ++i) first += result.log[i].mean_reward / q;
  for (std::size_t i = result.log.size() - q; i < result.log.size(); ++i) last += result.log[i].mean_reward / q;
  const double secs = seconds_since(t0);
  const bool ok = ev.mean_reward > 0.8 && ev.accuracy > 0.85 && ev.format_rate > 0.95 && last > first && secs < 300;
  return {ok, "held-out reward " + fmt("%.4f", ev.mean_reward) + " (>0.8), accuracy " + fmt("%.4f", ev.accuracy) +
                  " (>0.85), format " + fmt("%.4f", ev.format_rate) + " (>0.95), quarter means " +
                  fmt("%.4f", first) + " -> " + fmt("%.4f", last) + ", " + fmt("%.1fs", secs) + " (limit 300s)"};
}

// ---- end-to-end DPO -----------------------------------------------------------

Outcome e2e_dpo() {
  const auto t0 = Clock::now();
  const auto pairs = dpo::synth_preference_pairs(policy::SynthConfig{}, 5000, 42);
  const ToyPolicy ref;
  ToyPolicy cur;
  dpo::DpoConfig cfg;
  cfg.beta = 0.1;
  cfg.epochs = 1;
  const auto before = dpo::batch_terms(cur, ref, pairs, cfg.beta);
  const auto log = dpo::train_dpo(cur, ref, pairs, cfg);
  const auto after = dpo::batch_terms(cur, ref, pairs, cfg.beta);
  std::array<double, 4> quarter{};
  const std::size_t q = log.size() / 4;
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t i = k * q; i < (k + 1) * q; ++i) quarter[k] += log[i].margin / q;
  }
  const bool rising = quarter[0] < quarter[1] && quarter[1] < quarter[2] && quarter[2] < quarter[3];
  const double secs = seconds_since(t0);
  const bool ok = after.margin > before.margin && rising && after.loss < std::log(2.0) && secs < 60.0;
  return {ok, "margin " + fmt("%.4f", before.margin) + " -> " + fmt("%.4f", after.margin) + ", batch quarters " +
                  fmt("%.3f", quarter[0]) + " < " + fmt("%.3f", quarter[1]) + " < " + fmt("%.3f", quarter[2]) + " < " +
                  fmt("%.3f", quarter[3]) + ", final loss " + fmt("%.4f", after.loss) + " (<ln2), " +
                  fmt("%.1fs", secs) + " (limit 60s)"};
}

// ---- retrieval ---------------------------------------------------------------

Outcome retrieval() {
  using namespace fabricate;
  const auto t0 = Clock::now();
  std::size_t compared = 0, mismatches = 0, ties_seen = 0, random_failures = 0;
  for (bool coarse : {false, true}) {
    const Store store = build_store(fixtures::news_records(10000, coarse ? 4 : 16, coarse ? 91 : 90, coarse));
    std::vector<std::string> ids;
    for (const auto& r : store.records()) ids.push_back(r.id);
    for (std::size_t qi = 0; qi < 300; ++qi) {
      const std::size_t q = (qi * 7919) % store.size();
      for (int s = 0; s < 4; ++s) {
        const auto strategy = static_cast<Strategy>(s);
        const bool q_img = strategy == Strategy::V2V || strategy == Strategy::V2T;
        const bool i_img = strategy == Strategy::V2V || strategy == Strategy::T2V;
        std::vector<double> scores;
        scores.reserve(store.size());
        for (const auto& r : store.records()) {
          scores.push_back(oracle::cosine(q_img ? store[q].img_vec : store[q].txt_vec, i_img ? r.img_vec : r.txt_vec));
        }
        const auto want = oracle::brute_top_k(scores, ids, q, 3);
        if (scores[want[2]] == scores[want[1]] || scores[want[1]] == scores[want[0]]) ++ties_seen;
        Rng unused(0);
        const auto got = retrieve(store, store[q], strategy, 3, unused);
        ++compared;
        bool same = got.size() == 3;
        for (std::size_t k = 0; same && k < 3; ++k) same = got[k].index == want[k];
        if (!same) ++mismatches;
      }
      Rng a = Rng::for_key(3, "random", qi), b = Rng::for_key(3, "random", qi);
      const auto x = retrieve(store, store[q], Strategy::RANDOM, 3, a);
      const auto y = retrieve(store, store[q], Strategy::RANDOM, 3, b);
      std::set<std::size_t> distinct;
      bool good = x.size() == 3;
      for (std::size_t k = 0; good && k < 3; ++k) {
        good = x[k].index == y[k].index && x[k].index != q && x[k].index < store.size();
        distinct.insert(x[k].index);
      }
      if (!good || distinct.size() != 3) ++random_failures;
    }
    // Uniformity of RANDOM: each record's pick count over many draws for one query.
    if (!coarse) {
      std::vector<int> buckets(10, 0);
      Rng rng(17);
      const int draws = 20000;
      for (int d = 0; d < draws; ++d) {
        for (const auto& hit : retrieve(store, store[0], Strategy::RANDOM, 3, rng)) ++buckets[hit.index * 10 / store.size()];
      }
      double chi2 = 0;
      const double expect = draws * 3.0 / 10.0;
      for (int c : buckets) chi2 += (c - expect) * (c - expect) / expect;
      if (chi2 > 27.88) ++random_failures;  // chi-square 9 dof, p = 0.001
    }
  }
  std::vector<int> counts(kStrategyCount, 0);
  Rng rng(2718);
  for (int i = 0; i < 10000; ++i) ++counts[static_cast<int>(pick_strategy(rng))];
  double worst = 0;
  for (int c : counts) worst = std::max(worst, std::abs(c / 10000.0 - 0.2));
  const bool ok = mismatches == 0 && ties_seen > 0 && random_failures == 0 && worst <= 0.02;
  return {ok, std::to_string(compared) + " top-3 queries on two 10^4 stores, mismatches " +
                  std::to_string(mismatches) + ", tied top-3 cases " + std::to_string(ties_seen) +
                  ", RANDOM failures " + std::to_string(random_failures) + ", pick_strategy max |f-0.2| " +
                  fmt("%.4f", worst) + ", " + fmt("%.1fs", seconds_since(t0))};
}

// ---- fabrication ----------------------------------------------------------------

Outcome fabrication() {
  using namespace fabricate;
  const auto t0 = Clock::now();
  const Store store = build_store(fixtures::news_records(3000, 8, 404));
  FabricationConfig cfg;
  cfg.fabrication_prob = 1.0;
  cfg.seed = 42;
  const auto out = fabricate_dataset(store, cfg);
  std::map<std::string, const Sample*> by_id;
  for (const auto& s : out.train) by_id[s.id] = &s;

  std::size_t checked = 0, type_bad = 0, diff_bad = 0, self_bad = 0, meta_bad = 0;
  for (const auto& f : out.fabrications) {
    if (checked == 1000) break;
    ++checked;
    const auto& src = store[*store.find(f.source_id)];
    if (f.fake_entity.etype != f.original_entity.etype || f.etype != f.original_entity.etype) ++type_bad;
    bool from_candidate = false;
    for (const auto& cid : f.candidate_ids) {
      for (const auto& e : store[*store.find(cid)].entities) from_candidate |= e == f.fake_entity;
    }
    if (!from_candidate) ++type_bad;

    const auto pos = src.title.find(f.original_entity.surface);
    if (pos == std::string::npos ||
        f.fake_title != src.title.substr(0, pos) + f.fake_entity.surface +
                            src.title.substr(pos + f.original_entity.surface.size()) ||
        f.fake_title.find(f.original_entity.surface) != std::string::npos) {
      ++diff_bad;
    }
    if (std::find(f.candidate_ids.begin(), f.candidate_ids.end(), f.source_id) != f.candidate_ids.end()) ++self_bad;

    const auto it = by_id.find(f.source_id);
    const bool meta = it != by_id.end() && it->second->label == Label::Fake && it->second->fake_entity == f.fake_entity &&
                      it->second->title == f.fake_title &&
                      it->second->retrieval_strategy == std::string(to_string(f.strategy)) &&
                      f.candidate_ids.size() == cfg.top_k && it->second->timestamp == src.timestamp;
    if (!meta) ++meta_bad;
  }

  EmbeddingRecord q;
  q.id = "q";
  q.title = "Three found alive and four bodies recovered after tourist boat capsizes in Red Sea";
  q.entities = {make_entity("Red Sea", EntityType::Location)};
  EmbeddingRecord c;
  c.id = "c";
  c.entities = {make_entity("Mediterranean Sea", EntityType::Location)};
  const EmbeddingRecord* cands[] = {&c};
  Rng rng(1);
  const auto red = swap_entity(q, cands, rng);
  const bool fixture =
      red.fake_title == "Three found alive and four bodies recovered after tourist boat capsizes in Mediterranean Sea";

  const bool ok = checked == 1000 && type_bad == 0 && diff_bad == 0 && self_bad == 0 && meta_bad == 0 && fixture;
  return {ok, std::to_string(checked) + " fabrications (" + std::to_string(out.skipped) +
                  " records skipped), violations type " + std::to_string(type_bad) + ", diff " +
                  std::to_string(diff_bad) + ", self " + std::to_string(self_bad) + ", metadata " +
                  std::to_string(meta_bad) + ", Red Sea fixture " + (fixture ? "exact" : "\"" + red.fake_title + "\"") +
                  ", " + fmt("%.1fs", seconds_since(t0))};
}

// ---- evaluation ---------------------------------------------------------------

Outcome evaluation() {
  const auto t0 = Clock::now();
  const Label F = Label::Fake, R = Label::Real;
  // tp=3, fp=1, fn=2, tn=4
  const std::vector<Label> truth{F, F, F, R, F, F, R, R, R, R};
  const std::vector<Label> pred{F, F, F, F, R, R, R, R, R, R};
  const auto c = eval::confusion(pred, truth);
  const auto m = eval::classification_metrics(c);
  const bool counts = c.tp == 3 && c.fp == 1 && c.fn == 2 && c.tn == 4;
  const bool values = std::abs(m.acc - 0.7) <= 1e-4 && std::abs(m.precision - 0.75) <= 1e-4 &&
                      std::abs(m.recall - 0.6) <= 1e-4 && std::abs(m.f1 - 0.6667) <= 1e-4;

  const Entity e = make_entity("Red Sea", EntityType::Location);
  std::vector<eval::ExplainItem> items;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    items.push_back({truth[i], pred[i], "the Red Sea mention is fabricated",
                     truth[i] == F ? std::optional<Entity>(e) : std::nullopt});
  }
  std::size_t calls = 0, excluded_calls = 0;
  const auto x = eval::explainability_accuracy(items, [&](const eval::ExplainItem& item) {
    ++calls;
    if (item.truth != F || item.pred != F) ++excluded_calls;
    return lexical_judge({item.think_span, *item.fake_entity}).correct;
  });
  const bool explain = calls == 3 && excluded_calls == 0 && x.n == 3 && x.accuracy && *x.accuracy == 1.0;
  return {counts && values && explain,
          "acc " + fmt("%.4f", m.acc) + ", precision " + fmt("%.4f", m.precision) + ", recall " +
              fmt("%.4f", m.recall) + ", f1 " + fmt("%.4f", m.f1) + ", judged " + std::to_string(calls) + " of " +
              std::to_string(items.size()) + " (excluded judged " + std::to_string(excluded_calls) + "), " +
              fmt("%.1fs", seconds_since(t0))};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> suites{
      {"reward-bounds", reward_bounds},      {"metric-oracles", metric_oracles},
      {"group-advantages", advantages},      {"gradients", gradients},
      {"on-policy-identity", on_policy},     {"e2e-grpo", e2e_grpo},
      {"e2e-dpo", e2e_dpo},                  {"retrieval-exactness", retrieval},
      {"fabrication-invariants", fabrication}, {"evaluation-fixture", evaluation},
  };
  int failures = 0;
  for (const auto& [name, fn] : suites) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
