#include <doctest.h>

#include <cmath>

#include "../support/oracles.hpp"
#include "factgym/grpo.hpp"

using namespace factgym;
using namespace factgym::grpo;

namespace {

void check_vec(const std::vector<double>& got, const std::vector<double>& want) {
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

std::vector<policy::SynthItem> batch_of(std::size_t n) {
  std::vector<policy::SynthItem> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(policy::draw_item(policy::SynthConfig{}, {}, "t", i));
  return out;
}

}  // namespace

TEST_CASE("group advantages examples") {
  check_vec(group_advantages(std::vector<double>{1, 0, 0, 1}, 1e-8), {1, -1, -1, 1});
  check_vec(group_advantages(std::vector<double>{0.7, 0.7, 0.7, 0.7}, 1e-8), {0, 0, 0, 0});
  check_vec(group_advantages(std::vector<double>{1, 0, 0, 0, 0}, 1e-8), {2.0, -0.5, -0.5, -0.5, -0.5});
  CHECK_THROWS_AS(group_advantages(std::vector<double>{1.0}, 1e-8), Error);
}

TEST_CASE("group advantages against a direct mean/std computation") {
  Rng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> r(2 + rng.index(15));
    for (double& v : r) v = rng.uniform();
    long double mean = 0;
    for (double v : r) mean += v;
    mean /= r.size();
    long double var = 0;
    for (double v : r) var += (v - mean) * (v - mean);
    const long double sd = std::sqrt(var / r.size());
    const auto adv = group_advantages(r, 1e-8);
    for (std::size_t i = 0; i < r.size(); ++i) {
      CHECK(adv[i] == doctest::Approx(static_cast<double>((r[i] - mean) / sd)).epsilon(1e-9));
    }
  }
}

TEST_CASE("KL estimate") {
  CHECK(kl_estimate(-1.5, -1.5) == 0.0);
  CHECK(kl_estimate(-2.0, -1.0) == doctest::Approx(std::exp(1.0) - 2.0).epsilon(1e-15));
  CHECK(kl_estimate(-1.0, -2.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(std::isfinite(kl_estimate(-1000.0, 0.0)));
  CHECK(kl_estimate(0.0, -1.0, KlEstimator::K2) == 0.5);
}

TEST_CASE("grpo loss by hand") {
  GroupRollout ro;
  ro.responses.resize(2);
  ro.responses[0].logp_current = std::log(1.5);  // ratio 1.5, clipped at 1.2 for A > 0
  ro.responses[0].logp_old = 0.0;
  ro.responses[0].logp_ref = std::log(1.5);
  ro.responses[1].logp_current = 0.0;
  ro.responses[1].logp_old = 0.0;
  ro.responses[1].logp_ref = 0.0;
  ro.advantages = {1.0, -1.0};
  GrpoConfig cfg;
  const auto r = grpo_loss(ro, cfg);
  CHECK(r.loss == doctest::Approx(-(1.2 * 1.0 + 1.0 * -1.0) / 2.0).epsilon(1e-14));
  CHECK(r.diagnostics.clip_frac == 0.5);
  CHECK(r.diagnostics.mean_kl == 0.0);
  const auto g = grpo_loss_logp_grad(ro, cfg);
  CHECK(g[0] == 0.0);  // flat inside the clipped branch
  CHECK(g[1] == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("grpo loss gradient matches finite differences") {
  GrpoConfig cfg;
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    GroupRollout ro;
    const std::size_t g = 2 + rng.index(6);
    std::vector<double> lp(g);
    for (std::size_t i = 0; i < g; ++i) {
      RolloutResponse r;
      r.logp_old = -1.0 - rng.uniform();
      r.logp_ref = -1.0 - rng.uniform();
      lp[i] = r.logp_old + 0.6 * (rng.uniform() - 0.5);
      ro.responses.push_back(r);
      ro.rewards.push_back(rng.uniform());
    }
    ro.advantages = group_advantages(ro.rewards, 1e-8);
    bool kink = false;
    for (std::size_t i = 0; i < g; ++i) {
      const double ratio = std::exp(lp[i] - ro.responses[i].logp_old);
      kink |= std::abs(ratio - 0.8) < 1e-3 || std::abs(ratio - 1.2) < 1e-3;
    }
    if (kink) continue;
    auto f = [&](const std::vector<double>& v) {
      auto copy = ro;
      for (std::size_t i = 0; i < g; ++i) copy.responses[i].logp_current = v[i];
      return grpo_loss(copy, cfg).loss;
    };
    for (std::size_t i = 0; i < g; ++i) ro.responses[i].logp_current = lp[i];
    CHECK(oracle::relative_error(grpo_loss_logp_grad(ro, cfg), oracle::numeric_gradient(f, lp, 1e-6)) < 1e-6);
  }
}

TEST_CASE("on-policy loss is exactly zero") {
  policy::ToyPolicy pol;
  Rng rng(2);
  pol = policy::ToyPolicy::random(rng, 0.5);
  std::vector<GroupRollout> rollouts;
  GrpoConfig cfg;
  rewards::ScoreDeps deps;
  auto copy = pol;
  grpo_step(copy, pol, pol, batch_of(16), cfg, deps, 0, &rollouts);
  for (auto ro : rollouts) {
    for (auto& r : ro.responses) r.logp_current = r.logp_old;
    CHECK(grpo_loss(ro, cfg).loss == 0.0);
  }
}

TEST_CASE("zero advantages with no KL leave params unchanged") {
  GrpoConfig cfg;
  cfg.kl_coeff = 0.0;
  cfg.std_floor = 10.0;  // every group counts as degenerate
  Rng rng(6);
  const auto start = policy::ToyPolicy::random(rng, 0.5);
  auto cur = start;
  grpo_step(cur, start, policy::ToyPolicy{}, batch_of(8), cfg, rewards::ScoreDeps{}, 0);
  CHECK(std::equal(cur.params().begin(), cur.params().end(), start.params().begin()));
}

TEST_CASE("grpo step is deterministic and independent of thread count") {
  GrpoConfig cfg;
  const auto batch = batch_of(12);
  rewards::ScoreDeps deps;
  auto run = [&](int threads) {
    cfg.threads = threads;
    policy::ToyPolicy cur;
    const policy::ToyPolicy old, ref;
    const auto rep = grpo_step(cur, old, ref, batch, cfg, deps, 3);
    return std::make_pair(rep, std::vector<double>(cur.params().begin(), cur.params().end()));
  };
  const auto a = run(1);
  const auto b = run(1);
  const auto c = run(4);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.first == c.first);
  CHECK(a.second == c.second);
}

TEST_CASE("train_grpo edge cases and validation") {
  GrpoConfig cfg;
  cfg.steps = 0;
  const auto r = train_grpo(cfg, policy::SynthConfig{}, rewards::ScoreDeps{});
  CHECK(r.log.empty());
  CHECK(std::all_of(r.policy.params().begin(), r.policy.params().end(), [](double v) { return v == 0.0; }));

  cfg.group_size = 1;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = GrpoConfig{};
  cfg.clip_eps = 0.0;
  CHECK_THROWS_AS(validate(cfg), Error);

  cfg = GrpoConfig{};
  cfg.steps = 3;
  cfg.learning_rate = 1e308;
  try {
    train_grpo(cfg, policy::SynthConfig{}, rewards::ScoreDeps{});
    FAIL("expected NonFinite");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NonFinite);
  }
}

TEST_CASE("mixed-task training trends upward") {
  GrpoConfig cfg;
  cfg.steps = 120;
  cfg.task_mix = {1.0, 0.5, 0.5};
  const auto r = train_grpo(cfg, policy::SynthConfig{}, rewards::ScoreDeps{});
  const std::size_t q = r.log.size() / 4;
  double first = 0, last = 0;
  std::size_t aux = 0;
  for (std::size_t i = 0; i < q; ++i) first += r.log[i].mean_reward;
  for (std::size_t i = r.log.size() - q; i < r.log.size(); ++i) last += r.log[i].mean_reward;
  for (const auto& s : r.log) aux += s.n_ocr + s.n_cap;
  CHECK(last > first);
  CHECK(aux > 0);
}
