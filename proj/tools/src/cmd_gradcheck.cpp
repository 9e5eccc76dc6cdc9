#include <cmath>
#include <functional>

#include "cli.hpp"
#include "common.hpp"
#include "factgym/dpo.hpp"
#include "factgym/grpo.hpp"

namespace factgym::cli {

namespace {

using policy::ToyPolicy;

struct Case {
  std::function<double(const ToyPolicy&)> f;
  std::vector<double> analytic;
  ToyPolicy at;
};

policy::Features random_features(Rng& rng) {
  policy::Features x{};
  x[0] = rng.bernoulli(0.5) ? 1.0 : 0.0;
  x[1 + rng.index(policy::kCandidateSlots)] = 1.0;
  for (std::size_t k = 1 + policy::kCandidateSlots; k < policy::kFeatureDim; ++k) x[k] = rng.normal();
  return x;
}

policy::Action random_action(Rng& rng) { return policy::action_from_index(rng.index(policy::kActionCount)); }

Case log_prob_case(Rng& rng) {
  const auto pol = ToyPolicy::random(rng, 1.0);
  const auto x = random_features(rng);
  const auto a = random_action(rng);
  return {[x, a](const ToyPolicy& q) { return q.log_prob(x, a); }, pol.grad_log_prob(x, a), pol};
}

Case dpo_case(Rng& rng) {
  const auto cur = ToyPolicy::random(rng, 1.0);
  const auto ref = ToyPolicy::random(rng, 1.0);
  dpo::PreferencePair pair;
  pair.features = random_features(rng);
  const auto w = random_action(rng);
  auto l = random_action(rng);
  while (l == w) l = random_action(rng);
  pair.preferred = {"w", w};
  pair.dispreferred = {"l", l};
  const double beta = 0.05 + rng.uniform();
  std::vector<double> grad(ToyPolicy::kParamCount, 0.0);
  dpo::batch_terms(cur, ref, std::span(&pair, 1), beta, grad);
  return {[pair, ref, beta](const ToyPolicy& q) { return dpo::pair_terms(q, ref, pair, beta).loss; }, grad, cur};
}

Case grpo_case(Rng& rng, double h) {
  grpo::GrpoConfig cfg;
  const auto cur = ToyPolicy::random(rng, 1.0);
  const auto ref = ToyPolicy::random(rng, 1.0);
  const auto x = random_features(rng);
  const std::size_t g = 2 + rng.index(7);
  for (;;) {
    // Perturb the old policy so some ratios leave the clip range.
    std::vector<double> old_params(cur.params().begin(), cur.params().end());
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
    // Finite differences are meaningless across a clip kink.
    bool near_kink = false;
    for (const auto& r : ro.responses) {
      const double ratio = std::exp(r.logp_current - r.logp_old);
      for (double edge : {1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps}) near_kink |= std::abs(ratio - edge) < 1e3 * h;
    }
    if (near_kink) continue;

    std::vector<double> grad(ToyPolicy::kParamCount, 0.0);
    const auto coeff = grpo::grpo_loss_logp_grad(ro, cfg);
    for (std::size_t i = 0; i < g; ++i) cur.accumulate_grad_log_prob(x, ro.responses[i].action, coeff[i], grad);
    auto f = [ro, x, cfg](const ToyPolicy& q) mutable {
      for (auto& r : ro.responses) r.logp_current = q.log_prob(x, r.action);
      return grpo::grpo_loss(ro, cfg).loss;
    };
    return {f, grad, cur};
  }
}

double relative_error(const Case& c, double h, bool inject_bug) {
  std::vector<double> params(c.at.params().begin(), c.at.params().end());
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    const double orig = params[j];
    params[j] = orig + h;
    const double fp = c.f(ToyPolicy(params));
    params[j] = orig - h;
    const double fm = c.f(ToyPolicy(params));
    params[j] = orig;
    const double numeric = (fp - fm) / (2.0 * h);
    const double analytic = inject_bug ? c.analytic[j] * 1.01 : c.analytic[j];
    diff2 += (analytic - numeric) * (analytic - numeric);
    a2 += analytic * analytic;
    n2 += numeric * numeric;
  }
  const double scale = std::sqrt(std::max(a2, n2));
  return scale == 0.0 ? 0.0 : std::sqrt(diff2) / scale;
}

struct Sweep {
  double log_prob = 0.0, dpo = 0.0, grpo = 0.0;
  double max() const { return std::max({log_prob, dpo, grpo}); }
};

Sweep run_checks(std::uint64_t seed, std::size_t configs, double h, bool inject_bug) {
  Sweep s;
  for (std::size_t c = 0; c < configs; ++c) {
    Rng rng = Rng::for_key(seed, "gradcheck", c);
    s.log_prob = std::max(s.log_prob, relative_error(log_prob_case(rng), h, inject_bug));
    s.dpo = std::max(s.dpo, relative_error(dpo_case(rng), h, inject_bug));
    s.grpo = std::max(s.grpo, relative_error(grpo_case(rng, h), h, inject_bug));
  }
  return s;
}

}  // namespace

void register_gradcheck(Command& c) {
  auto& p = *c.params;
  add_common_params(p);
  p.add("configs", 100, "Random configurations per check");
  p.add("fd_h", 1e-5, "Central-difference step h");
  p.add("tolerance", 1e-4, "Maximum accepted relative error");
  p.add("sweep", false, "Also report the error for h in {1e-4, 1e-5, 1e-6}");
  p.add("inject_bug", false, "Test hook: perturb the analytic gradients");
}

int cmd_gradcheck(Command& c, Io& io) {
  const auto& p = *c.params;
  const auto configs = p.integer("configs");
  if (configs < 1) throw Error(Errc::InvalidArgument, "configs must be positive");
  const double h = p.num("fd_h");
  if (!(h > 0.0)) throw Error(Errc::InvalidArgument, "fd_h must be positive");
  const double tol = p.num("tolerance");
  const bool bug = p.flag("inject_bug");
  const auto seed = p.u64("seed");
  const auto n = static_cast<std::size_t>(configs);

  const auto s = run_checks(seed, n, h, bug);
  const bool pass = s.max() < tol;
  nlohmann::ordered_json doc;
  doc["checks"] = nlohmann::ordered_json::array();
  for (const auto& [name, err] : {std::pair{"log_prob", s.log_prob}, {"dpo_loss", s.dpo}, {"grpo_loss", s.grpo}}) {
    doc["checks"].push_back({{"name", name}, {"max_rel_err", err}, {"pass", err < tol}});
  }
  doc["max_rel_err"] = s.max();
  doc["pass"] = pass;
  if (p.flag("sweep")) {
    std::vector<double> errs;
    doc["sweep"] = nlohmann::ordered_json::array();
    for (double step : {1e-4, 1e-5, 1e-6}) {
      errs.push_back(run_checks(seed, n, step, bug).max());
      doc["sweep"].push_back({{"h", step}, {"max_rel_err", errs.back()}});
    }
    // Equal spacing in log h, so midpoint convexity is the discrete test.
    doc["convex"] = errs[1] <= 0.5 * (errs[0] + errs[2]);
  }
  doc["config"] = p.resolved();
  write_json("", doc, io.out);
  return pass ? kOk : kNumericalError;
}

}  // namespace factgym::cli
