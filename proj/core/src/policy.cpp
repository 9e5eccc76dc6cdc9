#include "factgym/policy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

namespace factgym::policy {

namespace {

struct HeadRange {
  std::size_t first;
  std::size_t count;
};

constexpr std::array<HeadRange, 4> kHeads = {{
    {0, ToyPolicy::kLabelCols},
    {ToyPolicy::kLabelCols, ToyPolicy::kEntityCols},
    {ToyPolicy::kLabelCols + ToyPolicy::kEntityCols, ToyPolicy::kStyleCols},
    {ToyPolicy::kLabelCols + ToyPolicy::kEntityCols + ToyPolicy::kStyleCols, ToyPolicy::kFormatCols},
}};

std::array<std::size_t, 4> choices(const Action& a) {
  return {a.label_choice == Label::Fake ? 1u : 0u, a.entity_choice, a.style_choice ? 1u : 0u,
          a.format_choice ? 1u : 0u};
}

Action from_choices(const std::array<std::size_t, 4>& c) {
  return Action{c[0] == 1 ? Label::Fake : Label::Real, c[1], c[2] == 1, c[3] == 1};
}

void check_features(std::span<const double> features) {
  if (features.size() != kFeatureDim) throw Error(Errc::DimensionMismatch, "features must have length 8");
}

void check_action(const Action& a) {
  if (a.entity_choice > kCandidateSlots) throw Error(Errc::InvalidArgument, "entity_choice exceeds M");
}

constexpr char kMagic[8] = {'F', 'G', 'P', 'O', 'L', 'I', 'C', 'Y'};

}  // namespace

std::size_t action_index(const Action& a) {
  check_action(a);
  const auto c = choices(a);
  return ((c[0] * ToyPolicy::kEntityCols + c[1]) * 2 + c[2]) * 2 + c[3];
}

Action action_from_index(std::size_t index) {
  if (index >= kActionCount) throw Error(Errc::InvalidArgument, "action index out of range");
  std::array<std::size_t, 4> c{};
  c[3] = index % 2;
  index /= 2;
  c[2] = index % 2;
  index /= 2;
  c[1] = index % ToyPolicy::kEntityCols;
  c[0] = index / ToyPolicy::kEntityCols;
  return from_choices(c);
}

std::vector<Action> all_actions() {
  std::vector<Action> out;
  out.reserve(kActionCount);
  for (std::size_t i = 0; i < kActionCount; ++i) out.push_back(action_from_index(i));
  return out;
}

ParamVector PolicyInterface::grad_log_prob(std::span<const double> features, const Action& a) const {
  ParamVector g(params().size(), 0.0);
  accumulate_grad_log_prob(features, a, 1.0, g);
  return g;
}

ToyPolicy::ToyPolicy(ParamVector params) : params_(std::move(params)) {
  if (params_.size() != kParamCount) throw Error(Errc::DimensionMismatch, "toy policy expects 88 params");
}

ToyPolicy ToyPolicy::random(Rng& rng, double scale) {
  ParamVector p(kParamCount);
  for (double& v : p) v = scale * rng.normal();
  return ToyPolicy(std::move(p));
}

void ToyPolicy::set_params(std::span<const double> params) {
  if (params.size() != kParamCount) throw Error(Errc::DimensionMismatch, "toy policy expects 88 params");
  params_.assign(params.begin(), params.end());
}

std::vector<double> ToyPolicy::head_log_probs(std::span<const double> features, std::size_t head) const {
  check_features(features);
  const auto [first, count] = kHeads.at(head);
  std::vector<double> logits(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double* w = params_.data() + (first + k) * kFeatureDim;
    double z = 0.0;
    for (std::size_t f = 0; f < kFeatureDim; ++f) z += w[f] * features[f];
    logits[k] = z;
  }
  const double peak = *std::max_element(logits.begin(), logits.end());
  double norm = 0.0;
  for (double z : logits) norm += std::exp(z - peak);
  const double log_norm = peak + std::log(norm);
  for (double& z : logits) z -= log_norm;
  return logits;
}

Action ToyPolicy::sample(std::span<const double> features, Rng& rng) const {
  std::array<std::size_t, 4> c{};
  for (std::size_t h = 0; h < kHeads.size(); ++h) {
    const auto lp = head_log_probs(features, h);
    const double u = rng.uniform();
    double cdf = 0.0;
    c[h] = lp.size() - 1;
    for (std::size_t k = 0; k < lp.size(); ++k) {
      cdf += std::exp(lp[k]);
      if (u < cdf) {
        c[h] = k;
        break;
      }
    }
  }
  return from_choices(c);
}

Action ToyPolicy::greedy(std::span<const double> features) const {
  std::array<std::size_t, 4> c{};
  for (std::size_t h = 0; h < kHeads.size(); ++h) {
    const auto lp = head_log_probs(features, h);
    c[h] = static_cast<std::size_t>(std::distance(lp.begin(), std::max_element(lp.begin(), lp.end())));
  }
  return from_choices(c);
}

double ToyPolicy::log_prob(std::span<const double> features, const Action& a) const {
  check_action(a);
  const auto c = choices(a);
  double total = 0.0;
  for (std::size_t h = 0; h < kHeads.size(); ++h) total += head_log_probs(features, h)[c[h]];
  return total;
}

void ToyPolicy::accumulate_grad_log_prob(std::span<const double> features, const Action& a, double scale,
                                         std::span<double> out) const {
  check_action(a);
  if (out.size() != kParamCount) throw Error(Errc::DimensionMismatch, "gradient buffer size");
  const auto c = choices(a);
  for (std::size_t h = 0; h < kHeads.size(); ++h) {
    const auto lp = head_log_probs(features, h);
    const auto first = kHeads[h].first;
    for (std::size_t k = 0; k < lp.size(); ++k) {
      // d log softmax_c / d z_k = [k == c] - p_k
      const double dz = scale * ((k == c[h] ? 1.0 : 0.0) - std::exp(lp[k]));
      double* g = out.data() + (first + k) * kFeatureDim;
      for (std::size_t f = 0; f < kFeatureDim; ++f) g[f] += dz * features[f];
    }
  }
}

void save_params(const std::filesystem::path& path, std::span<const double> params) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string());
  out.write(kMagic, sizeof kMagic);
  for (double v : params) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xFF);
    out.write(bytes, 8);
  }
  if (!out) throw Error(Errc::Io, "write failed for " + path.string());
}

ParamVector load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof kMagic || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw Error(Errc::Schema, path.string() + " is not a policy checkpoint");
  }
  if ((bytes.size() - sizeof kMagic) % 8 != 0) throw Error(Errc::Schema, path.string() + " is truncated");
  ParamVector params((bytes.size() - sizeof kMagic) / 8);
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[sizeof kMagic + 8 * i + b])) << (8 * b);
    }
    params[i] = std::bit_cast<double>(bits);
  }
  return params;
}

std::string checkpoint_name(std::size_t step) { return "step_" + std::to_string(step) + ".fgp"; }

}  // namespace factgym::policy
