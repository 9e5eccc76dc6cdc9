#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "factgym/domain.hpp"
#include "factgym/rng.hpp"

namespace factgym::policy {

inline constexpr std::size_t kFeatureDim = 8;
inline constexpr std::size_t kCandidateSlots = 4;  // M; entity index M means "cite none"

using Features = std::array<double, kFeatureDim>;
using ParamVector = std::vector<double>;

struct Action {
  Label label_choice = Label::Real;
  std::size_t entity_choice = kCandidateSlots;
  bool style_choice = false;  // reflective keywords on/off
  bool format_choice = true;  // well-formed/malformed

  bool operator==(const Action&) const = default;
};

// Number of distinct actions: 2 * (M + 1) * 2 * 2.
inline constexpr std::size_t kActionCount = 2 * (kCandidateSlots + 1) * 2 * 2;

std::size_t action_index(const Action& a);
Action action_from_index(std::size_t index);
std::vector<Action> all_actions();

/// Contract shared by the current, old and reference policies.
///
/// exp(log_prob) must sum to one over all_actions() for any features, and
/// grad_log_prob must be the exact gradient of log_prob w.r.t. params().
class PolicyInterface {
 public:
  virtual ~PolicyInterface() = default;

  virtual Action sample(std::span<const double> features, Rng& rng) const = 0;
  virtual Action greedy(std::span<const double> features) const = 0;
  virtual double log_prob(std::span<const double> features, const Action& a) const = 0;

  // out += scale * d log_prob / d params
  virtual void accumulate_grad_log_prob(std::span<const double> features, const Action& a, double scale,
                                        std::span<double> out) const = 0;

  virtual std::span<const double> params() const = 0;
  virtual void set_params(std::span<const double> params) = 0;
  virtual std::unique_ptr<PolicyInterface> clone() const = 0;

  ParamVector grad_log_prob(std::span<const double> features, const Action& a) const;
};

/// Factorized categorical policy: four linear-softmax heads (label, entity
/// slot, style, format) over a shared feature vector. The parameter matrix is
/// stored head-column major: params[column * kFeatureDim + feature].
class ToyPolicy final : public PolicyInterface {
 public:
  static constexpr std::size_t kLabelCols = 2;
  static constexpr std::size_t kEntityCols = kCandidateSlots + 1;
  static constexpr std::size_t kStyleCols = 2;
  static constexpr std::size_t kFormatCols = 2;
  static constexpr std::size_t kColumns = kLabelCols + kEntityCols + kStyleCols + kFormatCols;
  static constexpr std::size_t kParamCount = kColumns * kFeatureDim;

  ToyPolicy() : params_(kParamCount, 0.0) {}
  explicit ToyPolicy(ParamVector params);

  // Params drawn i.i.d. N(0, scale^2).
  static ToyPolicy random(Rng& rng, double scale);

  Action sample(std::span<const double> features, Rng& rng) const override;
  Action greedy(std::span<const double> features) const override;
  double log_prob(std::span<const double> features, const Action& a) const override;
  void accumulate_grad_log_prob(std::span<const double> features, const Action& a, double scale,
                                std::span<double> out) const override;

  std::span<const double> params() const override { return params_; }
  void set_params(std::span<const double> params) override;
  std::unique_ptr<PolicyInterface> clone() const override { return std::make_unique<ToyPolicy>(*this); }

  // Log-softmax of one head; head in [0, 4).
  std::vector<double> head_log_probs(std::span<const double> features, std::size_t head) const;

 private:
  ParamVector params_;
};

// Flat little-endian float64 array behind an 8-byte "FGPOLICY" magic.
void save_params(const std::filesystem::path& path, std::span<const double> params);
ParamVector load_params(const std::filesystem::path& path);
std::string checkpoint_name(std::size_t step);

}  // namespace factgym::policy
