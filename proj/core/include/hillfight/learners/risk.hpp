#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include "hillfight/autodiff/tensor.hpp"

namespace hf::learners {

/// Sub-interval of (0, 1) from which quantile fractions are drawn.
struct RiskInterval {
  double lower = 0.0;
  double upper = 1.0;
  friend bool operator==(RiskInterval, RiskInterval) = default;
};

inline constexpr RiskInterval kRiskAverse{0.0, 0.25};
inline constexpr RiskInterval kRiskNeutralAverse{0.25, 0.5};
inline constexpr RiskInterval kRiskNeutralSeeking{0.5, 0.75};
inline constexpr RiskInterval kRiskSeeking{0.75, 1.0};
inline constexpr RiskInterval kRiskNeutral{0.0, 1.0};

/// "averse", "neutral_averse", "neutral_seeking", "seeking", "neutral".
std::optional<RiskInterval> parse_risk(std::string_view name);
std::string_view risk_name(RiskInterval interval);

/// Agent-wise and environment-wise risk portions.
struct RiskLevel {
  RiskInterval agent = kRiskSeeking;
  RiskInterval env = kRiskAverse;
  bool valid() const;
};

/// n i.i.d. uniform fractions in the interval, ascending.
std::vector<double> sample_fractions(RiskInterval portion, std::size_t n, std::mt19937_64& rng);

/// Cosine features cos(pi * j * tau), j = 0..dim-1, one row per fraction.
ad::Tensor cosine_embedding(const std::vector<double>& taus, std::size_t dim);

}  // namespace hf::learners
