#include "hillfight/learners/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hf::learners {

std::optional<RiskInterval> parse_risk(std::string_view name) {
  if (name == "averse") return kRiskAverse;
  if (name == "neutral_averse") return kRiskNeutralAverse;
  if (name == "neutral_seeking") return kRiskNeutralSeeking;
  if (name == "seeking") return kRiskSeeking;
  if (name == "neutral") return kRiskNeutral;
  return std::nullopt;
}

std::string_view risk_name(RiskInterval interval) {
  if (interval == kRiskAverse) return "averse";
  if (interval == kRiskNeutralAverse) return "neutral_averse";
  if (interval == kRiskNeutralSeeking) return "neutral_seeking";
  if (interval == kRiskSeeking) return "seeking";
  if (interval == kRiskNeutral) return "neutral";
  return "custom";
}

bool RiskLevel::valid() const {
  auto ok = [](RiskInterval r) { return r.lower >= 0.0 && r.upper <= 1.0 && r.lower < r.upper; };
  return ok(agent) && ok(env);
}

std::vector<double> sample_fractions(RiskInterval portion, std::size_t n, std::mt19937_64& rng) {
  if (n == 0) throw std::invalid_argument("sample_fractions needs n >= 1");
  std::uniform_real_distribution<double> u(portion.lower, portion.upper);
  std::vector<double> taus(n);
  for (auto& t : taus) t = u(rng);
  std::sort(taus.begin(), taus.end());
  return taus;
}

ad::Tensor cosine_embedding(const std::vector<double>& taus, std::size_t dim) {
  ad::Tensor out(ad::Shape{taus.size(), dim});
  for (std::size_t r = 0; r < taus.size(); ++r) {
    for (std::size_t j = 0; j < dim; ++j) out[r * dim + j] = std::cos(std::numbers::pi * static_cast<double>(j) * taus[r]);
  }
  return out;
}

}  // namespace hf::learners
