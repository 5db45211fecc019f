#pragma once

// Bounded (interval-conditioned) component distributions and the piecewise
// mixture assembled from them. All values are immutable after construction
// and safe to share across threads.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "accel/math.hpp"
#include "accel/rng.hpp"

namespace accel {

/// Exponential distribution with rate `rate`, conditioned on [lower, upper).
struct BoundedExponential {
  double rate = 1.0;
  double lower = 0.0;
  double upper = kInf;

  double pdf(double x) const;
  double log_pdf(double x) const;
  /// Conditional CDF: 0 at lower, 1 at upper.
  double cdf(double x) const;
  /// Conditional quantile for u in [0, 1).
  double inverse_cdf(double u) const;
  /// Log moment generating function; requires theta < rate.
  double log_mgf(double theta) const;
};

/// Normal(mu, sigma) conditioned on [lower, upper). Fitted components always
/// have mu = 0; a nonzero mu only ever arises from exponential tilting.
struct BoundedNormal {
  double sigma = 1.0;
  double mu = 0.0;
  double lower = -kInf;
  double upper = kInf;

  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  double inverse_cdf(double u) const;
  double log_mgf(double theta) const;
};

/// Mixture of bounded normals sharing one support interval.
struct BoundedNormalMixture {
  struct Component {
    double weight = 1.0;
    double sigma = 1.0;
    double mu = 0.0;
  };
  std::vector<Component> components;
  double lower = -kInf;
  double upper = kInf;

  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  /// Numeric inversion (safeguarded Newton); exact families invert in closed form.
  double inverse_cdf(double u) const;
  double log_mgf(double theta) const;
};

using BoundedComponent = std::variant<BoundedExponential, BoundedNormal, BoundedNormalMixture>;

double component_pdf(const BoundedComponent& c, double x);
double component_log_pdf(const BoundedComponent& c, double x);
double component_cdf(const BoundedComponent& c, double x);
double component_inverse_cdf(const BoundedComponent& c, double u);
double component_log_mgf(const BoundedComponent& c, double theta);
std::pair<double, double> component_bounds(const BoundedComponent& c);
/// Same parameters on a different support interval.
BoundedComponent component_with_bounds(const BoundedComponent& c, double lower, double upper);
/// Throws std::invalid_argument when parameters or bounds are inadmissible.
void validate_component(const BoundedComponent& c);

/// k-piece truncated mixture: piece i lives on [trunc[i-1], trunc[i]) and
/// carries probability mass weights[i-1]. Construction validates that the
/// piece bounds equal the truncation points exactly and that the weights sum
/// to 1 within 1e-12 (individual weights may be 0).
class PiecewiseMixture {
 public:
  PiecewiseMixture(std::vector<double> truncations, std::vector<double> weights,
                   std::vector<BoundedComponent> pieces);

  std::size_t piece_count() const { return pieces_.size(); }
  const std::vector<double>& truncations() const { return truncations_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<BoundedComponent>& pieces() const { return pieces_; }
  const std::vector<double>& cumulative_weights() const { return cumulative_; }
  double support_lower() const { return truncations_.front(); }
  double support_upper() const { return truncations_.back(); }

  /// Index of the piece whose half-open interval contains x, or -1 outside.
  int piece_index(double x) const;

  double pdf(double x) const;
  double log_pdf(double x) const;
  double cdf(double x) const;
  /// Quantile for y in [0, 1); rejects y outside. Zero-weight pieces are
  /// never selected.
  double inverse_cdf(double y) const;

  double sample(Rng& rng) const { return inverse_cdf(rng.u01()); }
  std::vector<double> sample(Rng& rng, std::size_t n) const;

  nlohmann::json to_json() const;
  static PiecewiseMixture from_json(const nlohmann::json& j);

 private:
  std::vector<double> truncations_;
  std::vector<double> weights_;
  std::vector<double> cumulative_;
  std::vector<BoundedComponent> pieces_;
};

/// Discrete empirical distribution over observed support values with
/// multiplicities. Sampling only ever returns stored support values.
class EmpiricalDistribution {
 public:
  EmpiricalDistribution(std::vector<double> values, std::vector<double> counts);

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& counts() const { return counts_; }
  double min_value() const;
  double max_value() const;

  double sample(Rng& rng) const;
  std::vector<double> sample(Rng& rng, std::size_t n) const;

  /// Distribution conditioned on values in [lo, hi); throws if empty.
  EmpiricalDistribution restricted(double lo, double hi) const;
  /// Total multiplicity mass in [lo, hi).
  double mass_in(double lo, double hi) const;

  nlohmann::json to_json() const;
  static EmpiricalDistribution from_json(const nlohmann::json& j);

 private:
  std::vector<double> values_;
  std::vector<double> counts_;
  std::vector<double> cumulative_;
};

}  // namespace accel
