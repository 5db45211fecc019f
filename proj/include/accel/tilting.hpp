#pragma once

// Exponential change of measure for bounded components and the piecewise
// importance-sampling proposal family built from it. Tilting keeps every
// supported family closed: exponential rate lambda -> lambda - theta, normal
// mean 0 -> theta*sigma^2, mixtures tilt componentwise with reweighting.

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "accel/distributions.hpp"
#include "accel/kernels.hpp"

namespace accel {

/// Tilts reaching the exponential rate are rejected this close to it.
inline constexpr double kTiltMargin = 1e-9;

BoundedExponential tilt_piece(const BoundedExponential& p, double theta);
BoundedNormal tilt_piece(const BoundedNormal& p, double theta);
BoundedNormalMixture tilt_piece(const BoundedNormalMixture& p, double theta);
BoundedComponent tilt_component(const BoundedComponent& c, double theta);

/// Importance-sampling proposal: per-piece exponential tilts theta_i plus
/// reweighted piece proportions over a base piecewise mixture. The proposal
/// itself is again a piecewise mixture on the same truncation grid.
class TiltedPiecewise {
 public:
  TiltedPiecewise(PiecewiseMixture base, std::vector<double> theta,
                  std::vector<double> proposal_weights);

  /// theta = 0, proposal weights = base weights: the proposal equals the base.
  static TiltedPiecewise identity(PiecewiseMixture base);

  const PiecewiseMixture& base() const { return base_; }
  const std::vector<double>& theta() const { return theta_; }
  const std::vector<double>& proposal_weights() const { return proposal_.weights(); }
  /// The proposal distribution itself (tilted pieces, proposal weights).
  const PiecewiseMixture& proposal() const { return proposal_; }

  double pdf(double x) const { return proposal_.pdf(x); }
  double log_pdf(double x) const { return proposal_.log_pdf(x); }
  double sample(Rng& rng) const { return proposal_.sample(rng); }

  nlohmann::json to_json() const;
  static TiltedPiecewise from_json(const nlohmann::json& j);

 private:
  PiecewiseMixture base_;
  std::vector<double> theta_;
  PiecewiseMixture proposal_;
};

/// log of base.pdf(x) / proposal.pdf(x). Returns -inf where the base density
/// vanishes; throws when the proposal has no support where the base does.
double log_likelihood_ratio(const PiecewiseMixture& base, const TiltedPiecewise& proposal, double x);
double likelihood_ratio(const PiecewiseMixture& base, const TiltedPiecewise& proposal, double x);

inline kernels::PieceTable make_piece_table(const TiltedPiecewise& t) {
  return kernels::make_piece_table(t.proposal());
}

}  // namespace accel
