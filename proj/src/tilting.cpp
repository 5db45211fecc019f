#include "accel/tilting.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "accel/math.hpp"

namespace accel {

using nlohmann::json;

BoundedExponential tilt_piece(const BoundedExponential& p, double theta) {
  if (theta > p.rate - kTiltMargin)
    throw std::domain_error("tilt: theta must stay below the exponential rate");
  return BoundedExponential{p.rate - theta, p.lower, p.upper};
}

BoundedNormal tilt_piece(const BoundedNormal& p, double theta) {
  if (!std::isfinite(theta)) throw std::domain_error("tilt: theta must be finite");
  return BoundedNormal{p.sigma, p.mu + theta * p.sigma * p.sigma, p.lower, p.upper};
}

BoundedNormalMixture tilt_piece(const BoundedNormalMixture& p, double theta) {
  if (!std::isfinite(theta)) throw std::domain_error("tilt: theta must be finite");
  BoundedNormalMixture out;
  out.lower = p.lower;
  out.upper = p.upper;
  out.components.resize(p.components.size());
  // Component j keeps sigma, its mean shifts by theta*sigma_j^2 and its weight
  // scales with the component MGF so the mixture tilt equals
  // exp(theta*x - kappa(theta)) times the base mixture density.
  std::vector<double> logw(p.components.size());
  for (std::size_t j = 0; j < p.components.size(); ++j) {
    const auto& c = p.components[j];
    BoundedNormal member{c.sigma, c.mu, p.lower, p.upper};
    logw[j] = std::log(c.weight) + member.log_mgf(theta);
    out.components[j].sigma = c.sigma;
    out.components[j].mu = c.mu + theta * c.sigma * c.sigma;
  }
  double norm = logsumexp(logw);
  double total = 0.0;
  for (std::size_t j = 0; j < logw.size(); ++j) {
    out.components[j].weight = std::exp(logw[j] - norm);
    total += out.components[j].weight;
  }
  for (auto& c : out.components) c.weight /= total;
  return out;
}

BoundedComponent tilt_component(const BoundedComponent& c, double theta) {
  return std::visit([&](const auto& p) -> BoundedComponent { return tilt_piece(p, theta); }, c);
}

TiltedPiecewise::TiltedPiecewise(PiecewiseMixture base, std::vector<double> theta,
                                 std::vector<double> proposal_weights)
    : base_(std::move(base)),
      theta_(std::move(theta)),
      proposal_([&] {
        if (theta_.size() != base_.piece_count() || proposal_weights.size() != base_.piece_count())
          throw std::invalid_argument("tilted piecewise: theta/weights size mismatch");
        std::vector<BoundedComponent> tilted;
        tilted.reserve(base_.piece_count());
        for (std::size_t i = 0; i < base_.piece_count(); ++i) {
          tilted.push_back(tilt_component(base_.pieces()[i], theta_[i]));
        }
        return PiecewiseMixture(base_.truncations(), std::move(proposal_weights), std::move(tilted));
      }()) {}

TiltedPiecewise TiltedPiecewise::identity(PiecewiseMixture base) {
  std::vector<double> theta(base.piece_count(), 0.0);
  std::vector<double> weights = base.weights();
  return TiltedPiecewise(std::move(base), std::move(theta), std::move(weights));
}

json TiltedPiecewise::to_json() const {
  json j = base_.to_json();
  j["theta"] = theta_;
  j["proposal_weights"] = proposal_.weights();
  return j;
}

TiltedPiecewise TiltedPiecewise::from_json(const json& j) {
  PiecewiseMixture base = PiecewiseMixture::from_json(j);
  return TiltedPiecewise(std::move(base), j.at("theta").get<std::vector<double>>(),
                         j.at("proposal_weights").get<std::vector<double>>());
}

double log_likelihood_ratio(const PiecewiseMixture& base, const TiltedPiecewise& proposal, double x) {
  double lf = base.log_pdf(x);
  if (lf == -kInf) return -kInf;
  double lq = proposal.log_pdf(x);
  if (lq == -kInf)
    throw std::runtime_error("likelihood_ratio: proposal has zero density inside the base support");
  return lf - lq;
}

double likelihood_ratio(const PiecewiseMixture& base, const TiltedPiecewise& proposal, double x) {
  return std::exp(log_likelihood_ratio(base, proposal, x));
}

}  // namespace accel
