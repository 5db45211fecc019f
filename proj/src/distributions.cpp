#include "accel/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace accel {

using nlohmann::json;

namespace {

// log of integral_{lo}^{hi} exp(-r x) dx; handles r of either sign and hi = inf.
double log_exp_integral(double r, double lo, double hi) {
  double span = hi - lo;
  if (r > 0.0) return -std::log(r) - r * lo + log1mexp(r * span);
  if (r == 0.0) return std::log(span);
  if (hi == kInf) return kInf;  // divergent
  return -std::log(-r) - r * hi + log1mexp(-r * span);
}

double checked_u(double u) {
  if (!(u >= 0.0 && u < 1.0)) throw std::domain_error("inverse_cdf: u must lie in [0, 1)");
  return u;
}

}  // namespace

// ---------------------------------------------------------------------------
// BoundedExponential

double BoundedExponential::log_pdf(double x) const {
  if (!(x >= lower && x < upper)) return -kInf;
  return std::log(rate) - rate * (x - lower) - log1mexp(rate * (upper - lower));
}

double BoundedExponential::pdf(double x) const { return std::exp(log_pdf(x)); }

double BoundedExponential::cdf(double x) const {
  if (x <= lower) return 0.0;
  if (x >= upper) return 1.0;
  double denom = -std::expm1(-rate * (upper - lower));  // 1 for infinite upper
  return -std::expm1(-rate * (x - lower)) / denom;
}

double BoundedExponential::inverse_cdf(double u) const {
  checked_u(u);
  double q = -std::expm1(-rate * (upper - lower));
  return lower - std::log1p(-u * q) / rate;
}

double BoundedExponential::log_mgf(double theta) const {
  if (theta == 0.0) return 0.0;
  double tilted = log_exp_integral(rate - theta, lower, upper);
  if (tilted == kInf) return kInf;
  return std::log(rate) + tilted - log_exp_integral(rate, lower, upper) - std::log(rate);
}

// ---------------------------------------------------------------------------
// BoundedNormal

double BoundedNormal::log_pdf(double x) const {
  if (!(x >= lower && x < upper)) return -kInf;
  double z = (x - mu) / sigma;
  double a = (lower - mu) / sigma, b = (upper - mu) / sigma;
  return log_normal_pdf(z) - std::log(sigma) - log_normal_prob_between(a, b);
}

double BoundedNormal::pdf(double x) const { return std::exp(log_pdf(x)); }

double BoundedNormal::cdf(double x) const {
  if (x <= lower) return 0.0;
  if (x >= upper) return 1.0;
  double a = (lower - mu) / sigma, b = (upper - mu) / sigma;
  double z = (x - mu) / sigma;
  double c = std::exp(log_normal_prob_between(a, z) - log_normal_prob_between(a, b));
  return std::min(c, 1.0);
}

double BoundedNormal::inverse_cdf(double u) const {
  checked_u(u);
  double a = (lower - mu) / sigma, b = (upper - mu) / sigma;
  double z;
  if (a >= 0.0) {
    // Right-tail interval: interpolate survival values, which stay O(sf(a)).
    double sa = normal_sf(a);
    double sb = b == kInf ? 0.0 : normal_sf(b);
    double s = sa + u * (sb - sa);
    z = s > 0.0 ? -normal_quantile(s) : b;
  } else if (b <= 0.0) {
    double sa = a == -kInf ? 0.0 : normal_sf(-a);
    double sb = normal_sf(-b);
    double s = sa + u * (sb - sa);
    z = s > 0.0 ? normal_quantile(s) : a;
  } else {
    double pa = a == -kInf ? 0.0 : normal_cdf(a);
    double pb = b == kInf ? 1.0 : normal_cdf(b);
    z = normal_quantile(pa + u * (pb - pa));
  }
  double x = mu + sigma * z;
  // Guard rounding at the interval edges; the support contract is half-open.
  if (x < lower) x = lower;
  if (x >= upper) x = std::nextafter(upper, lower);
  return x;
}

double BoundedNormal::log_mgf(double theta) const {
  if (theta == 0.0) return 0.0;
  double a = (lower - mu) / sigma, b = (upper - mu) / sigma;
  double shift = theta * sigma;
  return mu * theta + 0.5 * sigma * sigma * theta * theta +
         log_normal_prob_between(a - shift, b - shift) - log_normal_prob_between(a, b);
}

// ---------------------------------------------------------------------------
// BoundedNormalMixture

namespace {
BoundedNormal mixture_member(const BoundedNormalMixture& m, std::size_t j) {
  return BoundedNormal{m.components[j].sigma, m.components[j].mu, m.lower, m.upper};
}
}  // namespace

double BoundedNormalMixture::log_pdf(double x) const {
  if (!(x >= lower && x < upper)) return -kInf;
  double acc = -kInf;
  for (std::size_t j = 0; j < components.size(); ++j) {
    acc = logaddexp(acc, std::log(components[j].weight) + mixture_member(*this, j).log_pdf(x));
  }
  return acc;
}

double BoundedNormalMixture::pdf(double x) const { return std::exp(log_pdf(x)); }

double BoundedNormalMixture::cdf(double x) const {
  if (x <= lower) return 0.0;
  if (x >= upper) return 1.0;
  double c = 0.0;
  for (std::size_t j = 0; j < components.size(); ++j) {
    c += components[j].weight * mixture_member(*this, j).cdf(x);
  }
  return std::min(c, 1.0);
}

double BoundedNormalMixture::inverse_cdf(double u) const {
  checked_u(u);
  if (components.size() == 1) return mixture_member(*this, 0).inverse_cdf(u);
  // Bracket by the component quantiles, then safeguarded Newton on the CDF.
  double lo = kInf, hi = -kInf;
  for (std::size_t j = 0; j < components.size(); ++j) {
    double q = mixture_member(*this, j).inverse_cdf(u);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  if (lo >= hi) return lo;
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double err = cdf(x) - u;
    if (err > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    if (std::abs(err) < 1e-15 || hi - lo < 1e-15 * (1.0 + std::abs(x))) break;
    double d = pdf(x);
    double step = d > 0.0 ? err / d : 0.0;
    double xn = x - step;
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);  // bisect when Newton leaves the bracket
    x = xn;
  }
  if (x < lower) x = lower;
  if (x >= upper) x = std::nextafter(upper, lower);
  return x;
}

double BoundedNormalMixture::log_mgf(double theta) const {
  if (theta == 0.0) return 0.0;
  double acc = -kInf;
  for (std::size_t j = 0; j < components.size(); ++j) {
    acc = logaddexp(acc, std::log(components[j].weight) + mixture_member(*this, j).log_mgf(theta));
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Component dispatch

double component_pdf(const BoundedComponent& c, double x) {
  return std::visit([&](const auto& d) { return d.pdf(x); }, c);
}
double component_log_pdf(const BoundedComponent& c, double x) {
  return std::visit([&](const auto& d) { return d.log_pdf(x); }, c);
}
double component_cdf(const BoundedComponent& c, double x) {
  return std::visit([&](const auto& d) { return d.cdf(x); }, c);
}
double component_inverse_cdf(const BoundedComponent& c, double u) {
  return std::visit([&](const auto& d) { return d.inverse_cdf(u); }, c);
}
double component_log_mgf(const BoundedComponent& c, double theta) {
  return std::visit([&](const auto& d) { return d.log_mgf(theta); }, c);
}

std::pair<double, double> component_bounds(const BoundedComponent& c) {
  return std::visit([](const auto& d) { return std::pair<double, double>{d.lower, d.upper}; }, c);
}

BoundedComponent component_with_bounds(const BoundedComponent& c, double lower, double upper) {
  BoundedComponent out = c;
  std::visit(
      [&](auto& d) {
        d.lower = lower;
        d.upper = upper;
      },
      out);
  return out;
}

void validate_component(const BoundedComponent& c) {
  auto [lo, hi] = component_bounds(c);
  if (!(lo < hi)) throw std::invalid_argument("bounded component: lower must be below upper");
  if (std::holds_alternative<BoundedExponential>(c)) {
    const auto& e = std::get<BoundedExponential>(c);
    if (!(e.rate > 0.0) || !std::isfinite(e.rate))
      throw std::invalid_argument("bounded exponential: rate must be positive and finite");
    if (!(e.lower >= 0.0)) throw std::invalid_argument("bounded exponential: lower must be >= 0");
  } else if (std::holds_alternative<BoundedNormal>(c)) {
    const auto& n = std::get<BoundedNormal>(c);
    if (!(n.sigma > 0.0) || !std::isfinite(n.sigma))
      throw std::invalid_argument("bounded normal: sigma must be positive and finite");
  } else {
    const auto& m = std::get<BoundedNormalMixture>(c);
    if (m.components.empty()) throw std::invalid_argument("bounded mixture: needs >= 1 component");
    double total = 0.0;
    for (const auto& comp : m.components) {
      if (!(comp.sigma > 0.0) || !std::isfinite(comp.sigma))
        throw std::invalid_argument("bounded mixture: sigma must be positive and finite");
      if (!(comp.weight > 0.0 && comp.weight <= 1.0))
        throw std::invalid_argument("bounded mixture: component weights must lie in (0, 1]");
      total += comp.weight;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("bounded mixture: component weights must sum to 1");
  }
}

// ---------------------------------------------------------------------------
// PiecewiseMixture

PiecewiseMixture::PiecewiseMixture(std::vector<double> truncations, std::vector<double> weights,
                                   std::vector<BoundedComponent> pieces)
    : truncations_(std::move(truncations)), weights_(std::move(weights)), pieces_(std::move(pieces)) {
  if (truncations_.size() < 2) throw std::invalid_argument("piecewise: need at least 2 truncation points");
  if (weights_.size() + 1 != truncations_.size() || pieces_.size() != weights_.size())
    throw std::invalid_argument("piecewise: sizes of truncations/weights/pieces disagree");
  for (std::size_t i = 0; i + 1 < truncations_.size(); ++i) {
    if (!(truncations_[i] < truncations_[i + 1]))
      throw std::invalid_argument("piecewise: truncation points must be strictly increasing");
  }
  if (truncations_.front() == kInf || truncations_.back() == -kInf)
    throw std::invalid_argument("piecewise: support is empty");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0 && w <= 1.0 + 1e-12)) throw std::invalid_argument("piecewise: weights must lie in [0, 1]");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("piecewise: weights must sum to 1");
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    auto [lo, hi] = component_bounds(pieces_[i]);
    if (lo != truncations_[i] || hi != truncations_[i + 1])
      throw std::invalid_argument("piecewise: piece bounds must equal the truncation points exactly");
    validate_component(pieces_[i]);
  }
  cumulative_.resize(weights_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    acc += weights_[i];
    cumulative_[i] = acc;
  }
  cumulative_.back() = 1.0;
}

int PiecewiseMixture::piece_index(double x) const {
  if (!(x >= truncations_.front()) || !(x < truncations_.back())) return -1;
  auto it = std::upper_bound(truncations_.begin(), truncations_.end(), x);
  return static_cast<int>(it - truncations_.begin()) - 1;
}

double PiecewiseMixture::pdf(double x) const {
  int i = piece_index(x);
  if (i < 0 || weights_[i] == 0.0) return 0.0;
  return weights_[i] * component_pdf(pieces_[i], x);
}

double PiecewiseMixture::log_pdf(double x) const {
  int i = piece_index(x);
  if (i < 0 || weights_[i] == 0.0) return -kInf;
  return std::log(weights_[i]) + component_log_pdf(pieces_[i], x);
}

double PiecewiseMixture::cdf(double x) const {
  if (!(x >= truncations_.front())) return 0.0;
  if (x >= truncations_.back()) return 1.0;
  int i = piece_index(x);
  double before = i > 0 ? cumulative_[i - 1] : 0.0;
  if (weights_[i] == 0.0) return before;
  return before + weights_[i] * component_cdf(pieces_[i], x);
}

double PiecewiseMixture::inverse_cdf(double y) const {
  if (!(y >= 0.0 && y < 1.0)) throw std::domain_error("piecewise inverse_cdf: y must lie in [0, 1)");
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), y);
  std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  while (i < weights_.size() && weights_[i] == 0.0) ++i;  // cumulative ties land on zero pieces
  if (i >= weights_.size()) i = weights_.size() - 1;
  double before = i > 0 ? cumulative_[i - 1] : 0.0;
  double u = (y - before) / weights_[i];
  u = std::clamp(u, 0.0, 1.0 - 0x1.0p-53);
  return component_inverse_cdf(pieces_[i], u);
}

std::vector<double> PiecewiseMixture::sample(Rng& rng, std::size_t n) const {
  std::vector<double> out(n);
  for (auto& x : out) x = inverse_cdf(rng.u01());
  return out;
}

// ---------------------------------------------------------------------------
// JSON serialization

namespace {

json bound_to_json(double v) {
  if (v == kInf) return json("+inf");
  if (v == -kInf) return json("-inf");
  return json(v);
}

double bound_from_json(const json& j) {
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "+inf" || s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw std::invalid_argument("unrecognized bound token: " + s);
  }
  return j.get<double>();
}

json piece_to_json(const BoundedComponent& c) {
  json out;
  if (std::holds_alternative<BoundedExponential>(c)) {
    const auto& e = std::get<BoundedExponential>(c);
    out["kind"] = "bounded_exp";
    out["rate"] = e.rate;
  } else if (std::holds_alternative<BoundedNormal>(c)) {
    const auto& n = std::get<BoundedNormal>(c);
    out["kind"] = "bounded_normal";
    out["sigma"] = n.sigma;
    if (n.mu != 0.0) out["mu"] = n.mu;
  } else {
    const auto& m = std::get<BoundedNormalMixture>(c);
    out["kind"] = "bounded_normal_mixture";
    json comps = json::array();
    for (const auto& comp : m.components) {
      json jc = {{"p", comp.weight}, {"sigma", comp.sigma}};
      if (comp.mu != 0.0) jc["mu"] = comp.mu;
      comps.push_back(std::move(jc));
    }
    out["components"] = std::move(comps);
  }
  return out;
}

BoundedComponent piece_from_json(const json& j, double lower, double upper) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "bounded_exp") {
    return BoundedExponential{j.at("rate").get<double>(), lower, upper};
  }
  if (kind == "bounded_normal") {
    return BoundedNormal{j.at("sigma").get<double>(), j.value("mu", 0.0), lower, upper};
  }
  if (kind == "bounded_normal_mixture") {
    BoundedNormalMixture m;
    m.lower = lower;
    m.upper = upper;
    for (const auto& jc : j.at("components")) {
      m.components.push_back({jc.at("p").get<double>(), jc.at("sigma").get<double>(), jc.value("mu", 0.0)});
    }
    return m;
  }
  throw std::invalid_argument("unrecognized piece kind: " + kind);
}

}  // namespace

json PiecewiseMixture::to_json() const {
  json trunc = json::array();
  for (double g : truncations_) trunc.push_back(bound_to_json(g));
  json pieces = json::array();
  for (const auto& p : pieces_) pieces.push_back(piece_to_json(p));
  return json{{"truncations", std::move(trunc)}, {"weights", weights_}, {"pieces", std::move(pieces)}};
}

PiecewiseMixture PiecewiseMixture::from_json(const json& j) {
  std::vector<double> trunc;
  for (const auto& jt : j.at("truncations")) trunc.push_back(bound_from_json(jt));
  std::vector<double> weights = j.at("weights").get<std::vector<double>>();
  std::vector<BoundedComponent> pieces;
  const auto& jp = j.at("pieces");
  for (std::size_t i = 0; i < jp.size(); ++i) {
    if (i + 1 >= trunc.size()) throw std::invalid_argument("piecewise json: more pieces than intervals");
    pieces.push_back(piece_from_json(jp[i], trunc[i], trunc[i + 1]));
  }
  return PiecewiseMixture(std::move(trunc), std::move(weights), std::move(pieces));
}

// ---------------------------------------------------------------------------
// EmpiricalDistribution

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values, std::vector<double> counts)
    : values_(std::move(values)), counts_(std::move(counts)) {
  if (values_.empty() || values_.size() != counts_.size())
    throw std::invalid_argument("empirical: values/counts must be nonempty and equal length");
  cumulative_.resize(counts_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (!(counts_[i] >= 0.0) || !std::isfinite(values_[i]))
      throw std::invalid_argument("empirical: counts must be >= 0 and values finite");
    acc += counts_[i];
    cumulative_[i] = acc;
  }
  if (!(acc > 0.0)) throw std::invalid_argument("empirical: total count must be positive");
}

double EmpiricalDistribution::min_value() const {
  return *std::min_element(values_.begin(), values_.end());
}
double EmpiricalDistribution::max_value() const {
  return *std::max_element(values_.begin(), values_.end());
}

double EmpiricalDistribution::sample(Rng& rng) const {
  double target = rng.u01() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it == cumulative_.end()) --it;
  return values_[static_cast<std::size_t>(it - cumulative_.begin())];
}

std::vector<double> EmpiricalDistribution::sample(Rng& rng, std::size_t n) const {
  std::vector<double> out(n);
  for (auto& x : out) x = sample(rng);
  return out;
}

EmpiricalDistribution EmpiricalDistribution::restricted(double lo, double hi) const {
  std::vector<double> v, c;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] >= lo && values_[i] < hi && counts_[i] > 0.0) {
      v.push_back(values_[i]);
      c.push_back(counts_[i]);
    }
  }
  if (v.empty()) throw std::invalid_argument("empirical: no support in requested interval");
  return EmpiricalDistribution(std::move(v), std::move(c));
}

double EmpiricalDistribution::mass_in(double lo, double hi) const {
  double m = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] >= lo && values_[i] < hi) m += counts_[i];
  }
  return m;
}

json EmpiricalDistribution::to_json() const {
  return json{{"values", values_}, {"counts", counts_}};
}

EmpiricalDistribution EmpiricalDistribution::from_json(const json& j) {
  return EmpiricalDistribution(j.at("values").get<std::vector<double>>(),
                               j.at("counts").get<std::vector<double>>());
}

}  // namespace accel
