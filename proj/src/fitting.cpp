#include "accel/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "accel/math.hpp"

namespace accel {

namespace {

void check_in_bounds(std::span<const double> data, double lower, double upper) {
  if (data.empty()) throw std::invalid_argument("fit: dataset is empty");
  for (double x : data) {
    if (!(x >= lower && x < upper))
      throw std::invalid_argument("fit: observation " + std::to_string(x) +
                                  " outside [" + std::to_string(lower) + ", " +
                                  std::to_string(upper) + ")");
  }
}

// Average log-likelihood of a bounded exponential given sufficient statistics.
double exp_objective(double rate, double mean_minus_lower, double span) {
  return std::log(rate) - rate * mean_minus_lower - log1mexp(rate * span);
}

// Average weighted log-likelihood of a mean-zero bounded normal.
double normal_objective(double sigma, double mean_sq, double lower, double upper) {
  return -0.5 * mean_sq / (sigma * sigma) - std::log(sigma) -
         log_normal_prob_between(lower / sigma, upper / sigma);
}

double weighted_sigma_mle(double weight, double weighted_sq_sum, double lower, double upper,
                          const OptimSettings& optim) {
  double mean_sq = weighted_sq_sum / weight;
  if (!(mean_sq > 0.0)) throw std::invalid_argument("fit bounded normal: all observations are zero");
  double guess = std::log(std::sqrt(mean_sq));
  double u = maximize_unimodal(
      [&](double lu) { return normal_objective(std::exp(lu), mean_sq, lower, upper); }, guess, 0.7,
      OptimSettings{1e-10, optim.max_expansions}, guess - 40.0, guess + 40.0);
  return std::exp(u);
}

}  // namespace

double log_likelihood(const PiecewiseMixture& d, const Dataset& data) {
  if (data.values.empty()) throw std::invalid_argument("log_likelihood: dataset is empty");
  double ll = 0.0;
  for (double x : data.values) {
    int i = d.piece_index(x);
    if (i < 0)
      throw std::invalid_argument("log_likelihood: observation " + std::to_string(x) +
                                  " outside the distribution support");
    if (d.weights()[i] == 0.0)
      throw std::invalid_argument("log_likelihood: observation " + std::to_string(x) +
                                  " falls in a zero-weight piece");
    ll += std::log(d.weights()[i]) + component_log_pdf(d.pieces()[i], x);
  }
  return ll;
}

std::vector<double> fit_piece_weights(const Dataset& data, std::span<const double> truncations) {
  if (truncations.size() < 2) throw std::invalid_argument("fit_piece_weights: need >= 2 knots");
  check_in_bounds(data.values, truncations.front(), truncations.back());
  std::vector<double> counts(truncations.size() - 1, 0.0);
  for (double x : data.values) {
    auto it = std::upper_bound(truncations.begin(), truncations.end(), x);
    counts[static_cast<std::size_t>(it - truncations.begin()) - 1] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(data.values.size());
  return counts;
}

BoundedExponential fit_bounded_exponential(std::span<const double> data, double lower, double upper,
                                           const OptimSettings& optim) {
  check_in_bounds(data, lower, upper);
  double sum = 0.0;
  for (double x : data) sum += x;
  double mean_minus_lower = sum / static_cast<double>(data.size()) - lower;
  if (!(mean_minus_lower > 0.0))
    throw std::invalid_argument("fit bounded exponential: degenerate data at the lower boundary");
  double span = upper - lower;
  double guess = std::log(1.0 / mean_minus_lower);
  double u = maximize_unimodal(
      [&](double lu) { return exp_objective(std::exp(lu), mean_minus_lower, span); }, guess, 0.7,
      OptimSettings{1e-10, optim.max_expansions}, guess - 40.0, guess + 40.0);
  return BoundedExponential{std::exp(u), lower, upper};
}

BoundedNormal fit_bounded_normal(std::span<const double> data, double lower, double upper,
                                 const OptimSettings& optim) {
  check_in_bounds(data, lower, upper);
  double sq = 0.0;
  for (double x : data) sq += x * x;
  double sigma = weighted_sigma_mle(static_cast<double>(data.size()), sq, lower, upper, optim);
  return BoundedNormal{sigma, 0.0, lower, upper};
}

std::vector<std::vector<double>> em_responsibilities(std::span<const double> data,
                                                     const BoundedNormalMixture& mixture) {
  const std::size_t m = mixture.components.size();
  // per-component constants: log p_j - log sigma_j - log sqrt(2pi) - log Z_j
  std::vector<double> c(m), inv2s(m);
  for (std::size_t j = 0; j < m; ++j) {
    const auto& comp = mixture.components[j];
    c[j] = std::log(comp.weight) - std::log(comp.sigma) - kLogSqrt2Pi -
           log_normal_prob_between((mixture.lower - comp.mu) / comp.sigma,
                                   (mixture.upper - comp.mu) / comp.sigma);
    inv2s[j] = 0.5 / (comp.sigma * comp.sigma);
  }
  std::vector<std::vector<double>> tau(data.size(), std::vector<double>(m));
  std::vector<double> l(m);
  for (std::size_t n = 0; n < data.size(); ++n) {
    for (std::size_t j = 0; j < m; ++j) {
      double d = data[n] - mixture.components[j].mu;
      l[j] = c[j] - d * d * inv2s[j];
    }
    double norm = logsumexp(l);
    for (std::size_t j = 0; j < m; ++j) tau[n][j] = std::exp(l[j] - norm);
  }
  return tau;
}

BoundedNormalMixture fit_mixture_em(std::span<const double> data, double lower, double upper, int m,
                                    const EmSettings& em, const OptimSettings& optim,
                                    EmReport* report) {
  check_in_bounds(data, lower, upper);
  if (m < 1) throw std::invalid_argument("fit_mixture_em: need m >= 1");
  const std::size_t n = data.size();
  const auto mm = static_cast<std::size_t>(m);

  double sq = 0.0;
  for (double x : data) sq += x * x;
  double rms = std::sqrt(sq / static_cast<double>(n));
  if (!(rms > 0.0)) throw std::invalid_argument("fit_mixture_em: all observations are zero");

  BoundedNormalMixture mix;
  mix.lower = lower;
  mix.upper = upper;
  mix.components.resize(mm);
  for (std::size_t j = 0; j < mm; ++j) {
    double sigma = j < em.initial_sigmas.size() ? em.initial_sigmas[j]
                                                : rms * 0.5 * std::pow(2.0, static_cast<double>(j));
    mix.components[j] = {1.0 / static_cast<double>(mm), sigma, 0.0};
  }

  double prev_ll = -kInf;
  if (report) *report = EmReport{};
  int it = 0;
  for (; it < em.max_iterations; ++it) {
    // E step: responsibilities and the current log-likelihood in one pass.
    std::vector<double> c(mm), inv2s(mm);
    for (std::size_t j = 0; j < mm; ++j) {
      const auto& comp = mix.components[j];
      c[j] = std::log(comp.weight) - std::log(comp.sigma) - kLogSqrt2Pi -
             log_normal_prob_between(lower / comp.sigma, upper / comp.sigma);
      inv2s[j] = 0.5 / (comp.sigma * comp.sigma);
    }
    std::vector<double> resp_sum(mm, 0.0), resp_sq(mm, 0.0), l(mm);
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double x = data[i];
      for (std::size_t j = 0; j < mm; ++j) l[j] = c[j] - x * x * inv2s[j];
      double norm = logsumexp(l);
      ll += norm;
      for (std::size_t j = 0; j < mm; ++j) {
        double tau = std::exp(l[j] - norm);
        resp_sum[j] += tau;
        resp_sq[j] += tau * x * x;
      }
    }
    if (ll < prev_ll - 1e-9)
      throw std::logic_error("fit_mixture_em: log-likelihood decreased at iteration " +
                             std::to_string(it));
    if (report) report->log_likelihood_trace.push_back(ll);
    bool converged = ll - prev_ll < em.tolerance && it > 0;
    prev_ll = ll;
    if (converged) break;

    // M step: analytic weights, 1-D numeric sigma per component.
    for (std::size_t j = 0; j < mm; ++j) {
      if (resp_sum[j] < 1e-12)
        throw std::runtime_error("fit_mixture_em: component " + std::to_string(j) +
                                 " lost all responsibility mass");
      mix.components[j].weight = resp_sum[j] / static_cast<double>(n);
      double sigma = weighted_sigma_mle(resp_sum[j], resp_sq[j], lower, upper, optim);
      if (sigma < 1e-8)
        throw std::runtime_error("fit_mixture_em: component " + std::to_string(j) + " collapsed");
      mix.components[j].sigma = sigma;
    }
  }
  if (report) report->iterations = it;
  return mix;
}

FitResult fit_piecewise(const Dataset& data, const FitConfig& config) {
  std::vector<double> trunc;
  trunc.push_back(config.lower);
  for (double g : config.interior_truncations) trunc.push_back(g);
  trunc.push_back(config.upper);
  for (std::size_t i = 0; i + 1 < trunc.size(); ++i) {
    if (!(trunc[i] < trunc[i + 1]))
      throw std::invalid_argument("fit_piecewise: truncations must be strictly increasing");
  }
  const std::size_t k = trunc.size() - 1;
  if (config.pieces.size() != k)
    throw std::invalid_argument("fit_piecewise: need one family spec per interval");

  std::vector<double> weights = fit_piece_weights(data, trunc);

  std::vector<std::vector<double>> split(k);
  for (double x : data.values) {
    auto it = std::upper_bound(trunc.begin(), trunc.end(), x);
    split[static_cast<std::size_t>(it - trunc.begin()) - 1].push_back(x);
  }

  FitResult result{PiecewiseMixture({0.0, 1.0}, {1.0}, {BoundedExponential{1.0, 0.0, 1.0}}), {}, 0.0};
  std::vector<BoundedComponent> pieces;
  result.pieces.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    double lo = trunc[i], hi = trunc[i + 1];
    PieceFitReport& rep = result.pieces[i];
    rep.weight = weights[i];
    rep.count = split[i].size();
    if (split[i].empty()) {
      rep.skipped_empty = true;
      // placeholder parameters on a zero-weight piece; never sampled or scored
      switch (config.pieces[i].family) {
        case PieceFamily::bounded_exponential:
          pieces.push_back(BoundedExponential{1.0, lo, hi});
          break;
        case PieceFamily::bounded_normal:
          pieces.push_back(BoundedNormal{1.0, 0.0, lo, hi});
          break;
        case PieceFamily::normal_mixture: {
          BoundedNormalMixture m;
          m.lower = lo;
          m.upper = hi;
          m.components = {{1.0, 1.0, 0.0}};
          pieces.push_back(std::move(m));
          break;
        }
      }
      continue;
    }
    switch (config.pieces[i].family) {
      case PieceFamily::bounded_exponential:
        pieces.push_back(fit_bounded_exponential(split[i], lo, hi, config.optim));
        break;
      case PieceFamily::bounded_normal:
        pieces.push_back(fit_bounded_normal(split[i], lo, hi, config.optim));
        break;
      case PieceFamily::normal_mixture: {
        EmReport em_report;
        pieces.push_back(fit_mixture_em(split[i], lo, hi, config.pieces[i].mixture_components,
                                        config.em, config.optim, &em_report));
        rep.em_iterations = em_report.iterations;
        break;
      }
    }
  }
  result.distribution = PiecewiseMixture(std::move(trunc), std::move(weights), std::move(pieces));
  result.log_likelihood = log_likelihood(result.distribution, data);
  return result;
}

std::vector<double> default_truncations(std::span<const double> data,
                                        std::span<const double> quantiles) {
  if (data.empty()) throw std::invalid_argument("default_truncations: dataset is empty");
  std::vector<double> sorted(data.begin(), data.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> knots;
  for (double q : quantiles) {
    if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("default_truncations: quantile outside (0,1)");
    double pos = q * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(pos);
    double frac = pos - static_cast<double>(lo);
    double v = lo + 1 < sorted.size() ? sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac : sorted[lo];
    knots.push_back(v);
  }
  return knots;
}

}  // namespace accel
