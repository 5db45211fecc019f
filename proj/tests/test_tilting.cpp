#include "doctest.h"

#include <cmath>
#include <vector>

#include <nlohmann/json.hpp>

#include "accel/math.hpp"
#include "accel/rng.hpp"
#include "accel/tilting.hpp"
#include "support/quadrature.hpp"

using namespace accel;

namespace {

// quadrature oracle for the tilt identity: tilted pdf == e^{theta x} base(x)/Z
template <typename Piece, typename Tilted>
void check_tilt_identity(const Piece& base, const Tilted& tilted, double theta, double lo,
                         double hi_probe, bool infinite_upper) {
  auto numer = [&](double x) { return std::exp(theta * x) * base.pdf(x); };
  double z = infinite_upper ? testsupport::integrate_to_inf(numer, lo)
                            : testsupport::integrate(numer, lo, hi_probe);
  for (int i = 0; i < 100; ++i) {
    double x = lo + (hi_probe - lo) * (i + 0.5) / 100.0;
    CHECK(tilted.pdf(x) == doctest::Approx(numer(x) / z).epsilon(1e-6));
  }
}

}  // namespace

TEST_SUITE("tilting") {

TEST_CASE("exponential tilt: rate shifts by theta") {
  BoundedExponential p{2.0, 0.0, kInf};
  auto t = tilt_piece(p, 0.5);
  CHECK(t.rate == 1.5);
  CHECK(t.lower == p.lower);
  CHECK(t.upper == p.upper);

  auto id = tilt_piece(p, 0.0);
  CHECK(id.rate == 2.0);

  CHECK_THROWS(tilt_piece(p, 2.0));
  CHECK_THROWS(tilt_piece(p, 2.0 - 1e-10));  // inside the validity margin

  // tilted mean matches 1/(lambda - theta)
  BoundedExponential unit{1.0, 0.0, kInf};
  auto heavy = tilt_piece(unit, 0.9);
  Rng rng(31);
  const int n = 100000;
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += heavy.inverse_cdf(rng.u01());
  mean /= n;
  CHECK(std::abs(mean - 10.0) < 3.0 * 10.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("normal tilt: mean becomes theta*sigma^2") {
  BoundedNormal p{1.0, 0.0, -kInf, kInf};
  auto t = tilt_piece(p, 2.0);
  CHECK(t.mu == 2.0);
  CHECK(t.sigma == 1.0);

  auto id = tilt_piece(p, 0.0);
  CHECK(id.mu == 0.0);

  BoundedNormal bounded{0.8, 0.0, 0.5, 2.0};
  auto tb = tilt_piece(bounded, 1.3);
  double z = testsupport::integrate([&](double x) { return tb.pdf(x); }, 0.5, 2.0);
  CHECK(z == doctest::Approx(1.0).epsilon(1e-9));
  check_tilt_identity(bounded, tb, 1.3, 0.5, 2.0, false);
}

TEST_CASE("mixture tilt matches the exponential-change-of-measure identity") {
  BoundedNormalMixture p;
  p.lower = 0.0;
  p.upper = 1.5;
  p.components = {{0.5, 0.3, 0.0}, {0.5, 0.9, 0.0}};

  auto id = tilt_piece(p, 0.0);
  for (double x : {0.1, 0.4, 1.2}) CHECK(id.pdf(x) == doctest::Approx(p.pdf(x)).epsilon(1e-12));

  BoundedNormalMixture single;
  single.lower = 0.0;
  single.upper = 1.5;
  single.components = {{1.0, 0.6, 0.0}};
  auto ts = tilt_piece(single, 0.7);
  auto tn = tilt_piece(BoundedNormal{0.6, 0.0, 0.0, 1.5}, 0.7);
  for (double x : {0.1, 0.7, 1.4}) CHECK(ts.pdf(x) == doctest::Approx(tn.pdf(x)).epsilon(1e-12));

  auto t = tilt_piece(p, 1.0);
  check_tilt_identity(p, t, 1.0, 0.0, 1.5, false);
  double wsum = 0.0;
  for (const auto& c : t.components) wsum += c.weight;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("tilted piecewise proposal stays normalized and serializes") {
  BoundedNormalMixture body;
  body.lower = 0.0;
  body.upper = 0.5;
  body.components = {{0.6, 0.1, 0.0}, {0.4, 0.25, 0.0}};
  PiecewiseMixture base({0.0, 0.5, kInf}, {0.7, 0.3},
                        {body, BoundedExponential{4.0, 0.5, kInf}});
  TiltedPiecewise prop(base, {0.8, 2.5}, {0.4, 0.6});
  double z = testsupport::integrate_to_inf([&](double x) { return prop.pdf(x); }, 0.0, 1e-12);
  CHECK(z == doctest::Approx(1.0).epsilon(1e-8));

  auto j = prop.to_json();
  CHECK(j.contains("theta"));
  CHECK(j.contains("proposal_weights"));
  auto back = TiltedPiecewise::from_json(nlohmann::json::parse(j.dump()));
  CHECK(back.to_json().dump() == j.dump());
  for (double x : {0.1, 0.4, 0.7, 3.0}) {
    CHECK(back.pdf(x) == doctest::Approx(prop.pdf(x)).epsilon(1e-14));
  }
}

TEST_CASE("zero tilt gives likelihood ratio 1") {
  PiecewiseMixture base({0.0, 1.0, kInf}, {0.5, 0.5},
                        {BoundedExponential{2.0, 0.0, 1.0}, BoundedExponential{2.0, 1.0, kInf}});
  auto id = TiltedPiecewise::identity(base);
  Rng rng(41);
  for (int i = 0; i < 200; ++i) {
    double x = base.sample(rng);
    CHECK(std::abs(likelihood_ratio(base, id, x) - 1.0) < 1e-12);
  }
}

TEST_CASE("likelihood ratio hand value and unbiasedness") {
  PiecewiseMixture base({0.0, kInf}, {1.0}, {BoundedExponential{1.0, 0.0, kInf}});
  TiltedPiecewise prop(base, {0.9}, {1.0});
  // f(10)/q(10) = e^{-10} / (0.1 e^{-1})
  CHECK(likelihood_ratio(base, prop, 10.0) ==
        doctest::Approx(0.0012340980408667955).epsilon(1e-12));

  Rng rng(43);
  const int n = 100000;
  double sum = 0.0, sumsq = 0.0;
  for (int i = 0; i < n; ++i) {
    double x = prop.sample(rng);
    double lr = likelihood_ratio(base, prop, x);
    sum += lr;
    sumsq += lr * lr;
  }
  double mean = sum / n;
  double se = std::sqrt((sumsq / n - mean * mean) / n);
  CHECK(std::abs(mean - 1.0) < 3.0 * se);
}

TEST_CASE("support mismatch raises") {
  PiecewiseMixture base({0.0, 1.0, kInf}, {0.5, 0.5},
                        {BoundedExponential{2.0, 0.0, 1.0}, BoundedExponential{2.0, 1.0, kInf}});
  // proposal with zero weight on piece 1 has no support where the base does
  TiltedPiecewise starved(base, {0.0, 0.0}, {0.0, 1.0});
  CHECK_THROWS(likelihood_ratio(base, starved, 0.5));
  CHECK(log_likelihood_ratio(base, starved, 5.0) < kInf);
  // outside the base support the ratio is 0 regardless of the proposal
  CHECK(log_likelihood_ratio(base, starved, -2.0) == -kInf);
}

TEST_CASE("deep-tail ratios stay finite in log space") {
  PiecewiseMixture base({0.0, kInf}, {1.0}, {BoundedExponential{1.0, 0.0, kInf}});
  TiltedPiecewise prop(base, {0.999}, {1.0});
  double llr = log_likelihood_ratio(base, prop, 800.0);
  CHECK(std::isfinite(llr));
  CHECK(llr == doctest::Approx(std::log(1.0 / 0.001) - (1.0 - 0.001) * 800.0).epsilon(1e-9));
}

}  // TEST_SUITE
