#include "doctest.h"

#include <cmath>
#include <vector>

#include "accel/distributions.hpp"
#include "accel/kernels.hpp"
#include "accel/math.hpp"
#include "accel/rng.hpp"

using namespace accel;
namespace k = accel::kernels;

namespace {

struct IsaGuard {
  k::Isa saved = k::active_isa();
  ~IsaGuard() { k::force_isa(saved); }
};

PiecewiseMixture kernel_fixture() {
  BoundedNormalMixture body;
  body.lower = 0.0;
  body.upper = 0.5;
  body.components = {{0.55, 0.07, 0.0}, {0.45, 0.22, 0.1}};
  return PiecewiseMixture({0.0, 0.5, 2.0, kInf}, {0.48, 0.32, 0.2},
                          {body, BoundedNormal{0.8, 0.3, 0.5, 2.0}, BoundedExponential{1.5, 2.0, kInf}});
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("exp and log vector kernels match libm to a few ulp") {
  if (!k::avx2_supported()) return;
  IsaGuard guard;
  Rng rng(5);
  const std::size_t n = 40000;
  std::vector<double> x(n), got(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = -700.0 + 1400.0 * rng.u01();
  k::force_isa(k::Isa::avx2);
  k::exp_batch(x, got);
  for (std::size_t i = 0; i < n; ++i) {
    double ref = std::exp(x[i]);
    CHECK(std::abs(got[i] - ref) <= 4e-15 * std::abs(ref));
  }
  // domain edges
  std::vector<double> edge{-800.0, -745.2, 709.9, 800.0, 0.0, -0.0, kInf, -kInf};
  std::vector<double> edge_out(edge.size());
  k::exp_batch(edge, edge_out);
  CHECK(edge_out[0] == 0.0);
  CHECK(edge_out[1] == 0.0);
  CHECK(edge_out[2] == kInf);
  CHECK(edge_out[3] == kInf);
  CHECK(edge_out[4] == 1.0);
  CHECK(edge_out[5] == 1.0);
  CHECK(edge_out[6] == kInf);
  CHECK(edge_out[7] == 0.0);

  for (std::size_t i = 0; i < n; ++i) x[i] = std::exp(-690.0 + 1380.0 * rng.u01());
  k::log_batch(x, got);
  for (std::size_t i = 0; i < n; ++i) {
    double ref = std::log(x[i]);
    CHECK(std::abs(got[i] - ref) <= 4e-15 * std::max(1.0, std::abs(ref)));
  }
  std::vector<double> ledge{0.0, -1.0, kInf, 1.0, 5e-324};
  std::vector<double> ledge_out(ledge.size());
  k::log_batch(ledge, ledge_out);
  CHECK(ledge_out[0] == -kInf);
  CHECK(std::isnan(ledge_out[1]));
  CHECK(ledge_out[2] == kInf);
  CHECK(ledge_out[3] == 0.0);
  CHECK(ledge_out[4] == doctest::Approx(std::log(5e-324)).epsilon(1e-13));
}

TEST_CASE("piecewise log-pdf batch agrees with the distribution") {
  auto d = kernel_fixture();
  auto table = k::make_piece_table(d);
  Rng rng(9);
  const std::size_t n = 5000;
  std::vector<double> x(n), out(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = -0.5 + 6.0 * rng.u01();
  IsaGuard guard;
  for (k::Isa isa : {k::Isa::scalar, k::Isa::avx2}) {
    if (isa == k::Isa::avx2 && !k::avx2_supported()) continue;
    k::force_isa(isa);
    k::log_pdf_batch(table, x, out);
    for (std::size_t i = 0; i < n; ++i) {
      double ref = d.log_pdf(x[i]);
      if (ref == -kInf) {
        CHECK(out[i] == -kInf);
      } else {
        CHECK(std::abs(out[i] - ref) <= 1e-11 * std::max(1.0, std::abs(ref)));
      }
    }
  }
}

TEST_CASE("scalar and avx2 piecewise kernels agree") {
  if (!k::avx2_supported()) return;
  auto d = kernel_fixture();
  auto table = k::make_piece_table(d);
  Rng rng(13);
  const std::size_t n = 8192;
  std::vector<double> x(n), a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = -0.5 + 8.0 * rng.u01();
  IsaGuard guard;
  k::force_isa(k::Isa::scalar);
  k::log_pdf_batch(table, x, a);
  k::force_isa(k::Isa::avx2);
  k::log_pdf_batch(table, x, b);
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] == -kInf) {
      CHECK(b[i] == -kInf);
    } else if (x[i] >= 0.5) {
      // exponential/normal pieces run the same operation sequence: bit-equal
      CHECK(a[i] == b[i]);
    } else {
      CHECK(std::abs(a[i] - b[i]) <= 5e-13 * std::max(1.0, std::abs(a[i])));
    }
  }
}

TEST_CASE("cut-in kernel equivalence is exact across variants") {
  if (!k::avx2_supported()) return;
  k::CutInControl ctrl;
  ctrl.dt = 0.01;
  ctrl.horizon = 10.0;
  ctrl.trigger_ttc = 3.0;
  ctrl.reaction_delay = 0.4;
  ctrl.max_decel = 4.0;

  Rng rng(21);
  const std::size_t n = 3001;  // odd size exercises the tail path
  std::vector<double> r0(n), rd0(n), vl(n);
  for (std::size_t i = 0; i < n; ++i) {
    r0[i] = 1.0 + 120.0 * rng.u01();
    rd0[i] = -12.0 + 14.0 * rng.u01();  // mostly closing, some opening
    vl[i] = 5.0 + 30.0 * rng.u01();
  }
  std::vector<double> mr_a(n), mt_a(n), ct_a(n), mr_b(n), mt_b(n), ct_b(n);
  IsaGuard guard;
  k::force_isa(k::Isa::scalar);
  k::cut_in_batch(ctrl, r0, rd0, vl, mr_a, mt_a, ct_a);
  k::force_isa(k::Isa::avx2);
  k::cut_in_batch(ctrl, r0, rd0, vl, mr_b, mt_b, ct_b);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(mr_a[i] == mr_b[i]);
    CHECK(mt_a[i] == mt_b[i]);
    CHECK((ct_a[i] == ct_b[i] || (std::isnan(ct_a[i]) && std::isnan(ct_b[i]))));
  }
}

TEST_CASE("cut-in kernel basic outcomes") {
  k::CutInControl no_brake;
  no_brake.trigger_ttc = 0.0;
  no_brake.reaction_delay = 0.0;
  no_brake.max_decel = 5.0;
  std::vector<double> r0{10.0}, rd0{-5.0}, vl{20.0};
  std::vector<double> mr(1), mt(1), ct(1);
  k::cut_in_batch(no_brake, r0, rd0, vl, mr, mt, ct);
  CHECK(mr[0] <= 0.0);
  CHECK(std::abs(ct[0] - 2.0) <= no_brake.dt);

  // opening scenario never crashes
  std::vector<double> rd_open{2.0};
  k::cut_in_batch(no_brake, r0, rd_open, vl, mr, mt, ct);
  CHECK(mr[0] == 10.0);
  CHECK(mt[0] == kInf);
  CHECK(std::isnan(ct[0]));

  CHECK_THROWS(k::cut_in_batch(no_brake, std::vector<double>{-1.0}, rd0, vl, mr, mt, ct));
}

TEST_CASE("dispatch honors force_isa") {
  IsaGuard guard;
  k::force_isa(k::Isa::scalar);
  CHECK(k::active_isa() == k::Isa::scalar);
  CHECK(k::isa_name(k::active_isa()) == "scalar");
  if (k::avx2_supported()) {
    k::force_isa(k::Isa::avx2);
    CHECK(k::active_isa() == k::Isa::avx2);
  }
}

}  // TEST_SUITE
