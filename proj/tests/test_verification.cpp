#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ymgen/verification.hpp"
#include "ymgen/waves.hpp"

using namespace ymgen;

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
GridField field_from(const Grid& g, Stencil s, F&& state_at) {
  GridField f(g, s);
  for (size_t p = 0; p < g.points(); ++p) {
    auto i = g.coords(p);
    std::array<double, kMaxDim + 1> y{};
    for (int a = 0; a < g.axes(); ++a) y[a] = g.position(a, i[a]);
    f.set(p, state_at(y), 0.0);
  }
  return f;
}

GridField constant_field(const Grid& g, const StatePoint& w) {
  return field_from(g, Stencil::Forward, [&](const auto&) { return w; });
}

}  // namespace

TEST_CASE("shear flow has zero residual") {
  Grid g{2, 32, 16, 1.0};
  for (Stencil s : {Stencil::Spectral, Stencil::Forward}) {
    GridField f = field_from(g, s, [](const auto& y) {
      return StatePoint(Vec{std::sin(2.0 * kPi * y[1]), 0.0}, TracelessSym(2));
    });
    Residual r = subsolution_residual(f);
    CHECK(r.max_div < 1e-12);
    CHECK(r.max_offparallel < 1e-12);
  }
}

TEST_CASE("an unbalanced off-diagonal stress is detected") {
  Grid g{2, 32, 16, 1.0};
  GridField f = field_from(g, Stencil::Spectral, [](const auto& y) {
    TracelessSym u(2);
    u.free_at(1) = std::sin(2.0 * kPi * y[1]);
    return StatePoint(Vec(2), u);
  });
  REQUIRE(f.state(g.index({0, 3, 0})).u(0, 1) != 0.0);
  Residual r = subsolution_residual(f);
  CHECK(r.max_div < 1e-12);
  CHECK(r.max_offparallel > 1e-3);
}

TEST_CASE("a compressible velocity is detected") {
  Grid g{2, 32, 16, 1.0};
  GridField f = field_from(g, Stencil::Spectral, [](const auto& y) {
    return StatePoint(Vec{std::sin(2.0 * kPi * y[0]), 0.0}, TracelessSym(2));
  });
  CHECK(subsolution_residual(f).max_div > 1e-3);
}

TEST_CASE("residual of the zero field is zero") {
  Grid g{2, 8, 8, 1.0};
  Residual r = subsolution_residual(GridField(g, Stencil::Forward));
  CHECK(r.max_div == 0.0);
  CHECK(r.max_offparallel == 0.0);
}

TEST_CASE("residual is invariant under scaling of the field") {
  Grid g{2, 32, 16, 1.0};
  auto make = [&](double c) {
    return field_from(g, Stencil::Spectral, [c](const auto& y) {
      TracelessSym u(2);
      u.free_at(1) = c * std::sin(2.0 * kPi * y[1]);
      return StatePoint(Vec{c * std::cos(2.0 * kPi * y[0]), 0.0}, u);
    });
  };
  Residual a = subsolution_residual(make(1.0)), b = subsolution_residual(make(7.5));
  CHECK(a.max_div == doctest::Approx(b.max_div));
  CHECK(a.max_offparallel == doctest::Approx(b.max_offparallel));
}

TEST_CASE("pairing examples") {
  Grid g{2, 16, 8, 2.0};
  StatePoint w(Vec{1.0, 0.0}, TracelessSym(2));
  GridField f = constant_field(g, w);
  Pairing one = empirical_pairing(f, tf_constant(1.0));
  CHECK(one.value == doctest::Approx(2.0));
  CHECK(one.quadrature_error == doctest::Approx(0.0).scale(1.0));
  // e((1,0), 0) = (2/2) * 1 by hand
  CHECK(empirical_pairing(f, tf_energy()).value == doctest::Approx(2.0));
  CHECK(empirical_pairing(f, tf_velocity(0)).value == doctest::Approx(2.0));
  CHECK(empirical_pairing(f, tf_velocity(1)).value == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("bank pairings of a constant field agree with the Dirac measure") {
  Grid g{2, 64, 64, 1.0};
  StatePoint w(Vec{0.3, -0.2}, ocircle(Vec{0.5, 0.1}));
  GridField f = constant_field(g, w);
  TestBank bank(2);
  std::vector<double> fp = field_bank_pairings(f, bank);
  GeneralizedYM ym = GeneralizedYM::homogeneous(2, 1.0, 1, Cell{DiscreteMeasure::dirac(w), {}});
  std::vector<double> mp = bank_pairings(ym, bank);
  REQUIRE(fp.size() == mp.size());
  CHECK(bank_distance(fp, mp) < 1e-3);
}

TEST_CASE("timeslice convex check") {
  Grid g{2, 8, 4, 1.0};
  StatePoint w(Vec{1.0, 0.0}, TracelessSym(2));
  // Half of each slice at w, half at -w: mean energy equals e(w), above e(0) = 0.
  GridField f = field_from(g, Stencil::Forward, [&](const auto& y) { return y[0] < 0.5 ? w : -w; });
  SliceCheck c = timeslice_convex_check(f, tf_energy(), gen_energy(w), 1e-3);
  CHECK(c.slack.size() == 4);
  CHECK(c.max_slack == doctest::Approx(0.0).scale(1.0));
  CHECK(c.pass);
  CHECK(timeslice_convex_check(f, tf_energy(), 0.0, 1e-3).max_slack >= gen_energy(0.5 * (w - w)));
  CHECK_FALSE(timeslice_convex_check(f, tf_energy(), 0.0, 1e-3).pass);

  TestFunction wiggle("wiggle", [](const StatePoint& s) { return std::sin(s.norm2()); }, std::nullopt, false);
  CHECK_THROWS_AS(timeslice_convex_check(f, wiggle, 0.0, 1e-3), InputError);
}

TEST_CASE("volume fractions") {
  Grid g{2, 8, 8, 1.0};
  GridField zero(g, Stencil::Forward);
  Fractions fr = volume_fractions(zero, {{1.0, StatePoint(2)}}, 1e-8, 0.05);
  CHECK(fr.total[0] == 1.0);
  CHECK(fr.max_error == 0.0);
  CHECK(fr.max_slice_error == 0.0);

  StatePoint w(Vec{1.0, 0.0}, TracelessSym(2));
  GridField f = field_from(g, Stencil::Forward, [&](const auto& y) { return y[0] < 0.25 ? w : -w; });
  Fractions q = volume_fractions(f, {{0.5, w}, {0.5, -w}}, 1e-8, 0.05);
  CHECK(q.total[0] == doctest::Approx(0.25));
  CHECK(q.total[1] == doctest::Approx(0.75));
  CHECK(q.max_error == doctest::Approx(0.25));
  CHECK_THROWS_AS(volume_fractions(f, {{0.5, w}, {0.5, w}}, 1e-8, 0.05), InputError);
}

TEST_CASE("energy timeseries, defect and sup norm examples") {
  Grid g{2, 8, 4, 2.0};
  GridField f = field_from(g, Stencil::Forward, [](const auto& y) {
    return StatePoint(Vec{y[2], 0.0}, TracelessSym(2));
  });
  std::vector<double> e = energy_timeseries(f);
  REQUIRE(e.size() == 4);
  for (int t = 0; t < 4; ++t) {
    double c = g.position(2, t);
    CHECK(e[t] == doctest::Approx(c * c));
  }
  CHECK(sup_norm(f) == doctest::Approx(g.position(2, 3)));

  // |0 - v o v| for v = (1,0) is |diag(1/2, -1/2)| = 1/sqrt 2
  GridField c = constant_field(g, StatePoint(Vec{1.0, 0.0}, TracelessSym(2)));
  CHECK(euler_defect(c) == doctest::Approx(2.0 / std::sqrt(2.0)));
  GridField balanced = constant_field(g, StatePoint(Vec{1.0, 0.0}, ocircle(Vec{1.0, 0.0})));
  CHECK(euler_defect(balanced) == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("verify_field accepts a synthesized two-atom field") {
  Grid g{2, 64, 64, 1.0};
  StatePoint w(Vec{1.0, 0.0}, ocircle(Vec{1.0, 0.0}));
  SynthesisParams sp;
  sp.delta = 1.0;
  Synthesis s = two_atom_field(w, -w, 0.5, 0.5, g, sp);
  DiscreteMeasure nu({{0.5, w}, {0.5, -w}});
  VerificationReport r = verify_field(s.field, nu, TestBank(2), VerifyParams{});
  for (const Criterion& c : r.criteria) {
    INFO(c.name << " " << c.value << " " << c.threshold);
    CHECK(c.pass);
  }
  CHECK(r.pass());
}

TEST_CASE("verify_field rejects a field for the wrong target") {
  Grid g{2, 16, 16, 1.0};
  StatePoint w(Vec{1.0, 0.0}, ocircle(Vec{1.0, 0.0}));
  GridField zero(g, Stencil::Forward);
  DiscreteMeasure nu({{0.5, w}, {0.5, -w}});
  VerificationReport r = verify_field(zero, nu, TestBank(2), VerifyParams{});
  CHECK_FALSE(r.pass());

  VerificationReport ok = verify_field(zero, DiscreteMeasure::dirac(StatePoint(2)), TestBank(2), VerifyParams{});
  CHECK(ok.pass());
}
