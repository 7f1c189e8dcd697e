#include <doctest.h>

#include <cmath>

#include "ymgen/json_io.hpp"
#include "ymgen/measures.hpp"
#include "ymgen/rng.hpp"

using namespace ymgen;

namespace {

StatePoint random_state(Rng& rng, int d, double r = 1.5) {
  StatePoint w(d);
  for (int i = 0; i < d; ++i) w.v[i] = rng.uniform(-r, r);
  for (int k = 0; k < w.u.free_count(); ++k) w.u.free_at(k) = rng.uniform(-r, r);
  return w;
}

DiscreteMeasure random_measure(Rng& rng, int d, int n) {
  std::vector<Atom> atoms;
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    atoms.push_back({rng.uniform(0.1, 1.0), random_state(rng, d)});
    total += atoms.back().weight;
  }
  for (Atom& a : atoms) a.weight /= total;
  return DiscreteMeasure(atoms);
}

SpherePoint unit_lift(double angle) { return SpherePoint(lift_point(Vec{std::cos(angle), std::sin(angle)})); }

GeneralizedYM random_ym(Rng& rng, int k, double T, bool conc) {
  std::vector<Cell> cells;
  const int n = k * k * static_cast<int>(std::lround(T * k));
  for (int i = 0; i < n; ++i) {
    Cell c{random_measure(rng, 2, 1 + i % 3), {}};
    if (conc && i % 2 == 0) {
      c.conc.alpha = rng.uniform(0.0, 2.0);
      c.conc.angle_atoms = {{0.4, unit_lift(rng.uniform(0.0, 6.0))}, {0.6, unit_lift(rng.uniform(0.0, 6.0))}};
    }
    cells.push_back(c);
  }
  return GeneralizedYM(2, T, k, cells);
}

}  // namespace

TEST_CASE("discrete measures reject bad weights") {
  StatePoint w(2);
  CHECK_THROWS_AS(DiscreteMeasure({{0.5, w}, {0.4, w}}), InputError);
  CHECK_THROWS_AS(DiscreteMeasure({{1.2, w}, {-0.2, w}}), InputError);
  CHECK_NOTHROW(DiscreteMeasure({{0.25, w}, {0.75, w}}));
}

TEST_CASE("pair examples") {
  StatePoint w0(Vec{0.3, -1.0}, ocircle(Vec{1.0, 2.0}));
  auto dirac = GeneralizedYM::homogeneous(2, 1.0, 2, Cell{DiscreteMeasure::dirac(w0), {}});
  for (const TestFunction& f : {tf_energy(), tf_kinetic(), tf_velocity(1), tf_defect()})
    CHECK(pair(dirac, f) == doctest::Approx(f(w0)).epsilon(1e-13));

  SpherePoint z = unit_lift(0.7);
  Cell c{DiscreteMeasure::dirac(StatePoint(2)), {}};
  c.conc.alpha = 1.0;
  c.conc.angle_atoms = {{1.0, z}};
  auto conc = GeneralizedYM::homogeneous(2, 1.0, 1, c);
  CHECK(pair(conc, tf_energy()) == doctest::Approx(gen_energy(z.base())).epsilon(1e-13));

  // Two time slabs of volume 1 each.
  StatePoint a(Vec{1.0, 0.0}, TracelessSym(2)), b(Vec{0.0, 2.0}, ocircle(Vec{1.0, 1.0}));
  GeneralizedYM two(2, 2.0, 1, {Cell{DiscreteMeasure::dirac(a), {}}, Cell{DiscreteMeasure::dirac(b), {}}});
  CHECK(pair(two, tf_kinetic()) == doctest::Approx(1.0 + 4.0));
  CHECK(pair(two, tf_energy()) == doctest::Approx(gen_energy(a) + gen_energy(b)));
}

TEST_CASE("pair needs a recession function when concentration is present") {
  Cell c{DiscreteMeasure::dirac(StatePoint(2)), {}};
  c.conc.alpha = 0.5;
  c.conc.angle_atoms = {{1.0, unit_lift(0.0)}};
  auto ym = GeneralizedYM::homogeneous(2, 1.0, 1, c);
  TestFunction plain("plain", [](const StatePoint& w) { return w.v[0]; }, std::nullopt, false);
  CHECK_THROWS_AS(pair(ym, plain), InputError);
  c.conc = {};
  CHECK_NOTHROW(pair(GeneralizedYM::homogeneous(2, 1.0, 1, c), plain));
}

TEST_CASE("concentration density without angle atoms is rejected") {
  ConcentrationPart c;
  c.alpha = 1.0;
  CHECK_THROWS_AS(c.validate(2), InputError);
}

TEST_CASE("barycentre examples") {
  StatePoint w(Vec{0.5, 1.0}, ocircle(Vec{2.0, -1.0}));
  auto one = GeneralizedYM::homogeneous(2, 1.0, 1, Cell{DiscreteMeasure::dirac(w), {}});
  CHECK((barycentre(one)[0] - w).norm() < 1e-15);

  auto sym = GeneralizedYM::homogeneous(2, 1.0, 1, Cell{DiscreteMeasure({{0.5, w}, {0.5, -w}}), {}});
  CHECK(barycentre(sym)[0].norm() < 1e-15);

  SpherePoint z = unit_lift(1.1);
  Cell c{DiscreteMeasure::dirac(StatePoint(2)), {}};
  c.conc.alpha = 1.0;
  c.conc.angle_atoms = {{1.0, z}};
  StatePoint b = barycentre(GeneralizedYM::homogeneous(2, 1.0, 1, c))[0];
  CHECK(b.v.norm() < 1e-15);
  CHECK((b.u - z.base().u).frobenius() < 1e-15);
}

TEST_CASE("shift examples") {
  Rng rng(17);
  auto zero = GeneralizedYM::homogeneous(2, 1.0, 2, Cell{DiscreteMeasure::dirac(StatePoint(2)), {}});
  std::vector<StatePoint> w;
  for (size_t i = 0; i < zero.size(); ++i) w.push_back(random_state(rng, 2));
  auto shifted = shift(zero, w);
  for (size_t i = 0; i < zero.size(); ++i) {
    REQUIRE(shifted.cell(i).osc.size() == 1);
    CHECK((shifted.cell(i).osc.atoms()[0].point - w[i]).norm() < 1e-15);
  }

  GeneralizedYM ym = random_ym(rng, 2, 1.0, true);
  std::vector<StatePoint> s, minus;
  for (size_t i = 0; i < ym.size(); ++i) {
    s.push_back(random_state(rng, 2));
    minus.push_back(-s.back());
  }
  TestBank bank(2);
  auto p0 = bank_pairings(ym, bank);
  auto p1 = bank_pairings(shift(shift(ym, s), minus), bank);
  for (size_t i = 0; i < p0.size(); ++i) CHECK(p1[i] == doctest::Approx(p0[i]).epsilon(1e-12));

  auto b0 = barycentre(ym), b1 = barycentre(shift(ym, s));
  for (size_t i = 0; i < ym.size(); ++i) CHECK((b1[i] - b0[i] - s[i]).norm() < 1e-12);
}

TEST_CASE("shift commutes with translating the test function") {
  Rng rng(4);
  GeneralizedYM ym = random_ym(rng, 2, 1.0, false);
  StatePoint s = random_state(rng, 2);
  std::vector<StatePoint> field(ym.size(), s);
  TestBank bank(2);
  for (const TestFunction& f : bank.functions()) {
    TestFunction ft("t", [&](const StatePoint& w) { return f(w + s); }, std::nullopt, false);
    CHECK(pair(shift(ym, field), f) == doctest::Approx(pair(ym, ft)).epsilon(1e-12));
  }
}

TEST_CASE("energy profile examples") {
  Vec v0{0.6, -0.8};
  auto lifted = GeneralizedYM::homogeneous(2, 1.0, 4, Cell{DiscreteMeasure::dirac(lift_point(v0)), {}});
  auto e = energy_profile(lifted);
  REQUIRE(e.size() == 4);
  for (double x : e) CHECK(x == doctest::Approx(0.5 * v0.norm2()).epsilon(1e-13));

  SpherePoint z = unit_lift(2.0);
  Cell c{DiscreteMeasure::dirac(lift_point(v0)), {}};
  c.conc.alpha = 0.3;
  c.conc.angle_atoms = {{1.0, z}};
  auto with = energy_profile(GeneralizedYM::homogeneous(2, 1.0, 4, c));
  for (double x : with) CHECK(x == doctest::Approx(0.5 * v0.norm2() + 0.3 * gen_energy(z.base())).epsilon(1e-13));
}

TEST_CASE("lifting of velocity measures") {
  VelocityMeasure vm;
  vm.d = 2;
  vm.T = 1.0;
  vm.k = 1;
  VelocityCell one;
  one.atoms = {{1.0, Vec{0.3, 0.4}}};
  vm.cells = {one};
  GeneralizedYM l = lift_measure(vm);
  REQUIRE(l.cell(0).osc.size() == 1);
  CHECK((l.cell(0).osc.atoms()[0].point - lift_point(Vec{0.3, 0.4})).norm() < 1e-15);

  VelocityCell three;
  three.atoms = {{0.2, Vec{1.0, 0.0}}, {0.5, Vec{-0.5, 1.5}}, {0.3, Vec{0.0, -2.0}}};
  three.alpha = 0.7;
  three.angles = {{0.5, Vec{1.0, 0.0}}, {0.5, Vec{0.6, 0.8}}};
  vm.cells = {three};
  l = lift_measure(vm);
  CHECK(std::abs(pair(l, tf_defect())) < 1e-13);
  auto e1 = energy_profile(l), e2 = velocity_energy_profile(vm);
  REQUIRE(e1.size() == e2.size());
  // Both sides: 0.2/2 + 0.5*2.5/2 + 0.3*4/2 + 0.7/2.
  const double hand = 0.1 + 0.625 + 0.6 + 0.35;
  CHECK(e1[0] == doctest::Approx(hand).epsilon(1e-13));
  CHECK(e2[0] == doctest::Approx(hand).epsilon(1e-13));

  TestBank bank(2);
  for (const TestFunction& f : bank.functions()) {
    if (!f.has_recession()) continue;
    CHECK(pair(l, f) == doctest::Approx(pair_velocity(vm, compose_lift(f))).epsilon(1e-12));
  }

  VelocityCell bad;
  bad.atoms = {{1.0, Vec{0.0, 0.0}}};
  bad.alpha = 1.0;
  bad.angles = {{1.0, Vec{2.0, 0.0}}};
  vm.cells = {bad};
  CHECK_THROWS_AS(lift_measure(vm), InputError);
}

TEST_CASE("recession of composed functions matches the lifted recession") {
  Rng rng(8);
  TestBank bank(2);
  for (int t = 0; t < 50; ++t) {
    double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
    Vec xi{std::cos(a), std::sin(a)};
    for (const TestFunction& f : bank.functions()) {
      if (!f.has_recession()) continue;
      CHECK(compose_lift(f).recession(xi) == doctest::Approx(f.recession(SpherePoint(lift_point(xi)))).epsilon(1e-12));
    }
  }
}

TEST_CASE("recession_eval examples") {
  Rng rng(99);
  for (int t = 0; t < 100; ++t) {
    StatePoint w = random_state(rng, 2 + t % 2);
    CHECK(recession_eval(tf_energy(), w) == doctest::Approx(gen_energy(w)).epsilon(1e-12));
    CHECK(recession_eval(tf_defect(), w) == doctest::Approx(tf_defect()(w)).epsilon(1e-12));
    CHECK(recession_eval(tf_constant(3.0), w) == 0.0);
  }
  CHECK(recession_eval(tf_energy(), StatePoint(2)) == 0.0);
}

TEST_CASE("finite-s quotients approach the recession function") {
  Rng rng(12);
  TestBank bank(2);
  for (int t = 0; t < 20; ++t) {
    StatePoint w = random_state(rng, 2);
    auto [s0, z] = sphere_split(w);
    for (const TestFunction& f : bank.functions()) {
      if (!f.has_recession()) continue;
      double prev = 1e300;
      for (double s : {1e2, 1e3, 1e4}) {
        double q = f(sphere_scale(z, s)) / (s * s);
        double err = std::abs(q - f.recession(z));
        CHECK(err <= prev + 1e-12);
        prev = err;
      }
      CHECK(prev < 1e-3);
    }
  }
}

TEST_CASE("pair is linear in f and additive over cells") {
  Rng rng(21);
  GeneralizedYM ym = random_ym(rng, 2, 1.0, true);
  TestFunction e = tf_energy(), k = tf_kinetic();
  TestFunction comb(
      "comb", [&](const StatePoint& w) { return 2.0 * e(w) - 3.0 * k(w); },
      [&](const StatePoint& w) { return 2.0 * e.recession_raw(w) - 3.0 * k.recession_raw(w); }, false);
  CHECK(pair(ym, comb) == doctest::Approx(2.0 * pair(ym, e) - 3.0 * pair(ym, k)).epsilon(1e-12));

  double sum = 0.0;
  for (size_t i = 0; i < ym.size(); ++i)
    sum += pair(GeneralizedYM::homogeneous(2, 1.0, 1, ym.cell(i)), e) * ym.cell_volume();
  CHECK(pair(ym, e) == doctest::Approx(sum).epsilon(1e-12));
}

TEST_CASE("cell kinetic energy dominates the barycentre energy") {
  Rng rng(31);
  for (int t = 0; t < 200; ++t) {
    DiscreteMeasure m = random_measure(rng, 2, 1 + t % 5);
    double alpha = t % 2 ? rng.uniform(0.0, 3.0) : 0.0;
    double lhs = m.expect([](const StatePoint& w) { return 0.5 * w.v.norm2(); }) + 0.5 * alpha;
    CHECK(lhs + 1e-12 >= 0.5 * m.barycentre().v.norm2());
  }
}

TEST_CASE("ym_distance is a pseudometric on the bank") {
  Rng rng(44);
  TestBank bank(2);
  GeneralizedYM a = random_ym(rng, 2, 1.0, true);
  CHECK(ym_distance(a, a, bank) == 0.0);
  for (int t = 0; t < 100; ++t) {
    GeneralizedYM x = random_ym(rng, 1, 1.0, t % 2 == 0);
    GeneralizedYM y = random_ym(rng, 1, 1.0, t % 3 == 0);
    GeneralizedYM z = random_ym(rng, 1, 1.0, false);
    double xy = ym_distance(x, y, bank), yz = ym_distance(y, z, bank), xz = ym_distance(x, z, bank);
    CHECK(xy == doctest::Approx(ym_distance(y, x, bank)).epsilon(1e-14));
    CHECK(xz <= xy + yz + 1e-14);
    CHECK(xy >= 0.0);
  }
  CHECK_THROWS_AS(ym_distance(a, random_ym(rng, 1, 2.0, false), bank), InputError);
}

TEST_CASE("generalized Young measure JSON round trip") {
  Rng rng(3);
  GeneralizedYM ym = random_ym(rng, 2, 0.5, true);
  GeneralizedYM back = ym_from_json(to_json(ym));
  TestBank bank(2);
  CHECK(ym_distance(ym, back, bank) < 1e-15);
  nlohmann::json j = to_json(ym);
  CHECK(content_hash(j) == content_hash(nlohmann::json::parse(j.dump())));
  nlohmann::json j2 = j;
  j2["T"] = 0.25;
  CHECK(content_hash(j) != content_hash(j2));
  CHECK_THROWS_AS(ym_from_json(nlohmann::json{{"d", 2}, {"cells", 3}}), InputError);
}
