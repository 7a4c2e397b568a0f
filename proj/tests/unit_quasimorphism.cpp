#include <doctest.h>

#include <cmath>

#include "qmwalk/measure.hpp"
#include "qmwalk/quasimorphism.hpp"

using namespace qmwalk;

namespace {

Alphabet f2() { return Alphabet::free_group({"a", "b"}); }
Alphabet z1() { return Alphabet::free_abelian({"a"}); }

// Independent subword-count oracle.
std::int64_t oracle_count(const std::vector<GroupElement::Sym>& word,
                          const std::vector<GroupElement::Sym>& pat) {
  std::int64_t n = 0;
  if (word.size() < pat.size()) return 0;
  for (std::size_t s = 0; s + pat.size() <= word.size(); ++s) {
    bool hit = true;
    for (std::size_t i = 0; i < pat.size() && hit; ++i) hit = word[s + i] == pat[i];
    n += hit;
  }
  return n;
}

double oracle_brooks(const Alphabet& a, const std::string& pat_text, const GroupElement& g) {
  auto pat = parse_element(a, pat_text);
  auto inv = invert(a, pat);
  return static_cast<double>(oracle_count(g.data(), pat.data()) -
                             oracle_count(g.data(), inv.data()));
}

GroupElement random_element(const Alphabet& a, RngStream& rng, int max_len) {
  std::vector<GroupElement::Sym> w;
  auto len = rng.next_below(static_cast<std::uint64_t>(max_len) + 1);
  for (std::uint64_t i = 0; i < len; ++i) {
    auto gen = static_cast<GroupElement::Sym>(rng.next_below(static_cast<std::uint64_t>(a.rank()))) + 1;
    w.push_back(rng.next_below(2) ? gen : -gen);
  }
  return reduce(a, w);
}

}  // namespace

TEST_SUITE_BEGIN("quasimorphism");

TEST_CASE("homomorphism evaluation") {
  auto z = z1();
  auto id = make_homomorphism(z, {1.0});
  CHECK(id->eval(parse_element(z, "a^5")) == 5.0);
  CHECK(id->eval(parse_element(z, "a^-3")) == -3.0);
  CHECK(id->homogeneous());
  CHECK(*id->defect_bound() == 0.0);

  auto a = f2();
  auto hom = make_homomorphism(a, {2.0, -1.0});
  CHECK(hom->eval(parse_element(a, "a b a b^-1")) == 4.0);
}

TEST_CASE("Brooks counts match the subword oracle") {
  auto a = f2();
  auto phi = make_brooks(a, parse_element(a, "a b"));
  auto abab = parse_element(a, "a b a b");
  CHECK(phi->eval(abab) == 2.0);  // C_ab = 2, C_(ab)^-1 = 0
  CHECK(oracle_brooks(a, "a b", abab) == 2.0);

  RngStream rng(31, stream_id(StreamPurpose::generic, 31));
  for (int t = 0; t < 200; ++t) {
    auto g = random_element(a, rng, 24);
    CHECK(phi->eval(g) == oracle_brooks(a, "a b", g));
  }

  CHECK_THROWS_AS(make_brooks(a, GroupElement::identity(a)), ConfigError);
  auto z = z1();
  CHECK_THROWS_AS(make_brooks(z, parse_element(z, "a")), ConfigError);
}

TEST_CASE("Brooks functions are odd") {
  auto a = f2();
  auto phi = make_brooks(a, parse_element(a, "a b"));
  RngStream rng(32, stream_id(StreamPurpose::generic, 32));
  for (int t = 0; t < 100; ++t) {
    auto g = random_element(a, rng, 16);
    CHECK(phi->eval(invert(a, g)) == -phi->eval(g));
  }
}

TEST_CASE("differential examples") {
  auto a = f2();
  auto hom = make_homomorphism(a, {1.0, 3.0});
  RngStream rng(33, stream_id(StreamPurpose::generic, 33));
  for (int t = 0; t < 50; ++t) {
    auto g = random_element(a, rng, 10);
    auto h = random_element(a, rng, 10);
    CHECK(differential(*hom, g, h) == 0.0);
  }

  auto phi = make_brooks(a, parse_element(a, "a b"));
  auto e = GroupElement::identity(a);
  for (int t = 0; t < 20; ++t) {
    auto g = random_element(a, rng, 10);
    CHECK(differential(*phi, g, e) == -phi->eval(e));
  }
  CHECK(differential(*phi, parse_element(a, "a"), parse_element(a, "b")) == 1.0);
}

TEST_CASE("defect probes") {
  auto a = f2();
  auto hom = make_homomorphism(a, {1.0, -2.0});
  CHECK(defect_lower_bound(*hom, {.ball_radius = 3}).floor == 0.0);

  auto phi = make_brooks(a, parse_element(a, "a b"));
  auto probe3 = defect_lower_bound(*phi, {.ball_radius = 3});
  auto probe4 = defect_lower_bound(*phi, {.ball_radius = 4});
  CHECK(probe4.floor >= 1.0);
  CHECK(probe3.floor <= probe4.floor);
  CHECK(phi->defect_floor() == probe4.floor);
  CHECK(probe4.floor <= *phi->defect_bound());
  CHECK(std::abs(differential(*phi, probe4.witness_g, probe4.witness_h)) == probe4.floor);

  // Random pairs only extend the probed set.
  auto probe_rand = defect_lower_bound(*phi, {.ball_radius = 3, .random_pairs = 500, .seed = 9});
  CHECK(probe_rand.floor >= probe3.floor);
  CHECK(probe_rand.floor <= *phi->defect_bound());
}

TEST_CASE("probed differentials respect declared bounds") {
  auto a = f2();
  auto phi = make_brooks(a, parse_element(a, "a b"));
  auto noise = make_bounded_noise(a, 0.5, 123);
  RngStream rng(34, stream_id(StreamPurpose::generic, 34));
  for (int t = 0; t < 300; ++t) {
    auto g = random_element(a, rng, 12);
    auto h = random_element(a, rng, 12);
    CHECK(std::abs(differential(*phi, g, h)) <= *phi->defect_bound());
    CHECK(std::abs(differential(*noise, g, h)) <= *noise->defect_bound());
  }
}

TEST_CASE("homogenize: homomorphisms are fixed points with zero-width certificate") {
  auto z = z1();
  auto id = make_homomorphism(z, {1.0});
  auto h = homogenize(id, 6);
  CHECK(h.tolerance == 0.0);
  CHECK(h.qm->homogeneous());
  CHECK(h.qm->eval(parse_element(z, "a^7")) == 7.0);
}

TEST_CASE("homogenize matches the deep-power oracle and its invariance bounds") {
  auto a = f2();
  auto phi = make_brooks(a, parse_element(a, "a b"));
  const int depth = 6;
  const double n = 64.0;
  auto h = homogenize(phi, depth);
  const double d_plus = *phi->defect_bound();
  CHECK(h.tolerance == d_plus / n);
  CHECK_FALSE(h.qm->homogeneous());
  CHECK(*h.qm->homogeneity_tolerance() == h.tolerance);

  RngStream rng(35, stream_id(StreamPurpose::generic, 35));
  for (int t = 0; t < 25; ++t) {
    auto g = random_element(a, rng, 8);
    // Deep-power oracle: g^64 by explicit repeated multiplication.
    GroupElement p = GroupElement::identity(a);
    for (int i = 0; i < 64; ++i) p = multiply(a, p, g);
    CHECK(h.qm->eval(g) == doctest::Approx(phi->eval(p) / n).epsilon(1e-12));

    // Antisymmetry and conjugation invariance of the exact homogenization,
    // up to twice the finite-depth tolerance.
    CHECK(std::abs(h.qm->eval(invert(a, g)) + h.qm->eval(g)) <= 2 * d_plus / n + 1e-12);
    auto conj = random_element(a, rng, 3);
    auto gc = multiply(a, multiply(a, conj, g), invert(a, conj));
    CHECK(std::abs(h.qm->eval(gc) - h.qm->eval(g)) <= 2 * d_plus / n + 1e-12);
  }
}

TEST_CASE("eval_power agrees exactly with evaluation at the materialized power") {
  auto a = f2();
  RngStream rng(45, stream_id(StreamPurpose::generic, 45));
  std::vector<QmPtr> qms = {
      make_brooks(a, parse_element(a, "a b")),
      make_brooks(a, parse_element(a, "b")),
      make_brooks(a, parse_element(a, "a b a^-1 b^-1")),
      make_brooks(a, parse_element(a, "a a b")),
      make_homomorphism(a, {1.5, -2.0}),
      combine({{2.0, make_brooks(a, parse_element(a, "a b"))},
               {-1.0, make_brooks(a, parse_element(a, "b a"))}}),
  };
  for (const auto& qm : qms) {
    for (int t = 0; t < 60; ++t) {
      auto g = random_element(a, rng, 12);
      auto n = static_cast<std::int64_t>(rng.next_below(100));
      auto fast = qm->eval_power(g, n);
      REQUIRE(fast);
      CHECK(*fast == qm->eval(power(a, g, n)));
    }
    CHECK(*qm->eval_power(GroupElement::identity(a), 64) == 0.0);
  }
  CHECK_FALSE(make_bounded_noise(a, 1.0, 1)->eval_power(parse_element(a, "a"), 4));
}

TEST_CASE("homogenize requires a defect bound") {
  auto a = f2();
  auto phi = make_brooks(a, parse_element(a, "a b"));
  auto no_bound = combine({{1.0, phi}});
  CHECK(no_bound->defect_bound());  // combine propagates bounds...
  struct Bare final : Quasimorphism {
    explicit Bare(Alphabet al) : Quasimorphism(std::move(al), "bare") {}
    double eval(const GroupElement&) const override { return 0; }
  };
  auto bare = std::make_shared<Bare>(a);
  CHECK_THROWS_AS(homogenize(bare, 4), ConfigError);
}

TEST_CASE("exactly homogeneous evaluators satisfy phi(g^n) = n phi(g)") {
  auto a = f2();
  auto hom = make_homomorphism(a, {1.0, -0.5});
  for (const auto& g : enumerate_ball(a, 2)) {
    for (int n = 0; n <= 8; ++n) {
      CHECK(hom->eval(power(a, g, n)) == doctest::Approx(n * hom->eval(g)).epsilon(1e-12));
    }
  }
}

TEST_CASE("combine is pointwise linear") {
  auto a = f2();
  auto phi = make_brooks(a, parse_element(a, "a b"));
  auto psi = make_brooks(a, parse_element(a, "b"));
  auto one = combine({{1.0, phi}, {0.0, psi}});
  auto zero = combine({{1.0, phi}, {-1.0, phi}});
  auto twice = combine({{2.0, phi}});
  auto abab = parse_element(a, "a b a b");
  CHECK(one->eval(abab) == phi->eval(abab));
  CHECK(zero->eval(abab) == 0.0);
  CHECK(*zero->defect_bound() == 2 * *phi->defect_bound());
  CHECK(twice->eval(abab) == 4.0);

  RngStream rng(36, stream_id(StreamPurpose::generic, 36));
  for (int t = 0; t < 50; ++t) {
    auto g = random_element(a, rng, 12);
    CHECK(one->eval(g) == phi->eval(g));
    CHECK(zero->eval(g) == 0.0);
  }
}

TEST_CASE("bounded noise is bounded, deterministic, and vanishes at e") {
  auto a = f2();
  auto noise = make_bounded_noise(a, 0.75, 42);
  auto noise_same = make_bounded_noise(a, 0.75, 42);
  auto noise_other = make_bounded_noise(a, 0.75, 43);
  CHECK(noise->eval(GroupElement::identity(a)) == 0.0);
  RngStream rng(37, stream_id(StreamPurpose::generic, 37));
  bool differs = false;
  for (int t = 0; t < 100; ++t) {
    auto g = random_element(a, rng, 10);
    CHECK(std::abs(noise->eval(g)) <= 0.75);
    CHECK(noise->eval(g) == noise_same->eval(g));
    differs = differs || noise->eval(g) != noise_other->eval(g);
  }
  CHECK(differs);
}

TEST_CASE("walk accumulators track direct evaluation") {
  auto a = f2();
  auto phi = make_brooks(a, parse_element(a, "a b"));
  auto hom = make_homomorphism(a, {1.0, 2.0});
  auto acc_phi = phi->make_accumulator();
  auto acc_hom = hom->make_accumulator();
  REQUIRE(acc_phi);
  REQUIRE(acc_hom);
  auto mu = FiniteMeasure::uniform(a, {parse_element(a, "a"), parse_element(a, "a^-1"),
                                       parse_element(a, "b"), parse_element(a, "b^-1")});
  MeasureSampler sampler(mu);
  RngStream rng(38, stream_id(StreamPurpose::generic, 38));
  GroupElement z = GroupElement::identity(a);
  for (int step = 0; step < 500; ++step) {
    const auto& inc = sampler.draw(rng);
    multiply_inplace(a, z, inc);
    acc_phi->step(inc);
    acc_hom->step(inc);
    if (step % 50 == 0) {
      CHECK(acc_phi->value() == phi->eval(z));
      CHECK(acc_hom->value() == doctest::Approx(hom->eval(z)).epsilon(1e-12));
    }
  }
}

TEST_SUITE_END();
