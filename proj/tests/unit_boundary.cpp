#include <doctest.h>

#include <cmath>

#include "qmwalk/boundary.hpp"

using namespace qmwalk;

namespace {

Alphabet f2() { return Alphabet::free_group({"a", "b"}); }

FiniteMeasure f2_uniform() {
  auto a = f2();
  return FiniteMeasure::uniform(a, {parse_element(a, "a"), parse_element(a, "a^-1"),
                                    parse_element(a, "b"), parse_element(a, "b^-1")});
}

BiharmonicEvaluator hom_evaluator() {
  auto a = f2();
  return BiharmonicEvaluator(make_homomorphism(a, {1.0, 0.0}), f2_uniform(), 4);
}

BiharmonicEvaluator brooks_evaluator(int N = 4) {
  auto a = f2();
  auto hat = homogenize(make_brooks(a, parse_element(a, "a b")), 4).qm;
  return BiharmonicEvaluator(hat, f2_uniform(), N);
}

bool reduced(const std::vector<GroupElement::Sym>& w) {
  for (std::size_t i = 0; i + 1 < w.size(); ++i)
    if (w[i] == -w[i + 1]) return false;
  return true;
}

}  // namespace

TEST_SUITE_BEGIN("boundary");

TEST_CASE("hitting rays: reduced prefixes, determinism, first-letter law") {
  auto mu = f2_uniform();
  {
    auto r1 = sample_ray(mu, RayMode::hitting, 7, 3);
    auto r2 = sample_ray(mu, RayMode::hitting, 7, 3);
    auto r3 = sample_ray(mu, RayMode::hitting, 7, 4);
    CHECK(r1.prefix_element(64) == r2.prefix_element(64));
    CHECK(r1.prefix_element(64) != r3.prefix_element(64));
    CHECK(reduced(r1.letters(200)));
  }
  auto target = parse_element(f2(), "a");
  const int n = 100000;
  int first_a = 0;
  for (int i = 0; i < n; ++i) {
    auto ray = sample_ray(mu, RayMode::hitting, 2025, static_cast<std::uint64_t>(i));
    if (ray.prefix_element(1) == target) ++first_a;
  }
  double freq = static_cast<double>(first_a) / n;
  CHECK(std::abs(freq - 0.25) < 0.005);
}

TEST_CASE("cylinder frequencies match the hitting law and the trajectory limit") {
  auto a = f2();
  auto mu = f2_uniform();
  auto ab = parse_element(a, "a b");
  const int n = 20000;
  int hit_count = 0, traj_count = 0;
  for (int i = 0; i < n; ++i) {
    auto hray = sample_ray(mu, RayMode::hitting, 31, static_cast<std::uint64_t>(i));
    auto tray = sample_ray(mu, RayMode::trajectory_limit, 32, static_cast<std::uint64_t>(i));
    if (hray.prefix_element(2) == ab) ++hit_count;
    if (tray.prefix_element(2) == ab) ++traj_count;
    if (i < 100) {
      CHECK(reduced(hray.letters(2)));
      CHECK(reduced(tray.letters(2)));
    }
  }
  const double p = 1.0 / 12.0;
  const double se = std::sqrt(p * (1 - p) / n);
  CHECK(std::abs(static_cast<double>(hit_count) / n - p) < 3.5 * se);
  CHECK(std::abs(static_cast<double>(traj_count) / n - p) < 3.5 * se);
}

TEST_CASE("ray preconditions") {
  auto z = Alphabet::free_abelian({"a"});
  auto mu_z = FiniteMeasure::uniform(z, {parse_element(z, "a"), parse_element(z, "a^-1")});
  CHECK_THROWS_AS(sample_ray(mu_z, RayMode::hitting, 1, 0), ModeError);

  auto a = f2();
  auto da = FiniteMeasure::dirac(a, parse_element(a, "a"));
  CHECK_THROWS_AS(sample_ray(da, RayMode::hitting, 1, 0), ModeError);      // not NN uniform
  CHECK_THROWS_AS(sample_ray(da, RayMode::trajectory_limit, 1, 0), ConfigError);  // no generation
}

TEST_CASE("cocycle of a homomorphism is xi-free and vanishes at e") {
  auto ev = hom_evaluator();
  auto a = f2();
  auto mu = f2_uniform();
  for (int i = 0; i < 20; ++i) {
    auto ray = sample_ray(mu, RayMode::hitting, 55, static_cast<std::uint64_t>(i));
    auto g = parse_element(a, "a b a");
    auto cv = cocycle(ev, g, ray, 64);
    CHECK(cv.value == doctest::Approx(ev.eval(g)).epsilon(1e-12));
    CHECK(cv.gap <= 1e-12);
    CHECK(cocycle(ev, GroupElement::identity(a), ray, 32).value == 0.0);
  }
}

TEST_CASE("cocycle identity: homomorphisms give zero residual") {
  auto ev = hom_evaluator();
  auto a = f2();
  auto mu = f2_uniform();
  std::vector<std::pair<GroupElement, GroupElement>> pairs = {
      {parse_element(a, "a"), parse_element(a, "b")},
      {parse_element(a, "a b"), parse_element(a, "b a")},
  };
  RaySet rays(mu, RayMode::hitting, 77, pairs.size());
  auto rep = cocycle_identity_check(ev, pairs, rays, 64);
  CHECK(rep.max_residual <= 1e-12);
}

TEST_CASE("cocycle identity: random triples bounded by summed gaps") {
  auto ev = brooks_evaluator();
  auto a = f2();
  auto mu = f2_uniform();
  auto ball = enumerate_ball(a, 2);
  RngStream pick(404, stream_id(StreamPurpose::generic, 404));
  std::vector<std::pair<GroupElement, GroupElement>> pairs;
  for (int i = 0; i < 25; ++i)
    pairs.emplace_back(ball[pick.next_below(ball.size())], ball[pick.next_below(ball.size())]);
  // Include the inverse-pair instances: alpha(g^-1, g xi) = -alpha(g, xi).
  pairs.emplace_back(parse_element(a, "a^-1"), parse_element(a, "a"));
  pairs.emplace_back(parse_element(a, "b a^-1"), parse_element(a, "a b^-1"));

  RaySet rays(mu, RayMode::hitting, 78, pairs.size());
  auto rep = cocycle_identity_check(ev, pairs, rays, 64);
  CHECK(rep.max_residual <= rep.total_gap + 1e-9);
  for (const auto& row : rep.rows) CHECK(row.residual <= rep.total_gap + 1e-9);
}

TEST_CASE("alpha stays defect-consistent with phi_tilde") {
  // |alpha(g, xi) - phi_tilde(g)| = |dphi_tilde(g, p_L)|, certified by the
  // declared defect bound of phi_hat plus the Cesaro correction terms.
  auto ev = brooks_evaluator();
  auto a = f2();
  auto mu = f2_uniform();
  double budget = 4.0 * ev.defect_assumed();
  double worst = 0;
  for (int i = 0; i < 10; ++i) {
    auto ray = sample_ray(mu, RayMode::hitting, 808, static_cast<std::uint64_t>(i));
    for (const auto& g : enumerate_ball(a, 2)) {
      auto cv = cocycle(ev, g, ray, 64);
      worst = std::max(worst, std::abs(cv.value - ev.eval(g)));
    }
  }
  CHECK(worst <= budget);
  CHECK(worst <= 4.0);  // observed slack is far inside the certified chain
}

TEST_CASE("integral representation: exact for homomorphisms, zero at e") {
  auto ev = hom_evaluator();
  auto a = f2();
  auto mu = f2_uniform();
  RaySet rays(mu, RayMode::hitting, 99, 50);
  auto rows = integral_representation_check(
      ev, {GroupElement::identity(a), parse_element(a, "a b")}, rays, 32);
  CHECK(rows[0].phi_tilde == 0.0);
  CHECK(rows[0].mean == 0.0);
  CHECK(rows[1].discrepancy <= 1e-12);
  CHECK(rows[1].se <= 1e-12);
}

TEST_CASE("martingale sigma on Z is exactly 1") {
  auto z = Alphabet::free_abelian({"a"});
  auto mu = FiniteMeasure::uniform(z, {parse_element(z, "a"), parse_element(z, "a^-1")});
  BiharmonicEvaluator ev(make_homomorphism(z, {1.0}), mu, 4);
  auto ms = martingale_sigma(ev, 64, 10000, 123);
  CHECK(ms.sigma_hat == 1.0);
  CHECK(ms.sigma_half == 1.0);
  CHECK(ms.cauchy_gap == 0.0);
  CHECK(std::abs(ms.mean_delta) <= 3.0 * ms.se_mean);
}

TEST_CASE("martingale sigma vanishes exactly in the tame Brooks scenario") {
  auto a = f2();
  auto hat = homogenize(make_brooks(a, parse_element(a, "b")), 4).qm;
  auto da = FiniteMeasure::dirac(a, parse_element(a, "a"));
  BiharmonicEvaluator ev(hat, da, 4);
  auto ms = martingale_sigma(ev, 32, 200, 5);
  CHECK(ms.sigma_hat == 0.0);
  CHECK(ms.mean_delta == 0.0);
}

TEST_CASE("martingale sigma for homogenized noise is within the finite-depth slack") {
  auto a = f2();
  const double amplitude = 1.0;
  const int depth = 6;
  auto hat = homogenize(make_bounded_noise(a, amplitude, 11), depth).qm;
  auto da = FiniteMeasure::dirac(a, parse_element(a, "a"));
  BiharmonicEvaluator ev(hat, da, 4);
  auto ms = martingale_sigma(ev, 32, 100, 6);
  // phi_hat is pointwise bounded by amplitude / 2^depth; Delta collects a
  // handful of such terms plus the psi averages.
  CHECK(ms.sigma_hat <= 10.0 * amplitude / (1 << depth));
}

TEST_CASE("boundary variance of a homomorphism matches the closed form") {
  auto ev = hom_evaluator();  // hom(a)=1, hom(b)=0; sigma^2 = sum phi(g)^2 mu(g) = 1/2
  auto mu = f2_uniform();
  RaySet rays(mu, RayMode::hitting, 654, 2000);
  auto bv = boundary_variance(ev, rays, 32, 654);
  CHECK(std::abs(bv.sigma2 - 0.5) <= 3.0 * bv.se);
}

TEST_CASE("frozen cylinder masses and preimage values") {
  auto a = f2();
  CHECK(cylinder_mass(2, 0) == 1.0);
  CHECK(cylinder_mass(2, 1) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(cylinder_mass(2, 2) == doctest::Approx(1.0 / 12.0).epsilon(1e-15));

  auto g_a = parse_element(a, "a");
  CHECK(preimage_mass(a, GroupElement::identity(a), parse_element(a, "a b")) ==
        doctest::Approx(1.0 / 12.0).epsilon(1e-15));
  CHECK(preimage_mass(a, g_a, parse_element(a, "a")) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(preimage_mass(a, g_a, parse_element(a, "b")) ==
        doctest::Approx(1.0 / 12.0).epsilon(1e-15));
  CHECK(preimage_mass(a, g_a, parse_element(a, "a b")) ==
        doctest::Approx(0.25).epsilon(1e-15));
  CHECK(preimage_mass(a, parse_element(a, "a^-1"), parse_element(a, "a b")) ==
        doctest::Approx(1.0 / 36.0).epsilon(1e-15));
}

TEST_CASE("preimage masses sum to one over the cylinders of a fixed length") {
  auto a = f2();
  for (const char* gt : {"a", "b a", "a b a^-1", "b^-1 a b b"}) {
    auto g = parse_element(a, gt);
    double total = 0;
    for (const auto& w : enumerate_ball(a, 2))
      if (w.length() == 2) total += preimage_mass(a, g, w);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("preimage masses match empirical translated-ray frequencies") {
  auto a = f2();
  auto mu = f2_uniform();
  auto g = parse_element(a, "a b");
  auto w = parse_element(a, "b a");
  const int n = 20000;
  int hits = 0;
  for (int i = 0; i < n; ++i) {
    auto ray = sample_ray(mu, RayMode::hitting, 4040, static_cast<std::uint64_t>(i));
    auto t = translated_prefix(a, g, ray, 2);
    if (t == w) ++hits;
  }
  double expect = preimage_mass(a, g, w);
  double freq = static_cast<double>(hits) / n;
  double se = std::sqrt(expect * (1 - expect) / n);
  CHECK(std::abs(freq - expect) < 3.5 * se + 1e-9);
}

TEST_CASE("exact stationarity residual vanishes for short cylinders") {
  auto mu = f2_uniform();
  auto rep = stationarity_check_exact(mu, 3);
  CHECK(rep.exact);
  CHECK(rep.rows.size() == 52);  // ball(3) minus identity
  CHECK(rep.max_residual <= 1e-12);

  auto a = f2();
  auto skew = FiniteMeasure::from_rational(
      a, {{parse_element(a, "a"), Rational(1, 2)}, {parse_element(a, "a^-1"), Rational(1, 2)}});
  CHECK_THROWS_AS(stationarity_check_exact(skew, 2), ModeError);
}

TEST_CASE("Monte Carlo stationarity residuals sit inside 3 SE") {
  auto a = f2();
  auto mu = f2_uniform();
  RaySet rays(mu, RayMode::hitting, 11, 4000);
  RaySet reference(mu, RayMode::hitting, 12, 4000);
  std::vector<GroupElement> cylinders;
  RngStream pick(13, stream_id(StreamPurpose::generic, 13));
  auto ball = enumerate_ball(a, 3);
  for (int i = 0; i < 10; ++i) {
    auto w = ball[pick.next_below(ball.size())];
    if (w.is_identity()) w = parse_element(a, "a");
    cylinders.push_back(w);
  }
  auto rep = stationarity_check_mc(mu, cylinders, rays, reference, 8, 14);
  for (const auto& row : rep.rows) CHECK(row.residual <= 3.0 * row.se + 1e-9);
}

TEST_CASE("rn kernel: trivial at e, homomorphisms reconstruct phi(g)") {
  auto ev = hom_evaluator();
  auto a = f2();
  auto mu = f2_uniform();
  RaySet rays(mu, RayMode::hitting, 2030, 2000);
  auto at_e = rn_kernel_check(ev, GroupElement::identity(a), rays, 32, 6);
  CHECK(at_e.mean_sigma == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(at_e.reconstruction == 0.0);
  CHECK(at_e.target == 0.0);

  auto g = parse_element(a, "a b");
  auto rc = rn_kernel_check(ev, g, rays, 32, 6);
  CHECK(rc.target == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(rc.discrepancy <= 3.0 * rc.se + 1e-9);

  // rho integrates to 1 at every depth, so mean sigma is ~1.
  CHECK(std::abs(rc.mean_sigma - 1.0) <= 0.2);
}

TEST_CASE("rn kernel refuses trajectory rays") {
  auto ev = hom_evaluator();
  auto mu = f2_uniform();
  RaySet rays(mu, RayMode::trajectory_limit, 2, 4);
  CHECK_THROWS_AS(rn_kernel_check(ev, parse_element(f2(), "a"), rays, 16, 4), ModeError);
}

TEST_SUITE_END();
