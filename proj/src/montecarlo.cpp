#include "qmwalk/montecarlo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "qmwalk/parallel.hpp"
#include "qmwalk/rng.hpp"

namespace qmwalk {

namespace {

double stable_sum(const std::vector<double>& v) {
  double sum = 0, comp = 0;
  for (double x : v) {
    double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      comp += (sum - t) + x;
    else
      comp += (x - t) + sum;
    sum = t;
  }
  return sum + comp;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void validate(const WalkScenario& sc) {
  if (sc.n < 1) throw ConfigError("walk length n must be >= 1");
  if (sc.M < 1) throw ConfigError("trial count M must be >= 1");
  if (sc.phi->alphabet() != sc.mu.alphabet() || sc.mu.alphabet() != sc.alphabet)
    throw AlphabetMismatchError("walk scenario mixes alphabets");
}

}  // namespace

TrialResult run_walk(const WalkScenario& sc, std::int64_t trial_index) {
  validate(sc);
  MeasureSampler sampler(sc.mu);
  RngStream rng(sc.seed, stream_id(StreamPurpose::trial,
                                   static_cast<std::uint64_t>(trial_index)));
  GroupElement z = GroupElement::identity(sc.alphabet);
  for (std::int64_t step = 0; step < sc.n; ++step)
    multiply_inplace(sc.alphabet, z, sampler.draw(rng));
  double v = sc.phi->eval(z);
  return {std::move(z), v};
}

CltReport clt_experiment(const WalkScenario& sc) {
  validate(sc);
  auto t0 = std::chrono::steady_clock::now();
  MeasureSampler sampler(sc.mu);
  const double sqrt_n = std::sqrt(static_cast<double>(sc.n));

  CltReport report;
  report.n = sc.n;
  report.M = sc.M;
  report.seed = sc.seed;
  report.ell = sc.ell;
  report.ell_error = sc.ell_error;
  report.phi_values.assign(static_cast<std::size_t>(sc.M), 0.0);
  report.samples.assign(static_cast<std::size_t>(sc.M), 0.0);

  parallel_for(static_cast<std::size_t>(sc.M), sc.threads, [&](std::size_t i) {
    RngStream rng(sc.seed, stream_id(StreamPurpose::trial, i));
    GroupElement z = GroupElement::identity(sc.alphabet);
    for (std::int64_t step = 0; step < sc.n; ++step)
      multiply_inplace(sc.alphabet, z, sampler.draw(rng));
    double v = sc.phi->eval(z);
    report.phi_values[i] = v;
    report.samples[i] = (v - static_cast<double>(sc.n) * sc.ell) / sqrt_n;
  });

  std::vector<double> sq(report.samples.size());
  for (std::size_t i = 0; i < report.samples.size(); ++i)
    sq[i] = report.samples[i] * report.samples[i];
  double second_moment = stable_sum(sq) / static_cast<double>(sc.M);
  report.sigma_hat = std::sqrt(second_moment);
  report.mean_x = stable_sum(report.samples) / static_cast<double>(sc.M);
  double var = 0;
  if (sc.M > 1) {
    var = std::max(0.0, second_moment - report.mean_x * report.mean_x) *
          static_cast<double>(sc.M) / static_cast<double>(sc.M - 1);
  }
  report.se_mean = std::sqrt(var / static_cast<double>(sc.M));

  if (report.sigma_hat <= sc.degeneracy_floor) {
    bool all_zero = std::all_of(report.samples.begin(), report.samples.end(), [&](double x) {
      return std::abs(x) <= sc.degeneracy_floor;
    });
    report.degenerate = all_zero;
    report.ks = 0.0;
    report.ks_band = 0.0;
  } else {
    report.ks = ks_statistic(report.samples, report.sigma_hat);
    report.ks_band = sqrt_n * sc.ell_error / report.sigma_hat;
  }
  report.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
  return report;
}

double ks_statistic(std::vector<double> samples, double sigma) {
  if (samples.empty()) throw ConfigError("KS statistic needs samples");
  if (!(sigma > 0)) throw ConfigError("KS reference sigma must be > 0");
  std::sort(samples.begin(), samples.end());
  const double m = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = normal_cdf(samples[i] / sigma);
    double lo = f - static_cast<double>(i) / m;
    double hi = static_cast<double>(i + 1) / m - f;
    d = std::max(d, std::max(lo, hi));
  }
  return std::min(1.0, std::max(0.0, d));
}

LilCurve lil_track(const WalkScenario& sc, std::int64_t n_total, std::int64_t n0) {
  validate(sc);
  if (n0 < 16) throw ConfigError("LIL tracking needs n0 >= 16 so log log n > 0");
  if (n_total < n0) throw ConfigError("LIL tracking needs n_total >= n0");
  auto acc = sc.phi->make_accumulator();
  if (!acc)
    throw ConfigError("LIL tracking needs an incrementally evaluable quasimorphism "
                      "(homomorphism, Brooks, or a combination); " +
                      sc.phi->description() + " is not");

  MeasureSampler sampler(sc.mu);
  RngStream rng(sc.seed, stream_id(StreamPurpose::trial, 0));
  LilCurve curve;
  curve.n0 = n0;
  curve.n_total = n_total;
  curve.seed = sc.seed;

  double running = -std::numeric_limits<double>::infinity();
  std::int64_t next_checkpoint = n0;
  for (std::int64_t n = 1; n <= n_total; ++n) {
    const GroupElement& inc = sampler.draw(rng);
    acc->step(inc);
    if (n >= n0) {
      double centered = acc->value() - static_cast<double>(n) * sc.ell;
      double norm = std::sqrt(static_cast<double>(n) *
                              std::log(std::log(static_cast<double>(n))));
      running = std::max(running, centered / norm);
      if (n == next_checkpoint || n == n_total) {
        curve.points.push_back({n, running, running / std::sqrt(2.0)});
        while (next_checkpoint <= n) next_checkpoint *= 2;
      }
    }
  }
  return curve;
}

CltReport aggregate_reports(const std::vector<CltReport>& reports) {
  if (reports.empty()) throw ConfigError("nothing to aggregate");
  CltReport out;
  out.n = reports.front().n;
  out.seed = reports.front().seed;
  out.ell = reports.front().ell;
  out.ell_error = reports.front().ell_error;
  double m_total = 0, second = 0, mean = 0;
  bool have_samples = true;
  for (const auto& r : reports) {
    if (r.n != out.n) throw ConfigError("aggregating reports with different walk lengths");
    if (std::abs(r.ell - out.ell) > 1e-12)
      throw ConfigError("aggregating reports with different drift estimates");
    double m = static_cast<double>(r.M);
    m_total += m;
    second += m * r.sigma_hat * r.sigma_hat;
    mean += m * r.mean_x;
    have_samples = have_samples && !r.samples.empty();
  }
  out.M = static_cast<std::int64_t>(m_total);
  out.sigma_hat = std::sqrt(second / m_total);
  out.mean_x = mean / m_total;
  if (have_samples) {
    for (const auto& r : reports)
      out.samples.insert(out.samples.end(), r.samples.begin(), r.samples.end());
    std::vector<double> sq(out.samples.size());
    double mu = out.mean_x;
    for (std::size_t i = 0; i < out.samples.size(); ++i)
      sq[i] = (out.samples[i] - mu) * (out.samples[i] - mu);
    double var = out.samples.size() > 1
                     ? stable_sum(sq) / static_cast<double>(out.samples.size() - 1)
                     : 0.0;
    out.se_mean = std::sqrt(var / m_total);
    out.ks = out.sigma_hat > 0 ? ks_statistic(out.samples, out.sigma_hat) : 0.0;
    out.ks_valid = out.sigma_hat > 0;
  } else {
    out.ks = 0.0;
    out.ks_valid = false;
  }
  out.degenerate = out.sigma_hat <= 1e-9;
  return out;
}

SandwichReport martingale_sandwich(const WalkScenario& sc, const BiharmonicEvaluator& ev,
                                   int K) {
  validate(sc);
  if (K < 2) throw ConfigError("sandwich depth K must be >= 2");
  if (ev.alphabet() != sc.alphabet)
    throw AlphabetMismatchError("evaluator and walk scenario alphabets differ");
  MeasureSampler sampler(sc.mu);

  const double d_plus = require_defect_bound(*sc.phi);
  const double dhat_plus = ev.defect_assumed();
  const double tol = ev.phi_hat().homogeneity_tolerance().value_or(0.0);

  SandwichReport rep;
  rep.trials = sc.M;
  rep.gaps.assign(static_cast<std::size_t>(sc.M), 0.0);
  // |phi(z) - n ell - proxy| <= |phi(z) - phi_hat(z)| + |dphi_hat(q, z)|
  //                             + 2 sup|phi_tilde - phi_hat|
  //                          <= (D+ + tol) + D-hat+ + 2 D-hat+.
  rep.bound = d_plus + tol + 3.0 * dhat_plus;
  rep.slack = rep.bound - 3.0 * d_plus;

  parallel_for(static_cast<std::size_t>(sc.M), sc.threads, [&](std::size_t i) {
    RngStream walk_rng(sc.seed, stream_id(StreamPurpose::trial, i));
    RngStream back_rng(sc.seed, stream_id(StreamPurpose::pair_draw, i));
    GroupElement q = GroupElement::identity(sc.alphabet);
    for (int j = 0; j < K - 1; ++j) multiply_inplace(sc.alphabet, q, sampler.draw(back_rng));

    GroupElement z = GroupElement::identity(sc.alphabet);
    GroupElement qz = q;
    double prev = ev.eval(qz);
    double increments = 0;
    for (std::int64_t step = 0; step < sc.n; ++step) {
      const GroupElement& inc = sampler.draw(walk_rng);
      multiply_inplace(sc.alphabet, z, inc);
      multiply_inplace(sc.alphabet, qz, inc);
      double cur = ev.eval(qz);
      increments += cur - prev;
      prev = cur;
    }
    double n_ell = static_cast<double>(sc.n) * ev.ell();
    double proxy = increments - n_ell;
    rep.gaps[i] = std::abs(sc.phi->eval(z) - n_ell - proxy);
  });
  for (double g : rep.gaps) rep.max_gap = std::max(rep.max_gap, g);
  return rep;
}

}  // namespace qmwalk
