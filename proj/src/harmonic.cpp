#include "qmwalk/harmonic.hpp"

#include <algorithm>
#include <cmath>

#include "qmwalk/parallel.hpp"
#include "qmwalk/rng.hpp"

namespace qmwalk {

namespace {

void require_homogeneous_flag(const Quasimorphism& phi) {
  if (!phi.homogeneous() && !phi.homogeneity_tolerance())
    throw ConfigError("construction needs an (approximately) homogeneous quasimorphism; "
                      "homogenize " + phi.description() + " first");
}

}  // namespace

DistortionEstimate distortion(const Quasimorphism& phi, const FiniteMeasure& mu, int N,
                              const PsiOptions& opts) {
  if (N < 1) throw ConfigError("distortion depth must be >= 1");
  if (phi.alphabet() != mu.alphabet())
    throw AlphabetMismatchError("quasimorphism and measure alphabets differ");
  double d_plus = require_defect_bound(phi);

  DistortionEstimate est;
  est.N = N;
  est.mode = opts.mode;
  est.a.assign(static_cast<std::size_t>(N) + 1, 0.0);
  est.se.assign(static_cast<std::size_t>(N) + 1, 0.0);
  est.a[0] = phi.eval(GroupElement::identity(mu.alphabet()));

  if (opts.mode == EvalMode::exact) {
    FiniteMeasure acc = mu;
    double retained = 1.0;
    double phi_sup = 0;
    for (int n = 1; n <= N; ++n) {
      if (n > 1) {
        if (opts.tau > 0) {
          auto cut = convolve_power(mu, n, opts.tau, opts.support_cap);
          acc = std::move(cut.measure);
          retained = cut.retained_mass;
        } else {
          FiniteMeasure conv = convolve(acc, mu);
          if (conv.size() > opts.support_cap)
            throw CapacityError("distortion: support of mu^{*" + std::to_string(n) +
                                "} exceeds cap; use Monte Carlo mode or truncation");
          acc = std::move(conv);
        }
      }
      double an = 0;
      for (std::size_t i = 0; i < acc.size(); ++i) {
        double v = phi.eval(acc.element(i));
        phi_sup = std::max(phi_sup, std::abs(v));
        an += acc.weight(i) * v;
      }
      est.a[static_cast<std::size_t>(n)] = an;
    }
    est.truncation_slack = 2.0 * (1.0 - retained) * phi_sup;
  } else {
    MeasureSampler sampler(mu);
    const Alphabet& alph = mu.alphabet();
    int m = std::max(1, opts.mc_samples);
    std::vector<double> sum(static_cast<std::size_t>(N) + 1, 0.0);
    std::vector<double> sum2(static_cast<std::size_t>(N) + 1, 0.0);
    for (int trial = 0; trial < m; ++trial) {
      RngStream rng(opts.mc_seed,
                    stream_id(StreamPurpose::distortion_mc, static_cast<std::uint64_t>(trial)));
      GroupElement z = GroupElement::identity(alph);
      for (int n = 1; n <= N; ++n) {
        multiply_inplace(alph, z, sampler.draw(rng));
        double v = phi.eval(z);
        sum[static_cast<std::size_t>(n)] += v;
        sum2[static_cast<std::size_t>(n)] += v * v;
      }
    }
    for (int n = 1; n <= N; ++n) {
      auto i = static_cast<std::size_t>(n);
      double mean = sum[i] / m;
      est.a[i] = mean;
      double var = std::max(0.0, sum2[i] / m - mean * mean);
      est.se[i] = m > 1 ? std::sqrt(var / (m - 1)) : 0.0;
    }
  }

  est.ell = est.a[static_cast<std::size_t>(N)] / N;
  est.error_bound = d_plus / N + est.se[static_cast<std::size_t>(N)] / N +
                    est.truncation_slack / N;
  return est;
}

BiharmonicEvaluator::BiharmonicEvaluator(QmPtr phi_hat, FiniteMeasure mu, int N,
                                         PsiOptions opts)
    : phi_hat_(std::move(phi_hat)), mu_(std::move(mu)), N_(N), opts_(opts) {
  if (N_ < 1) throw ConfigError("averaging depth N must be >= 1");
  require_homogeneous_flag(*phi_hat_);
  if (phi_hat_->alphabet() != mu_.alphabet())
    throw AlphabetMismatchError("quasimorphism and measure alphabets differ");
  defect_assumed_ = require_defect_bound(*phi_hat_);

  if (opts_.mode == EvalMode::exact) {
    powers_.reserve(static_cast<std::size_t>(N_) + 1);
    phi_cache_.resize(static_cast<std::size_t>(N_) + 1);
    a_.assign(static_cast<std::size_t>(N_) + 1, 0.0);
    double retained = 1.0;
    double phi_sup = 0;
    for (int n = 0; n <= N_; ++n) {
      if (n == 0) {
        powers_.push_back(FiniteMeasure::dirac(mu_.alphabet(),
                                               GroupElement::identity(mu_.alphabet())));
      } else if (n == 1) {
        powers_.push_back(mu_);
      } else {
        FiniteMeasure conv = convolve(powers_.back(), mu_);
        if (conv.size() > opts_.support_cap)
          throw CapacityError("biharmonic construction: mu^{*" + std::to_string(n) +
                              "} support exceeds cap; lower N, raise tau, or use "
                              "Monte Carlo mode");
        if (opts_.tau > 0) {
          auto cut = convolve_power(mu_, n, opts_.tau, opts_.support_cap);
          conv = std::move(cut.measure);
          retained = std::min(retained, cut.retained_mass);
        }
        powers_.push_back(std::move(conv));
      }
      const FiniteMeasure& p = powers_.back();
      auto& cache = phi_cache_[static_cast<std::size_t>(n)];
      cache.resize(p.size());
      double an = 0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        cache[i] = phi_hat_->eval(p.element(i));
        phi_sup = std::max(phi_sup, std::abs(cache[i]));
        an += p.weight(i) * cache[i];
      }
      a_[static_cast<std::size_t>(n)] = an;
    }
    trunc_slack_ = 2.0 * (1.0 - retained) * phi_sup;
    ell_ = a_[static_cast<std::size_t>(N_)] / N_;
    ell_error_ = defect_assumed_ / N_ + trunc_slack_ / N_;
  } else {
    sampler_.emplace(mu_);
    auto est = distortion(*phi_hat_, mu_, N_,
                          PsiOptions{EvalMode::monte_carlo,
                                     std::max(opts_.mc_samples * 16, 1024),
                                     opts_.mc_seed ^ 0x5bd1e995u, 0.0, opts_.support_cap});
    ell_ = est.ell;
    ell_error_ = est.error_bound;
  }
  center_ = 0.0;
  center_ = eval(GroupElement::identity(mu_.alphabet()));
}

double BiharmonicEvaluator::a(int n) const {
  if (opts_.mode == EvalMode::exact) return a_[static_cast<std::size_t>(n)];
  throw ConfigError("a_n table is only available in exact mode");
}

PsiValue BiharmonicEvaluator::psi_exact(int n, const GroupElement& g) const {
  const FiniteMeasure& p = powers_[static_cast<std::size_t>(n)];
  const auto& cache = phi_cache_[static_cast<std::size_t>(n)];
  const Alphabet& alph = mu_.alphabet();
  double phi_g = phi_hat_->eval(g);
  double sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    GroupElement gh = multiply(alph, g, p.element(i));
    sum += p.weight(i) * (phi_hat_->eval(gh) - cache[i]);
  }
  return {sum - phi_g, 0.0};
}

PsiValue BiharmonicEvaluator::psi_mc(int n, const GroupElement& g) const {
  const Alphabet& alph = mu_.alphabet();
  double phi_g = phi_hat_->eval(g);
  if (n == 0) {
    double e_val = phi_hat_->eval(GroupElement::identity(alph));
    return {-e_val, 0.0};
  }
  int m = std::max(1, opts_.mc_samples);
  RngStream rng(opts_.mc_seed,
                stream_id(StreamPurpose::psi_mc,
                          splitmix64(g.hash() + 0x9E3779B97F4A7C15ull *
                                                    static_cast<std::uint64_t>(n))));
  double sum = 0, sum2 = 0;
  for (int j = 0; j < m; ++j) {
    GroupElement h = GroupElement::identity(alph);
    for (int step = 0; step < n; ++step) multiply_inplace(alph, h, sampler_->draw(rng));
    GroupElement gh = multiply(alph, g, h);
    double v = phi_hat_->eval(gh) - phi_g - phi_hat_->eval(h);
    sum += v;
    sum2 += v * v;
  }
  double mean = sum / m;
  double var = std::max(0.0, sum2 / m - mean * mean);
  return {mean, m > 1 ? std::sqrt(var / (m - 1)) : 0.0};
}

PsiValue BiharmonicEvaluator::psi(int n, const GroupElement& g) const {
  if (n < 0) throw ConfigError("psi index must be >= 0");
  if (opts_.mode == EvalMode::exact) {
    if (n >= static_cast<int>(powers_.size())) {
      // Depths beyond N are served by extending the power on the fly.
      FiniteMeasure p = convolve_power(mu_, n, opts_.tau, opts_.support_cap).measure;
      const Alphabet& alph = mu_.alphabet();
      double phi_g = phi_hat_->eval(g);
      double sum = 0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        GroupElement gh = multiply(alph, g, p.element(i));
        sum += p.weight(i) * (phi_hat_->eval(gh) - phi_hat_->eval(p.element(i)));
      }
      return {sum - phi_g, 0.0};
    }
    return psi_exact(n, g);
  }
  return psi_mc(n, g);
}

PsiValue BiharmonicEvaluator::eval_with_se(const GroupElement& g) const {
  double acc = phi_hat_->eval(g);
  double correction = 0;
  double var = 0;
  for (int n = 0; n < N_; ++n) {
    PsiValue p = psi(n, g);
    correction += p.value;
    var += p.se * p.se;
  }
  return {acc + correction / N_ - center_, std::sqrt(var) / N_};
}

double BiharmonicEvaluator::eval(const GroupElement& g) const {
  return eval_with_se(g).value;
}

std::optional<double> HarmonicApprox::lookup(const GroupElement& g) const {
  auto it = std::lower_bound(eval_set.begin(), eval_set.end(), g);
  if (it != eval_set.end() && *it == g)
    return values[static_cast<std::size_t>(it - eval_set.begin())];
  return std::nullopt;
}

HarmonicApprox tabulate(const BiharmonicEvaluator& ev,
                        const std::vector<GroupElement>& eval_set, int threads) {
  HarmonicApprox approx;
  approx.N = ev.depth();
  approx.mode = ev.mode();
  approx.ell = ev.ell();
  approx.ell_error = ev.ell_error();
  approx.defect_assumed = ev.defect_assumed();
  approx.eval_set = eval_set;
  std::sort(approx.eval_set.begin(), approx.eval_set.end());
  approx.eval_set.erase(std::unique(approx.eval_set.begin(), approx.eval_set.end()),
                        approx.eval_set.end());
  approx.values.assign(approx.eval_set.size(), 0.0);
  parallel_for(approx.eval_set.size(), threads,
               [&](std::size_t i) { approx.values[i] = ev.eval(approx.eval_set[i]); });
  return approx;
}

std::vector<GroupElement> closed_eval_set(const Alphabet& a,
                                          const std::vector<GroupElement>& core,
                                          const FiniteMeasure& mu) {
  std::vector<GroupElement> out = core;
  for (const auto& g : core) {
    for (std::size_t i = 0; i < mu.size(); ++i) {
      out.push_back(multiply(a, g, mu.element(i)));
      out.push_back(multiply(a, mu.element(i), g));
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

ResidualReport residuals(const HarmonicApprox& approx, const FiniteMeasure& mu,
                         const std::vector<GroupElement>& core, ResidualSide side) {
  const Alphabet& a = mu.alphabet();
  ResidualReport report;
  report.side = side;
  report.budget = side == ResidualSide::right && approx.mode == EvalMode::exact
                      ? 2.0 * approx.defect_assumed / approx.N
                      : 0.0;
  std::vector<std::string> missing;
  for (const auto& g : core) {
    auto center = approx.lookup(g);
    if (!center) {
      missing.push_back(format_element(a, g));
      continue;
    }
    double sum = 0;
    bool ok = true;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      GroupElement prod = side == ResidualSide::right ? multiply(a, g, mu.element(i))
                                                      : multiply(a, mu.element(i), g);
      auto v = approx.lookup(prod);
      if (!v) {
        missing.push_back(format_element(a, prod));
        ok = false;
        continue;
      }
      sum += mu.weight(i) * *v;
    }
    if (!ok) continue;
    double r = sum - *center - approx.ell;
    report.rows.push_back({g, r});
    report.max_abs = std::max(report.max_abs, std::abs(r));
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    std::string what = "evaluation set is missing " + std::to_string(missing.size()) +
                       " products needed for residuals (first: " + missing.front() + ")";
    throw CoverageError(what, std::move(missing));
  }
  return report;
}

TamenessResult tameness_check(const Quasimorphism& phi, const FiniteMeasure& mu,
                              const TamenessOptions& opts) {
  if (opts.horizon < 1) throw ConfigError("tameness horizon must be >= 1");
  if (phi.alphabet() != mu.alphabet())
    throw AlphabetMismatchError("quasimorphism and measure alphabets differ");
  double d_plus = require_defect_bound(phi);

  TamenessResult res;
  res.horizon = opts.horizon;
  res.flag_level = opts.threshold * (1.0 + d_plus);
  res.witness_g = GroupElement::identity(mu.alphabet());

  double ell;
  if (opts.ell_supplied) {
    ell = *opts.ell_supplied;
  } else {
    ell = distortion(phi, mu, opts.horizon,
                     PsiOptions{EvalMode::exact, 0, 0, opts.tau, opts.support_cap})
              .ell;
  }
  res.ell_used = ell;

  FiniteMeasure acc = mu;
  for (int n = 1; n <= opts.horizon; ++n) {
    if (n > 1) {
      FiniteMeasure conv = convolve(acc, mu);
      if (conv.size() > opts.support_cap)
        throw CapacityError("tameness: support of mu^{*" + std::to_string(n) +
                            "} exceeds cap at horizon " + std::to_string(n));
      acc = std::move(conv);
    }
    double best = -1;
    GroupElement best_g = GroupElement::identity(mu.alphabet());
    for (std::size_t i = 0; i < acc.size(); ++i) {
      double v = std::abs(phi.eval(acc.element(i)) - n * ell);
      if (v > best) {
        best = v;
        best_g = acc.element(i);
      }
    }
    res.s.push_back(best);
    res.C = std::max(res.C, best);
    // Strict growth measured across a 3-horizon window, so period-2
    // plateaus of parity-preserving walks do not mask linear escape.
    std::size_t k = res.s.size();
    bool increasing = k >= 4 && res.s[k - 1] > res.s[k - 4];
    if (best > res.flag_level && increasing) {
      res.tame = false;
      res.witness_n = n;
      res.witness_g = best_g;
      res.witness_value = best;
      return res;
    }
  }
  return res;
}

}  // namespace qmwalk
