#include "qmwalk/boundary.hpp"

#include <algorithm>
#include <cmath>

#include "qmwalk/parallel.hpp"

namespace qmwalk {

namespace {

using Sym = GroupElement::Sym;

// Neumaier-compensated sum in fixed index order.
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

struct MeanSe {
  double mean = 0;
  double se = 0;
};

MeanSe mean_and_se(const std::vector<double>& v) {
  if (v.empty()) return {};
  double mean = stable_sum(v) / static_cast<double>(v.size());
  std::vector<double> sq(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) sq[i] = (v[i] - mean) * (v[i] - mean);
  double var = v.size() > 1 ? stable_sum(sq) / static_cast<double>(v.size() - 1) : 0.0;
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

bool is_nearest_neighbor_uniform(const FiniteMeasure& mu) {
  const Alphabet& a = mu.alphabet();
  if (!a.is_free()) return false;
  std::size_t expect = 2 * static_cast<std::size_t>(a.rank());
  if (mu.size() != expect) return false;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (mu.element(i).length() != 1) return false;
    if (std::abs(mu.weight(i) - 1.0 / static_cast<double>(expect)) > 1e-12) return false;
  }
  return true;
}

// Letter with ordering index c in [0, 2k): a, a^-1, b, b^-1, ...
inline Sym letter_by_index(std::uint64_t c) {
  auto gen = static_cast<Sym>(c / 2) + 1;
  return (c % 2 == 0) ? gen : -gen;
}

inline Sym draw_first_letter(RngStream& rng, int rank) {
  return letter_by_index(rng.next_below(2 * static_cast<std::uint64_t>(rank)));
}

inline Sym draw_noncancelling_letter(RngStream& rng, int rank, Sym prev) {
  std::uint64_t c = rng.next_below(2 * static_cast<std::uint64_t>(rank) - 1);
  Sym forbidden = -prev;
  for (std::uint64_t i = 0;; ++i) {
    Sym cand = letter_by_index(i);
    if (cand == forbidden) continue;
    if (c == 0) return cand;
    --c;
  }
}

}  // namespace

BoundaryRay::BoundaryRay(const Alphabet& alphabet, RayMode mode,
                         std::shared_ptr<const FiniteMeasure> mu,
                         std::uint64_t master_seed, std::uint64_t ray_index, int window)
    : alphabet_(alphabet),
      mode_(mode),
      mu_(std::move(mu)),
      rng_(master_seed, stream_id(StreamPurpose::ray, ray_index)),
      window_(window) {
  if (!alphabet_.is_free())
    throw ModeError("boundary rays exist only for free alphabets");
  if (mode_ == RayMode::trajectory_limit) {
    if (!mu_) throw ConfigError("trajectory-limit rays need the step measure");
    sampler_.emplace(*mu_);
    if (window_ < 1) throw ConfigError("stability window must be >= 1");
  }
}

void BoundaryRay::extend_hitting(std::int64_t target) {
  while (static_cast<std::int64_t>(prefix_.size()) < target) {
    if (prefix_.empty())
      prefix_.push_back(draw_first_letter(rng_, alphabet_.rank()));
    else
      prefix_.push_back(draw_noncancelling_letter(rng_, alphabet_.rank(), prefix_.back()));
  }
}

void BoundaryRay::extend_trajectory(std::int64_t target) {
  while (static_cast<std::int64_t>(prefix_.size()) < target) {
    // Advance the walk one step, tracking when each surviving position
    // last changed.
    ++step_;
    const GroupElement& inc = sampler_->draw(rng_);
    for (Sym s : inc.data()) {
      if (!walk_word_.empty() && walk_word_.back() == -s) {
        walk_word_.pop_back();
        last_changed_.pop_back();
      } else {
        walk_word_.push_back(s);
        last_changed_.push_back(step_);
      }
    }
    if (static_cast<std::int64_t>(walk_word_.size()) < static_cast<std::int64_t>(prefix_.size()))
      ++retractions_;  // the walk backtracked into already-emitted territory

    // Emit stable letters beyond the frozen prefix.
    while (static_cast<std::int64_t>(prefix_.size()) < target) {
      std::size_t pos = prefix_.size();
      if (pos >= walk_word_.size()) break;
      if (step_ < static_cast<std::uint64_t>(window_) ||
          last_changed_[pos] > step_ - static_cast<std::uint64_t>(window_))
        break;
      Sym next = walk_word_[pos];
      if (!prefix_.empty() && next == -prefix_.back()) {
        ++retractions_;  // frozen prefix disagrees with the current walk
        break;
      }
      prefix_.push_back(next);
    }
  }
}

const std::vector<Sym>& BoundaryRay::letters(std::int64_t len) {
  if (len < 0) throw ConfigError("ray prefix length must be >= 0");
  if (static_cast<std::int64_t>(prefix_.size()) < len) {
    if (mode_ == RayMode::hitting)
      extend_hitting(len);
    else
      extend_trajectory(len);
  }
  return prefix_;
}

GroupElement BoundaryRay::prefix_element(std::int64_t len) {
  const auto& p = letters(len);
  return GroupElement(AlphabetKind::free_group,
                      std::vector<Sym>(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(len)));
}

BoundaryRay sample_ray(const FiniteMeasure& mu, RayMode mode, std::uint64_t master_seed,
                       std::uint64_t ray_index, int window) {
  const Alphabet& a = mu.alphabet();
  if (!a.is_free())
    throw ModeError("boundary sampling needs a free group; abelian groups have no "
                    "nontrivial boundary here");
  if (mode == RayMode::hitting && !is_nearest_neighbor_uniform(mu))
    throw ModeError("hitting mode requires the nearest-neighbor uniform measure");
  if (mode == RayMode::trajectory_limit) {
    if (!mu.generation_witness()) {
      auto verdict = support_generates(mu, 4);
      if (!verdict.yes)
        throw ConfigError("support of mu was not seen to generate the group as a "
                          "semigroup; boundary sampling refused");
    }
  }
  auto shared = std::make_shared<FiniteMeasure>(mu);
  return BoundaryRay(a, mode, std::move(shared), master_seed, ray_index, window);
}

RaySet::RaySet(const FiniteMeasure& mu, RayMode mode, std::uint64_t master_seed,
               std::size_t count, int window)
    : master_seed_(master_seed) {
  rays_.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    rays_.push_back(sample_ray(mu, mode, master_seed, static_cast<std::uint64_t>(i), window));
}

CocycleValue cocycle(const BiharmonicEvaluator& ev, const GroupElement& g, BoundaryRay& xi,
                     std::int64_t L) {
  if (L < 1) throw ConfigError("cocycle prefix length must be >= 1");
  const Alphabet& a = ev.alphabet();
  GroupElement p = xi.prefix_element(L);
  GroupElement ph = xi.prefix_element(std::max<std::int64_t>(1, L / 2));
  double v = ev.eval(multiply(a, g, p)) - ev.eval(p);
  double vh = ev.eval(multiply(a, g, ph)) - ev.eval(ph);
  return {v, std::abs(v - vh)};
}

GroupElement translated_prefix(const Alphabet& a, const GroupElement& h, BoundaryRay& xi,
                               std::int64_t L) {
  GroupElement p = xi.prefix_element(L + h.length());
  GroupElement w = multiply(a, h, p);
  const auto& d = w.data();
  if (static_cast<std::int64_t>(d.size()) < L)
    throw ConfigError("translated ray prefix shorter than requested");
  return GroupElement(AlphabetKind::free_group,
                      std::vector<Sym>(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(L)));
}

CocycleIdentityReport cocycle_identity_check(
    const BiharmonicEvaluator& ev,
    const std::vector<std::pair<GroupElement, GroupElement>>& pairs, RaySet& rays,
    std::int64_t L) {
  if (rays.size() == 0) throw ConfigError("cocycle identity check needs rays");
  const Alphabet& a = ev.alphabet();
  std::int64_t Lh = std::max<std::int64_t>(1, L / 2);
  CocycleIdentityReport report;
  report.rows.resize(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [g, h] = pairs[i];
    BoundaryRay& xi = rays.ray(i % rays.size());
    GroupElement gh = multiply(a, g, h);

    auto alpha = [&](const GroupElement& x, const GroupElement& base) {
      return ev.eval(multiply(a, x, base)) - ev.eval(base);
    };
    GroupElement p = xi.prefix_element(L);
    GroupElement p_half = xi.prefix_element(Lh);
    GroupElement hp = translated_prefix(a, h, xi, L);
    GroupElement hp_half = translated_prefix(a, h, xi, Lh);

    double A = alpha(gh, p), A2 = alpha(gh, p_half);
    double B = alpha(g, hp), B2 = alpha(g, hp_half);
    double C = alpha(h, p), C2 = alpha(h, p_half);

    CocycleTriple row;
    row.g = g;
    row.h = h;
    row.residual = std::abs(A - B - C);
    row.gap_sum = std::abs(A - A2) + std::abs(B - B2) + std::abs(C - C2);
    report.rows[i] = std::move(row);
  }
  for (const auto& row : report.rows) {
    report.max_residual = std::max(report.max_residual, row.residual);
    report.total_gap += row.gap_sum;
  }
  return report;
}

std::vector<IntegralRepRow> integral_representation_check(const BiharmonicEvaluator& ev,
                                                          const std::vector<GroupElement>& gs,
                                                          RaySet& rays, std::int64_t L,
                                                          int threads) {
  const Alphabet& a = ev.alphabet();
  const std::size_t M = rays.size();
  // Extend rays sequentially; parallel phases below only read them.
  for (std::size_t i = 0; i < M; ++i) rays.ray(i).letters(L);

  std::vector<double> base(M);
  parallel_for(M, threads,
               [&](std::size_t i) { base[i] = ev.eval(rays.ray(i).prefix_element(L)); });

  std::vector<IntegralRepRow> out(gs.size());
  for (std::size_t gi = 0; gi < gs.size(); ++gi) {
    const GroupElement& g = gs[gi];
    std::vector<double> vals(M);
    parallel_for(M, threads, [&](std::size_t i) {
      vals[i] = ev.eval(multiply(a, g, rays.ray(i).prefix_element(L))) - base[i];
    });
    auto ms = mean_and_se(vals);
    IntegralRepRow row;
    row.g = g;
    auto point = ev.eval_with_se(g);
    row.phi_tilde = point.value;
    row.se_point = point.se;
    row.mean = ms.mean;
    row.se = ms.se;
    row.discrepancy = std::abs(row.phi_tilde - row.mean);
    row.se_combined = std::sqrt(ms.se * ms.se + point.se * point.se);
    row.alphas = std::move(vals);
    out[gi] = std::move(row);
  }
  return out;
}

MartingaleSigma martingale_sigma(const BiharmonicEvaluator& ev, int K, std::int64_t M,
                                 std::uint64_t master_seed, int threads) {
  if (K < 2) throw ConfigError("martingale depth K must be >= 2");
  if (M < 1) throw ConfigError("martingale sample count must be >= 1");
  const Alphabet& a = ev.alphabet();
  MeasureSampler sampler(ev.mu());
  const double ell = ev.ell();
  const int half = K / 2;

  MartingaleSigma out;
  out.K = K;
  out.M = M;
  out.deltas.assign(static_cast<std::size_t>(M), 0.0);
  out.deltas_half.assign(static_cast<std::size_t>(M), 0.0);

  parallel_for(static_cast<std::size_t>(M), threads, [&](std::size_t i) {
    RngStream rng(master_seed, stream_id(StreamPurpose::pair_draw, i));
    // q_K = w_{-K+1} ... w_{-1}: K-1 draws; q_{K/2} is the suffix product
    // of the last K/2 - 1 of them.
    GroupElement q = GroupElement::identity(a);
    GroupElement q_half = GroupElement::identity(a);
    for (int j = 0; j < K - 1; ++j) {
      const GroupElement& inc = sampler.draw(rng);
      multiply_inplace(a, q, inc);
      if (j >= K - half) multiply_inplace(a, q_half, inc);
    }
    const GroupElement& w0 = sampler.draw(rng);
    double dq = ev.eval(multiply(a, q, w0)) - ev.eval(q) - ell;
    double dh = ev.eval(multiply(a, q_half, w0)) - ev.eval(q_half) - ell;
    out.deltas[i] = dq;
    out.deltas_half[i] = dh;
  });

  std::vector<double> sq(out.deltas.size()), sq_half(out.deltas.size());
  for (std::size_t i = 0; i < out.deltas.size(); ++i) {
    sq[i] = out.deltas[i] * out.deltas[i];
    sq_half[i] = out.deltas_half[i] * out.deltas_half[i];
  }
  double m2 = stable_sum(sq) / static_cast<double>(M);
  double m2_half = stable_sum(sq_half) / static_cast<double>(M);
  out.sigma_hat = std::sqrt(m2);
  out.sigma_half = std::sqrt(m2_half);
  out.cauchy_gap = std::abs(out.sigma_hat - out.sigma_half);

  auto ms = mean_and_se(out.deltas);
  out.mean_delta = ms.mean;
  out.se_mean = ms.se;
  // SE of sigma^2 via the spread of Delta^2; propagate to sigma.
  auto ms2 = mean_and_se(sq);
  out.se_sigma = out.sigma_hat > 0 ? ms2.se / (2.0 * out.sigma_hat) : ms2.se;
  return out;
}

BoundaryVariance boundary_variance(const BiharmonicEvaluator& ev, RaySet& rays,
                                   std::int64_t L, std::uint64_t master_seed, int threads) {
  const Alphabet& a = ev.alphabet();
  const std::size_t M = rays.size();
  MeasureSampler sampler(ev.mu());
  const double ell = ev.ell();
  for (std::size_t i = 0; i < M; ++i) rays.ray(i).letters(L);

  std::vector<double> vals(M);
  parallel_for(M, threads, [&](std::size_t i) {
    RngStream rng(master_seed, stream_id(StreamPurpose::pair_draw, i | (1ull << 48)));
    const GroupElement& g = sampler.draw(rng);
    GroupElement p = rays.ray(i).prefix_element(L);
    double alpha = ev.eval(multiply(a, g, p)) - ev.eval(p);
    vals[i] = (alpha - ell) * (alpha - ell);
  });
  auto ms = mean_and_se(vals);
  return {ms.mean, ms.se, static_cast<std::int64_t>(M)};
}

double cylinder_mass(int rank, std::int64_t len) {
  if (len <= 0) return 1.0;
  double k2 = 2.0 * rank;
  return (1.0 / k2) * std::pow(1.0 / (k2 - 1.0), static_cast<double>(len - 1));
}

double preimage_mass(const Alphabet& a, const GroupElement& g, const GroupElement& w) {
  if (!a.is_free()) throw ModeError("cylinder calculus needs a free alphabet");
  check_element(a, g);
  check_element(a, w);
  const auto& gd = g.data();
  const auto& wd = w.data();
  const auto r = static_cast<std::int64_t>(gd.size());
  const auto m = static_cast<std::int64_t>(wd.size());
  const int k = a.rank();
  const double k2 = 2.0 * k;

  double total = 0;
  for (std::int64_t c = 0; c <= r; ++c) {
    if (c == r) {
      // Full cancellation: xi in [g^{-1} w], when that word is reduced.
      if (r > 0 && m > 0 && wd[0] == gd[0]) continue;
      total += cylinder_mass(k, r + m);
      continue;
    }
    std::int64_t t = r - c;  // letters of g surviving in g xi
    // Prefix of g xi is g_1 .. g_t; it must agree with w as far as both go.
    std::int64_t overlap = std::min(t, m);
    bool match = true;
    for (std::int64_t i = 0; i < overlap && match; ++i) match = gd[i] == wd[i];
    if (!match) continue;
    if (t >= m) {
      // Whole cylinder condition already satisfied; weight of the class
      // {xi starts with the c inverted letters, then stops cancelling}.
      if (c == 0) {
        total += (k2 - 1.0) / k2;
      } else {
        total += cylinder_mass(k, c) * (k2 - 2.0) / (k2 - 1.0);
      }
    } else {
      // xi must continue with w_{t+1} .. w_m after the cancelled block.
      // Stop condition w_{t+1} != g_t^{-1} holds automatically (w reduced,
      // w_t = g_t); reducedness against the inverted block forbids
      // w_{t+1} == g_{t+1}.
      if (c >= 1 && wd[t] == gd[t]) continue;
      total += cylinder_mass(k, c + (m - t));
    }
  }
  return total;
}

StationarityReport stationarity_check_exact(const FiniteMeasure& mu, int max_len) {
  if (!is_nearest_neighbor_uniform(mu))
    throw ModeError("exact stationarity calculus requires the nearest-neighbor "
                    "uniform measure");
  const Alphabet& a = mu.alphabet();
  StationarityReport report;
  report.exact = true;
  for (const auto& w : enumerate_ball(a, max_len)) {
    if (w.is_identity()) continue;  // the full space: residual 0 by mass conservation
    double lhs = 0;
    for (std::size_t i = 0; i < mu.size(); ++i)
      lhs += mu.weight(i) * preimage_mass(a, mu.element(i), w);
    double residual = std::abs(lhs - cylinder_mass(a.rank(), w.length()));
    report.rows.push_back({w, residual, 0.0});
    report.max_residual = std::max(report.max_residual, residual);
  }
  return report;
}

StationarityReport stationarity_check_mc(const FiniteMeasure& mu,
                                         const std::vector<GroupElement>& cylinders,
                                         RaySet& rays, RaySet& reference_rays,
                                         std::int64_t L, std::uint64_t master_seed) {
  const Alphabet& a = mu.alphabet();
  MeasureSampler sampler(mu);
  StationarityReport report;
  report.exact = false;
  const std::size_t M = rays.size();
  const std::size_t R = reference_rays.size();

  std::vector<GroupElement> translated(M);
  for (std::size_t i = 0; i < M; ++i) {
    RngStream rng(master_seed, stream_id(StreamPurpose::pair_draw, i | (2ull << 48)));
    const GroupElement& g = sampler.draw(rng);
    translated[i] = translated_prefix(a, g, rays.ray(i), L);
  }
  std::vector<GroupElement> reference(R);
  for (std::size_t i = 0; i < R; ++i) reference[i] = reference_rays.ray(i).prefix_element(L);

  auto starts_with = [](const GroupElement& word, const GroupElement& cyl) {
    const auto& d = word.data();
    const auto& c = cyl.data();
    if (d.size() < c.size()) return false;
    return std::equal(c.begin(), c.end(), d.begin());
  };

  for (const auto& w : cylinders) {
    std::size_t n1 = 0, n0 = 0;
    for (const auto& word : translated) n1 += starts_with(word, w);
    for (const auto& word : reference) n0 += starts_with(word, w);
    double p1 = static_cast<double>(n1) / static_cast<double>(M);
    double p0 = static_cast<double>(n0) / static_cast<double>(R);
    double se = std::sqrt(p1 * (1 - p1) / static_cast<double>(M) +
                          p0 * (1 - p0) / static_cast<double>(R));
    double residual = std::abs(p1 - p0);
    report.rows.push_back({w, residual, se});
    report.max_residual = std::max(report.max_residual, residual);
  }
  return report;
}

RnKernelCheck rn_kernel_check(const BiharmonicEvaluator& ev, const GroupElement& g,
                              RaySet& rays, std::int64_t L, int cesaro_depth, int threads) {
  if (cesaro_depth < 2) throw ConfigError("Cesaro depth must be >= 2");
  const Alphabet& a = ev.alphabet();
  if (rays.size() == 0) throw ConfigError("rn kernel check needs rays");
  if (rays.ray(0).mode() != RayMode::hitting)
    throw ModeError("rn kernel reconstruction uses exact cylinder ratios and is "
                    "restricted to hitting-mode rays");
  const std::size_t M = rays.size();
  for (std::size_t i = 0; i < M; ++i) rays.ray(i).letters(L);

  std::vector<GroupElement> g_powers;
  for (int j = 1; j <= cesaro_depth; ++j) g_powers.push_back(power(a, g, j));
  const double nu_L = cylinder_mass(a.rank(), L);
  const int half_depth = cesaro_depth / 2;

  std::vector<double> prod(M), prod_half(M), sigmas(M);
  parallel_for(M, threads, [&](std::size_t i) {
    GroupElement p = rays.ray(i).prefix_element(L);
    double alpha = ev.eval(multiply(a, g, p)) - ev.eval(p);
    double rho_sum = 0, cesaro = 0, cesaro_half = 0;
    for (int j = 1; j <= cesaro_depth; ++j) {
      rho_sum += preimage_mass(a, g_powers[static_cast<std::size_t>(j - 1)], p) / nu_L;
      double s_j = rho_sum / j;
      cesaro += s_j;
      if (j <= half_depth) cesaro_half += s_j;
    }
    double sigma = cesaro / cesaro_depth;
    double sigma_half = half_depth > 0 ? cesaro_half / half_depth : sigma;
    sigmas[i] = sigma;
    prod[i] = alpha * sigma;
    prod_half[i] = alpha * sigma_half;
  });

  auto ms = mean_and_se(prod);
  RnKernelCheck out;
  out.g = g;
  out.reconstruction = ms.mean;
  out.se = ms.se;
  out.target = ev.phi_hat().eval(g);
  out.discrepancy = std::abs(out.reconstruction - out.target);
  out.reconstruction_half = mean_and_se(prod_half).mean;
  out.mean_sigma = mean_and_se(sigmas).mean;
  return out;
}

}  // namespace qmwalk
