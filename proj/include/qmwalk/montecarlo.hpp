#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qmwalk/harmonic.hpp"
#include "qmwalk/measure.hpp"
#include "qmwalk/quasimorphism.hpp"

namespace qmwalk {

// One random-walk experiment: mu-distributed increments, phi evaluated at
// the endpoint, drift ell subtracted. A fixed master seed determines every
// trial through its own counter-based stream, so results are independent
// of thread count and scheduling.
struct WalkScenario {
  Alphabet alphabet;
  FiniteMeasure mu;
  QmPtr phi;
  double ell = 0;
  double ell_error = 0;
  std::string ell_source = "supplied";
  std::int64_t n = 1;
  std::int64_t M = 1;
  std::uint64_t seed = 0;
  int threads = 1;
  double degeneracy_floor = 1e-9;
};

struct TrialResult {
  GroupElement z;
  double phi_z = 0;
};

TrialResult run_walk(const WalkScenario& sc, std::int64_t trial_index);

struct CltReport {
  std::int64_t n = 0;
  std::int64_t M = 0;
  std::uint64_t seed = 0;
  double sigma_hat = 0;
  double ks = 0;
  bool ks_valid = true;
  double ks_band = 0;  // +- sqrt(n) * ell_error / sigma_hat
  bool degenerate = false;
  double ell = 0;
  double ell_error = 0;
  double mean_x = 0;
  double se_mean = 0;
  std::vector<double> phi_values;  // phi(z_n) per trial
  std::vector<double> samples;     // x_i = (phi(z_n) - n ell) / sqrt(n)
  double wall_ms = 0;
};

// M parallel trials; sigma_hat^2 is the mean of x_i^2 (the samples are
// centered by construction), KS distance taken against N(0, sigma_hat^2).
// sigma_hat <= degeneracy floor means the point-mass comparison: the
// verdict is degenerate and KS is 0 when every |x_i| is below the floor.
CltReport clt_experiment(const WalkScenario& sc);

// Exact sup-distance between the empirical CDF of the samples and the
// centered normal CDF with standard deviation sigma (> 0 required).
double ks_statistic(std::vector<double> samples, double sigma);

struct LilPoint {
  std::int64_t n = 0;
  double r_plain = 0;   // max over n0<=j<=n of (phi(z_j) - j ell)/sqrt(j log log j)
  double r_sqrt2 = 0;   // same with sqrt(2 j log log j)
};

struct LilCurve {
  std::vector<LilPoint> points;
  std::int64_t n0 = 0;
  std::int64_t n_total = 0;
  std::uint64_t seed = 0;
};

// Single long trajectory with running-max tracking at every step past n0;
// points are emitted at geometric checkpoints (ratio 2) and at n_total.
// Requires a quasimorphism with incremental walk evaluation.
LilCurve lil_track(const WalkScenario& sc, std::int64_t n_total, std::int64_t n0);

// Pools reports of the same scenario shape: M adds up, sigma_hat^2 pools by
// sample count, KS is recomputed when every input still carries samples.
CltReport aggregate_reports(const std::vector<CltReport>& reports);

struct SandwichReport {
  double max_gap = 0;      // max over trials of |phi(z_n) - n ell - proxy|
  double bound = 0;        // 3 D+ + slack
  double slack = 0;
  std::int64_t trials = 0;
  std::vector<double> gaps;
};

// Rebuilds the cocycle-martingale proxy along each trial's own increments:
// with q a backward product of K-1 draws,
//   proxy = sum_j [phi_tilde(q z_{j+1}) - phi_tilde(q z_j)] - n ell,
// and checks |phi(z_n) - n ell - proxy| against 3 D+ plus the certified
// slack of the phi -> phi_hat -> phi_tilde replacements.
SandwichReport martingale_sandwich(const WalkScenario& sc, const BiharmonicEvaluator& ev,
                                   int K);

}  // namespace qmwalk
