#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "qmwalk/harmonic.hpp"
#include "qmwalk/measure.hpp"

namespace qmwalk {

enum class RayMode { hitting, trajectory_limit };

// A lazily extendable infinite reduced word: a point of the boundary of a
// free group, together with the stream that generates it.
//
// hitting mode (nearest-neighbor uniform walks only) samples the exit law
// directly: first letter uniform over 2k, every next letter uniform over
// the 2k-1 non-cancelling ones.
//
// trajectory-limit mode runs the walk itself and emits a letter once it has
// been unchanged for `window` consecutive steps. Emitted letters are frozen.
// This covers general finitely supported mu without an exactness claim;
// contradictions after emission are counted as retraction events.
class BoundaryRay {
 public:
  BoundaryRay(const Alphabet& alphabet, RayMode mode,
              std::shared_ptr<const FiniteMeasure> mu, std::uint64_t master_seed,
              std::uint64_t ray_index, int window = 64);

  // First `len` letters; extends the ray as needed.
  GroupElement prefix_element(std::int64_t len);
  const std::vector<GroupElement::Sym>& letters(std::int64_t len);

  RayMode mode() const { return mode_; }
  const Alphabet& alphabet() const { return alphabet_; }
  std::int64_t length() const { return static_cast<std::int64_t>(prefix_.size()); }
  int retraction_events() const { return retractions_; }

 private:
  void extend_hitting(std::int64_t target);
  void extend_trajectory(std::int64_t target);

  Alphabet alphabet_;
  RayMode mode_;
  std::shared_ptr<const FiniteMeasure> mu_;
  std::optional<MeasureSampler> sampler_;
  RngStream rng_;
  int window_;
  std::vector<GroupElement::Sym> prefix_;

  // trajectory-limit walk state
  std::vector<GroupElement::Sym> walk_word_;
  std::vector<std::uint64_t> last_changed_;
  std::uint64_t step_ = 0;
  int retractions_ = 0;
};

// Preconditions: free alphabet; supp mu generates as a semigroup; hitting
// mode additionally requires the nearest-neighbor uniform measure.
BoundaryRay sample_ray(const FiniteMeasure& mu, RayMode mode, std::uint64_t master_seed,
                       std::uint64_t ray_index, int window = 64);

// A bundle of independently seeded rays (ray i uses stream id i).
class RaySet {
 public:
  RaySet(const FiniteMeasure& mu, RayMode mode, std::uint64_t master_seed,
         std::size_t count, int window = 64);
  std::size_t size() const { return rays_.size(); }
  BoundaryRay& ray(std::size_t i) { return rays_[i]; }
  std::uint64_t master_seed() const { return master_seed_; }

 private:
  std::vector<BoundaryRay> rays_;
  std::uint64_t master_seed_;
};

struct CocycleValue {
  double value = 0;  // phi_tilde(g p_L) - phi_tilde(p_L)
  double gap = 0;    // |value(L) - value(L/2)|, the stabilization proxy
};

// alpha(g, xi) realized at prefix length L along the ray.
CocycleValue cocycle(const BiharmonicEvaluator& ev, const GroupElement& g,
                     BoundaryRay& xi, std::int64_t L);

// First L letters of the translated ray h.xi (prefix of reduce(h p_{L+|h|})).
GroupElement translated_prefix(const Alphabet& a, const GroupElement& h, BoundaryRay& xi,
                               std::int64_t L);

struct CocycleTriple {
  GroupElement g, h;
  double residual = 0;  // |alpha(gh,xi) - alpha(g,h xi) - alpha(h,xi)|
  double gap_sum = 0;   // summed stabilization gaps of the three terms
};

struct CocycleIdentityReport {
  std::vector<CocycleTriple> rows;
  double max_residual = 0;
  double total_gap = 0;  // run-level summed stabilization gaps
};

CocycleIdentityReport cocycle_identity_check(
    const BiharmonicEvaluator& ev, const std::vector<std::pair<GroupElement, GroupElement>>& pairs,
    RaySet& rays, std::int64_t L);

struct IntegralRepRow {
  GroupElement g;
  double phi_tilde = 0;
  double se_point = 0;     // MC standard error of the phi_tilde(g) evaluation
  double mean = 0;
  double se = 0;           // standard error of the ray average
  double discrepancy = 0;  // |phi_tilde(g) - mean|
  double se_combined = 0;  // sqrt(se^2 + se_point^2)
  std::vector<double> alphas;  // per-ray alpha(g, xi_i)
};

// phi_tilde(g) = integral of alpha(g, .) over nu, checked by Monte Carlo
// over the ray set (base values phi_tilde(p_L) are shared across g).
std::vector<IntegralRepRow> integral_representation_check(const BiharmonicEvaluator& ev,
                                                          const std::vector<GroupElement>& gs,
                                                          RaySet& rays, std::int64_t L,
                                                          int threads = 1);

struct MartingaleSigma {
  double sigma_hat = 0;
  double se_sigma = 0;
  double mean_delta = 0;
  double se_mean = 0;
  double sigma_half = 0;  // same estimator at depth K/2
  double cauchy_gap = 0;  // |sigma_hat - sigma_half|
  int K = 0;
  std::int64_t M = 0;
  std::vector<double> deltas, deltas_half;
};

// Backward-product martingale increments: q_K = product of K-1 mu-draws,
// Delta = phi_tilde(q_K w) - phi_tilde(q_K) - ell with w a fresh mu-draw;
// sigma_hat^2 is the sample mean of Delta^2.
MartingaleSigma martingale_sigma(const BiharmonicEvaluator& ev, int K, std::int64_t M,
                                 std::uint64_t master_seed, int threads = 1);

struct BoundaryVariance {
  double sigma2 = 0;
  double se = 0;  // standard error of sigma2
  std::int64_t M = 0;
};

// sigma^2 = double integral of (alpha(g,xi) - ell)^2 over mu x nu.
BoundaryVariance boundary_variance(const BiharmonicEvaluator& ev, RaySet& rays,
                                   std::int64_t L, std::uint64_t master_seed,
                                   int threads = 1);

// Exact hitting-measure cylinder mass (1/2k)(1/(2k-1))^{len-1}; 1 at len 0.
double cylinder_mass(int rank, std::int64_t len);

// nu({xi : g xi in [w]}), exact, for the nearest-neighbor uniform hitting
// measure; any reduced g and cylinder word w.
double preimage_mass(const Alphabet& a, const GroupElement& g, const GroupElement& w);

struct StationarityRow {
  GroupElement cylinder;
  double residual = 0;
  double se = 0;  // 0 in exact mode
};

struct StationarityReport {
  std::vector<StationarityRow> rows;
  double max_residual = 0;
  bool exact = true;
};

// Residual of sum_g mu(g) nu(g^{-1}[w]) = nu([w]) over all cylinders of
// length <= max_len (exact calculus; nearest-neighbor uniform mu only).
StationarityReport stationarity_check_exact(const FiniteMeasure& mu, int max_len);

// Monte Carlo variant: empirical frequency of {g xi in [w]} against the
// empirical frequency of {xi in [w]} on an independent ray set.
StationarityReport stationarity_check_mc(const FiniteMeasure& mu,
                                         const std::vector<GroupElement>& cylinders,
                                         RaySet& rays, RaySet& reference_rays,
                                         std::int64_t L, std::uint64_t master_seed);

struct RnKernelCheck {
  GroupElement g;
  double reconstruction = 0;    // MC mean of alpha(g,xi) sigma(g,xi)
  double se = 0;
  double target = 0;            // phi_hat(g)
  double discrepancy = 0;
  double reconstruction_half = 0;  // at half the Cesaro depth
  double mean_sigma = 0;        // should be ~1 (integral of rho is 1)
};

// Radon-Nikodym kernel reconstruction of the homogenization: rho(g^j, xi)
// by exact cylinder-measure ratios around xi, sigma(g, xi) the double
// Cesaro average, and phi_hat(g) ~ integral alpha(g,xi) sigma(g,xi) dnu.
RnKernelCheck rn_kernel_check(const BiharmonicEvaluator& ev, const GroupElement& g,
                              RaySet& rays, std::int64_t L, int cesaro_depth,
                              int threads = 1);

}  // namespace qmwalk
