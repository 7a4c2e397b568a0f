#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qmwalk/measure.hpp"
#include "qmwalk/quasimorphism.hpp"

namespace qmwalk {

enum class EvalMode { exact, monte_carlo };

// How psi_n integrals (and convolution powers) are evaluated.
struct PsiOptions {
  EvalMode mode = EvalMode::exact;
  int mc_samples = 64;        // draws per (g, n) in Monte Carlo mode
  std::uint64_t mc_seed = 0;
  double tau = 0.0;           // truncation threshold for exact powers
  std::size_t support_cap = 4'000'000;
};

// a_n = integral of phi over mu^{*n}, and the distortion ell = a_N / N with
// its certificate |ell - ell_mu(phi)| <= D/N (+ sampling/truncation slack):
// the sequence (a_n) is subadditive up to the defect.
struct DistortionEstimate {
  std::vector<double> a;       // a_0 .. a_N
  std::vector<double> se;      // per-n standard error (zeros in exact mode)
  double ell = 0;
  double error_bound = 0;
  int N = 0;
  EvalMode mode = EvalMode::exact;
  double truncation_slack = 0;
};

DistortionEstimate distortion(const Quasimorphism& phi, const FiniteMeasure& mu, int N,
                              const PsiOptions& opts = {});

struct PsiValue {
  double value = 0;
  double se = 0;
};

// The quasi-biharmonic Cesaro approximation
//   phi_tilde_N(g) = phi_hat(g) + (1/N) sum_{n=0}^{N-1} psi_n(g),
// with psi_n(g) = integral of dphi_hat(g, h) over mu^{*n}(h). The evaluator
// is a pure function of g: Monte Carlo psi values derive their streams from
// the word hash, so repeated evaluation is reproducible and side-effect
// free. In exact mode the right-residual identity
//   sum_h phi_tilde(gh) mu(h) - phi_tilde(g) - a_N/N = psi_N(g)/N
// holds to machine precision; this is the module's primary oracle.
class BiharmonicEvaluator {
 public:
  BiharmonicEvaluator(QmPtr phi_hat, FiniteMeasure mu, int N, PsiOptions opts = {});

  double eval(const GroupElement& g) const;
  double operator()(const GroupElement& g) const { return eval(g); }

  // Value together with the Monte Carlo standard error of the point
  // evaluation itself (0 in exact mode). In MC mode the Cesaro correction
  // is estimated from one bundle of m walk trajectories whose prefixes
  // serve every depth n < N; the bundle is keyed by the word hash, so the
  // evaluator remains a pure function of g.
  PsiValue eval_with_se(const GroupElement& g) const;

  PsiValue psi(int n, const GroupElement& g) const;
  double a(int n) const;
  double ell() const { return ell_; }
  double ell_error() const { return ell_error_; }
  int depth() const { return N_; }
  EvalMode mode() const { return opts_.mode; }
  const PsiOptions& options() const { return opts_; }

  const Quasimorphism& phi_hat() const { return *phi_hat_; }
  QmPtr phi_hat_ptr() const { return phi_hat_; }
  const FiniteMeasure& mu() const { return mu_; }
  const Alphabet& alphabet() const { return mu_.alphabet(); }

  // Working defect bound of phi_hat (declared, includes homogenization slack).
  double defect_assumed() const { return defect_assumed_; }
  // Certified bound on the exact-mode right residual: 2 D-hat / N.
  double right_residual_budget() const { return 2.0 * defect_assumed_ / N_; }

 private:
  PsiValue psi_exact(int n, const GroupElement& g) const;
  PsiValue psi_mc(int n, const GroupElement& g) const;

  QmPtr phi_hat_;
  FiniteMeasure mu_;
  int N_;
  PsiOptions opts_;
  double defect_assumed_ = 0;
  double ell_ = 0;
  double ell_error_ = 0;
  double center_ = 0;

  // Exact mode: mu^{*n} for n = 0..N with phi_hat cached on each support.
  std::vector<FiniteMeasure> powers_;
  std::vector<std::vector<double>> phi_cache_;
  std::vector<double> a_;
  double trunc_slack_ = 0;
  std::optional<MeasureSampler> sampler_;  // Monte Carlo increment draws
};

// Tabulation of phi_tilde_N over a finite evaluation set.
struct HarmonicApprox {
  int N = 0;
  EvalMode mode = EvalMode::exact;
  double ell = 0;
  double ell_error = 0;
  double defect_assumed = 0;
  std::vector<GroupElement> eval_set;  // canonical order
  std::vector<double> values;

  std::optional<double> lookup(const GroupElement& g) const;
};

HarmonicApprox tabulate(const BiharmonicEvaluator& ev,
                        const std::vector<GroupElement>& eval_set, int threads = 1);

// eval_set closed under the products needed by both residual sides:
// core + core*supp + supp*core.
std::vector<GroupElement> closed_eval_set(const Alphabet& a,
                                          const std::vector<GroupElement>& core,
                                          const FiniteMeasure& mu);

enum class ResidualSide { right, left };

struct ResidualRow {
  GroupElement g;
  double value = 0;
};

struct ResidualReport {
  ResidualSide side = ResidualSide::right;
  std::vector<ResidualRow> rows;
  double max_abs = 0;
  // Certified budget for the right side in exact mode; the left side is
  // only measured (expected to shrink as N grows).
  double budget = 0;
};

// Residual of the quasi-harmonicity identity against the approx's own ell:
// right: sum_h table(g h) mu(h) - table(g) - ell, left uses h g.
// Throws CoverageError listing missing products if the set is not closed.
ResidualReport residuals(const HarmonicApprox& approx, const FiniteMeasure& mu,
                         const std::vector<GroupElement>& core, ResidualSide side);

struct TamenessOptions {
  int horizon = 8;
  // Witness when s_n > threshold * (1 + D+) and s is strictly increasing
  // over the last three horizons. Default mirrors the 3 D(phi) slack of the
  // martingale approximation: threshold 3 against 1 + D+.
  double threshold = 3.0;
  std::optional<double> ell_supplied;
  double tau = 0.0;
  std::size_t support_cap = 4'000'000;
};

struct TamenessResult {
  bool tame = true;
  int horizon = 0;
  double C = 0;                    // max_n s_n when tame (horizon-limited)
  int witness_n = 0;               // first flagged horizon when non-tame
  GroupElement witness_g;
  double witness_value = 0;
  std::vector<double> s;           // s_1 .. s_horizon
  double ell_used = 0;
  double flag_level = 0;           // threshold * (1 + D+)
};

// Semi-decision: s_n = max over supp mu^{*n} of |phi(g) - n ell|. Exact
// supports only; capacity errors fire when the horizon is out of reach.
TamenessResult tameness_check(const Quasimorphism& phi, const FiniteMeasure& mu,
                              const TamenessOptions& opts);

}  // namespace qmwalk
