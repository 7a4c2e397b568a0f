#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qmwalk/group.hpp"

namespace qmwalk {

// Incremental evaluation of phi along a right-multiplied walk, for
// operations that need phi(z_n) at every step of a long trajectory.
class WalkAccumulator {
 public:
  virtual ~WalkAccumulator() = default;
  virtual void step(const GroupElement& increment) = 0;
  virtual double value() const = 0;
};

// An evaluable quasimorphism phi: G -> R. Evaluators are pure; the defect
// floor is the only mutable state and is an atomic monotone max fed by
// defect probes. defect_bound is a declared (assumed) upper bound D+ on
// sup |phi(gh) - phi(g) - phi(h)|; the floor is certified by witnesses.
class Quasimorphism {
 public:
  virtual ~Quasimorphism() = default;

  virtual double eval(const GroupElement& g) const = 0;

  const Alphabet& alphabet() const { return alphabet_; }
  const std::string& description() const { return description_; }
  std::optional<double> defect_bound() const { return defect_bound_; }

  double defect_floor() const { return defect_floor_.load(std::memory_order_relaxed); }
  void raise_defect_floor(double v) const {
    double cur = defect_floor_.load(std::memory_order_relaxed);
    while (v > cur &&
           !defect_floor_.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
    }
  }

  // Exactly homogeneous: phi(g^n) = n phi(g) holds by construction.
  bool homogeneous() const { return homogeneous_; }
  // Approximately homogeneous with this sup-distance to the true
  // homogenization (set by homogenize(); 0 for exact constructions).
  std::optional<double> homogeneity_tolerance() const { return homog_tol_; }

  // Incremental walk evaluation, when the construction supports it.
  virtual std::unique_ptr<WalkAccumulator> make_accumulator() const { return nullptr; }

  // phi(g^n) without materializing g^n, when the construction supports it
  // (homomorphisms are linear; subword counts over u c^n u^-1 are affine in
  // n once n clears the pattern length). Must agree exactly with
  // eval(power(g, n)).
  virtual std::optional<double> eval_power(const GroupElement& g, std::int64_t n) const {
    (void)g;
    (void)n;
    return std::nullopt;
  }

 protected:
  Quasimorphism(Alphabet a, std::string description)
      : alphabet_(std::move(a)), description_(std::move(description)) {}

  Alphabet alphabet_;
  std::string description_;
  std::optional<double> defect_bound_;
  std::optional<double> homog_tol_;
  bool homogeneous_ = false;

 private:
  mutable std::atomic<double> defect_floor_{0.0};
};

using QmPtr = std::shared_ptr<const Quasimorphism>;

// Group homomorphism determined by per-generator values; defect 0.
QmPtr make_homomorphism(const Alphabet& a, std::vector<double> generator_values);

// Brooks counting quasimorphism phi_w = C_w - C_{w^-1}, where C_w(g) counts
// occurrences of w as a contiguous subword of the reduced word of g
// (overlaps allowed). Declared defect bound defaults to 6(|w|-1)+2 and can
// be overridden; it is an assumption, validated against the probed floor.
QmPtr make_brooks(const Alphabet& a, const GroupElement& pattern,
                  std::optional<double> declared_defect = std::nullopt);

// Deterministic pseudo-random function with |phi| <= amplitude and
// phi(e) = 0; tame for every walk. Declared defect bound 3*amplitude.
QmPtr make_bounded_noise(const Alphabet& a, double amplitude, std::uint64_t seed);

// Pointwise linear combination; defect bounds compose subadditively.
QmPtr combine(std::vector<std::pair<double, QmPtr>> terms);

struct Homogenized {
  QmPtr qm;
  double tolerance;  // |qm(g) - true homogenization(g)| <= tolerance
};

// Power-doubling homogenization: evaluator g -> phi(g^{2^depth}) / 2^depth.
// Requires a defect bound on phi (Fekete bound gives the certificate).
Homogenized homogenize(const QmPtr& phi, int doubling_depth);

// dphi(g, h) = phi(gh) - phi(g) - phi(h).
double differential(const Quasimorphism& phi, const GroupElement& g, const GroupElement& h);

struct DefectSearch {
  int ball_radius = 3;
  int random_pairs = 0;
  std::uint64_t seed = 0;
  std::size_t ball_cap = 200'000;
};

struct DefectProbe {
  double floor = 0.0;
  GroupElement witness_g, witness_h;
};

// Certified lower bound max |dphi| over all ball pairs plus random pairs;
// monotone in radius and pair count. Raises phi's defect floor.
DefectProbe defect_lower_bound(const Quasimorphism& phi, const DefectSearch& search);

// Declared defect bound or a configuration error naming the quasimorphism.
double require_defect_bound(const Quasimorphism& phi);

}  // namespace qmwalk
