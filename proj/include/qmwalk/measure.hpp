#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qmwalk/group.hpp"
#include "qmwalk/rational.hpp"
#include "qmwalk/rng.hpp"

namespace qmwalk {

enum class WeightMode { exact_rational, floating };

// Finitely supported probability measure on a group, stored as a sparse
// element -> weight table in canonical element order. Exact-rational mode
// keeps weights as rationals (with a double mirror for sampling); floating
// mode keeps doubles only. Zero weights are dropped, total mass is 1
// (exactly, or within 1e-12 in floating mode). Immutable once built.
class FiniteMeasure {
 public:
  static constexpr double kMassTolerance = 1e-12;

  static FiniteMeasure from_rational(const Alphabet& a,
                                     std::vector<std::pair<GroupElement, Rational>> entries);
  static FiniteMeasure from_floating(const Alphabet& a,
                                     std::vector<std::pair<GroupElement, double>> entries);
  static FiniteMeasure dirac(const Alphabet& a, const GroupElement& g);
  static FiniteMeasure uniform(const Alphabet& a, const std::vector<GroupElement>& support);

  const Alphabet& alphabet() const { return alphabet_; }
  WeightMode mode() const { return mode_; }
  bool exact() const { return mode_ == WeightMode::exact_rational; }
  std::size_t size() const { return elems_.size(); }
  const std::vector<GroupElement>& elements() const { return elems_; }
  const GroupElement& element(std::size_t i) const { return elems_[i]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const Rational& rational_weight(std::size_t i) const { return rat_weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }

  std::optional<std::size_t> find(const GroupElement& g) const;
  double mass_of(const GroupElement& g) const;

  // Largest word length over the support.
  std::int64_t support_radius() const;

  // Cached result of support_generates, when it has been established.
  std::optional<int> generation_witness() const { return generation_witness_; }
  void set_generation_witness(int r) const { generation_witness_ = r; }

 private:
  FiniteMeasure(Alphabet a, WeightMode mode) : alphabet_(std::move(a)), mode_(mode) {}
  void finalize_exact(std::vector<std::pair<GroupElement, Rational>> entries);
  void finalize_floating(std::vector<std::pair<GroupElement, double>> entries);

  Alphabet alphabet_;
  WeightMode mode_;
  std::vector<GroupElement> elems_;
  std::vector<double> weights_;
  std::vector<Rational> rat_weights_;  // empty in floating mode
  mutable std::optional<int> generation_witness_;
};

// (mu * nu)(g) = sum over h k = g of mu(h) nu(k). Mass is preserved.
FiniteMeasure convolve(const FiniteMeasure& mu, const FiniteMeasure& nu);

struct ConvolvePower {
  FiniteMeasure measure;      // renormalized to mass 1
  double retained_mass;       // exact retained mass before renormalization
  std::size_t dropped = 0;    // support points truncated away
};

// n-fold convolution power with mass-truncation threshold tau in [0, 1).
// Truncation keeps the highest-probability prefix of the support under the
// deterministic order (weight descending, then word order), so results are
// reproducible. tau = 0 keeps everything and reports retained mass 1.
ConvolvePower convolve_power(const FiniteMeasure& mu, int n, double tau = 0.0,
                             std::size_t support_cap = 4'000'000);

bool is_symmetric(const FiniteMeasure& mu);
FiniteMeasure symmetrize(const FiniteMeasure& mu);

// Single draw; determined entirely by the stream state.
GroupElement sample(const FiniteMeasure& mu, RngStream& rng);

// Alias-table sampler (Vose) for tight sampling loops; construction is
// deterministic so fixed streams give bit-identical draw sequences.
class MeasureSampler {
 public:
  explicit MeasureSampler(const FiniteMeasure& mu);
  const GroupElement& draw(RngStream& rng) const;
  const FiniteMeasure& measure() const { return *mu_; }

 private:
  const FiniteMeasure* mu_;
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

struct GenerationVerdict {
  bool yes = false;
  int radius = 0;  // ball radius covered by products of support elements
  std::string describe() const;
};

// Semi-decision for "supp mu generates the group as a semigroup": products
// of at most `horizon` support elements are closed up and compared against
// balls. Returns yes-by-radius(r') for the largest covered r' >= 1, else no.
GenerationVerdict support_generates(const FiniteMeasure& mu, int horizon,
                                    std::size_t cap = 2'000'000);

}  // namespace qmwalk
