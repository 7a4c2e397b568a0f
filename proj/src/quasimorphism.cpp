#include "qmwalk/quasimorphism.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qmwalk/rng.hpp"

namespace qmwalk {

namespace {

using Sym = GroupElement::Sym;

class HomomorphismQm final : public Quasimorphism {
 public:
  HomomorphismQm(Alphabet a, std::vector<double> values)
      : Quasimorphism(std::move(a), ""), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(alphabet_.rank()))
      throw ConfigError("homomorphism needs one value per generator");
    std::ostringstream os;
    os << "hom(";
    for (int i = 0; i < alphabet_.rank(); ++i)
      os << (i ? ", " : "") << alphabet_.name(i) << ":" << values_[static_cast<std::size_t>(i)];
    os << ")";
    description_ = os.str();
    defect_bound_ = 0.0;
    homogeneous_ = true;
    homog_tol_ = 0.0;
  }

  double eval(const GroupElement& g) const override {
    check_element(alphabet_, g);
    double v = 0;
    if (alphabet_.is_free()) {
      for (Sym s : g.data())
        v += s > 0 ? values_[static_cast<std::size_t>(s - 1)]
                   : -values_[static_cast<std::size_t>(-s - 1)];
    } else {
      for (std::size_t i = 0; i < values_.size(); ++i)
        v += values_[i] * static_cast<double>(g.data()[i]);
    }
    return v;
  }

  std::unique_ptr<WalkAccumulator> make_accumulator() const override;

  std::optional<double> eval_power(const GroupElement& g, std::int64_t n) const override {
    return static_cast<double>(n) * eval(g);
  }

 private:
  friend class HomAccumulator;
  std::vector<double> values_;
};

class HomAccumulator final : public WalkAccumulator {
 public:
  explicit HomAccumulator(const HomomorphismQm& qm) : qm_(qm) {}
  void step(const GroupElement& inc) override { value_ += qm_.eval(inc); }
  double value() const override { return value_; }

 private:
  const HomomorphismQm& qm_;
  double value_ = 0;
};

std::unique_ptr<WalkAccumulator> HomomorphismQm::make_accumulator() const {
  return std::make_unique<HomAccumulator>(*this);
}

// Occurrence count of `pat` ending at the last position of `word`.
inline int match_at_end(const std::vector<Sym>& word, const std::vector<Sym>& pat) {
  if (word.size() < pat.size()) return 0;
  std::size_t off = word.size() - pat.size();
  for (std::size_t i = 0; i < pat.size(); ++i)
    if (word[off + i] != pat[i]) return 0;
  return 1;
}

std::int64_t count_occurrences(const std::vector<Sym>& word, const std::vector<Sym>& pat) {
  if (pat.empty() || word.size() < pat.size()) return 0;
  std::int64_t count = 0;
  for (std::size_t start = 0; start + pat.size() <= word.size(); ++start) {
    bool hit = true;
    for (std::size_t i = 0; i < pat.size(); ++i) {
      if (word[start + i] != pat[i]) { hit = false; break; }
    }
    if (hit) ++count;
  }
  return count;
}

class BrooksQm final : public Quasimorphism {
 public:
  BrooksQm(Alphabet a, GroupElement pattern, std::optional<double> declared)
      : Quasimorphism(std::move(a), ""), pattern_(pattern.data()) {
    if (!alphabet_.is_free())
      throw ConfigError("Brooks counting functions require a free alphabet");
    check_element(alphabet_, pattern);
    if (pattern_.empty()) throw ConfigError("Brooks pattern must be nonempty");
    if (reduce(alphabet_, pattern_).data() != pattern_)
      throw ConfigError("Brooks pattern must be freely reduced");
    inverse_.assign(pattern_.rbegin(), pattern_.rend());
    for (Sym& s : inverse_) s = -s;
    description_ = "brooks(" + format_element(alphabet_, pattern) + ")";
    double len = static_cast<double>(pattern_.size());
    defect_bound_ = declared ? *declared : 6.0 * (len - 1.0) + 2.0;
  }

  double eval(const GroupElement& g) const override {
    check_element(alphabet_, g);
    return static_cast<double>(count_occurrences(g.data(), pattern_) -
                               count_occurrences(g.data(), inverse_));
  }

  // C_z(u c^m u^-1) is affine in m once (m-1)|c| clears the pattern: count
  // two small instances and extrapolate. Exact, so this matches
  // eval(power(g, n)) bit for bit.
  std::optional<double> eval_power(const GroupElement& g, std::int64_t n) const override {
    check_element(alphabet_, g);
    if (n < 0) return std::nullopt;
    if (n == 0 || g.is_identity()) return 0.0;
    const auto& w = g.data();
    std::size_t i = 0, j = w.size() - 1;
    while (i < j && w[i] == -w[j]) {
      ++i;
      --j;
    }
    std::vector<Sym> head(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(i));
    std::vector<Sym> core(w.begin() + static_cast<std::ptrdiff_t>(i),
                          w.begin() + static_cast<std::ptrdiff_t>(j) + 1);
    // Past m0 periods no occurrence can touch both junctions and both
    // junction neighborhoods are saturated, so the count is affine in m.
    auto span = static_cast<std::int64_t>(std::max(pattern_.size(), inverse_.size()));
    std::int64_t m0 = 2 * span / static_cast<std::int64_t>(core.size()) + 3;
    auto value_at = [&](std::int64_t m) {
      std::vector<Sym> word = head;
      for (std::int64_t rep = 0; rep < m; ++rep)
        word.insert(word.end(), core.begin(), core.end());
      for (auto it = head.rbegin(); it != head.rend(); ++it) word.push_back(-*it);
      return static_cast<double>(count_occurrences(word, pattern_) -
                                 count_occurrences(word, inverse_));
    };
    if (n <= m0 + 1) return value_at(n);
    double base = value_at(m0);
    double per_period = value_at(m0 + 1) - base;
    return base + per_period * static_cast<double>(n - m0);
  }

  std::unique_ptr<WalkAccumulator> make_accumulator() const override;

 private:
  friend class BrooksAccumulator;
  std::vector<Sym> pattern_, inverse_;
};

// Maintains its own reduced word; on every push/pop the occurrence counts
// change only at the tail window, so a step costs O(|pattern|).
class BrooksAccumulator final : public WalkAccumulator {
 public:
  explicit BrooksAccumulator(const BrooksQm& qm) : qm_(qm) {}

  void step(const GroupElement& inc) override {
    for (Sym s : inc.data()) {
      if (!word_.empty() && word_.back() == -s) {
        pos_ -= match_at_end(word_, qm_.pattern_);
        neg_ -= match_at_end(word_, qm_.inverse_);
        word_.pop_back();
      } else {
        word_.push_back(s);
        pos_ += match_at_end(word_, qm_.pattern_);
        neg_ += match_at_end(word_, qm_.inverse_);
      }
    }
  }

  double value() const override { return static_cast<double>(pos_ - neg_); }

 private:
  const BrooksQm& qm_;
  std::vector<Sym> word_;
  std::int64_t pos_ = 0, neg_ = 0;
};

std::unique_ptr<WalkAccumulator> BrooksQm::make_accumulator() const {
  return std::make_unique<BrooksAccumulator>(*this);
}

class BoundedNoiseQm final : public Quasimorphism {
 public:
  BoundedNoiseQm(Alphabet a, double amplitude, std::uint64_t seed)
      : Quasimorphism(std::move(a), ""), amplitude_(amplitude), seed_(seed) {
    if (amplitude < 0) throw ConfigError("noise amplitude must be >= 0");
    description_ = "bounded-noise(amplitude=" + std::to_string(amplitude) + ")";
    defect_bound_ = 3.0 * amplitude;
  }

  double eval(const GroupElement& g) const override {
    check_element(alphabet_, g);
    if (g.is_identity()) return 0.0;
    std::uint64_t h = splitmix64(g.hash() ^ splitmix64(seed_));
    double unit = static_cast<double>(h >> 11) * 0x1.0p-53;
    return amplitude_ * (2.0 * unit - 1.0);
  }

 private:
  double amplitude_;
  std::uint64_t seed_;
};

class CombineQm final : public Quasimorphism {
 public:
  explicit CombineQm(std::vector<std::pair<double, QmPtr>> terms)
      : Quasimorphism(terms.at(0).second->alphabet(), ""), terms_(std::move(terms)) {
    std::ostringstream os;
    os << "combine(";
    double bound = 0;
    double tol = 0;
    bool have_bound = true, have_tol = true;
    homogeneous_ = true;
    for (std::size_t i = 0; i < terms_.size(); ++i) {
      const auto& [c, qm] = terms_[i];
      if (qm->alphabet() != alphabet_)
        throw AlphabetMismatchError("combined quasimorphisms use different alphabets");
      os << (i ? " + " : "") << c << "*" << qm->description();
      if (qm->defect_bound())
        bound += std::abs(c) * *qm->defect_bound();
      else
        have_bound = false;
      if (qm->homogeneity_tolerance())
        tol += std::abs(c) * *qm->homogeneity_tolerance();
      else
        have_tol = false;
      homogeneous_ = homogeneous_ && qm->homogeneous();
    }
    os << ")";
    description_ = os.str();
    if (have_bound) defect_bound_ = bound;
    if (have_tol) homog_tol_ = tol;
  }

  double eval(const GroupElement& g) const override {
    double v = 0;
    for (const auto& [c, qm] : terms_) v += c * qm->eval(g);
    return v;
  }

  std::optional<double> eval_power(const GroupElement& g, std::int64_t n) const override {
    double v = 0;
    for (const auto& [c, qm] : terms_) {
      auto p = qm->eval_power(g, n);
      if (!p) return std::nullopt;
      v += c * *p;
    }
    return v;
  }

  std::unique_ptr<WalkAccumulator> make_accumulator() const override {
    std::vector<std::pair<double, std::unique_ptr<WalkAccumulator>>> accs;
    for (const auto& [c, qm] : terms_) {
      auto acc = qm->make_accumulator();
      if (!acc) return nullptr;
      accs.emplace_back(c, std::move(acc));
    }
    class Acc final : public WalkAccumulator {
     public:
      explicit Acc(std::vector<std::pair<double, std::unique_ptr<WalkAccumulator>>> accs)
          : accs_(std::move(accs)) {}
      void step(const GroupElement& inc) override {
        for (auto& [c, acc] : accs_) acc->step(inc);
      }
      double value() const override {
        double v = 0;
        for (const auto& [c, acc] : accs_) v += c * acc->value();
        return v;
      }

     private:
      std::vector<std::pair<double, std::unique_ptr<WalkAccumulator>>> accs_;
    };
    return std::make_unique<Acc>(std::move(accs));
  }

 private:
  std::vector<std::pair<double, QmPtr>> terms_;
};

class HomogenizedQm final : public Quasimorphism {
 public:
  HomogenizedQm(QmPtr inner, int depth, double inner_defect)
      : Quasimorphism(inner->alphabet(), ""), inner_(std::move(inner)), depth_(depth) {
    n_ = std::int64_t{1} << depth;
    tol_ = inner_defect / static_cast<double>(n_);
    description_ =
        "homogenized(" + inner_->description() + ", depth=" + std::to_string(depth) + ")";
    // D(phi_hat) <= 2 D(phi); finite depth adds at most 3 tol across the
    // three evaluations in the differential.
    defect_bound_ = 2.0 * inner_defect + 3.0 * tol_;
    if (inner_->homogeneous()) {
      // phi(g^N)/N == phi(g): the evaluator coincides with the input.
      homogeneous_ = true;
      homog_tol_ = 0.0;
      defect_bound_ = inner_->defect_bound();
      tol_ = 0.0;
    } else {
      homog_tol_ = tol_;
    }
  }

  double eval(const GroupElement& g) const override {
    if (homogeneous_) return inner_->eval(g);
    if (auto fast = inner_->eval_power(g, n_)) return *fast / static_cast<double>(n_);
    GroupElement p = power(alphabet_, g, n_);
    return inner_->eval(p) / static_cast<double>(n_);
  }

  double tolerance() const { return tol_; }

 private:
  QmPtr inner_;
  int depth_;
  std::int64_t n_ = 1;
  double tol_ = 0;
};

}  // namespace

QmPtr make_homomorphism(const Alphabet& a, std::vector<double> generator_values) {
  return std::make_shared<HomomorphismQm>(a, std::move(generator_values));
}

QmPtr make_brooks(const Alphabet& a, const GroupElement& pattern,
                  std::optional<double> declared_defect) {
  return std::make_shared<BrooksQm>(a, pattern, declared_defect);
}

QmPtr make_bounded_noise(const Alphabet& a, double amplitude, std::uint64_t seed) {
  return std::make_shared<BoundedNoiseQm>(a, amplitude, seed);
}

QmPtr combine(std::vector<std::pair<double, QmPtr>> terms) {
  if (terms.empty()) throw ConfigError("combine needs at least one term");
  return std::make_shared<CombineQm>(std::move(terms));
}

Homogenized homogenize(const QmPtr& phi, int doubling_depth) {
  if (doubling_depth < 0 || doubling_depth > 40)
    throw ConfigError("doubling depth out of range");
  double d = require_defect_bound(*phi);
  auto qm = std::make_shared<HomogenizedQm>(phi, doubling_depth, d);
  double tol = qm->tolerance();
  return {qm, tol};
}

double differential(const Quasimorphism& phi, const GroupElement& g, const GroupElement& h) {
  GroupElement gh = multiply(phi.alphabet(), g, h);
  return phi.eval(gh) - phi.eval(g) - phi.eval(h);
}

DefectProbe defect_lower_bound(const Quasimorphism& phi, const DefectSearch& search) {
  if (search.ball_radius < 0) throw ConfigError("defect search radius must be >= 0");
  const Alphabet& a = phi.alphabet();
  DefectProbe probe;
  probe.witness_g = GroupElement::identity(a);
  probe.witness_h = GroupElement::identity(a);

  auto consider = [&](const GroupElement& g, const GroupElement& h) {
    double v = std::abs(differential(phi, g, h));
    if (v > probe.floor) {
      probe.floor = v;
      probe.witness_g = g;
      probe.witness_h = h;
    }
  };

  auto ball = enumerate_ball(a, search.ball_radius, search.ball_cap);
  for (const auto& g : ball)
    for (const auto& h : ball) consider(g, h);

  if (search.random_pairs > 0) {
    RngStream rng(search.seed, stream_id(StreamPurpose::defect_probe, 0));
    int len = std::max(2 * search.ball_radius + 2, 8);
    auto random_element = [&]() {
      if (a.is_free()) {
        std::vector<Sym> w;
        auto target = rng.next_below(static_cast<std::uint64_t>(len) + 1);
        for (std::uint64_t i = 0; i < target; ++i) {
          auto gen = static_cast<Sym>(rng.next_below(static_cast<std::uint64_t>(a.rank()))) + 1;
          w.push_back(rng.next_below(2) ? gen : -gen);
        }
        return reduce(a, w);
      }
      std::vector<Sym> e(static_cast<std::size_t>(a.rank()));
      for (auto& x : e)
        x = static_cast<Sym>(rng.next_below(static_cast<std::uint64_t>(2 * len) + 1)) - len;
      return GroupElement(AlphabetKind::free_abelian, std::move(e));
    };
    for (int i = 0; i < search.random_pairs; ++i) consider(random_element(), random_element());
  }

  phi.raise_defect_floor(probe.floor);
  return probe;
}

double require_defect_bound(const Quasimorphism& phi) {
  auto d = phi.defect_bound();
  if (!d)
    throw ConfigError("no defect bound declared for " + phi.description() +
                      "; set one in the quasimorphism spec");
  if (*d < phi.defect_floor())
    throw ConfigError("declared defect bound " + std::to_string(*d) + " for " +
                      phi.description() + " is below the certified floor " +
                      std::to_string(phi.defect_floor()));
  return *d;
}

}  // namespace qmwalk
