#include "qmwalk/measure.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace qmwalk {

namespace {

void check_same_alphabet(const FiniteMeasure& a, const FiniteMeasure& b) {
  if (a.alphabet() != b.alphabet())
    throw AlphabetMismatchError("measures over different alphabets: " +
                                a.alphabet().describe() + " vs " + b.alphabet().describe());
}

}  // namespace

void FiniteMeasure::finalize_exact(std::vector<std::pair<GroupElement, Rational>> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  Rational mass(0, 1);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].first == entries[i - 1].first)
      throw ConfigError("duplicate support element in measure");
    if (entries[i].second.num() < 0) throw ConfigError("negative weight in measure");
    if (entries[i].second.is_zero()) continue;
    mass += entries[i].second;
    elems_.push_back(entries[i].first);
    rat_weights_.push_back(entries[i].second);
    weights_.push_back(entries[i].second.value());
  }
  if (elems_.empty()) throw ConfigError("measure has empty support");
  if (mass != Rational::integer(1))
    throw ConfigError("exact measure mass is " + mass.str() + ", expected 1");
}

void FiniteMeasure::finalize_floating(std::vector<std::pair<GroupElement, double>> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  double mass = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0 && entries[i].first == entries[i - 1].first)
      throw ConfigError("duplicate support element in measure");
    if (entries[i].second < 0) throw ConfigError("negative weight in measure");
    if (entries[i].second == 0) continue;
    mass += entries[i].second;
    elems_.push_back(entries[i].first);
    weights_.push_back(entries[i].second);
  }
  if (elems_.empty()) throw ConfigError("measure has empty support");
  if (std::abs(mass - 1.0) > kMassTolerance)
    throw ConfigError("floating measure mass deviates from 1 by " +
                      std::to_string(mass - 1.0));
}

FiniteMeasure FiniteMeasure::from_rational(
    const Alphabet& a, std::vector<std::pair<GroupElement, Rational>> entries) {
  for (auto& [g, w] : entries) check_element(a, g);
  FiniteMeasure m(a, WeightMode::exact_rational);
  m.finalize_exact(std::move(entries));
  return m;
}

FiniteMeasure FiniteMeasure::from_floating(
    const Alphabet& a, std::vector<std::pair<GroupElement, double>> entries) {
  for (auto& [g, w] : entries) check_element(a, g);
  FiniteMeasure m(a, WeightMode::floating);
  m.finalize_floating(std::move(entries));
  return m;
}

FiniteMeasure FiniteMeasure::dirac(const Alphabet& a, const GroupElement& g) {
  return from_rational(a, {{g, Rational::integer(1)}});
}

FiniteMeasure FiniteMeasure::uniform(const Alphabet& a,
                                     const std::vector<GroupElement>& support) {
  std::vector<std::pair<GroupElement, Rational>> entries;
  auto n = static_cast<std::int64_t>(support.size());
  for (const auto& g : support) entries.emplace_back(g, Rational(1, n));
  return from_rational(a, std::move(entries));
}

std::optional<std::size_t> FiniteMeasure::find(const GroupElement& g) const {
  auto it = std::lower_bound(elems_.begin(), elems_.end(), g);
  if (it != elems_.end() && *it == g)
    return static_cast<std::size_t>(it - elems_.begin());
  return std::nullopt;
}

double FiniteMeasure::mass_of(const GroupElement& g) const {
  auto i = find(g);
  return i ? weights_[*i] : 0.0;
}

std::int64_t FiniteMeasure::support_radius() const {
  std::int64_t r = 0;
  for (const auto& g : elems_) r = std::max(r, g.length());
  return r;
}

namespace {

template <typename W>
using Accum = std::unordered_map<GroupElement, W, GroupElementHash>;

}  // namespace

FiniteMeasure convolve(const FiniteMeasure& mu, const FiniteMeasure& nu) {
  check_same_alphabet(mu, nu);
  const Alphabet& a = mu.alphabet();
  bool exact = mu.exact() && nu.exact();
  if (exact) {
    Accum<Rational> acc;
    for (std::size_t i = 0; i < mu.size(); ++i) {
      for (std::size_t j = 0; j < nu.size(); ++j) {
        GroupElement g = multiply(a, mu.element(i), nu.element(j));
        auto [it, fresh] = acc.try_emplace(std::move(g), Rational(0, 1));
        it->second += mu.rational_weight(i) * nu.rational_weight(j);
      }
    }
    std::vector<std::pair<GroupElement, Rational>> entries(acc.begin(), acc.end());
    return FiniteMeasure::from_rational(a, std::move(entries));
  }
  Accum<double> acc;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    for (std::size_t j = 0; j < nu.size(); ++j) {
      GroupElement g = multiply(a, mu.element(i), nu.element(j));
      acc[std::move(g)] += mu.weight(i) * nu.weight(j);
    }
  }
  std::vector<std::pair<GroupElement, double>> entries(acc.begin(), acc.end());
  return FiniteMeasure::from_floating(a, std::move(entries));
}

namespace {

// Drop the lightest tail of total mass <= tau; keep order deterministic:
// weight descending, then canonical word order.
template <typename Weighted>
std::size_t truncation_cut(std::vector<Weighted>& entries, double tau,
                           const std::vector<double>& values) {
  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    if (values[x] != values[y]) return values[x] > values[y];
    return entries[x].first < entries[y].first;
  });
  double dropped = 0;
  std::size_t keep = order.size();
  while (keep > 1) {
    double next = dropped + values[order[keep - 1]];
    if (next > tau) break;
    dropped = next;
    --keep;
  }
  std::vector<Weighted> kept;
  kept.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) kept.push_back(std::move(entries[order[i]]));
  entries = std::move(kept);
  return order.size() - keep;
}

}  // namespace

ConvolvePower convolve_power(const FiniteMeasure& mu, int n, double tau,
                             std::size_t support_cap) {
  if (n < 0) throw ConfigError("convolution power requires n >= 0");
  if (tau < 0 || tau >= 1) throw ConfigError("truncation threshold must be in [0, 1)");
  const Alphabet& a = mu.alphabet();
  GroupElement e = GroupElement::identity(a);

  if (n == 0) return {FiniteMeasure::dirac(a, e), 1.0, 0};

  // Per-step truncation budget; total dropped mass stays <= tau.
  double step_tau = tau > 0 ? tau / n : 0.0;
  bool exact = mu.exact();

  FiniteMeasure acc = mu;
  double retained = 1.0;
  std::size_t dropped_total = 0;

  for (int step = 1; step < n; ++step) {
    FiniteMeasure conv = convolve(acc, mu);
    if (conv.size() > support_cap) {
      if (tau == 0)
        throw CapacityError("convolution power support exceeds cap " +
                            std::to_string(support_cap) +
                            "; rerun with a truncation threshold tau > 0");
      throw CapacityError("convolution power support exceeds cap even with truncation");
    }
    if (step_tau > 0) {
      if (exact) {
        std::vector<std::pair<GroupElement, Rational>> entries;
        entries.reserve(conv.size());
        for (std::size_t i = 0; i < conv.size(); ++i)
          entries.emplace_back(conv.element(i), conv.rational_weight(i));
        std::vector<double> values(conv.weights());
        dropped_total += truncation_cut(entries, step_tau, values);
        Rational mass(0, 1);
        for (auto& [g, w] : entries) mass += w;
        retained *= mass.value();
        for (auto& [g, w] : entries) w = w / mass;
        conv = FiniteMeasure::from_rational(a, std::move(entries));
      } else {
        std::vector<std::pair<GroupElement, double>> entries;
        entries.reserve(conv.size());
        for (std::size_t i = 0; i < conv.size(); ++i)
          entries.emplace_back(conv.element(i), conv.weight(i));
        std::vector<double> values(conv.weights());
        dropped_total += truncation_cut(entries, step_tau, values);
        double mass = 0;
        for (auto& [g, w] : entries) mass += w;
        retained *= mass;
        for (auto& [g, w] : entries) w /= mass;
        conv = FiniteMeasure::from_floating(a, std::move(entries));
      }
    }
    acc = std::move(conv);
  }
  return {std::move(acc), retained, dropped_total};
}

bool is_symmetric(const FiniteMeasure& mu) {
  const Alphabet& a = mu.alphabet();
  for (std::size_t i = 0; i < mu.size(); ++i) {
    GroupElement inv = invert(a, mu.element(i));
    auto j = mu.find(inv);
    if (!j) return false;
    if (mu.exact()) {
      if (mu.rational_weight(i) != mu.rational_weight(*j)) return false;
    } else if (std::abs(mu.weight(i) - mu.weight(*j)) > FiniteMeasure::kMassTolerance) {
      return false;
    }
  }
  return true;
}

FiniteMeasure symmetrize(const FiniteMeasure& mu) {
  const Alphabet& a = mu.alphabet();
  if (mu.exact()) {
    Accum<Rational> acc;
    Rational half(1, 2);
    for (std::size_t i = 0; i < mu.size(); ++i) {
      auto w = mu.rational_weight(i) * half;
      auto [it1, f1] = acc.try_emplace(mu.element(i), Rational(0, 1));
      it1->second += w;
      auto [it2, f2] = acc.try_emplace(invert(a, mu.element(i)), Rational(0, 1));
      it2->second += w;
    }
    std::vector<std::pair<GroupElement, Rational>> entries(acc.begin(), acc.end());
    return FiniteMeasure::from_rational(a, std::move(entries));
  }
  Accum<double> acc;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    acc[mu.element(i)] += 0.5 * mu.weight(i);
    acc[invert(a, mu.element(i))] += 0.5 * mu.weight(i);
  }
  std::vector<std::pair<GroupElement, double>> entries(acc.begin(), acc.end());
  return FiniteMeasure::from_floating(a, std::move(entries));
}

GroupElement sample(const FiniteMeasure& mu, RngStream& rng) {
  double u = rng.next_double();
  double cum = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    cum += mu.weight(i);
    if (u < cum) return mu.element(i);
  }
  return mu.element(mu.size() - 1);
}

MeasureSampler::MeasureSampler(const FiniteMeasure& mu) : mu_(&mu) {
  const std::size_t n = mu.size();
  prob_.assign(n, 0.0);
  alias_.assign(n, 0);
  std::vector<double> scaled(n);
  for (std::size_t i = 0; i < n; ++i) scaled[i] = mu.weight(i) * static_cast<double>(n);
  std::vector<std::uint32_t> small, large;
  for (std::size_t i = 0; i < n; ++i) {
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    std::uint32_t s = small.back();
    small.pop_back();
    std::uint32_t l = large.back();
    large.pop_back();
    prob_[s] = scaled[s];
    alias_[s] = l;
    scaled[l] = (scaled[l] + scaled[s]) - 1.0;
    (scaled[l] < 1.0 ? small : large).push_back(l);
  }
  for (std::uint32_t i : large) prob_[i] = 1.0;
  for (std::uint32_t i : small) prob_[i] = 1.0;  // numerical leftovers
}

const GroupElement& MeasureSampler::draw(RngStream& rng) const {
  std::size_t col = static_cast<std::size_t>(rng.next_below(mu_->size()));
  double u = rng.next_double();
  return u < prob_[col] ? mu_->element(col) : mu_->element(alias_[col]);
}

std::string GenerationVerdict::describe() const {
  if (yes) return "yes-by-radius(" + std::to_string(radius) + ")";
  return "unknown";
}

GenerationVerdict support_generates(const FiniteMeasure& mu, int horizon, std::size_t cap) {
  if (horizon < 1) throw ConfigError("generation horizon must be >= 1");
  const Alphabet& a = mu.alphabet();
  std::vector<GroupElement> frontier = {GroupElement::identity(a)};
  std::unordered_map<GroupElement, bool, GroupElementHash> reached;
  reached.emplace(GroupElement::identity(a), true);
  for (int step = 0; step < horizon; ++step) {
    std::vector<GroupElement> next;
    for (const auto& g : frontier) {
      for (std::size_t i = 0; i < mu.size(); ++i) {
        GroupElement p = multiply(a, g, mu.element(i));
        auto [it, fresh] = reached.try_emplace(p, true);
        if (fresh) {
          if (reached.size() > cap)
            throw CapacityError("generation closure exceeds cap");
          next.push_back(std::move(p));
        }
      }
    }
    frontier = std::move(next);
    if (frontier.empty()) break;
  }
  int covered = 0;
  for (int r = 1;; ++r) {
    std::vector<GroupElement> ball;
    try {
      ball = enumerate_ball(a, r, cap);
    } catch (const CapacityError&) {
      break;
    }
    bool all = std::all_of(ball.begin(), ball.end(),
                           [&](const GroupElement& g) { return reached.contains(g); });
    if (!all) break;
    covered = r;
  }
  if (covered >= 1) {
    mu.set_generation_witness(covered);
    return {true, covered};
  }
  return {false, 0};
}

}  // namespace qmwalk
