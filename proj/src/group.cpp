#include "qmwalk/group.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace qmwalk {

namespace {

using Sym = GroupElement::Sym;

// Ordering rank of a free-group letter: a < a^-1 < b < b^-1 < ...
inline std::int64_t letter_rank(Sym s) {
  return s > 0 ? 2 * (s - 1) : 2 * (-s - 1) + 1;
}

inline void push_reduced(std::vector<Sym>& word, Sym s) {
  if (!word.empty() && word.back() == -s) {
    word.pop_back();
  } else {
    word.push_back(s);
  }
}

}  // namespace

Alphabet::Alphabet(AlphabetKind kind, std::vector<std::string> names)
    : kind_(kind), names_(std::move(names)) {
  if (names_.empty()) throw ConfigError("alphabet rank must be >= 1");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty() || names_[i] == "e")
      throw ConfigError("invalid generator name '" + names_[i] + "'");
    for (std::size_t j = i + 1; j < names_.size(); ++j) {
      if (names_[i] == names_[j])
        throw ConfigError("duplicate generator name '" + names_[i] + "'");
    }
  }
}

std::string Alphabet::describe() const {
  std::ostringstream os;
  os << (is_free() ? "free(" : "free-abelian(") << rank() << ": ";
  for (int i = 0; i < rank(); ++i) os << (i ? " " : "") << names_[static_cast<std::size_t>(i)];
  os << ")";
  return os.str();
}

GroupElement GroupElement::generator(const Alphabet& a, int index, bool inverse) {
  if (index < 0 || index >= a.rank())
    throw AlphabetMismatchError("generator index out of range");
  if (a.is_free()) {
    Sym s = static_cast<Sym>(index + 1);
    return GroupElement(AlphabetKind::free_group, {inverse ? -s : s});
  }
  std::vector<Sym> e(static_cast<std::size_t>(a.rank()), 0);
  e[static_cast<std::size_t>(index)] = inverse ? -1 : 1;
  return GroupElement(AlphabetKind::free_abelian, std::move(e));
}

bool GroupElement::is_identity() const {
  if (kind_ == AlphabetKind::free_group) return data_.empty();
  return std::all_of(data_.begin(), data_.end(), [](Sym s) { return s == 0; });
}

std::int64_t GroupElement::length() const {
  if (kind_ == AlphabetKind::free_group) return static_cast<std::int64_t>(data_.size());
  std::int64_t l = 0;
  for (Sym s : data_) l += std::llabs(s);
  return l;
}

bool GroupElement::operator<(const GroupElement& o) const {
  std::int64_t la = length(), lb = o.length();
  if (la != lb) return la < lb;
  if (kind_ == AlphabetKind::free_group) {
    std::size_t n = std::min(data_.size(), o.data_.size());
    for (std::size_t i = 0; i < n; ++i) {
      std::int64_t ra = letter_rank(data_[i]), rb = letter_rank(o.data_[i]);
      if (ra != rb) return ra < rb;
    }
    return data_.size() < o.data_.size();
  }
  return data_ < o.data_;
}

std::uint64_t GroupElement::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ull;
  };
  mix(kind_ == AlphabetKind::free_group ? 1u : 2u);
  mix(static_cast<std::uint64_t>(data_.size()));
  for (Sym s : data_) mix(static_cast<std::uint64_t>(s));
  return h;
}

void check_element(const Alphabet& a, const GroupElement& g) {
  if (a.is_free()) {
    if (g.kind() != AlphabetKind::free_group)
      throw AlphabetMismatchError("abelian element used with free alphabet");
    for (Sym s : g.data()) {
      if (s == 0 || std::llabs(s) > a.rank())
        throw AlphabetMismatchError("letter out of range for alphabet " + a.describe());
    }
  } else {
    if (g.kind() != AlphabetKind::free_abelian)
      throw AlphabetMismatchError("free-group element used with abelian alphabet");
    if (g.data().size() != static_cast<std::size_t>(a.rank()))
      throw AlphabetMismatchError("exponent vector rank mismatch for " + a.describe());
  }
}

GroupElement reduce(const Alphabet& a, const std::vector<Sym>& raw) {
  if (!a.is_free()) {
    if (raw.size() != static_cast<std::size_t>(a.rank()))
      throw AlphabetMismatchError("exponent vector rank mismatch");
    return GroupElement(AlphabetKind::free_abelian, raw);
  }
  std::vector<Sym> word;
  word.reserve(raw.size());
  for (Sym s : raw) {
    if (s == 0 || std::llabs(s) > a.rank())
      throw AlphabetMismatchError("letter out of range for alphabet " + a.describe());
    push_reduced(word, s);
  }
  return GroupElement(AlphabetKind::free_group, std::move(word));
}

GroupElement multiply(const Alphabet& a, const GroupElement& g, const GroupElement& h) {
  check_element(a, g);
  check_element(a, h);
  GroupElement out = g;
  multiply_inplace(a, out, h);
  return out;
}

void multiply_inplace(const Alphabet& a, GroupElement& acc, const GroupElement& inc) {
  if (a.is_free()) {
    auto& word = acc.mutable_data();
    for (Sym s : inc.data()) push_reduced(word, s);
  } else {
    auto& e = acc.mutable_data();
    const auto& f = inc.data();
    for (std::size_t i = 0; i < e.size(); ++i) e[i] += f[i];
  }
}

GroupElement invert(const Alphabet& a, const GroupElement& g) {
  check_element(a, g);
  if (a.is_free()) {
    std::vector<Sym> w(g.data().rbegin(), g.data().rend());
    for (Sym& s : w) s = -s;
    return GroupElement(AlphabetKind::free_group, std::move(w));
  }
  std::vector<Sym> e = g.data();
  for (Sym& s : e) s = -s;
  return GroupElement(AlphabetKind::free_abelian, std::move(e));
}

GroupElement power(const Alphabet& a, const GroupElement& g, std::int64_t n) {
  check_element(a, g);
  if (n < 0) return invert(a, power(a, g, -n));
  GroupElement acc = GroupElement::identity(a);
  GroupElement base = g;
  while (n > 0) {
    if (n & 1) multiply_inplace(a, acc, base);
    n >>= 1;
    if (n > 0) {
      GroupElement sq = base;
      multiply_inplace(a, sq, base);
      base = std::move(sq);
    }
  }
  return acc;
}

bool is_cyclically_reduced(const Alphabet& a, const GroupElement& g) {
  check_element(a, g);
  if (!a.is_free()) return true;
  const auto& w = g.data();
  if (w.size() <= 1) return true;
  return w.front() != -w.back();
}

std::int64_t ball_size(const Alphabet& a, int radius) {
  if (radius < 0) throw ConfigError("ball radius must be >= 0");
  if (a.is_free()) {
    // 1 + 2k * ((2k-1)^r - 1) / (2k - 2), with the k = 1 special case.
    std::int64_t k = a.rank();
    std::int64_t total = 1;
    std::int64_t layer = 2 * k;
    for (int r = 1; r <= radius; ++r) {
      total += layer;
      layer *= (2 * k - 1);
      if (total < 0 || layer < 0) throw CapacityError("ball size overflows");
    }
    return total;
  }
  // Lattice points with L1 norm <= radius in Z^d.
  int d = a.rank();
  std::vector<std::int64_t> cur(static_cast<std::size_t>(radius) + 1, 1);  // d = 0 row: only origin
  for (int dim = 1; dim <= d; ++dim) {
    std::vector<std::int64_t> next(static_cast<std::size_t>(radius) + 1, 0);
    for (int r = 0; r <= radius; ++r) {
      std::int64_t sum = 0;
      for (int u = -r; u <= r; ++u) sum += cur[static_cast<std::size_t>(r - std::abs(u))];
      next[static_cast<std::size_t>(r)] = sum;
    }
    cur = std::move(next);
  }
  return cur[static_cast<std::size_t>(radius)];
}

std::vector<GroupElement> enumerate_ball(const Alphabet& a, int radius, std::size_t cap) {
  if (radius < 0) throw ConfigError("ball radius must be >= 0");
  std::int64_t predicted = ball_size(a, radius);
  if (predicted > static_cast<std::int64_t>(cap))
    throw CapacityError("ball of radius " + std::to_string(radius) + " has " +
                        std::to_string(predicted) + " elements, above cap " +
                        std::to_string(cap));
  std::vector<GroupElement> out;
  out.reserve(static_cast<std::size_t>(predicted));
  if (a.is_free()) {
    std::int64_t k = a.rank();
    out.push_back(GroupElement::identity(a));
    std::size_t layer_begin = 0, layer_end = 1;
    for (int r = 1; r <= radius; ++r) {
      std::size_t next_begin = out.size();
      for (std::size_t i = layer_begin; i < layer_end; ++i) {
        std::vector<Sym> w = out[i].data();
        Sym last = w.empty() ? 0 : w.back();
        w.push_back(0);
        for (std::int64_t gen = 1; gen <= k; ++gen) {
          for (Sym s : {gen, -gen}) {
            if (s == -last) continue;
            w.back() = s;
            out.emplace_back(AlphabetKind::free_group, w);
          }
        }
      }
      layer_begin = next_begin;
      layer_end = out.size();
    }
  } else {
    int d = a.rank();
    std::vector<Sym> e(static_cast<std::size_t>(d), 0);
    // Depth-first over coordinates with remaining L1 budget.
    auto rec = [&](auto&& self, int dim, std::int64_t budget) -> void {
      if (dim == d) {
        out.emplace_back(AlphabetKind::free_abelian, e);
        return;
      }
      for (std::int64_t v = -budget; v <= budget; ++v) {
        e[static_cast<std::size_t>(dim)] = v;
        self(self, dim + 1, budget - std::llabs(v));
      }
      e[static_cast<std::size_t>(dim)] = 0;
    };
    rec(rec, 0, radius);
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// Token forms: "a", "a^-1", "a^5", "a^-3", "e".
void apply_token(const Alphabet& a, const std::string& tok, std::vector<Sym>& raw,
                 std::vector<Sym>& exps) {
  if (tok == "e") return;
  std::string base = tok;
  std::int64_t exp = 1;
  auto caret = tok.find('^');
  if (caret != std::string::npos) {
    base = tok.substr(0, caret);
    try {
      exp = std::stoll(tok.substr(caret + 1));
    } catch (const std::exception&) {
      throw AlphabetMismatchError("bad exponent in token '" + tok + "'");
    }
  }
  int index = -1;
  for (int i = 0; i < a.rank(); ++i) {
    if (a.name(i) == base) { index = i; break; }
  }
  if (index < 0)
    throw AlphabetMismatchError("unknown symbol '" + base + "' for alphabet " + a.describe());
  if (a.is_free()) {
    Sym s = exp >= 0 ? static_cast<Sym>(index + 1) : -static_cast<Sym>(index + 1);
    std::int64_t reps = exp >= 0 ? exp : -exp;
    if (reps > 1'000'000) throw CapacityError("token exponent too large to expand");
    for (std::int64_t i = 0; i < reps; ++i) raw.push_back(s);
  } else {
    exps[static_cast<std::size_t>(index)] += exp;
  }
}

}  // namespace

GroupElement parse_element(const Alphabet& a, const std::string& text) {
  std::vector<Sym> raw;
  std::vector<Sym> exps(a.is_free() ? 0 : static_cast<std::size_t>(a.rank()), 0);
  std::istringstream is(text);
  std::string tok;
  bool any = false;
  while (is >> tok) {
    any = true;
    apply_token(a, tok, raw, exps);
  }
  if (!any) throw AlphabetMismatchError("empty element text; identity is spelled 'e'");
  if (a.is_free()) return reduce(a, raw);
  return GroupElement(AlphabetKind::free_abelian, std::move(exps));
}

std::string format_element(const Alphabet& a, const GroupElement& g) {
  check_element(a, g);
  if (g.is_identity()) return "e";
  std::ostringstream os;
  bool first = true;
  if (a.is_free()) {
    for (Sym s : g.data()) {
      if (!first) os << ' ';
      first = false;
      os << a.name(static_cast<int>(std::llabs(s)) - 1);
      if (s < 0) os << "^-1";
    }
  } else {
    for (int i = 0; i < a.rank(); ++i) {
      Sym v = g.data()[static_cast<std::size_t>(i)];
      if (v == 0) continue;
      if (!first) os << ' ';
      first = false;
      os << a.name(i);
      if (v != 1) os << '^' << v;
    }
  }
  return os.str();
}

}  // namespace qmwalk
