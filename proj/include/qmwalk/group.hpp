#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "qmwalk/errors.hpp"

namespace qmwalk {

enum class AlphabetKind { free_group, free_abelian };

// Generator alphabet for a finitely generated free group F_k or free
// abelian group Z^d. Generator names double as the token vocabulary of
// the element text syntax ("a b^-1 a", identity "e").
class Alphabet {
 public:
  Alphabet(AlphabetKind kind, std::vector<std::string> names);

  static Alphabet free_group(std::vector<std::string> names) {
    return Alphabet(AlphabetKind::free_group, std::move(names));
  }
  static Alphabet free_abelian(std::vector<std::string> names) {
    return Alphabet(AlphabetKind::free_abelian, std::move(names));
  }

  AlphabetKind kind() const { return kind_; }
  bool is_free() const { return kind_ == AlphabetKind::free_group; }
  int rank() const { return static_cast<int>(names_.size()); }
  const std::string& name(int i) const { return names_[static_cast<std::size_t>(i)]; }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const Alphabet& o) const { return kind_ == o.kind_ && names_ == o.names_; }
  bool operator!=(const Alphabet& o) const { return !(*this == o); }

  std::string describe() const;

 private:
  AlphabetKind kind_;
  std::vector<std::string> names_;
};

// A group element in canonical form: a freely reduced word of signed
// generator letters (free case) or an exponent vector (abelian case).
// Letters encode generator i as +(i+1) and its inverse as -(i+1).
// Canonical form makes equality, ordering and hashing structural.
class GroupElement {
 public:
  using Sym = std::int64_t;

  GroupElement() : kind_(AlphabetKind::free_group) {}
  GroupElement(AlphabetKind kind, std::vector<Sym> data)
      : kind_(kind), data_(std::move(data)) {}

  static GroupElement identity(const Alphabet& a) {
    if (a.is_free()) return GroupElement(AlphabetKind::free_group, {});
    return GroupElement(AlphabetKind::free_abelian,
                        std::vector<Sym>(static_cast<std::size_t>(a.rank()), 0));
  }
  static GroupElement generator(const Alphabet& a, int index, bool inverse = false);

  AlphabetKind kind() const { return kind_; }
  const std::vector<Sym>& data() const { return data_; }
  std::vector<Sym>& mutable_data() { return data_; }

  bool is_identity() const;

  // Word length: letter count for free words, L1 norm for exponent vectors.
  std::int64_t length() const;

  bool operator==(const GroupElement& o) const { return kind_ == o.kind_ && data_ == o.data_; }
  bool operator!=(const GroupElement& o) const { return !(*this == o); }

  // Total order: by word length, then lexicographic with a < a^-1 < b < ...
  // Used wherever deterministic iteration over elements is required.
  bool operator<(const GroupElement& o) const;

  std::uint64_t hash() const;

 private:
  AlphabetKind kind_;
  std::vector<Sym> data_;
};

struct GroupElementHash {
  std::size_t operator()(const GroupElement& g) const {
    return static_cast<std::size_t>(g.hash());
  }
};

// Validates that an element structurally belongs to the alphabet.
void check_element(const Alphabet& a, const GroupElement& g);

// Canonical freely reduced form of a raw letter sequence; idempotent.
GroupElement reduce(const Alphabet& a, const std::vector<GroupElement::Sym>& raw);

GroupElement multiply(const Alphabet& a, const GroupElement& g, const GroupElement& h);

// In-place right multiplication, the hot path of walk simulation.
void multiply_inplace(const Alphabet& a, GroupElement& acc, const GroupElement& inc);

GroupElement invert(const Alphabet& a, const GroupElement& g);

// g^n by repeated squaring on reduced words; n may be negative.
GroupElement power(const Alphabet& a, const GroupElement& g, std::int64_t n);

// True when the reduced word does not begin and end with inverse letters.
bool is_cyclically_reduced(const Alphabet& a, const GroupElement& g);

// All elements of word length <= radius, in canonical order, exactly once.
// Throws CapacityError if the ball would exceed `cap` elements.
std::vector<GroupElement> enumerate_ball(const Alphabet& a, int radius,
                                         std::size_t cap = 4'000'000);

std::int64_t ball_size(const Alphabet& a, int radius);

// Text syntax: whitespace-separated generator tokens, inverses as "a^-1",
// integer exponents as "a^5", identity "e".
GroupElement parse_element(const Alphabet& a, const std::string& text);
std::string format_element(const Alphabet& a, const GroupElement& g);

}  // namespace qmwalk
