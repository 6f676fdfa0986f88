#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace mfspec {

using Symbol = std::uint8_t;
using Word = std::vector<Symbol>;

inline constexpr std::size_t kMaxAlphabet = 64;
inline constexpr std::size_t kMaxDepth = 16;
/// Upper bound on the number of words any single enumeration may produce.
inline constexpr std::size_t kMaxEnumeration = std::size_t{1} << 24;

/// Characters used to print symbols 0..63 in words ("0".."9", "a".."z", "A".."Z", "_", "~").
std::string_view symbol_alphabet();
std::string word_to_string(const Word& word);
/// Parses a symbol string; throws InvalidArgument on unknown characters.
Word word_from_string(std::string_view text);

/// One-sided subshift of finite type given by a 0/1 transition matrix.
///
/// Construction goes through validate(), so every instance is irreducible
/// with no empty rows or columns.
class Sft {
 public:
  using Matrix = std::vector<std::vector<int>>;

  std::size_t alphabet_size() const { return transitions_.size(); }
  const Matrix& transitions() const { return transitions_; }
  bool allowed(Symbol a, Symbol b) const { return transitions_[a][b] != 0; }
  /// Gcd of the cycle lengths of the transition graph; 1 means aperiodic.
  int period() const { return period_; }
  bool aperiodic() const { return period_ == 1; }

  bool admissible(const Word& word) const;
  /// Admissible and the closing transition last -> first is allowed.
  bool cyclically_admissible(const Word& word) const;

  friend Sft validate(const Matrix& matrix);

 private:
  Sft(Matrix transitions, int period) : transitions_(std::move(transitions)), period_(period) {}
  Matrix transitions_;
  int period_;
};

/// Checks shape, 0/1 entries, empty rows/columns and irreducibility.
Sft validate(const Sft::Matrix& matrix);

Sft full_shift(std::size_t p);
Sft golden_mean_shift();

/// All admissible words of length `depth` in lexicographic order.
std::vector<Word> cylinders(const Sft& sft, std::size_t depth);

struct PeriodicOrbit {
  Word word;  // lexicographically least rotation, primitive
  std::size_t period() const { return word.size(); }
  friend bool operator==(const PeriodicOrbit&, const PeriodicOrbit&) = default;
};

/// Every primitive, cyclically admissible necklace of period <= max_period,
/// ordered by period and then lexicographically.
std::vector<PeriodicOrbit> periodic_orbits(const Sft& sft, std::size_t max_period);

/// Maps the admissible words of one fixed length to their position in
/// cylinders(sft, length). Lookups take a pointer to `length` symbols.
class CylinderIndex {
 public:
  CylinderIndex() = default;
  CylinderIndex(const Sft& sft, const std::vector<Word>& words);

  std::size_t length() const { return length_; }
  std::size_t size() const { return size_; }
  /// Index of the word starting at `first`, or npos when it is not indexed.
  std::size_t find(const Symbol* first) const;
  std::size_t find(const Word& word) const {
    return word.size() < length_ ? npos : find(word.data());
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  std::uint64_t code(const Symbol* first) const;

  std::size_t length_ = 0;
  std::size_t size_ = 0;
  unsigned bits_ = 0;
  std::size_t alphabet_ = 0;
  bool packed_ = false;
  std::vector<std::size_t> dense_;
  std::unordered_map<std::uint64_t, std::size_t> sparse_;
  std::map<Word, std::size_t> fallback_;
};

/// Shortest word u with a·u·b admissible (empty when a -> b is allowed).
Word connector(const Sft& sft, Symbol a, Symbol b);

}  // namespace mfspec
