#include "mfspec/sft.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

#include "mfspec/errors.hpp"

namespace mfspec {

namespace {

constexpr std::string_view kAlphabet =
    "0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_~";

std::vector<std::vector<bool>> reachability(const Sft::Matrix& m) {
  const std::size_t p = m.size();
  std::vector<std::vector<bool>> reach(p, std::vector<bool>(p, false));
  for (std::size_t start = 0; start < p; ++start) {
    std::deque<std::size_t> queue;
    for (std::size_t j = 0; j < p; ++j) {
      if (m[start][j] != 0 && !reach[start][j]) {
        reach[start][j] = true;
        queue.push_back(j);
      }
    }
    while (!queue.empty()) {
      const std::size_t u = queue.front();
      queue.pop_front();
      for (std::size_t j = 0; j < p; ++j) {
        if (m[u][j] != 0 && !reach[start][j]) {
          reach[start][j] = true;
          queue.push_back(j);
        }
      }
    }
  }
  return reach;
}

int graph_period(const Sft::Matrix& m) {
  const std::size_t p = m.size();
  std::vector<long> level(p, -1);
  level[0] = 0;
  std::deque<std::size_t> queue{0};
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t v = 0; v < p; ++v) {
      if (m[u][v] != 0 && level[v] < 0) {
        level[v] = level[u] + 1;
        queue.push_back(v);
      }
    }
  }
  long g = 0;
  for (std::size_t u = 0; u < p; ++u) {
    for (std::size_t v = 0; v < p; ++v) {
      if (m[u][v] != 0) g = std::gcd(g, std::labs(level[u] + 1 - level[v]));
    }
  }
  return static_cast<int>(g);
}

bool is_lyndon(const Word& w) {
  const std::size_t n = w.size();
  for (std::size_t r = 1; r < n; ++r) {
    for (std::size_t k = 0; k < n; ++k) {
      const Symbol a = w[k];
      const Symbol b = w[(k + r) % n];
      if (a < b) break;
      if (a > b || k + 1 == n) return false;  // rotation smaller, or equal (not primitive)
    }
  }
  return true;
}

}  // namespace

std::string_view symbol_alphabet() { return kAlphabet; }

std::string word_to_string(const Word& word) {
  std::string out;
  out.reserve(word.size());
  for (Symbol s : word) out.push_back(kAlphabet.at(s));
  return out;
}

Word word_from_string(std::string_view text) {
  Word out;
  out.reserve(text.size());
  for (char c : text) {
    const auto pos = kAlphabet.find(c);
    if (pos == std::string_view::npos) {
      throw InvalidArgument(std::string("unknown symbol character '") + c + "'");
    }
    out.push_back(static_cast<Symbol>(pos));
  }
  return out;
}

bool Sft::admissible(const Word& word) const {
  for (Symbol s : word) {
    if (s >= alphabet_size()) return false;
  }
  for (std::size_t k = 0; k + 1 < word.size(); ++k) {
    if (!allowed(word[k], word[k + 1])) return false;
  }
  return true;
}

bool Sft::cyclically_admissible(const Word& word) const {
  return !word.empty() && admissible(word) && allowed(word.back(), word.front());
}

Sft validate(const Sft::Matrix& matrix) {
  const std::size_t p = matrix.size();
  if (p < 2) throw InvalidArgument("alphabet size must be at least 2");
  if (p > kMaxAlphabet) throw InvalidArgument("alphabet size exceeds 64");
  for (const auto& row : matrix) {
    if (row.size() != p) throw InvalidArgument("transition matrix must be square");
    for (int e : row) {
      if (e != 0 && e != 1) throw InvalidArgument("transition entries must be 0 or 1");
    }
  }
  for (std::size_t i = 0; i < p; ++i) {
    bool row_hit = false;
    bool col_hit = false;
    for (std::size_t j = 0; j < p; ++j) {
      row_hit = row_hit || matrix[i][j] != 0;
      col_hit = col_hit || matrix[j][i] != 0;
    }
    if (!row_hit || !col_hit) throw EmptyRowOrColumn(i);
  }
  const auto reach = reachability(matrix);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      if (!reach[i][j]) throw ReducibleMatrix(i, j);
    }
  }
  return Sft(matrix, graph_period(matrix));
}

Sft full_shift(std::size_t p) { return validate(Sft::Matrix(p, std::vector<int>(p, 1))); }

Sft golden_mean_shift() { return validate({{1, 1}, {1, 0}}); }

std::vector<Word> cylinders(const Sft& sft, std::size_t depth) {
  if (depth == 0) throw InvalidArgument("cylinder depth must be positive");
  if (depth > kMaxDepth) throw InvalidArgument("cylinder depth exceeds 16");
  std::vector<Word> out;
  Word current;
  current.reserve(depth);
  const std::size_t p = sft.alphabet_size();
  // DFS in symbol order yields lexicographic order.
  auto extend = [&](auto&& self) -> void {
    if (current.size() == depth) {
      if (out.size() >= kMaxEnumeration) throw InvalidArgument("cylinder enumeration too large");
      out.push_back(current);
      return;
    }
    for (std::size_t s = 0; s < p; ++s) {
      if (!current.empty() && !sft.allowed(current.back(), static_cast<Symbol>(s))) continue;
      current.push_back(static_cast<Symbol>(s));
      self(self);
      current.pop_back();
    }
  };
  extend(extend);
  return out;
}

std::vector<PeriodicOrbit> periodic_orbits(const Sft& sft, std::size_t max_period) {
  if (max_period == 0) throw InvalidArgument("max_period must be positive");
  std::vector<PeriodicOrbit> out;
  const std::size_t p = sft.alphabet_size();
  for (std::size_t n = 1; n <= max_period; ++n) {
    Word current;
    auto extend = [&](auto&& self) -> void {
      if (current.size() == n) {
        if (sft.allowed(current.back(), current.front()) && is_lyndon(current)) {
          if (out.size() >= kMaxEnumeration) throw InvalidArgument("orbit enumeration too large");
          out.push_back(PeriodicOrbit{current});
        }
        return;
      }
      for (std::size_t s = 0; s < p; ++s) {
        const auto sym = static_cast<Symbol>(s);
        // A Lyndon word starts with its least symbol.
        if (!current.empty() && (sym < current.front() || !sft.allowed(current.back(), sym))) {
          continue;
        }
        current.push_back(sym);
        self(self);
        current.pop_back();
      }
    };
    extend(extend);
  }
  return out;
}

CylinderIndex::CylinderIndex(const Sft& sft, const std::vector<Word>& words)
    : length_(words.empty() ? 0 : words.front().size()),
      size_(words.size()),
      alphabet_(sft.alphabet_size()) {
  while ((std::size_t{1} << bits_) < alphabet_) ++bits_;
  packed_ = bits_ * length_ <= 64;
  const bool dense = bits_ * length_ <= 22;
  if (dense) dense_.assign(std::size_t{1} << (bits_ * length_), npos);
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].size() != length_) throw InvalidArgument("CylinderIndex: mixed word lengths");
    if (dense) {
      dense_[code(words[i].data())] = i;
    } else if (packed_) {
      sparse_.emplace(code(words[i].data()), i);
    } else {
      fallback_.emplace(words[i], i);
    }
  }
}

std::uint64_t CylinderIndex::code(const Symbol* first) const {
  std::uint64_t c = 0;
  for (std::size_t k = 0; k < length_; ++k) c = (c << bits_) | first[k];
  return c;
}

std::size_t CylinderIndex::find(const Symbol* first) const {
  for (std::size_t k = 0; k < length_; ++k) {
    if (first[k] >= alphabet_) return npos;
  }
  if (!dense_.empty()) return dense_[code(first)];
  if (packed_) {
    const auto it = sparse_.find(code(first));
    return it == sparse_.end() ? npos : it->second;
  }
  const auto it = fallback_.find(Word(first, first + length_));
  return it == fallback_.end() ? npos : it->second;
}

Word connector(const Sft& sft, Symbol a, Symbol b) {
  const std::size_t p = sft.alphabet_size();
  if (a >= p || b >= p) throw InvalidArgument("connector symbol out of range");
  if (sft.allowed(a, b)) return {};
  // BFS from a over intermediate symbols until one can step to b.
  std::vector<int> parent(p, -1);
  std::vector<bool> seen(p, false);
  std::deque<Symbol> queue;
  for (std::size_t s = 0; s < p; ++s) {
    if (sft.allowed(a, static_cast<Symbol>(s))) {
      seen[s] = true;
      queue.push_back(static_cast<Symbol>(s));
    }
  }
  while (!queue.empty()) {
    const Symbol u = queue.front();
    queue.pop_front();
    if (sft.allowed(u, b)) {
      Word path;
      for (int cur = u; cur >= 0; cur = parent[cur]) path.push_back(static_cast<Symbol>(cur));
      std::reverse(path.begin(), path.end());
      return path;
    }
    for (std::size_t s = 0; s < p; ++s) {
      if (!seen[s] && sft.allowed(u, static_cast<Symbol>(s))) {
        seen[s] = true;
        parent[s] = u;
        queue.push_back(static_cast<Symbol>(s));
      }
    }
  }
  throw ReducibleMatrix(a, b);
}

}  // namespace mfspec
