#pragma once

// Word embedding table IO, the protected-direction subspace computed from
// definitional word pairs, and analogy loading/completion.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "debias/examples.hpp"
#include "debias/models.hpp"
#include "debias/numerics.hpp"

namespace debias {

struct EmbeddingTable {
  std::vector<std::string> words;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<DenseVector> vectors;
  std::size_t dim = 0;

  std::size_t size() const { return words.size(); }

  bool contains(const std::string& word) const {
    return index.find(word) != index.end();
  }

  const DenseVector& vec(const std::string& word) const {
    const auto it = index.find(word);
    if (it == index.end()) {
      throw std::invalid_argument("embedding: unknown word '" + word + "'");
    }
    return vectors[it->second];
  }

  void add(std::string word, DenseVector v) {
    if (contains(word)) {
      throw std::invalid_argument("embedding: duplicate word '" + word + "'");
    }
    if (words.empty()) {
      dim = v.size();
    } else {
      check_same_dim(v.size(), dim, "EmbeddingTable::add");
    }
    index.emplace(word, words.size());
    words.push_back(std::move(word));
    vectors.push_back(std::move(v));
  }
};

namespace detail {

inline std::vector<std::string> whitespace_tokens(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  std::string token;
  while (ss >> token) tokens.push_back(std::move(token));
  return tokens;
}

inline bool is_nonneg_integer(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

inline double parse_embedding_value(const std::string& s,
                                    std::size_t line_no) {
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) {
    throw std::invalid_argument("embedding: bad value '" + s + "' at line " +
                                std::to_string(line_no));
  }
  return value;
}

}  // namespace detail

// Text format: one word plus its components per line, optionally preceded by
// a "count dim" header. Duplicate words keep their first vector; max_vocab of
// zero loads everything.
inline EmbeddingTable load_embeddings(const std::string& path,
                                      std::size_t max_vocab = 0,
                                      std::ostream* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("embedding: cannot open " + path);
  }
  EmbeddingTable table;
  std::string line;
  std::size_t line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = detail::whitespace_tokens(line);
    if (tokens.empty()) continue;
    if (first_content_line) {
      first_content_line = false;
      if (tokens.size() == 2 && detail::is_nonneg_integer(tokens[0]) &&
          detail::is_nonneg_integer(tokens[1])) {
        continue;  // count/dim header
      }
    }
    if (max_vocab > 0 && table.size() >= max_vocab) break;
    if (tokens.size() < 2) {
      throw std::invalid_argument("embedding: no components at line " +
                                  std::to_string(line_no));
    }
    if (table.dim > 0 && tokens.size() - 1 != table.dim) {
      throw std::invalid_argument(
          "embedding: expected " + std::to_string(table.dim) +
          " components, got " + std::to_string(tokens.size() - 1) +
          " at line " + std::to_string(line_no));
    }
    if (table.contains(tokens[0])) {
      if (warnings != nullptr) {
        *warnings << "duplicate word '" << tokens[0] << "' at line "
                  << line_no << " ignored\n";
      }
      continue;
    }
    DenseVector v(tokens.size() - 1);
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      v[i - 1] = detail::parse_embedding_value(tokens[i], line_no);
    }
    table.add(tokens[0], std::move(v));
  }
  return table;
}

inline void save_embeddings(const EmbeddingTable& table,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) {
    throw std::invalid_argument("embedding: cannot write " + path);
  }
  out << std::setprecision(17);
  for (std::size_t i = 0; i < table.size(); ++i) {
    out << table.words[i];
    for (double v : table.vectors[i]) out << ' ' << v;
    out << '\n';
  }
}

// (male, female) definitional pairs.
inline std::vector<std::pair<std::string, std::string>>
default_gender_pairs() {
  return {{"he", "she"},        {"his", "her"},
          {"man", "woman"},     {"himself", "herself"},
          {"son", "daughter"},  {"father", "mother"},
          {"guy", "gal"},       {"boy", "girl"},
          {"male", "female"},   {"John", "Mary"}};
}

inline std::vector<std::pair<std::string, std::string>> load_pairs(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("pairs: cannot open " + path);
  }
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = detail::whitespace_tokens(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 2) {
      throw std::invalid_argument("pairs: expected two words at line " +
                                  std::to_string(line_no));
    }
    pairs.emplace_back(tokens[0], tokens[1]);
  }
  return pairs;
}

struct BiasSubspace {
  DenseVector g;                       // primary protected direction
  int k = 1;
  std::vector<DenseVector> components;
  int pairs_used = 0;
  bool mean_fallback = false;
};

// Principal components of the female-minus-male difference vectors. When the
// differences are too degenerate for even one component, the normalized mean
// difference stands in. The primary direction is oriented so the first
// usable pair's difference projects positively.
inline BiasSubspace compute_bias_subspace(
    const EmbeddingTable& table,
    const std::vector<std::pair<std::string, std::string>>& pairs, int k = 1) {
  if (k < 1) {
    throw std::invalid_argument("compute_bias_subspace: k must be >= 1");
  }
  std::vector<DenseVector> diffs;
  for (const auto& [male, female] : pairs) {
    if (!table.contains(male) || !table.contains(female)) continue;
    DenseVector d = table.vec(female);
    axpy(-1.0, table.vec(male), d);
    diffs.push_back(std::move(d));
  }
  if (diffs.empty()) {
    throw std::invalid_argument(
        "compute_bias_subspace: no pair has both words in the vocabulary");
  }
  BiasSubspace sub;
  sub.k = k;
  sub.pairs_used = static_cast<int>(diffs.size());
  try {
    sub.components = top_principal_components(diffs, k);
  } catch (const RankError&) {
    if (k != 1) throw;
    DenseVector mean(table.dim, 0.0);
    for (const auto& d : diffs) {
      axpy(1.0 / static_cast<double>(diffs.size()), d, mean);
    }
    const double len = norm(mean);
    if (len < 1e-12) throw;
    for (auto& x : mean) x /= len;
    sub.components = {std::move(mean)};
    sub.mean_fallback = true;
  }
  sub.g = sub.components[0];
  if (dot(sub.g, diffs[0]) < 0.0) {
    for (auto& x : sub.g) x = -x;
    sub.components[0] = sub.g;
  }
  return sub;
}

inline double project_protected(const BiasSubspace& sub,
                                const DenseVector& v) {
  return dot(sub.g, v);
}

struct AnalogyItem {
  std::string a, b, c, d;
  std::string section;
};

struct AnalogySet {
  std::vector<AnalogyItem> items;
  std::int64_t dropped = 0;  // items with any word out of vocabulary
};

// Format: ": section" headers followed by four-word lines (a : b :: c : d).
inline AnalogySet load_analogies(const std::string& path,
                                 const EmbeddingTable& table) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("analogies: cannot open " + path);
  }
  AnalogySet set;
  std::string line, section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = detail::whitespace_tokens(line);
    if (tokens.empty()) continue;
    if (tokens[0] == ":") {
      section = tokens.size() > 1 ? tokens[1] : "";
      continue;
    }
    if (tokens.size() != 4) {
      throw std::invalid_argument("analogies: expected four words at line " +
                                  std::to_string(line_no));
    }
    if (!table.contains(tokens[0]) || !table.contains(tokens[1]) ||
        !table.contains(tokens[2]) || !table.contains(tokens[3])) {
      set.dropped += 1;
      continue;
    }
    set.items.push_back(
        {tokens[0], tokens[1], tokens[2], tokens[3], section});
  }
  return set;
}

struct Completion {
  std::string word;
  double similarity = 0.0;
};

// Completes a : b :: c : ? by cosine similarity over the whole vocabulary,
// excluding the three query words. A transform, when given, replaces the
// plain vector offset as the query.
inline std::vector<Completion> complete_analogy(
    const EmbeddingTable& table, const std::string& a, const std::string& b,
    const std::string& c, const AnalogyPredictor* transform = nullptr,
    int top_n = 1) {
  if (top_n < 1) {
    throw std::invalid_argument("complete_analogy: top_n must be >= 1");
  }
  DenseVector query;
  if (transform != nullptr) {
    query = analogy_forward(*transform, table.vec(a), table.vec(b),
                            table.vec(c));
  } else {
    query = table.vec(b);
    axpy(1.0, table.vec(c), query);
    axpy(-1.0, table.vec(a), query);
  }
  const double qnorm = norm(query);

  std::vector<Completion> scored;
  scored.reserve(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    const std::string& w = table.words[i];
    if (w == a || w == b || w == c) continue;
    const double wnorm = norm(table.vectors[i]);
    double sim = 0.0;
    if (qnorm > 1e-12 && wnorm > 1e-12) {
      sim = dot(query, table.vectors[i]) / (qnorm * wnorm);
    }
    scored.push_back({w, sim});
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const Completion& x, const Completion& y) {
                     return x.similarity > y.similarity;
                   });
  if (scored.size() > static_cast<std::size_t>(top_n)) {
    scored.resize(top_n);
  }
  return scored;
}

// Training view of analogy items: inputs, target embedding, and the target's
// protected projection.
inline std::vector<AnalogyExample> make_analogy_examples(
    const EmbeddingTable& table, const std::vector<AnalogyItem>& items,
    const BiasSubspace& sub) {
  std::vector<AnalogyExample> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    AnalogyExample e;
    e.x1 = table.vec(item.a);
    e.x2 = table.vec(item.b);
    e.x3 = table.vec(item.c);
    e.y = table.vec(item.d);
    e.z = project_protected(sub, e.y);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace debias
