#pragma once

// Synthetic embedding corpus with a planted gender direction on coordinate 0.
// Definitional pair words differ only along that axis; occupation probe
// words carry a deliberate load on it; analogy families (role-a/role-b word
// pairs across instances) supply training quads whose targets are gender
// loaded for half the families, with signs balanced so no instance or family
// axis leaks the load.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "debias/embedding.hpp"
#include "debias/numerics.hpp"

namespace debias {

struct SynthConfig {
  std::uint64_t seed = 1;
  std::size_t dim = 24;
  int families = 8;    // first half neutral, second half gender loaded
  int instances = 6;   // word pairs per family
  double noise = 0.05;
  double gender_load = 0.5;
};

struct BiasedProbe {
  std::string a, b, c;
  std::string raw_top;       // expected completion before debiasing
  std::string debiased_top;  // expected completion after debiasing
};

struct SynthCorpus {
  EmbeddingTable table;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::vector<AnalogyItem> train_items;
  std::vector<AnalogyItem> neutral_probes;
  std::vector<BiasedProbe> biased_probes;
};

inline SynthCorpus make_synth_corpus(const SynthConfig& cfg = {}) {
  if (cfg.dim < 24 || cfg.families < 2 || cfg.families % 2 != 0 ||
      cfg.families > 8 || cfg.instances < 2 || cfg.instances > 6 ||
      cfg.noise < 0.0) {
    throw std::invalid_argument("make_synth_corpus: bad config");
  }
  SeededRng rng(cfg.seed);
  SynthCorpus corpus;
  corpus.pairs = default_gender_pairs();

  // Coordinate layout: 0 gender; 1-2 pair anchors; 3-4 and 5-6 probe
  // planes; 7+ family axes; 15+ instance axes; 21 role-b offset.
  const auto basis = [&](std::size_t axis, double scale) {
    DenseVector v(cfg.dim, 0.0);
    v[axis] = scale;
    return v;
  };

  // Pair words: shared anchor in the 1-2 plane plus an exactly opposite
  // gender offset, noiseless so the pair differences are pure.
  for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
    const double theta = 0.31 * static_cast<double>(i);
    const double gamma =
        i == 0 ? 0.2 : 0.35 + 0.3 * static_cast<double>(i - 1) / 8.0;
    DenseVector male(cfg.dim, 0.0), female(cfg.dim, 0.0);
    male[1] = female[1] = 1.5 * std::cos(theta);
    male[2] = female[2] = 1.5 * std::sin(theta);
    male[0] = -gamma;
    female[0] = gamma;
    corpus.table.add(corpus.pairs[i].first, std::move(male));
    corpus.table.add(corpus.pairs[i].second, std::move(female));
  }

  // Occupation probes, also noiseless: one gender-loaded word and one
  // gender-neutral near-synonym per plane.
  const auto add_probe_plane = [&](const std::string& neutral,
                                   const std::string& loaded,
                                   const std::string& synonym,
                                   std::size_t axis) {
    corpus.table.add(neutral, basis(axis, 3.0));
    DenseVector l = basis(axis, 3.0);
    l[0] = 0.8;
    corpus.table.add(loaded, std::move(l));
    DenseVector s = basis(axis, 3.0 * 0.995);
    s[axis + 1] = 3.0 * 0.0999;
    corpus.table.add(synonym, std::move(s));
  };
  add_probe_plane("doctor", "nurse", "physician", 3);
  add_probe_plane("programmer", "homemaker", "developer", 5);
  corpus.biased_probes = {{"he", "she", "doctor", "nurse", "physician"},
                          {"he", "she", "programmer", "homemaker",
                           "developer"}};

  // Family words: family axis + instance axis + role offset + gender load +
  // isotropic noise. Loads are per instance, shared by both roles, and sign
  // balanced within each loaded family.
  const auto word_name = [](int f, int j, int role) {
    return "w" + std::to_string(f) + "_" + std::to_string(j) +
           (role == 0 ? "a" : "b");
  };
  for (int f = 0; f < cfg.families; ++f) {
    const bool loaded_family = f >= cfg.families / 2;
    const int bf = f - cfg.families / 2;
    for (int j = 0; j < cfg.instances; ++j) {
      double load = 0.0;
      if (loaded_family) {
        load = (j + bf) % 2 == 0 ? cfg.gender_load : -cfg.gender_load;
      }
      for (int role = 0; role < 2; ++role) {
        DenseVector v(cfg.dim, 0.0);
        v[7 + f] = 2.0;
        v[15 + j] = 1.0;
        if (role == 1) v[21] = 1.2;
        v[0] += load;
        for (auto& x : v) x += sample_normal(rng, 0.0, cfg.noise);
        corpus.table.add(word_name(f, j, role), std::move(v));
      }
    }
  }

  for (int f = 0; f < cfg.families; ++f) {
    const std::string section = "family" + std::to_string(f);
    for (int j = 0; j < cfg.instances; ++j) {
      for (int j2 = 0; j2 < cfg.instances; ++j2) {
        if (j2 == j) continue;
        corpus.train_items.push_back({word_name(f, j, 0), word_name(f, j, 1),
                                      word_name(f, j2, 0),
                                      word_name(f, j2, 1), section});
      }
    }
  }
  for (int f = 0; f < cfg.families / 2; ++f) {
    corpus.neutral_probes.push_back({word_name(f, 0, 0), word_name(f, 0, 1),
                                     word_name(f, 1, 0), word_name(f, 1, 1),
                                     "neutral"});
    if (cfg.instances >= 4) {
      corpus.neutral_probes.push_back({word_name(f, 2, 0),
                                       word_name(f, 2, 1),
                                       word_name(f, 3, 0),
                                       word_name(f, 3, 1), "neutral"});
    }
  }
  return corpus;
}

}  // namespace debias
