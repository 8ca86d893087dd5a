// End-to-end acceptance suite. Each test prints one "[ACCEPT] n: PASS/FAIL"
// line with the measured values, then asserts the documented bands.

#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "debias/adult.hpp"
#include "debias/data.hpp"
#include "debias/embedding.hpp"
#include "debias/gradcheck.hpp"
#include "debias/presets.hpp"
#include "debias/synth.hpp"
#include "debias/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace debias;

namespace {

std::string g_cli;
std::string g_data;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

void accept_line(int n, bool pass, const std::string& detail) {
  std::printf("[ACCEPT] %d: %s  %s\n", n, pass ? "PASS" : "FAIL",
              detail.c_str());
  std::fflush(stdout);
}

std::string fmt(double v, int prec = 4) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

// ---- cached experiment bundles (several criteria share one training run) ----

struct ToyBundle {
  ClassificationResult plain;
  ClassificationResult fair;
  FairnessReport plain_rep;
  FairnessReport fair_rep;
  std::vector<LabeledExample> test;
  double elapsed_s = 0.0;
};

const ToyBundle& toy_bundle() {
  static const ToyBundle bundle = [] {
    const auto start = std::chrono::steady_clock::now();
    const auto train = generate_toy({10000, 0});
    auto test = generate_toy({10000, 1000});
    ToyBundle b{fit_classifier(train, toy_plain_config(0)),
                fit_classifier(train, toy_debias_config(0)),
                {},
                {},
                std::move(test),
                0.0};
    b.plain_rep = evaluate(b.plain.predictor, b.test);
    b.fair_rep = evaluate(b.fair.predictor, b.test);
    b.elapsed_s = seconds_since(start);
    return b;
  }();
  return bundle;
}

struct AdultAttempt {
  std::uint64_t seed = 0;
  ClassificationResult result;
  FairnessReport rep;
  int failed_checks = 0;
};

struct AdultBundle {
  FairnessReport plain_rep;
  std::vector<AdultAttempt> attempts;
  std::size_t best = 0;
  std::vector<LabeledExample> test;
  double elapsed_s = 0.0;
};

int count_failed_subchecks(const FairnessReport& fair,
                           const FairnessReport& plain) {
  const double fpr_gap = std::abs(fair.eo_gap_y0);
  const double fnr_gap = std::abs(fair.eo_gap_y1);
  int failed = 0;
  failed += !(fair.accuracy >= 0.830 && fair.accuracy <= 0.860);
  failed += !(fpr_gap <= 0.03);
  failed += !(fnr_gap <= 0.06);
  failed += !(fpr_gap < std::abs(plain.eo_gap_y0));
  failed += !(fnr_gap < std::abs(plain.eo_gap_y1));
  failed += !(fair.p_value_y0 > 0.05);
  failed += !(fair.p_value_y1 > 0.05);
  return failed;
}

const AdultBundle& adult_bundle() {
  static const AdultBundle bundle = [] {
    const auto start = std::chrono::steady_clock::now();
    const auto [train_records, test_records] =
        load_adult(g_data + "/adult.data", g_data + "/adult.test");
    AdultCodec codec;
    codec.fit(train_records);
    const auto train = encode_features(codec, train_records);
    AdultBundle b;
    b.test = encode_features(codec, test_records);

    const auto plain = fit_classifier(train, adult_plain_config(1));
    b.plain_rep = evaluate(plain.predictor, b.test);

    // The acceptance contract allows up to 3 seed retries.
    for (std::uint64_t seed : {1, 2, 3}) {
      AdultAttempt attempt;
      attempt.seed = seed;
      attempt.result = fit_classifier(train, adult_debias_config(seed));
      attempt.rep = evaluate(attempt.result.predictor, b.test);
      attempt.failed_checks = count_failed_subchecks(attempt.rep, b.plain_rep);
      b.attempts.push_back(std::move(attempt));
      if (b.attempts.back().failed_checks == 0) break;
    }
    b.best = 0;
    for (std::size_t i = 1; i < b.attempts.size(); ++i) {
      if (b.attempts[i].failed_checks <
          b.attempts[b.best].failed_checks) {
        b.best = i;
      }
    }
    b.elapsed_s = seconds_since(start);
    return b;
  }();
  return bundle;
}

struct EmbedBundle {
  SynthCorpus corpus;
  BiasSubspace sub;
  AnalogyResult plain;
  AnalogyResult fair;
  double elapsed_s = 0.0;
};

const EmbedBundle& embed_bundle() {
  static const EmbedBundle bundle = [] {
    const auto start = std::chrono::steady_clock::now();
    SynthCorpus corpus = make_synth_corpus({.seed = 1});
    BiasSubspace sub = compute_bias_subspace(corpus.table, corpus.pairs, 1);
    const auto examples =
        make_analogy_examples(corpus.table, corpus.train_items, sub);
    EmbedBundle b{std::move(corpus), std::move(sub),
                  fit_analogy(examples, embed_plain_config(1)),
                  fit_analogy(examples, embed_debias_config(1)), 0.0};
    b.elapsed_s = seconds_since(start);
    return b;
  }();
  return bundle;
}

// ---- criteria ----

TEST(Acceptance, Criterion1ToyCoefficientsAndParityGap) {
  const ToyBundle& b = toy_bundle();
  const double w_r = b.plain.predictor.w1[0];
  const double w_u = b.plain.predictor.w1[1];
  const double fair_w_r = b.fair.predictor.w1[0];
  const double dp = b.fair_rep.dp_gap;

  const bool pass = w_r > 0.0 && w_u > 0.0 && std::abs(w_u - w_r) < 0.3 &&
                    w_r >= 0.4 && w_r <= 1.0 && w_u >= 0.4 && w_u <= 1.0 &&
                    fair_w_r < 0.0 && dp < 0.05 && b.elapsed_s < 60.0;
  accept_line(1, pass,
              "plain w_r " + fmt(w_r) + " w_u " + fmt(w_u) + ", debiased w_r " +
                  fmt(fair_w_r) + " dp_gap " + fmt(dp) + ", " +
                  fmt(b.elapsed_s, 1) + "s");

  EXPECT_GT(w_r, 0.0);
  EXPECT_GT(w_u, 0.0);
  EXPECT_LT(std::abs(w_u - w_r), 0.3);
  EXPECT_GE(w_r, 0.4);
  EXPECT_LE(w_r, 1.0);
  EXPECT_GE(w_u, 0.4);
  EXPECT_LE(w_u, 1.0);
  EXPECT_LT(fair_w_r, 0.0);
  EXPECT_LT(dp, 0.05);
  EXPECT_LT(b.elapsed_s, 60.0);
}

TEST(Acceptance, Criterion2AdultAccuracyAndOddsGaps) {
  const AdultBundle& b = adult_bundle();
  const AdultAttempt& best = b.attempts[b.best];
  const FairnessReport& fair = best.rep;
  const double fpr_gap = std::abs(fair.eo_gap_y0);
  const double fnr_gap = std::abs(fair.eo_gap_y1);
  const double plain_fpr_gap = std::abs(b.plain_rep.eo_gap_y0);
  const double plain_fnr_gap = std::abs(b.plain_rep.eo_gap_y1);

  const bool pass = b.plain_rep.accuracy >= 0.850 &&
                    b.plain_rep.accuracy <= 0.870 &&
                    best.failed_checks == 0 && b.elapsed_s < 600.0;
  accept_line(
      2, pass,
      "plain acc " + fmt(b.plain_rep.accuracy) + ", debiased (seed " +
          std::to_string(best.seed) + " of " +
          std::to_string(b.attempts.size()) + " attempts) acc " +
          fmt(fair.accuracy) + " fpr_gap " + fmt(fpr_gap) + " (plain " +
          fmt(plain_fpr_gap) + ") fnr_gap " + fmt(fnr_gap) + " (plain " +
          fmt(plain_fnr_gap) + ") p0 " + fmt(fair.p_value_y0) + " p1 " +
          fmt(fair.p_value_y1) + ", " + fmt(b.elapsed_s, 1) + "s");

  EXPECT_GE(b.plain_rep.accuracy, 0.850);
  EXPECT_LE(b.plain_rep.accuracy, 0.870);
  EXPECT_GE(fair.accuracy, 0.830);
  EXPECT_LE(fair.accuracy, 0.860);
  // Known shortfall: the pinned adversarial dynamics equalize the y=1
  // operating points but stall the y=0 gap near 0.05; the two expectations
  // below fail with the measured values on every tried configuration.
  EXPECT_LE(fpr_gap, 0.03);
  EXPECT_GT(fair.p_value_y0, 0.05);
  EXPECT_LE(fnr_gap, 0.06);
  EXPECT_LT(fpr_gap, plain_fpr_gap);
  EXPECT_LT(fnr_gap, plain_fnr_gap);
  EXPECT_GT(fair.p_value_y1, 0.05);
  EXPECT_LT(b.elapsed_s, 600.0);
}

TEST(Acceptance, Criterion3ZTestOracle) {
  // Debiased confusion counts from the reference result: female 313/4831
  // false positives and 263/590 false negatives; male 533/7604 and
  // 1416/3256.
  const double p0 = two_proportion_ztest(313, 4831, 533, 7604);
  const double p1 = two_proportion_ztest(263, 590, 1416, 3256);
  const bool pass = std::abs(p0 - 0.25) <= 0.01 && std::abs(p1 - 0.62) <= 0.01;
  accept_line(3, pass, "p(y=0) " + fmt(p0) + " (want 0.25 +/- 0.01), p(y=1) " +
                           fmt(p1) + " (want 0.62 +/- 0.01)");
  EXPECT_NEAR(p0, 0.25, 0.01);
  EXPECT_NEAR(p1, 0.62, 0.01);
}

TEST(Acceptance, Criterion4EmbeddingDirection) {
  const EmbedBundle& b = embed_bundle();
  const double plain_wg = std::abs(dot(b.plain.predictor.w, b.sub.g));
  const double fair_wg = std::abs(dot(b.fair.predictor.w, b.sub.g));
  const double fair_norm = norm(b.fair.predictor.w);

  int neutral_kept = 0;
  for (const auto& p : b.corpus.neutral_probes) {
    const auto raw = complete_analogy(b.corpus.table, p.a, p.b, p.c);
    const auto deb =
        complete_analogy(b.corpus.table, p.a, p.b, p.c, &b.fair.predictor);
    neutral_kept += !raw.empty() && !deb.empty() && raw[0].word == deb[0].word;
  }
  int biased_changed = 0;
  for (const auto& p : b.corpus.biased_probes) {
    const auto raw = complete_analogy(b.corpus.table, p.a, p.b, p.c);
    const auto deb =
        complete_analogy(b.corpus.table, p.a, p.b, p.c, &b.fair.predictor);
    biased_changed +=
        !raw.empty() && !deb.empty() && raw[0].word != deb[0].word;
  }
  const auto neutral_total = b.corpus.neutral_probes.size();
  const auto biased_total = b.corpus.biased_probes.size();

  const bool pass = plain_wg <= 0.2 && fair_wg >= 0.5 && fair_norm >= 0.8 &&
                    fair_norm <= 1.1 &&
                    neutral_kept == static_cast<int>(neutral_total) &&
                    biased_changed == static_cast<int>(biased_total) &&
                    b.elapsed_s < 60.0;
  accept_line(4, pass,
              "plain |w.g| " + fmt(plain_wg) + ", debiased |w.g| " +
                  fmt(fair_wg) + " |w| " + fmt(fair_norm) + ", neutral kept " +
                  std::to_string(neutral_kept) + "/" +
                  std::to_string(neutral_total) + ", biased changed " +
                  std::to_string(biased_changed) + "/" +
                  std::to_string(biased_total) + ", " + fmt(b.elapsed_s, 1) +
                  "s");

  EXPECT_LE(plain_wg, 0.2);
  EXPECT_GE(fair_wg, 0.5);
  EXPECT_GE(fair_norm, 0.8);
  EXPECT_LE(fair_norm, 1.1);
  EXPECT_EQ(neutral_kept, static_cast<int>(neutral_total));
  EXPECT_EQ(biased_changed, static_cast<int>(biased_total));
  EXPECT_LT(b.elapsed_s, 60.0);
}

TEST(Acceptance, Criterion5GradientIntegrity) {
  const auto results = run_gradient_checks(0, 20, 1e-4);
  double worst = 0.0;
  std::string detail;
  for (const auto& r : results) {
    worst = std::max(worst, r.worst_error);
    detail += r.name + " " + fmt(r.worst_error, 10) + "  ";
  }
  accept_line(5, worst < 1e-4, detail);
  for (const auto& r : results) {
    EXPECT_LT(r.worst_error, 1e-4) << r.name;
  }
}

TEST(Acceptance, Criterion6UpdateGeometry) {
  const ToyBundle& b = toy_bundle();
  double worst_rel = 0.0;
  std::int64_t checked = 0;
  for (const auto& s : b.fair.log.steps) {
    if (s.ga_norm2 <= 0.0) continue;
    const double want = -s.alpha * s.ga_norm2;
    worst_rel = std::max(worst_rel, std::abs(s.dot_d_ga - want) /
                                        std::max(std::abs(want), 1e-12));
    ++checked;
  }

  auto cfg = toy_debias_config(0);
  cfg.schedule.alpha0 = 0.0;
  const auto orth = fit_classifier(generate_toy({10000, 0}), cfg);
  double worst_cos = 0.0;
  for (const auto& s : orth.log.steps) {
    if (s.ga_norm2 <= 0.0 || s.d_norm2 <= 0.0) continue;
    worst_cos = std::max(worst_cos, std::abs(s.dot_d_ga) /
                                        std::sqrt(s.ga_norm2 * s.d_norm2));
  }

  const bool pass = checked > 0 && worst_rel < 1e-5 && worst_cos < 1e-8;
  accept_line(6, pass,
              "anti-alignment worst rel err " + fmt(worst_rel, 10) + " over " +
                  std::to_string(checked) + " steps, alpha=0 worst |cos| " +
                  fmt(worst_cos, 12));
  EXPECT_GT(checked, 0);
  EXPECT_LT(worst_rel, 1e-5);
  EXPECT_LT(worst_cos, 1e-8);
}

TEST(Acceptance, Criterion7AdversaryEntropyFloor) {
  const ToyBundle& toy = toy_bundle();
  std::vector<double> tz;
  for (const auto& e : toy.test) tz.push_back(e.z);
  const double toy_floor = empirical_entropy(tz).h_z - 0.05;
  const double toy_bce = adversary_holdout_bce(toy.fair, toy.test);

  const AdultBundle& adult = adult_bundle();
  std::vector<double> az, ay;
  for (const auto& e : adult.test) {
    az.push_back(e.z);
    ay.push_back(e.y);
  }
  const double adult_floor = empirical_entropy(az, ay).h_z_given_y - 0.05;
  const double adult_bce =
      adversary_holdout_bce(adult.attempts[adult.best].result, adult.test);

  const bool pass = toy_bce >= toy_floor && adult_bce >= adult_floor;
  accept_line(7, pass,
              "toy bce " + fmt(toy_bce) + " >= " + fmt(toy_floor) +
                  ", census bce " + fmt(adult_bce) + " >= " + fmt(adult_floor));
  EXPECT_GE(toy_bce, toy_floor);
  EXPECT_GE(adult_bce, adult_floor);
}

// ---- criterion 8 runs the installed CLI ----

int run_cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = g_cli + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return -1;
  char buf[4096];
  std::string text;
  while (std::fgets(buf, sizeof(buf), pipe) != nullptr) text += buf;
  if (out != nullptr) *out = text;
  const int status = pclose(pipe);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Acceptance, Criterion8Determinism) {
  const fs::path dir =
      fs::temp_directory_path() /
      ("debias_accept_" + std::to_string(static_cast<long>(::getpid())));
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto at = [&](const std::string& name) {
    return (dir / name).string();
  };

  bool pass = true;
  std::string detail;

  const std::string toy_args = "toy --debias both --seed 5 --n 2000 "
                               "--steps 400 --out ";
  pass &= run_cli(toy_args + at("t1.json")) == 0;
  pass &= run_cli(toy_args + at("t2.json")) == 0;
  const bool toy_same = slurp(at("t1.json")) == slurp(at("t2.json")) &&
                        !slurp(at("t1.json")).empty();
  pass &= toy_same;
  detail += std::string("toy ") + (toy_same ? "identical" : "DIFFER");

  pass &= run_cli("synth --out-dir " + at("corpus") + " --seed 1") == 0;
  const std::string embed_args = "embed --embeddings " +
                                 at("corpus/embeddings.txt") + " --analogies " +
                                 at("corpus/analogies.txt") + " --pairs " +
                                 at("corpus/pairs.txt") +
                                 " --debias both --seed 1 --out ";
  pass &= run_cli(embed_args + at("e1.json")) == 0;
  pass &= run_cli(embed_args + at("e2.json")) == 0;
  const bool embed_same = slurp(at("e1.json")) == slurp(at("e2.json")) &&
                          !slurp(at("e1.json")).empty();
  pass &= embed_same;
  detail += std::string(", embed ") + (embed_same ? "identical" : "DIFFER");

  const std::string gc_args = "gradcheck --trials 3 --seed 2 --out ";
  pass &= run_cli(gc_args + at("g1.json")) == 0;
  pass &= run_cli(gc_args + at("g2.json")) == 0;
  const bool gc_same = slurp(at("g1.json")) == slurp(at("g2.json")) &&
                       !slurp(at("g1.json")).empty();
  pass &= gc_same;
  detail += std::string(", gradcheck ") + (gc_same ? "identical" : "DIFFER");

  std::string replay_out;
  const int replay_rc =
      run_cli("replay --manifest " + at("t1.manifest.json"), &replay_out);
  pass &= replay_rc == 0;
  detail += std::string(", manifest replay ") +
            (replay_rc == 0 ? "identical" : "DIFFER");

  accept_line(8, pass, detail);
  EXPECT_TRUE(toy_same);
  EXPECT_TRUE(embed_same);
  EXPECT_TRUE(gc_same);
  EXPECT_EQ(replay_rc, 0) << replay_out;
  fs::remove_all(dir);
}

}  // namespace

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg.rfind("--cli=", 0) == 0) g_cli = arg.substr(6);
    else if (arg.rfind("--data-dir=", 0) == 0) g_data = arg.substr(11);
  }
  if (g_cli.empty() || g_data.empty()) {
    std::fprintf(stderr,
                 "usage: acceptance_test --cli=<binary> --data-dir=<dir>\n");
    return 1;
  }
  return RUN_ALL_TESTS();
}
