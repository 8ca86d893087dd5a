// Command-line front end: runs the three experiments, gradient checks, the
// synthetic embedding fixture generator, and manifest replay. Exit codes:
// 0 success, 1 check failure, 2 input error, 3 divergence.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "debias/adult.hpp"
#include "debias/data.hpp"
#include "debias/embedding.hpp"
#include "debias/gradcheck.hpp"
#include "debias/presets.hpp"
#include "debias/synth.hpp"
#include "debias/trainer.hpp"
#include "report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace debias;

namespace {

constexpr const char* kArtifactVersion = "1.0.0";
constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitInputError = 2;
constexpr int kExitDiverged = 3;

std::string now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// The one permitted environment knob: a directory that relative output
// paths are placed under.
fs::path apply_out_dir(const std::string& path) {
  fs::path p(path);
  const char* dir = std::getenv("DEBIAS_OUT_DIR");
  if (dir != nullptr && *dir != '\0' && p.is_relative()) {
    return fs::path(dir) / p;
  }
  return p;
}

void ensure_parent(const fs::path& p) {
  const fs::path parent = p.parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_text(const fs::path& path, const std::string& content) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::invalid_argument("cannot write " + path.string());
  }
  out << content;
}

// Sorted keys and round-trip doubles keep repeated runs byte-identical.
void write_json_file(const fs::path& path, const json& j) {
  write_text(path, j.dump(2) + "\n");
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("cannot open " + path.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

std::optional<std::string> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Output naming: metrics land at <out>; the step log, manifest, and replay
// copies hang off the same stem.
std::string out_stem(const std::string& out) {
  const std::string suffix = ".json";
  if (out.size() > suffix.size() &&
      out.compare(out.size() - suffix.size(), suffix.size(), suffix) == 0) {
    return out.substr(0, out.size() - suffix.size());
  }
  return out;
}

std::string log_path_for(const std::string& out, bool debias) {
  return out_stem(out) + (debias ? ".debias.ndjson" : ".plain.ndjson");
}

std::string manifest_path_for(const std::string& out) {
  return out_stem(out) + ".manifest.json";
}

void write_train_log(const TrainLog& log, const fs::path& path) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::invalid_argument("cannot write " + path.string());
  }
  for (const auto& s : log.steps) {
    json rec{{"t", s.t},
             {"loss_p", s.loss_p},
             {"alpha", s.alpha},
             {"eta_scale", s.eta_scale},
             {"adv_n", s.adv_n}};
    rec["loss_a"] = s.loss_a.has_value() ? json(*s.loss_a) : json(nullptr);
    out << rec.dump() << "\n";
  }
  json tail{{"wall_time_s", log.wall_time_s},
            {"termination", log.termination}};
  out << tail.dump() << "\n";
}

std::string mode_name(FairnessKind kind) {
  switch (kind) {
    case FairnessKind::demographic_parity: return "parity";
    case FairnessKind::equality_of_odds: return "odds";
    case FairnessKind::equality_of_opportunity: return "opportunity";
  }
  return "parity";
}

FairnessKind parse_mode(const std::string& s) {
  if (s == "parity") return FairnessKind::demographic_parity;
  if (s == "odds") return FairnessKind::equality_of_odds;
  if (s == "opportunity") return FairnessKind::equality_of_opportunity;
  throw std::invalid_argument("unknown mode '" + s +
                              "' (expected parity, odds, or opportunity)");
}

json train_config_json(const TrainConfig& cfg) {
  return json{{"steps", cfg.steps},
              {"batch_size", cfg.batch_size},
              {"predictor_lr", cfg.predictor_lr},
              {"adversary_lr", cfg.adversary_lr},
              {"alpha0", cfg.schedule.alpha0},
              {"eta_mode", cfg.schedule.eta_mode == EtaMode::inverse_t
                               ? "inverse_t"
                               : "constant"},
              {"t0", cfg.schedule.t0},
              {"mode", mode_name(cfg.mode.kind)},
              {"target_y", cfg.mode.target_y},
              {"debias", cfg.debias},
              {"seed", cfg.seed},
              {"init_scale", cfg.init_scale}};
}

// Wall time stays out of this object so identical runs serialize to
// identical bytes; it lives in the step log's final record instead.
json classification_metrics(const std::string& command, std::uint64_t seed,
                            bool debias, const std::string& mode,
                            const FairnessReport& rep, std::int64_t steps) {
  json groups;
  for (int g = 0; g < 2; ++g) {
    const auto& c = rep.confusion.groups[g];
    groups[std::to_string(g)] = json{{"fpr", rep.group_rates[g].fpr},
                                     {"fnr", rep.group_rates[g].fnr},
                                     {"tp", c.tp},
                                     {"fp", c.fp},
                                     {"tn", c.tn},
                                     {"fn", c.fn},
                                     {"positive_rate", rep.positive_rate[g]}};
  }
  return json{{"command", command},
              {"seed", seed},
              {"debias", debias},
              {"mode", mode},
              {"accuracy", rep.accuracy},
              {"groups", groups},
              {"dp_gap", rep.dp_gap},
              {"eo_gap_y0", rep.eo_gap_y0},
              {"eo_gap_y1", rep.eo_gap_y1},
              {"p_value_y0", rep.p_value_y0},
              {"p_value_y1", rep.p_value_y1},
              {"steps", steps}};
}

json make_manifest(const std::string& command, const json& config,
                   std::uint64_t seed,
                   const std::vector<std::string>& dataset_paths,
                   const json& outputs, const json& train_configs) {
  json m{{"command", command},
         {"config", config},
         {"seed", seed},
         {"dataset_paths", dataset_paths},
         {"artifact_version", kArtifactVersion},
         {"created_at", now_iso8601()},
         {"outputs", outputs}};
  if (!train_configs.is_null()) m["train_configs"] = train_configs;
  return m;
}

std::vector<bool> debias_passes(const std::string& debias) {
  if (debias == "off") return {false};
  if (debias == "on") return {true};
  if (debias == "both") return {false, true};
  throw std::invalid_argument("unknown --debias value '" + debias +
                              "' (expected on, off, or both)");
}

// Applies config-file values for flags the command line left untouched;
// precedence is defaults < config file < explicit flags.
class ConfigFile {
 public:
  ConfigFile(const std::string& path, const CLI::App* cmd) : cmd_(cmd) {
    if (!path.empty()) data_ = load_json_file(apply_out_dir(path));
  }

  template <typename T>
  void apply(const std::string& key, const std::string& flag, T& field) {
    if (!data_.is_object()) return;
    const auto it = data_.find(key);
    if (it == data_.end()) return;
    seen_.push_back(key);
    if (cmd_->count(flag) > 0) return;
    try {
      field = it->get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config key '" + key + "' has wrong type");
    }
  }

  void finish() const {
    if (!data_.is_object()) return;
    for (const auto& [key, value] : data_.items()) {
      (void)value;
      if (std::find(seen_.begin(), seen_.end(), key) == seen_.end()) {
        throw std::invalid_argument("unknown config key '" + key + "'");
      }
    }
  }

 private:
  const CLI::App* cmd_;
  json data_;
  std::vector<std::string> seen_;
};

// ---- toy ----

struct ToyOptions {
  std::string debias = "both";
  std::uint64_t seed = 0;
  std::int64_t n = 10000;
  std::int64_t steps = 0;  // 0 keeps the preset value
  std::string out = "toy_metrics.json";
  std::string report;
};

json to_json(const ToyOptions& o) {
  return json{{"debias", o.debias}, {"seed", o.seed},     {"n", o.n},
              {"steps", o.steps},   {"report", o.report}, {"out", o.out}};
}

ToyOptions toy_options_from_json(const json& j) {
  ToyOptions o;
  o.debias = j.at("debias").get<std::string>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.n = j.at("n").get<std::int64_t>();
  o.steps = j.at("steps").get<std::int64_t>();
  o.out = j.at("out").get<std::string>();
  return o;
}

int run_toy(const ToyOptions& opt) {
  const auto passes = debias_passes(opt.debias);
  if (opt.n < 2) throw std::invalid_argument("--n must be at least 2");
  const fs::path out = apply_out_dir(opt.out);

  const auto train = generate_toy({static_cast<std::size_t>(opt.n), opt.seed});
  const auto test = generate_toy({10000, opt.seed + 1000});

  json runs = json::array();
  json train_configs;
  std::optional<FairnessReport> plain_rep, fair_rep;
  std::ostringstream text;
  text << std::fixed << std::setprecision(4);

  for (bool debias : passes) {
    TrainConfig cfg = debias ? toy_debias_config(opt.seed)
                             : toy_plain_config(opt.seed);
    if (opt.steps > 0) cfg.steps = opt.steps;
    const fs::path log_path = apply_out_dir(log_path_for(opt.out, debias));
    std::optional<ClassificationResult> res;
    try {
      res = fit_classifier(train, cfg);
    } catch (const TrainDivergenceError& e) {
      write_train_log(e.log(), log_path);
      std::cerr << "divergence: " << e.what() << "\nlog: " << log_path.string()
                << "\n";
      return kExitDiverged;
    }
    write_train_log(res->log, log_path);
    const FairnessReport rep = evaluate(res->predictor, test);
    json m = classification_metrics("toy", opt.seed, debias, "parity", rep,
                                    cfg.steps);
    m["coefficients"] = json{{"w_r", res->predictor.w1[0]},
                             {"w_u", res->predictor.w1[1]},
                             {"b", res->predictor.b}};
    runs.push_back(std::move(m));
    train_configs[debias ? "debias" : "plain"] = train_config_json(cfg);
    (debias ? fair_rep : plain_rep) = rep;
    text << (debias ? "with debiasing:    " : "without debiasing: ")
         << "w_r " << std::setw(8) << res->predictor.w1[0] << "  w_u "
         << std::setw(8) << res->predictor.w1[1] << "  b " << std::setw(8)
         << res->predictor.b << "  dp_gap " << rep.dp_gap << "\n";
  }

  const json metrics = passes.size() == 1 ? runs[0] : runs;
  write_json_file(out, metrics);

  if (opt.report.empty()) {
    std::cout << text.str();
  } else {
    write_text(apply_out_dir(opt.report), text.str());
  }

  json outputs{{"metrics", out.string()}};
  for (bool debias : passes) {
    outputs[debias ? "log_debias" : "log_plain"] =
        apply_out_dir(log_path_for(opt.out, debias)).string();
  }
  const fs::path manifest = apply_out_dir(manifest_path_for(opt.out));
  write_json_file(manifest,
                  make_manifest("toy", to_json(opt), opt.seed, {}, outputs,
                                train_configs));
  return kExitOk;
}

// ---- adult ----

struct AdultOptions {
  std::string train_path = "data/adult.data";
  std::string test_path = "data/adult.test";
  std::string mode = "odds";
  double target_y = 1.0;
  std::string debias = "both";
  std::uint64_t seed = 1;
  std::int64_t steps = 0;
  std::string out = "adult_metrics.json";
  std::string report;
};

json to_json(const AdultOptions& o) {
  return json{{"train-path", o.train_path},
              {"test-path", o.test_path},
              {"mode", o.mode},
              {"target-y", o.target_y},
              {"debias", o.debias},
              {"seed", o.seed},
              {"steps", o.steps},
              {"report", o.report},
              {"out", o.out}};
}

AdultOptions adult_options_from_json(const json& j) {
  AdultOptions o;
  o.train_path = j.at("train-path").get<std::string>();
  o.test_path = j.at("test-path").get<std::string>();
  o.mode = j.at("mode").get<std::string>();
  o.target_y = j.at("target-y").get<double>();
  o.debias = j.at("debias").get<std::string>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.steps = j.at("steps").get<std::int64_t>();
  o.out = j.at("out").get<std::string>();
  return o;
}

int run_adult(const AdultOptions& opt) {
  const auto passes = debias_passes(opt.debias);
  const FairnessKind kind = parse_mode(opt.mode);
  for (const std::string& p : {opt.train_path, opt.test_path}) {
    if (!fs::exists(p)) {
      std::cerr << "input error: missing file " << p << "\n";
      return kExitInputError;
    }
  }
  const fs::path out = apply_out_dir(opt.out);

  const auto [train_records, test_records] =
      load_adult(opt.train_path, opt.test_path);
  AdultCodec codec;
  codec.fit(train_records);
  const auto train = encode_features(codec, train_records);
  const auto test = encode_features(codec, test_records);

  json runs = json::array();
  json train_configs;
  std::optional<FairnessReport> plain_rep, fair_rep;

  for (bool debias : passes) {
    TrainConfig cfg = debias ? adult_debias_config(opt.seed)
                             : adult_plain_config(opt.seed);
    cfg.mode.kind = kind;
    cfg.mode.target_y = opt.target_y;
    if (opt.steps > 0) cfg.steps = opt.steps;
    const fs::path log_path = apply_out_dir(log_path_for(opt.out, debias));
    std::optional<ClassificationResult> res;
    try {
      res = fit_classifier(train, cfg);
    } catch (const TrainDivergenceError& e) {
      write_train_log(e.log(), log_path);
      std::cerr << "divergence: " << e.what() << "\nlog: " << log_path.string()
                << "\n";
      return kExitDiverged;
    }
    write_train_log(res->log, log_path);
    if (kind == FairnessKind::equality_of_opportunity) {
      std::cerr << "opportunity mode: per-step adversary sub-batch sizes "
                   "are the adv_n field in "
                << log_path.string() << "\n";
    }
    const FairnessReport rep = evaluate(res->predictor, test);
    runs.push_back(classification_metrics("adult", opt.seed, debias, opt.mode,
                                          rep, cfg.steps));
    train_configs[debias ? "debias" : "plain"] = train_config_json(cfg);
    (debias ? fair_rep : plain_rep) = rep;
  }

  const json metrics = passes.size() == 1 ? runs[0] : runs;
  write_json_file(out, metrics);

  const std::string text =
      tools::render_report(plain_rep, fair_rep, {"Female", "Male"});
  if (opt.report.empty()) {
    std::cout << text;
  } else {
    write_text(apply_out_dir(opt.report), text);
  }

  json outputs{{"metrics", out.string()}};
  for (bool debias : passes) {
    outputs[debias ? "log_debias" : "log_plain"] =
        apply_out_dir(log_path_for(opt.out, debias)).string();
  }
  if (!opt.report.empty()) {
    outputs["report"] = apply_out_dir(opt.report).string();
  }
  const fs::path manifest = apply_out_dir(manifest_path_for(opt.out));
  write_json_file(manifest, make_manifest("adult", to_json(opt), opt.seed,
                                          {opt.train_path, opt.test_path},
                                          outputs, train_configs));
  return kExitOk;
}

// ---- embed ----

struct EmbedOptions {
  std::string embeddings;
  std::string analogies;
  std::string pairs;
  int k = 1;
  std::string debias = "both";
  std::uint64_t seed = 1;
  std::int64_t steps = 0;
  std::vector<std::string> queries;
  std::string out = "embed_metrics.json";
};

json to_json(const EmbedOptions& o) {
  return json{{"embeddings", o.embeddings},
              {"analogies", o.analogies},
              {"pairs", o.pairs},
              {"k", o.k},
              {"debias", o.debias},
              {"seed", o.seed},
              {"steps", o.steps},
              {"query", o.queries},
              {"out", o.out}};
}

EmbedOptions embed_options_from_json(const json& j) {
  EmbedOptions o;
  o.embeddings = j.at("embeddings").get<std::string>();
  o.analogies = j.at("analogies").get<std::string>();
  o.pairs = j.at("pairs").get<std::string>();
  o.k = j.at("k").get<int>();
  o.debias = j.at("debias").get<std::string>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.steps = j.at("steps").get<std::int64_t>();
  o.queries = j.at("query").get<std::vector<std::string>>();
  o.out = j.at("out").get<std::string>();
  return o;
}

struct ParsedQuery {
  std::string a, b, c;
};

ParsedQuery parse_query(const std::string& q) {
  ParsedQuery p;
  std::istringstream ss(q);
  if (!std::getline(ss, p.a, ':') || !std::getline(ss, p.b, ':') ||
      !std::getline(ss, p.c) || p.a.empty() || p.b.empty() || p.c.empty()) {
    throw std::invalid_argument("bad --query '" + q + "' (expected a:b:c)");
  }
  return p;
}

json completions_json(const std::vector<Completion>& cs) {
  json arr = json::array();
  for (const auto& c : cs) {
    arr.push_back(json{{"word", c.word}, {"similarity", c.similarity}});
  }
  return arr;
}

std::string render_query_table(const ParsedQuery& q,
                               const std::vector<Completion>& biased,
                               const std::vector<Completion>* debiased) {
  std::ostringstream os;
  os << q.a << " : " << q.b << " :: " << q.c << " : ?\n";
  os << std::left << std::setw(28) << "  Biased";
  if (debiased != nullptr) os << "Debiased";
  os << "\n";
  const std::size_t rows =
      std::max(biased.size(), debiased != nullptr ? debiased->size() : 0);
  os << std::fixed << std::setprecision(3);
  for (std::size_t i = 0; i < rows; ++i) {
    std::ostringstream left;
    if (i < biased.size()) {
      left << std::fixed << std::setprecision(3) << biased[i].word << " ("
           << biased[i].similarity << ")";
    }
    os << "  " << std::left << std::setw(26) << left.str();
    if (debiased != nullptr && i < debiased->size()) {
      os << (*debiased)[i].word << " (" << (*debiased)[i].similarity << ")";
    }
    os << "\n";
  }
  return os.str();
}

int run_embed(const EmbedOptions& opt) {
  const auto passes = debias_passes(opt.debias);
  if (opt.k < 1) throw std::invalid_argument("--k must be at least 1");
  if (opt.embeddings.empty()) {
    std::cerr << "input error: --embeddings is required\n";
    return kExitInputError;
  }
  for (const std::string& p : {opt.embeddings, opt.analogies, opt.pairs}) {
    if (!p.empty() && !fs::exists(p)) {
      std::cerr << "input error: missing file " << p << "\n";
      return kExitInputError;
    }
  }
  if (opt.analogies.empty()) {
    std::cerr << "input error: --analogies is required\n";
    return kExitInputError;
  }
  const fs::path out = apply_out_dir(opt.out);

  const EmbeddingTable table = load_embeddings(opt.embeddings);
  const auto pairs =
      opt.pairs.empty() ? default_gender_pairs() : load_pairs(opt.pairs);

  std::vector<ParsedQuery> queries;
  std::vector<std::string> missing;
  for (const auto& q : opt.queries) {
    ParsedQuery p = parse_query(q);
    for (const std::string& w : {p.a, p.b, p.c}) {
      if (!table.contains(w)) missing.push_back(w);
    }
    queries.push_back(std::move(p));
  }
  if (!missing.empty()) {
    std::cerr << "input error: unknown words:";
    for (const auto& w : missing) std::cerr << " " << w;
    std::cerr << "\n";
    return kExitInputError;
  }

  const BiasSubspace sub = compute_bias_subspace(table, pairs, opt.k);
  const AnalogySet set = load_analogies(opt.analogies, table);
  if (set.items.empty()) {
    std::cerr << "input error: no in-vocabulary analogies in "
              << opt.analogies << "\n";
    return kExitInputError;
  }
  const auto examples = make_analogy_examples(table, set.items, sub);
  std::vector<AnalogyExample> train, held;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    (i % 10 == 0 ? held : train).push_back(examples[i]);
  }
  if (train.empty() || held.empty()) {
    std::cerr << "input error: need at least 10 analogies to train\n";
    return kExitInputError;
  }

  json runs = json::array();
  json train_configs;
  std::optional<AnalogyPredictor> fair_predictor;

  for (bool debias : passes) {
    TrainConfig cfg = debias ? embed_debias_config(opt.seed)
                             : embed_plain_config(opt.seed);
    if (opt.steps > 0) cfg.steps = opt.steps;
    const fs::path log_path = apply_out_dir(log_path_for(opt.out, debias));
    std::optional<AnalogyResult> res;
    try {
      res = fit_analogy(train, cfg);
    } catch (const TrainDivergenceError& e) {
      write_train_log(e.log(), log_path);
      std::cerr << "divergence: " << e.what() << "\nlog: " << log_path.string()
                << "\n";
      return kExitDiverged;
    }
    write_train_log(res->log, log_path);
    json m{{"command", "embed"},
           {"seed", opt.seed},
           {"debias", debias},
           {"k", opt.k},
           {"steps", cfg.steps},
           {"w_dot_g", dot(res->predictor.w, sub.g)},
           {"w_norm", norm(res->predictor.w)},
           {"held_out_loss", evaluate(res->predictor, held)},
           {"analogies_dropped", set.dropped}};
    runs.push_back(std::move(m));
    train_configs[debias ? "debias" : "plain"] = train_config_json(cfg);
    if (debias) fair_predictor = res->predictor;
  }

  if (!queries.empty()) {
    json qjson = json::array();
    for (const auto& q : queries) {
      const auto biased = complete_analogy(table, q.a, q.b, q.c, nullptr, 9);
      std::optional<std::vector<Completion>> debiased;
      if (fair_predictor.has_value()) {
        debiased = complete_analogy(table, q.a, q.b, q.c, &*fair_predictor, 9);
      }
      std::cout << render_query_table(
          q, biased, debiased.has_value() ? &*debiased : nullptr);
      json entry{{"query", q.a + ":" + q.b + ":" + q.c},
                 {"biased", completions_json(biased)}};
      if (debiased.has_value()) {
        entry["debiased"] = completions_json(*debiased);
      }
      qjson.push_back(std::move(entry));
    }
    runs.back()["queries"] = std::move(qjson);
  }

  const json metrics = passes.size() == 1 ? runs[0] : runs;
  write_json_file(out, metrics);

  json outputs{{"metrics", out.string()}};
  for (bool debias : passes) {
    outputs[debias ? "log_debias" : "log_plain"] =
        apply_out_dir(log_path_for(opt.out, debias)).string();
  }
  std::vector<std::string> dataset_paths{opt.embeddings, opt.analogies};
  if (!opt.pairs.empty()) dataset_paths.push_back(opt.pairs);
  const fs::path manifest = apply_out_dir(manifest_path_for(opt.out));
  write_json_file(manifest, make_manifest("embed", to_json(opt), opt.seed,
                                          dataset_paths, outputs,
                                          train_configs));
  return kExitOk;
}

// ---- gradcheck ----

struct GradcheckOptions {
  std::string model = "all";
  std::uint64_t seed = 0;
  int trials = 20;
  bool tamper = false;
  std::string out;
};

json to_json(const GradcheckOptions& o) {
  return json{{"model", o.model},
              {"seed", o.seed},
              {"trials", o.trials},
              {"out", o.out}};
}

GradcheckOptions gradcheck_options_from_json(const json& j) {
  GradcheckOptions o;
  o.model = j.at("model").get<std::string>();
  o.seed = j.at("seed").get<std::uint64_t>();
  o.trials = j.at("trials").get<int>();
  o.out = j.at("out").get<std::string>();
  return o;
}

int run_gradcheck(const GradcheckOptions& opt) {
  static const std::vector<std::pair<std::string, std::string>> kModels{
      {"logistic", "logistic_predictor_bce"},
      {"parity", "parity_adversary_bce"},
      {"odds", "odds_adversary_bce"},
      {"analogy", "analogy_predictor_squared"},
      {"embedding", "embedding_adversary_squared"}};
  std::string wanted;
  if (opt.model != "all") {
    for (const auto& [flag, name] : kModels) {
      if (opt.model == flag) wanted = name;
    }
    if (wanted.empty()) {
      std::cerr << "input error: unknown model '" << opt.model
                << "' (expected all, logistic, parity, odds, analogy, or "
                   "embedding)\n";
      return kExitInputError;
    }
  }
  if (opt.trials < 1) throw std::invalid_argument("--trials must be >= 1");

  constexpr double kTol = 1e-4;
  auto results = run_gradient_checks(opt.seed, opt.trials, 1e-4, opt.tamper);
  if (!wanted.empty()) {
    std::erase_if(results,
                  [&](const GradCheckResult& r) { return r.name != wanted; });
  }
  bool all_pass = true;
  json rjson;
  for (const auto& r : results) {
    const bool pass = r.worst_error < kTol;
    all_pass = all_pass && pass;
    std::cout << std::left << std::setw(32) << r.name << std::scientific
              << std::setprecision(3) << r.worst_error << "  "
              << (pass ? "PASS" : "FAIL") << "\n";
    rjson[r.name] = r.worst_error;
  }
  if (!opt.out.empty()) {
    const fs::path out = apply_out_dir(opt.out);
    write_json_file(out, json{{"command", "gradcheck"},
                              {"seed", opt.seed},
                              {"model", opt.model},
                              {"trials", opt.trials},
                              {"results", rjson},
                              {"pass", all_pass}});
    const fs::path manifest = apply_out_dir(manifest_path_for(opt.out));
    write_json_file(manifest,
                    make_manifest("gradcheck", to_json(opt), opt.seed, {},
                                  json{{"metrics", out.string()}}, nullptr));
  }
  return all_pass ? kExitOk : kExitCheckFailed;
}

// ---- synth ----

struct SynthOptions {
  std::string out_dir = "synth_corpus";
  std::uint64_t seed = 1;
};

int run_synth(const SynthOptions& opt) {
  const SynthCorpus corpus = make_synth_corpus({.seed = opt.seed});
  const fs::path dir = apply_out_dir(opt.out_dir);
  fs::create_directories(dir);

  const fs::path emb = dir / "embeddings.txt";
  save_embeddings(corpus.table, emb.string());

  std::ostringstream an;
  std::string section;
  for (const auto& item : corpus.train_items) {
    if (item.section != section) {
      section = item.section;
      an << ": " << section << "\n";
    }
    an << item.a << " " << item.b << " " << item.c << " " << item.d << "\n";
  }
  const fs::path ana = dir / "analogies.txt";
  write_text(ana, an.str());

  std::ostringstream pr;
  for (const auto& [m, f] : corpus.pairs) pr << m << " " << f << "\n";
  const fs::path prs = dir / "pairs.txt";
  write_text(prs, pr.str());

  json outputs{{"embeddings", emb.string()},
               {"analogies", ana.string()},
               {"pairs", prs.string()}};
  write_json_file(dir / "synth.manifest.json",
                  make_manifest("synth",
                                json{{"out-dir", opt.out_dir},
                                     {"seed", opt.seed}},
                                opt.seed, {}, outputs, nullptr));
  std::cout << "wrote " << emb.string() << "\n"
            << "wrote " << ana.string() << "\n"
            << "wrote " << prs.string() << "\n";
  return kExitOk;
}

// ---- replay ----

struct ReplayOptions {
  std::string manifest;
  std::string out;
};

int run_replay(const ReplayOptions& opt) {
  if (!fs::exists(opt.manifest)) {
    std::cerr << "input error: missing file " << opt.manifest << "\n";
    return kExitInputError;
  }
  const json manifest = load_json_file(opt.manifest);
  const std::string command = manifest.at("command").get<std::string>();
  if (!manifest.contains("outputs") ||
      !manifest.at("outputs").contains("metrics")) {
    std::cerr << "input error: manifest has no metrics output to replay\n";
    return kExitInputError;
  }
  const std::string original =
      manifest.at("outputs").at("metrics").get<std::string>();
  const std::string replay_out =
      opt.out.empty() ? out_stem(original) + ".replay.json" : opt.out;

  const json& config = manifest.at("config");
  int rc = kExitOk;
  if (command == "toy") {
    ToyOptions o = toy_options_from_json(config);
    o.out = replay_out;
    o.report.clear();
    rc = run_toy(o);
  } else if (command == "adult") {
    AdultOptions o = adult_options_from_json(config);
    o.out = replay_out;
    o.report.clear();
    rc = run_adult(o);
  } else if (command == "embed") {
    EmbedOptions o = embed_options_from_json(config);
    o.out = replay_out;
    rc = run_embed(o);
  } else if (command == "gradcheck") {
    GradcheckOptions o = gradcheck_options_from_json(config);
    if (o.out.empty()) {
      std::cerr << "input error: gradcheck manifest has no metrics file\n";
      return kExitInputError;
    }
    o.out = replay_out;
    rc = run_gradcheck(o);
  } else {
    std::cerr << "input error: command '" << command << "' is not replayable\n";
    return kExitInputError;
  }
  if (rc != kExitOk) return rc;

  const auto want = read_bytes(original);
  const auto got = read_bytes(apply_out_dir(replay_out));
  if (!want.has_value()) {
    std::cerr << "input error: cannot read " << original << "\n";
    return kExitInputError;
  }
  if (!got.has_value()) {
    std::cerr << "replay: cannot read " << replay_out << "\n";
    return kExitCheckFailed;
  }
  if (*want != *got) {
    std::cout << "replay: metrics differ (" << original << " vs " << replay_out
              << ")\n";
    return kExitCheckFailed;
  }
  std::cout << "replay: metrics identical (" << want->size() << " bytes)\n";
  return kExitOk;
}

template <typename Fn>
int guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const TrainDivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-projection adversarial debiasing toolkit"};
  app.require_subcommand(1);
  int rc = kExitOk;

  // toy
  ToyOptions toy_opt;
  std::string toy_config;
  auto* toy = app.add_subcommand(
      "toy", "Two-feature synthetic classification experiment");
  toy->add_option("--debias", toy_opt.debias, "on, off, or both")
      ->check(CLI::IsMember({"on", "off", "both"}));
  toy->add_option("--seed", toy_opt.seed, "RNG seed");
  toy->add_option("--n", toy_opt.n, "training sample count");
  toy->add_option("--steps", toy_opt.steps, "override preset step count");
  toy->add_option("--out", toy_opt.out, "metrics JSON path");
  toy->add_option("--report", toy_opt.report,
                  "text report path (default: stdout)");
  toy->add_option("--config", toy_config, "JSON config file (keys = flags)");
  toy->callback([&] {
    rc = guarded([&] {
      ConfigFile cf(toy_config, toy);
      cf.apply("debias", "--debias", toy_opt.debias);
      cf.apply("seed", "--seed", toy_opt.seed);
      cf.apply("n", "--n", toy_opt.n);
      cf.apply("steps", "--steps", toy_opt.steps);
      cf.apply("out", "--out", toy_opt.out);
      cf.apply("report", "--report", toy_opt.report);
      cf.finish();
      return run_toy(toy_opt);
    });
  });

  // adult
  AdultOptions adult_opt;
  std::string adult_config;
  auto* adult = app.add_subcommand(
      "adult", "Census income experiment (equality of odds by default)");
  adult->add_option("--train-path", adult_opt.train_path, "training CSV");
  adult->add_option("--test-path", adult_opt.test_path, "test CSV");
  adult->add_option("--mode", adult_opt.mode,
                    "parity, odds, or opportunity")
      ->check(CLI::IsMember({"parity", "odds", "opportunity"}));
  adult->add_option("--target-y", adult_opt.target_y,
                    "label the opportunity adversary sees");
  adult->add_option("--debias", adult_opt.debias, "on, off, or both")
      ->check(CLI::IsMember({"on", "off", "both"}));
  adult->add_option("--seed", adult_opt.seed, "RNG seed");
  adult->add_option("--steps", adult_opt.steps, "override preset step count");
  adult->add_option("--out", adult_opt.out, "metrics JSON path");
  adult->add_option("--report", adult_opt.report,
                    "confusion report path (default: stdout)");
  adult->add_option("--config", adult_config,
                    "JSON config file (keys = flags)");
  adult->callback([&] {
    rc = guarded([&] {
      ConfigFile cf(adult_config, adult);
      cf.apply("train-path", "--train-path", adult_opt.train_path);
      cf.apply("test-path", "--test-path", adult_opt.test_path);
      cf.apply("mode", "--mode", adult_opt.mode);
      cf.apply("target-y", "--target-y", adult_opt.target_y);
      cf.apply("debias", "--debias", adult_opt.debias);
      cf.apply("seed", "--seed", adult_opt.seed);
      cf.apply("steps", "--steps", adult_opt.steps);
      cf.apply("out", "--out", adult_opt.out);
      cf.apply("report", "--report", adult_opt.report);
      cf.finish();
      return run_adult(adult_opt);
    });
  });

  // embed
  EmbedOptions embed_opt;
  std::string embed_config;
  auto* embed = app.add_subcommand(
      "embed", "Word-embedding analogy debiasing experiment");
  embed->add_option("--embeddings", embed_opt.embeddings,
                    "word-per-line embedding file");
  embed->add_option("--analogies", embed_opt.analogies,
                    "analogy file (four words per line)");
  embed->add_option("--pairs", embed_opt.pairs,
                    "definitional pair file (default: built-in list)");
  embed->add_option("--k", embed_opt.k, "bias subspace rank");
  embed->add_option("--debias", embed_opt.debias, "on, off, or both")
      ->check(CLI::IsMember({"on", "off", "both"}));
  embed->add_option("--seed", embed_opt.seed, "RNG seed");
  embed->add_option("--steps", embed_opt.steps, "override preset step count");
  embed->add_option("--query", embed_opt.queries,
                    "a:b:c analogy to complete (repeatable)");
  embed->add_option("--out", embed_opt.out, "metrics JSON path");
  embed->add_option("--config", embed_config,
                    "JSON config file (keys = flags)");
  embed->callback([&] {
    rc = guarded([&] {
      ConfigFile cf(embed_config, embed);
      cf.apply("embeddings", "--embeddings", embed_opt.embeddings);
      cf.apply("analogies", "--analogies", embed_opt.analogies);
      cf.apply("pairs", "--pairs", embed_opt.pairs);
      cf.apply("k", "--k", embed_opt.k);
      cf.apply("debias", "--debias", embed_opt.debias);
      cf.apply("seed", "--seed", embed_opt.seed);
      cf.apply("steps", "--steps", embed_opt.steps);
      cf.apply("query", "--query", embed_opt.queries);
      cf.apply("out", "--out", embed_opt.out);
      cf.finish();
      return run_embed(embed_opt);
    });
  });

  // gradcheck
  GradcheckOptions gc_opt;
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "Finite-difference checks for every model/loss pairing");
  gradcheck->add_option("--model", gc_opt.model,
                        "all, logistic, parity, odds, analogy, or embedding");
  gradcheck->add_option("--seed", gc_opt.seed, "RNG seed");
  gradcheck->add_option("--trials", gc_opt.trials, "random draws per model");
  gradcheck->add_option("--out", gc_opt.out, "optional metrics JSON path");
  gradcheck
      ->add_flag("--tamper", gc_opt.tamper,
                 "negative control: perturb one analytic gradient")
      ->group("");  // hidden
  gradcheck->callback([&] { rc = guarded([&] { return run_gradcheck(gc_opt); }); });

  // synth
  SynthOptions synth_opt;
  auto* synth = app.add_subcommand(
      "synth", "Write the synthetic embedding corpus used by embed demos");
  synth->add_option("--out-dir", synth_opt.out_dir, "output directory");
  synth->add_option("--seed", synth_opt.seed, "RNG seed");
  synth->callback([&] { rc = guarded([&] { return run_synth(synth_opt); }); });

  // replay
  ReplayOptions replay_opt;
  auto* replay = app.add_subcommand(
      "replay", "Re-run a manifest and byte-compare the metrics JSON");
  replay->add_option("--manifest", replay_opt.manifest, "run manifest path")
      ->required();
  replay->add_option("--out", replay_opt.out, "replay metrics path");
  replay->callback([&] { rc = guarded([&] { return run_replay(replay_opt); }); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInputError;
  }
  return rc;
}
