#pragma once

// Loader and feature codec for the census income dataset: 14 attributes
// plus an income label, comma separated, with '|' comment lines and an
// optionally period-terminated label in the test split.

#include <array>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "debias/examples.hpp"
#include "debias/numerics.hpp"

namespace debias {

struct AdultRecord {
  int age = 0;
  std::string workclass;
  double fnlwgt = 0.0;
  std::string education;
  double education_num = 0.0;
  std::string marital_status;
  std::string occupation;
  std::string relationship;
  std::string race;
  std::string sex;
  double capital_gain = 0.0;
  double capital_loss = 0.0;
  double hours_per_week = 0.0;
  std::string native_country;
  int income = 0;  // 1 when above 50K
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline double parse_adult_number(const std::string& s, std::size_t line_no,
                                 const char* field) {
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) {
    throw std::invalid_argument("adult: bad " + std::string(field) + " '" +
                                s + "' at line " + std::to_string(line_no));
  }
  return value;
}

}  // namespace detail

inline std::vector<AdultRecord> load_adult_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("adult: cannot open " + path);
  }
  std::vector<AdultRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '|') continue;

    std::vector<std::string> fields;
    std::stringstream ss(stripped);
    std::string field;
    while (std::getline(ss, field, ',')) {
      fields.push_back(detail::trim(field));
    }
    if (fields.size() != 15) {
      throw std::invalid_argument(
          "adult: expected 15 fields, got " + std::to_string(fields.size()) +
          " at line " + std::to_string(line_no));
    }

    AdultRecord r;
    r.age = static_cast<int>(
        detail::parse_adult_number(fields[0], line_no, "age"));
    r.workclass = fields[1];
    r.fnlwgt = detail::parse_adult_number(fields[2], line_no, "fnlwgt");
    r.education = fields[3];
    r.education_num =
        detail::parse_adult_number(fields[4], line_no, "education_num");
    r.marital_status = fields[5];
    r.occupation = fields[6];
    r.relationship = fields[7];
    r.race = fields[8];
    r.sex = fields[9];
    r.capital_gain =
        detail::parse_adult_number(fields[10], line_no, "capital_gain");
    r.capital_loss =
        detail::parse_adult_number(fields[11], line_no, "capital_loss");
    r.hours_per_week =
        detail::parse_adult_number(fields[12], line_no, "hours_per_week");
    r.native_country = fields[13];

    std::string income = fields[14];
    if (!income.empty() && income.back() == '.') income.pop_back();
    if (income == "<=50K") {
      r.income = 0;
    } else if (income == ">50K") {
      r.income = 1;
    } else {
      throw std::invalid_argument("adult: bad income '" + income +
                                  "' at line " + std::to_string(line_no));
    }
    records.push_back(std::move(r));
  }
  return records;
}

inline std::pair<std::vector<AdultRecord>, std::vector<AdultRecord>>
load_adult(const std::string& train_path, const std::string& test_path) {
  return {load_adult_file(train_path), load_adult_file(test_path)};
}

// Encodes records as sparse vectors: 11 age buckets, one-hot categoricals
// with a trailing unseen-value slot per column, and 4 standardized
// continuous features. Vocabularies and moments come from the training
// split only.
class AdultCodec {
 public:
  static constexpr std::array<int, 10> kAgeBoundaries{18, 25, 30, 35, 40,
                                                      45, 50, 55, 60, 65};
  static constexpr std::size_t kCategoricalColumns = 8;
  static constexpr std::size_t kContinuousColumns = 4;

  void fit(const std::vector<AdultRecord>& train) {
    vocabs_.assign(kCategoricalColumns, {});
    index_.assign(kCategoricalColumns, {});
    for (const auto& r : train) {
      for (std::size_t c = 0; c < kCategoricalColumns; ++c) {
        const std::string& value = categorical(r, c);
        if (index_[c].find(value) == index_[c].end()) {
          index_[c].emplace(value, vocabs_[c].size());
          vocabs_[c].push_back(value);
        }
      }
    }
    mean_.fill(0.0);
    stddev_.fill(0.0);
    if (!train.empty()) {
      const double inv_n = 1.0 / static_cast<double>(train.size());
      for (const auto& r : train) {
        for (std::size_t c = 0; c < kContinuousColumns; ++c) {
          mean_[c] += continuous(r, c) * inv_n;
        }
      }
      for (const auto& r : train) {
        for (std::size_t c = 0; c < kContinuousColumns; ++c) {
          const double d = continuous(r, c) - mean_[c];
          stddev_[c] += d * d * inv_n;
        }
      }
      for (auto& s : stddev_) s = std::sqrt(s);
    }
    dim_ = kAgeBoundaries.size() + 1;
    for (const auto& v : vocabs_) dim_ += v.size() + 1;
    dim_ += kContinuousColumns;
    fitted_ = true;
  }

  std::size_t dim() const {
    require_fitted();
    return dim_;
  }

  LabeledExample transform(const AdultRecord& r) const {
    require_fitted();
    std::vector<std::pair<std::size_t, double>> entries;
    entries.reserve(1 + kCategoricalColumns + kContinuousColumns);

    std::size_t bucket = 0;
    for (int boundary : kAgeBoundaries) bucket += boundary <= r.age;
    entries.push_back({bucket, 1.0});

    std::size_t base = kAgeBoundaries.size() + 1;
    for (std::size_t c = 0; c < kCategoricalColumns; ++c) {
      const auto it = index_[c].find(categorical(r, c));
      const std::size_t slot =
          it == index_[c].end() ? vocabs_[c].size() : it->second;
      entries.push_back({base + slot, 1.0});
      base += vocabs_[c].size() + 1;
    }
    for (std::size_t c = 0; c < kContinuousColumns; ++c) {
      const double value = stddev_[c] < 1e-12
                               ? 0.0
                               : (continuous(r, c) - mean_[c]) / stddev_[c];
      entries.push_back({base + c, value});
    }

    LabeledExample e;
    e.x = SparseFeatures(std::move(entries), dim_);
    e.y = static_cast<double>(r.income);
    e.z = r.sex == "Male" ? 1.0 : 0.0;
    return e;
  }

  const std::vector<std::vector<std::string>>& vocabs() const {
    require_fitted();
    return vocabs_;
  }

 private:
  static const std::string& categorical(const AdultRecord& r, std::size_t c) {
    switch (c) {
      case 0: return r.workclass;
      case 1: return r.education;
      case 2: return r.marital_status;
      case 3: return r.occupation;
      case 4: return r.relationship;
      case 5: return r.race;
      case 6: return r.sex;
      default: return r.native_country;
    }
  }

  static double continuous(const AdultRecord& r, std::size_t c) {
    switch (c) {
      case 0: return r.education_num;
      case 1: return r.capital_gain;
      case 2: return r.capital_loss;
      default: return r.hours_per_week;
    }
  }

  void require_fitted() const {
    if (!fitted_) {
      throw std::logic_error("AdultCodec: fit() has not been called");
    }
  }

  bool fitted_ = false;
  std::vector<std::vector<std::string>> vocabs_;
  std::vector<std::unordered_map<std::string, std::size_t>> index_;
  std::array<double, kContinuousColumns> mean_{};
  std::array<double, kContinuousColumns> stddev_{};
  std::size_t dim_ = 0;
};

inline std::vector<LabeledExample> encode_features(
    const AdultCodec& codec, const std::vector<AdultRecord>& records) {
  std::vector<LabeledExample> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(codec.transform(r));
  return out;
}

}  // namespace debias
