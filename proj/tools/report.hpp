#pragma once

#include <array>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>

#include "debias/fairness.hpp"

namespace debias::tools {

// Renders confusion matrices side by side, one block per group. When both a
// plain and a debiased report are supplied the columns line up so the shift
// in each cell is visible at a glance.
inline std::string render_report(const std::optional<FairnessReport>& plain,
                                 const std::optional<FairnessReport>& fair,
                                 const std::array<std::string, 2>& group_names) {
  std::ostringstream os;
  os << std::fixed;

  auto cell = [](std::int64_t v) {
    std::ostringstream c;
    c << std::setw(9) << v;
    return c.str();
  };
  auto num = [](double v, int prec = 4) {
    std::ostringstream c;
    c << std::setw(9) << std::fixed << std::setprecision(prec) << v;
    return c.str();
  };

  const bool both = plain.has_value() && fair.has_value();
  const std::string pad(6, ' ');

  os << std::left << std::setw(22) << "";
  if (plain) os << std::setw(24) << "Without debiasing" << pad;
  if (fair) os << std::setw(24) << "With debiasing";
  os << "\n";

  for (int g = 0; g < 2; ++g) {
    os << std::left << std::setw(22) << group_names[g];
    for (int pass = 0; pass < (both ? 2 : 1); ++pass) {
      os << std::right << std::setw(9) << "Pred 0" << std::setw(9) << "Pred 1"
         << pad;
    }
    os << "\n";
    const char* row_label[2] = {"  True 0", "  True 1"};
    for (int yrow = 0; yrow < 2; ++yrow) {
      os << std::left << std::setw(22) << row_label[yrow] << std::right;
      for (const auto* rep : {&plain, &fair}) {
        if (!rep->has_value()) continue;
        const auto& c = (*rep)->confusion.groups[g];
        if (yrow == 0) {
          os << cell(c.tn) << cell(c.fp) << pad;
        } else {
          os << cell(c.fn) << cell(c.tp) << pad;
        }
      }
      os << "\n";
    }
  }

  os << "\n";
  os << std::left << std::setw(22) << "" << std::right;
  for (const auto* rep : {&plain, &fair}) {
    if (!rep->has_value()) continue;
    os << std::setw(9) << "FPR" << std::setw(9) << "FNR" << pad;
  }
  os << "\n";
  for (int g = 0; g < 2; ++g) {
    os << std::left << std::setw(22) << group_names[g] << std::right;
    for (const auto* rep : {&plain, &fair}) {
      if (!rep->has_value()) continue;
      const auto& r = (*rep)->group_rates[g];
      os << num(r.fpr) << num(r.fnr) << pad;
    }
    os << "\n";
  }

  os << "\n";
  auto summary_line = [&](const std::string& label, auto getter) {
    os << std::left << std::setw(22) << label << std::right;
    for (const auto* rep : {&plain, &fair}) {
      if (!rep->has_value()) continue;
      os << num(getter(**rep)) << std::setw(9) << "" << pad;
    }
    os << "\n";
  };
  summary_line("Accuracy", [](const FairnessReport& r) { return r.accuracy; });
  summary_line("DP gap", [](const FairnessReport& r) { return r.dp_gap; });
  summary_line("FPR gap (y=0)",
               [](const FairnessReport& r) { return r.eo_gap_y0; });
  summary_line("FNR gap (y=1)",
               [](const FairnessReport& r) { return r.eo_gap_y1; });
  summary_line("p-value (y=0)",
               [](const FairnessReport& r) { return r.p_value_y0; });
  summary_line("p-value (y=1)",
               [](const FairnessReport& r) { return r.p_value_y1; });
  return os.str();
}

}  // namespace debias::tools
