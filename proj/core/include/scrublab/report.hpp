#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "scrublab/metrics.hpp"

namespace scrublab {

struct report_row {
  std::string backbone;
  std::string task;
  std::string data;
  std::string criterion;
  std::string modality;
  std::string variant;
  double val_accuracy = 0.0;
  double ipf = 0.0;
  double ham_aac = 0.0;
  double acc_auc = 0.0;
  double acc_at_1pct = 0.0;
  double acc_at_5pct = 0.0;
  double acc_at_100 = 0.0;
};

void write_report_csv(const std::vector<report_row>& rows, const std::filesystem::path& file,
                      std::uint64_t spec_hash);

void write_curves_csv(const curve_report& attack, const curve_report& baseline,
                      const std::filesystem::path& file, std::uint64_t spec_hash);

// Two stacked panels, top-p accuracy and top-p hamming, attack and baseline
// overlaid per panel.
void write_curves_svg(const curve_report& attack, const curve_report& baseline,
                      const std::filesystem::path& file, std::uint64_t spec_hash);

}  // namespace scrublab
