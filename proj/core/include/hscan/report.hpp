#pragma once

#include <filesystem>

#include "hscan/growth.hpp"
#include "hscan/label_store.hpp"
#include "hscan/snapshot.hpp"

namespace hscan {

struct ReportOptions {
  RankOptions rank;
  ScreenOptions screen;
};

/// Writes into `out_dir`:
///   table1.csv             top-N emerging topics with labels and top terms
///   table2.csv             super topics refit on summed member counts, by cagr descending
///   cagr_histogram.csv     bins of the 3-sigma-filtered CAGR distribution (+ cagr_stats.json)
///   coherence_histogram.csv
///   chi2_histogram.csv
///   fig3_calibration.csv   fitted vs two-point CAGR, one row per converged fit
void write_reports(const ScanSnapshot& snapshot, const LabelView& labels, const std::filesystem::path& out_dir,
                   const ReportOptions& options = {});

}  // namespace hscan
