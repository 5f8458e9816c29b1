#pragma once

#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "hscan/corpus.hpp"
#include "hscan/dense_matrix.hpp"
#include "hscan/histogram.hpp"
#include "hscan/topic_model.hpp"

namespace hscan {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

/// Per-topic yearly fractional counts: counts(topic, year - first_year).
struct YearlyCounts {
  std::vector<int> topic_ids;
  int first_year = 0;
  Matrix counts;

  std::size_t num_years() const noexcept { return counts.cols(); }
  std::size_t row_of(int topic_id) const;  // throws NotFoundError
};

/// Takes the year-grouped doc_topic sums; years without documents are zero.
YearlyCounts yearly_counts_from_sums(const GroupedSums& by_year, YearWindow window);
/// CSV `topic_id,year,count`; missing (topic, year) cells are zero.
YearlyCounts read_yearly_counts(const std::filesystem::path& path, YearWindow window);
void write_yearly_counts(const std::filesystem::path& path, const YearlyCounts& counts);

struct TopicTimeSeries {
  int topic_id = 0;
  std::vector<double> t;
  std::vector<double> n;
  std::vector<double> sigma;
};

struct SeriesExclusion {
  int topic_id = 0;
  std::string reason;
};

struct SeriesSet {
  std::vector<TopicTimeSeries> series;
  std::vector<SeriesExclusion> excluded;
};

/// sigma_i = scale * max(sqrt(n_i), 1); t_i = year - first_year. Windows
/// shorter than 3 years exclude every topic.
SeriesSet build_time_series(const YearlyCounts& counts, double scale);
TopicTimeSeries make_series(int topic_id, std::span<const double> n, double scale);

struct FitResult {
  int topic_id = 0;
  double n0_hat = kNaN;
  double k_hat = kNaN;
  double err_n0 = kNaN;
  double err_k = kNaN;
  double cagr = kNaN;
  double err_cagr = kNaN;
  double chi2 = kNaN;
  double chi2_red = kNaN;
  int dof = 0;
  int iterations = 0;
  bool converged = false;
  bool fittable = true;
  std::string reason;  // why a topic is unfittable or not converged
};

double cagr_from_k(double k);
double cagr_error_from_k(double k, double err_k);
/// 100 * ((nn / n0)^(1 / (tn - t0)) - 1). Throws InputError unless
/// n0 > 0, nn > 0 and tn > t0.
double cagr_two_point(double n0, double nn, int t0, int tn);

struct FitOptions {
  int max_iterations = 200;
  double rel_chi2_tol = 1e-10;
  double step_tol = 1e-12;
};

/// Weighted Levenberg-Marquardt fit of n = N0 exp(k t). Parameter errors
/// come from the inverse normal matrix scaled by chi2_red.
FitResult fit_exponential(const TopicTimeSeries& ts, const FitOptions& options = {});

/// Fits every row of `counts`; excluded topics get an unfittable result.
/// Output follows counts.topic_ids.
std::vector<FitResult> fit_all(const YearlyCounts& counts, double scale, unsigned threads = 1);

struct CalibrationOptions {
  double tol = 0.05;
  int max_iter = 20;
  std::size_t min_topics = 100;
  double hist_lo = 0.0;
  double hist_hi = 5.0;
  double min_bin_width = 0.05;
  unsigned threads = 1;
};

struct CalibrationStep {
  double scale = 1.0;
  double mode_chi2 = kNaN;
};

struct CalibrationResult {
  double scale = 1.0;
  double mode_chi2 = kNaN;
  int iterations = 0;
  bool converged = false;
  bool skipped = false;  // too few fittable topics
  bool aborted = false;  // degenerate chi2_red distribution
  std::string diagnostic;
  std::vector<CalibrationStep> history;
};

/// Repeats: fit all topics at scale s, take the histogram mode m of chi2_red,
/// s <- s * sqrt(m); stops when |m - 1| <= tol or after max_iter fit passes.
CalibrationResult calibrate_error_scale(const YearlyCounts& counts, const CalibrationOptions& options = {});

enum class ScreenBucket { good, large_chi_precise, rest };
std::string_view to_string(ScreenBucket bucket);

struct ScreenOptions {
  double chi_lo = 0.5;
  double chi_hi = 1.5;
  double max_pct_err = 50.0;
};

/// 100 * |err_cagr / cagr|; NaN when cagr is 0 or not finite.
double pct_error(const FitResult& fit);
ScreenBucket classify_fit(const FitResult& fit, const ScreenOptions& options = {});

struct ScreenPartition {
  std::vector<int> good;
  std::vector<int> large_chi_precise;
  std::vector<int> rest;
};

ScreenPartition screen_good_neighborhood(std::span<const FitResult> fits, const ScreenOptions& options = {});

struct CagrDistributionStats {
  double mean = 0.0;
  double std = 0.0;
  double mean_std_err = 0.0;
  int n_excluded = 0;
  int passes = 0;
  std::vector<bool> included;
  Histogram histogram;
};

/// Iterated 3-sigma exclusion: each value is compared with the mean and
/// sample standard deviation of the currently included values other than
/// itself, and the included set is recomputed until it stops changing (at
/// most 10 passes). `bin_width` <= 0 selects a Freedman-Diaconis width.
CagrDistributionStats cagr_distribution_stats(std::span<const double> cagr, std::span<const double> err_cagr,
                                              double bin_width = 0.0);

struct EmergingRow {
  int topic_id = 0;
  double cagr = 0.0;
  double err_cagr = 0.0;
  double size = 0.0;
  double coherence = kNaN;
};

struct RankOptions {
  std::size_t top_n = 200;
  double coherence_floor = -1000.0;
};

/// Converged fits with coherence >= floor and not junk, by cagr descending
/// (ties by topic id), truncated to top_n. Topics without a coherence value
/// are left out.
std::vector<EmergingRow> rank_emerging(std::span<const FitResult> fits,
                                       const std::function<double(int)>& size_of,
                                       const std::function<double(int)>& coherence_of,
                                       const std::function<bool(int)>& is_junk,
                                       const RankOptions& options = {});

/// Sums the member rows into one series and fits it.
FitResult aggregate_supertopic_fit(std::span<const int> member_topics, const YearlyCounts& counts,
                                   double scale);

/// `topic_id,n0,k,err_k,cagr,err_cagr,chi2_red,dof,converged,err_n0,status`
void write_fits_csv(const std::filesystem::path& path, std::span<const FitResult> fits);
std::vector<FitResult> read_fits_csv(const std::filesystem::path& path);

}  // namespace hscan
