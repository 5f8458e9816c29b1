#include "hscan/growth.hpp"

#include <algorithm>
#include <array>
#include <cfloat>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "hscan/error.hpp"
#include "hscan/parallel.hpp"
#include "hscan/text_io.hpp"

namespace hscan {

std::size_t YearlyCounts::row_of(int topic_id) const {
  const auto it = std::find(topic_ids.begin(), topic_ids.end(), topic_id);
  if (it == topic_ids.end()) throw NotFoundError(fmt::format("unknown topic {}", topic_id));
  return static_cast<std::size_t>(it - topic_ids.begin());
}

YearlyCounts yearly_counts_from_sums(const GroupedSums& by_year, YearWindow window) {
  if (by_year.attribute != DocumentAttribute::year) throw InputError("expected sums grouped by year");
  YearlyCounts out;
  out.first_year = window.first;
  const std::size_t K = by_year.sums.rows();
  out.topic_ids.resize(K);
  std::iota(out.topic_ids.begin(), out.topic_ids.end(), 0);
  out.counts = Matrix(K, static_cast<std::size_t>(window.size()));
  for (std::size_t g = 0; g < by_year.groups.size(); ++g) {
    const auto year = parse_int(by_year.groups[g]);
    if (!year || !window.contains(static_cast<int>(*year))) {
      throw InputError(fmt::format("year group '{}' outside {}-{}", by_year.groups[g], window.first, window.last));
    }
    const auto col = static_cast<std::size_t>(*year - window.first);
    for (std::size_t k = 0; k < K; ++k) out.counts(k, col) = by_year.sums(k, g);
  }
  return out;
}

YearlyCounts read_yearly_counts(const std::filesystem::path& path, YearWindow window) {
  const auto table = read_csv(path);
  const std::string origin = path.string();
  const auto c_topic = table.column("topic_id", origin);
  const auto c_year = table.column("year", origin);
  const auto c_count = table.column("count", origin);
  std::map<int, std::vector<double>> rows;
  std::map<std::pair<int, int>, bool> seen;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t line = table.row_lines[r];
    const auto topic = parse_int(row[c_topic]);
    const auto year = parse_int(row[c_year]);
    const auto count = parse_double(row[c_count]);
    if (!topic || !year || !count || !std::isfinite(*count) || *count < 0) {
      throw FormatError(origin, line, "expected integer topic_id, integer year and non-negative count");
    }
    if (!window.contains(static_cast<int>(*year))) {
      throw FormatError(origin, line, fmt::format("year {} outside {}-{}", *year, window.first, window.last));
    }
    if (!seen.emplace(std::pair{static_cast<int>(*topic), static_cast<int>(*year)}, true).second) {
      throw FormatError(origin, line, fmt::format("duplicate row for topic {} year {}", *topic, *year));
    }
    auto& values = rows[static_cast<int>(*topic)];
    values.resize(static_cast<std::size_t>(window.size()), 0.0);
    values[static_cast<std::size_t>(*year - window.first)] = *count;
  }
  YearlyCounts out;
  out.first_year = window.first;
  out.counts = Matrix(rows.size(), static_cast<std::size_t>(window.size()));
  std::size_t r = 0;
  for (const auto& [topic, values] : rows) {
    out.topic_ids.push_back(topic);
    std::copy(values.begin(), values.end(), out.counts.row(r++).begin());
  }
  return out;
}

void write_yearly_counts(const std::filesystem::path& path, const YearlyCounts& counts) {
  std::string out = "topic_id,year,count\n";
  for (std::size_t r = 0; r < counts.topic_ids.size(); ++r) {
    for (std::size_t y = 0; y < counts.num_years(); ++y) {
      fmt::format_to(std::back_inserter(out), "{},{},{}\n", counts.topic_ids[r],
                     counts.first_year + static_cast<int>(y), format_double(counts.counts(r, y)));
    }
  }
  write_file_atomic(path, out);
}

TopicTimeSeries make_series(int topic_id, std::span<const double> n, double scale) {
  if (!(scale > 0.0)) throw InputError("error scale must be positive");
  TopicTimeSeries ts;
  ts.topic_id = topic_id;
  for (std::size_t i = 0; i < n.size(); ++i) {
    ts.t.push_back(static_cast<double>(i));
    ts.n.push_back(n[i]);
    ts.sigma.push_back(scale * std::max(std::sqrt(n[i]), 1.0));
  }
  return ts;
}

SeriesSet build_time_series(const YearlyCounts& counts, double scale) {
  SeriesSet out;
  for (std::size_t r = 0; r < counts.topic_ids.size(); ++r) {
    if (counts.num_years() < 3) {
      out.excluded.push_back({counts.topic_ids[r], fmt::format("only {} years of data", counts.num_years())});
      continue;
    }
    out.series.push_back(make_series(counts.topic_ids[r], counts.counts.row(r), scale));
  }
  return out;
}

double cagr_from_k(double k) { return 100.0 * (std::exp(k) - 1.0); }

double cagr_error_from_k(double k, double err_k) { return 100.0 * std::exp(k) * err_k; }

double cagr_two_point(double n0, double nn, int t0, int tn) {
  if (!(n0 > 0.0)) throw InputError("two-point CAGR is undefined for a non-positive initial count");
  if (!(nn > 0.0)) throw InputError("two-point CAGR needs a positive final count");
  if (tn <= t0) throw InputError("two-point CAGR needs tn > t0");
  return 100.0 * (std::pow(nn / n0, 1.0 / static_cast<double>(tn - t0)) - 1.0);
}

namespace {

struct Normal {
  std::array<double, 3> m{};  // m00, m01, m11
  std::array<double, 2> g{};
};

double chi_square(const TopicTimeSeries& ts, std::span<const double> tau, double a, double k) {
  double chi2 = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double r = (ts.n[i] - a * std::exp(k * tau[i])) / ts.sigma[i];
    chi2 += r * r;
  }
  return chi2;
}

Normal normal_equations(const TopicTimeSeries& ts, std::span<const double> tau, double a, double k) {
  Normal ne;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double w = 1.0 / (ts.sigma[i] * ts.sigma[i]);
    const double e = std::exp(k * tau[i]);
    const double ja = e;
    const double jk = a * tau[i] * e;
    const double r = ts.n[i] - a * e;
    ne.m[0] += w * ja * ja;
    ne.m[1] += w * ja * jk;
    ne.m[2] += w * jk * jk;
    ne.g[0] += w * ja * r;
    ne.g[1] += w * jk * r;
  }
  return ne;
}

bool solve2(double m00, double m01, double m11, double g0, double g1, double& x0, double& x1) {
  const double det = m00 * m11 - m01 * m01;
  if (!(det > 0.0) || !std::isfinite(det)) return false;
  x0 = (m11 * g0 - m01 * g1) / det;
  x1 = (m00 * g1 - m01 * g0) / det;
  return std::isfinite(x0) && std::isfinite(x1);
}

}  // namespace

FitResult fit_exponential(const TopicTimeSeries& ts, const FitOptions& options) {
  const std::size_t n_points = ts.t.size();
  if (ts.n.size() != n_points || ts.sigma.size() != n_points) {
    throw InputError("time series t, n and sigma lengths differ");
  }
  for (std::size_t i = 0; i < n_points; ++i) {
    if (!(ts.sigma[i] > 0.0)) throw InputError(fmt::format("topic {}: sigma must be positive", ts.topic_id));
    if (!(ts.n[i] >= 0.0)) throw InputError(fmt::format("topic {}: counts must be non-negative", ts.topic_id));
    if (i > 0 && !(ts.t[i] > ts.t[i - 1])) {
      throw InputError(fmt::format("topic {}: t must be strictly increasing", ts.topic_id));
    }
  }
  FitResult fit;
  fit.topic_id = ts.topic_id;
  fit.dof = static_cast<int>(n_points) - 2;
  if (n_points < 3) {
    fit.fittable = false;
    fit.reason = "fewer than 3 points";
    return fit;
  }
  if (std::all_of(ts.n.begin(), ts.n.end(), [](double v) { return v == 0.0; })) {
    fit.fittable = false;
    fit.n0_hat = 0.0;
    fit.reason = "all-zero series";
    return fit;
  }

  // Fit A exp(k tau) with tau = t - mean(t), then shift A back to t = 0.
  const double t_bar = std::accumulate(ts.t.begin(), ts.t.end(), 0.0) / static_cast<double>(n_points);
  std::vector<double> tau(n_points);
  for (std::size_t i = 0; i < n_points; ++i) tau[i] = ts.t[i] - t_bar;

  double a = 0.0;
  double k = 0.0;
  {
    std::vector<std::size_t> pos;
    for (std::size_t i = 0; i < n_points; ++i) {
      if (ts.n[i] > 0.0) pos.push_back(i);
    }
    bool seeded = false;
    if (pos.size() >= 2) {
      double mx = 0.0;
      double my = 0.0;
      for (const auto i : pos) {
        mx += tau[i];
        my += std::log(ts.n[i]);
      }
      mx /= static_cast<double>(pos.size());
      my /= static_cast<double>(pos.size());
      double sxx = 0.0;
      double sxy = 0.0;
      for (const auto i : pos) {
        sxx += (tau[i] - mx) * (tau[i] - mx);
        sxy += (tau[i] - mx) * (std::log(ts.n[i]) - my);
      }
      if (sxx > 0.0) {
        k = sxy / sxx;
        a = std::exp(my - k * mx);
        seeded = std::isfinite(a) && std::isfinite(k);
      }
    }
    if (!seeded) {
      k = 0.0;
      a = std::accumulate(ts.n.begin(), ts.n.end(), 0.0) / static_cast<double>(n_points);
    }
  }

  double chi2 = chi_square(ts, tau, a, k);
  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;
  for (; iter < options.max_iterations && !converged; ++iter) {
    const Normal ne = normal_equations(ts, tau, a, k);
    bool accepted = false;
    while (!accepted) {
      const double d0 = std::max(ne.m[0], DBL_MIN);
      const double d2 = std::max(ne.m[2], DBL_MIN);
      double da = 0.0;
      double dk = 0.0;
      bool ok = solve2(ne.m[0] + lambda * d0, ne.m[1], ne.m[2] + lambda * d2, ne.g[0], ne.g[1], da, dk);
      double trial = kNaN;
      if (ok) {
        trial = chi_square(ts, tau, a + da, k + dk);
        ok = a + da >= 0.0 && std::isfinite(trial) && trial <= chi2;
      }
      if (!ok) {
        lambda *= 10.0;
        if (lambda > 1e20) {
          // No damped step lowers chi2 at machine precision.
          converged = true;
          break;
        }
        continue;
      }
      accepted = true;
      const double rel = chi2 > 0.0 ? (chi2 - trial) / chi2 : 0.0;
      const double step = std::hypot(da, dk);
      const double size = std::hypot(a, k);
      a += da;
      k += dk;
      chi2 = trial;
      lambda = std::max(lambda / 10.0, 1e-15);
      if (rel < options.rel_chi2_tol || step < options.step_tol * (size + options.step_tol)) converged = true;
    }
  }
  if (converged) {
    for (int polish = 0; polish < 3; ++polish) {
      const Normal ne = normal_equations(ts, tau, a, k);
      double da = 0.0;
      double dk = 0.0;
      if (!solve2(ne.m[0], ne.m[1], ne.m[2], ne.g[0], ne.g[1], da, dk)) break;
      const double trial = chi_square(ts, tau, a + da, k + dk);
      if (!(a + da >= 0.0) || !(trial <= chi2)) break;
      a += da;
      k += dk;
      chi2 = trial;
    }
  }

  fit.iterations = iter;
  fit.converged = converged;
  if (!converged) fit.reason = fmt::format("no convergence after {} iterations", iter);
  fit.chi2 = chi2;
  fit.chi2_red = chi2 / static_cast<double>(fit.dof);
  fit.k_hat = k;
  fit.n0_hat = a * std::exp(-k * t_bar);

  const Normal ne = normal_equations(ts, tau, a, k);
  const double det = ne.m[0] * ne.m[2] - ne.m[1] * ne.m[1];
  if (det > 0.0 && std::isfinite(det)) {
    const double c00 = ne.m[2] / det * fit.chi2_red;
    const double c01 = -ne.m[1] / det * fit.chi2_red;
    const double c11 = ne.m[0] / det * fit.chi2_red;
    const double ga = std::exp(-k * t_bar);
    const double gk = -t_bar * fit.n0_hat;
    fit.err_k = std::sqrt(std::max(c11, 0.0));
    fit.err_n0 = std::sqrt(std::max(ga * ga * c00 + 2.0 * ga * gk * c01 + gk * gk * c11, 0.0));
  } else {
    fit.err_k = std::numeric_limits<double>::infinity();
    fit.err_n0 = std::numeric_limits<double>::infinity();
  }
  fit.cagr = cagr_from_k(fit.k_hat);
  fit.err_cagr = cagr_error_from_k(fit.k_hat, fit.err_k);
  return fit;
}

std::vector<FitResult> fit_all(const YearlyCounts& counts, double scale, unsigned threads) {
  const auto set = build_time_series(counts, scale);
  std::vector<FitResult> fitted(set.series.size());
  parallel_for(set.series.size(), threads, [&](std::size_t i) { fitted[i] = fit_exponential(set.series[i]); });
  std::map<int, FitResult> by_topic;
  for (auto& f : fitted) by_topic[f.topic_id] = std::move(f);
  for (const auto& ex : set.excluded) {
    FitResult f;
    f.topic_id = ex.topic_id;
    f.fittable = false;
    f.reason = ex.reason;
    f.dof = static_cast<int>(counts.num_years()) - 2;
    by_topic[ex.topic_id] = f;
  }
  std::vector<FitResult> out;
  out.reserve(counts.topic_ids.size());
  for (const int id : counts.topic_ids) out.push_back(by_topic.at(id));
  return out;
}

CalibrationResult calibrate_error_scale(const YearlyCounts& counts, const CalibrationOptions& options) {
  CalibrationResult result;
  std::size_t fittable = 0;
  if (counts.num_years() >= 3) {
    for (std::size_t r = 0; r < counts.topic_ids.size(); ++r) {
      const auto row = counts.counts.row(r);
      if (std::any_of(row.begin(), row.end(), [](double v) { return v > 0.0; })) ++fittable;
    }
  }
  if (fittable < options.min_topics) {
    result.skipped = true;
    result.diagnostic = fmt::format("calibration skipped: {} fittable topics, {} required", fittable,
                                    options.min_topics);
    return result;
  }

  double scale = 1.0;
  for (int pass = 0; pass < options.max_iter; ++pass) {
    const auto fits = fit_all(counts, scale, options.threads);
    std::vector<double> chi;
    for (const auto& f : fits) {
      if (f.fittable && f.converged && std::isfinite(f.chi2_red)) chi.push_back(f.chi2_red);
    }
    result.iterations = pass + 1;
    const double largest = chi.empty() ? 0.0 : *std::max_element(chi.begin(), chi.end());
    if (!(largest > 1e-12)) {
      result.aborted = true;
      result.scale = scale;
      result.diagnostic = chi.empty() ? "calibration aborted: no converged fits"
                                      : "calibration aborted: every chi2_red is zero (exact-model ensemble)";
      return result;
    }
    const auto mode = histogram_mode(chi, options.hist_lo, options.hist_hi, options.min_bin_width);
    result.history.push_back({scale, mode.mode});
    result.scale = scale;
    result.mode_chi2 = mode.mode;
    if (std::abs(mode.mode - 1.0) <= options.tol) {
      result.converged = true;
      return result;
    }
    if (!(mode.mode > 0.0)) {
      result.aborted = true;
      result.diagnostic = "calibration aborted: chi2_red mode is zero";
      return result;
    }
    scale *= std::sqrt(mode.mode);
  }
  result.diagnostic = fmt::format("calibration stopped after {} passes with mode {}", options.max_iter,
                                  format_double(result.mode_chi2));
  return result;
}

std::string_view to_string(ScreenBucket bucket) {
  switch (bucket) {
    case ScreenBucket::good: return "good";
    case ScreenBucket::large_chi_precise: return "large_chi_precise";
    case ScreenBucket::rest: return "rest";
  }
  return "rest";
}

double pct_error(const FitResult& fit) {
  if (!std::isfinite(fit.cagr) || fit.cagr == 0.0 || !std::isfinite(fit.err_cagr)) return kNaN;
  return 100.0 * std::abs(fit.err_cagr / fit.cagr);
}

ScreenBucket classify_fit(const FitResult& fit, const ScreenOptions& options) {
  if (!fit.fittable || !fit.converged) return ScreenBucket::rest;
  const double pct = pct_error(fit);
  if (!std::isfinite(pct) || !(pct < options.max_pct_err)) return ScreenBucket::rest;
  const bool in_band = fit.chi2_red > options.chi_lo && fit.chi2_red < options.chi_hi;
  return in_band ? ScreenBucket::good : ScreenBucket::large_chi_precise;
}

ScreenPartition screen_good_neighborhood(std::span<const FitResult> fits, const ScreenOptions& options) {
  ScreenPartition out;
  for (const auto& f : fits) {
    switch (classify_fit(f, options)) {
      case ScreenBucket::good: out.good.push_back(f.topic_id); break;
      case ScreenBucket::large_chi_precise: out.large_chi_precise.push_back(f.topic_id); break;
      case ScreenBucket::rest: out.rest.push_back(f.topic_id); break;
    }
  }
  return out;
}

CagrDistributionStats cagr_distribution_stats(std::span<const double> cagr, std::span<const double> err_cagr,
                                              double bin_width) {
  const std::size_t n = cagr.size();
  if (n < 2) throw InputError("CAGR statistics need at least 2 fits");
  if (err_cagr.size() != n) throw InputError("cagr and err_cagr lengths differ");

  CagrDistributionStats stats;
  stats.included.assign(n, true);
  for (int pass = 1; pass <= 10; ++pass) {
    stats.passes = pass;
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!stats.included[i]) continue;
      sum += cagr[i];
      sum_sq += cagr[i] * cagr[i];
      ++count;
    }
    std::vector<bool> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = sum;
      double ss = sum_sq;
      std::size_t c = count;
      if (stats.included[i]) {
        s -= cagr[i];
        ss -= cagr[i] * cagr[i];
        --c;
      }
      if (c < 2) {
        next[i] = true;
        continue;
      }
      const double mean = s / static_cast<double>(c);
      double var = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && stats.included[j]) var += (cagr[j] - mean) * (cagr[j] - mean);
      }
      const double sd = std::sqrt(var / static_cast<double>(c - 1));
      next[i] = std::abs(cagr[i] - mean) <= 3.0 * sd;
    }
    const bool stable = next == stats.included;
    stats.included = std::move(next);
    if (stable) break;
  }

  std::vector<double> kept;
  double err_sum = 0.0;
  std::size_t err_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!stats.included[i]) {
      ++stats.n_excluded;
      continue;
    }
    kept.push_back(cagr[i]);
    if (std::isfinite(err_cagr[i])) {
      err_sum += err_cagr[i];
      ++err_count;
    }
  }
  if (kept.empty()) throw InputError("3-sigma exclusion removed every value");
  stats.mean = std::accumulate(kept.begin(), kept.end(), 0.0) / static_cast<double>(kept.size());
  double var = 0.0;
  for (const double v : kept) var += (v - stats.mean) * (v - stats.mean);
  stats.std = kept.size() > 1 ? std::sqrt(var / static_cast<double>(kept.size() - 1)) : 0.0;
  stats.mean_std_err = err_count ? err_sum / static_cast<double>(err_count) : kNaN;

  double width = bin_width > 0.0 ? bin_width : freedman_diaconis_width(kept);
  if (!(width > 0.0)) width = 1.0;
  const double lo = std::floor(*std::min_element(kept.begin(), kept.end()) / width) * width;
  double hi = *std::max_element(kept.begin(), kept.end());
  if (!(hi > lo)) hi = lo + width;
  stats.histogram = make_histogram(kept, lo, hi, width);
  return stats;
}

std::vector<EmergingRow> rank_emerging(std::span<const FitResult> fits,
                                       const std::function<double(int)>& size_of,
                                       const std::function<double(int)>& coherence_of,
                                       const std::function<bool(int)>& is_junk, const RankOptions& options) {
  std::vector<EmergingRow> rows;
  for (const auto& f : fits) {
    if (!f.fittable || !f.converged || !std::isfinite(f.cagr)) continue;
    const double coh = coherence_of(f.topic_id);
    if (!std::isfinite(coh) || coh < options.coherence_floor) continue;
    if (is_junk && is_junk(f.topic_id)) continue;
    rows.push_back({f.topic_id, f.cagr, f.err_cagr, size_of(f.topic_id), coh});
  }
  std::sort(rows.begin(), rows.end(), [](const EmergingRow& a, const EmergingRow& b) {
    return a.cagr != b.cagr ? a.cagr > b.cagr : a.topic_id < b.topic_id;
  });
  if (rows.size() > options.top_n) rows.resize(options.top_n);
  return rows;
}

FitResult aggregate_supertopic_fit(std::span<const int> member_topics, const YearlyCounts& counts, double scale) {
  if (member_topics.empty()) throw InputError("super topic has no member topics");
  std::vector<double> total(counts.num_years(), 0.0);
  for (const int id : member_topics) {
    const auto row = counts.counts.row(counts.row_of(id));
    for (std::size_t y = 0; y < total.size(); ++y) total[y] += row[y];
  }
  auto fit = fit_exponential(make_series(-1, total, scale));
  return fit;
}

namespace {

std::string fit_status(const FitResult& f) {
  if (!f.fittable) return "unfittable: " + f.reason;
  if (!f.converged) return "not_converged";
  return "ok";
}

}  // namespace

void write_fits_csv(const std::filesystem::path& path, std::span<const FitResult> fits) {
  std::string out = "topic_id,n0,k,err_k,cagr,err_cagr,chi2_red,dof,converged,err_n0,status\n";
  for (const auto& f : fits) {
    fmt::format_to(std::back_inserter(out), "{},{},{},{},{},{},{},{},{},{},{}\n", f.topic_id,
                   format_double(f.n0_hat), format_double(f.k_hat), format_double(f.err_k),
                   format_double(f.cagr), format_double(f.err_cagr), format_double(f.chi2_red), f.dof,
                   f.converged ? 1 : 0, format_double(f.err_n0), csv_escape(fit_status(f)));
  }
  write_file_atomic(path, out);
}

std::vector<FitResult> read_fits_csv(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  const std::string origin = path.string();
  const char* names[] = {"topic_id", "n0",   "k",         "err_k", "cagr",  "err_cagr",
                         "chi2_red", "dof",  "converged", "err_n0", "status"};
  std::size_t col[11];
  for (std::size_t i = 0; i < 11; ++i) col[i] = table.column(names[i], origin);
  std::vector<FitResult> out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const auto num = [&](std::size_t c) {
      const auto v = parse_double(row[col[c]]);
      if (!v) throw FormatError(origin, table.row_lines[r], fmt::format("invalid {} '{}'", names[c], row[col[c]]));
      return *v;
    };
    FitResult f;
    f.topic_id = static_cast<int>(num(0));
    f.n0_hat = num(1);
    f.k_hat = num(2);
    f.err_k = num(3);
    f.cagr = num(4);
    f.err_cagr = num(5);
    f.chi2_red = num(6);
    f.dof = static_cast<int>(num(7));
    f.converged = num(8) != 0.0;
    f.err_n0 = num(9);
    f.chi2 = f.chi2_red * f.dof;
    const std::string& status = row[col[10]];
    if (status.rfind("unfittable: ", 0) == 0) {
      f.fittable = false;
      f.reason = status.substr(12);
    } else if (status == "not_converged") {
      f.reason = "not converged";
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace hscan
