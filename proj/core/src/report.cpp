#include "hscan/report.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>
#include <json.hpp>

#include "hscan/text_io.hpp"

namespace hscan {

namespace {

std::string num(double v) { return std::isfinite(v) ? format_double(v) : ""; }

std::string histogram_csv(const Histogram& h) {
  std::string out = "bin_lo,bin_hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    fmt::format_to(std::back_inserter(out), "{},{},{}\n", format_double(h.bin_lo(i)),
                   format_double(h.bin_lo(i) + h.width), h.counts[i]);
  }
  return out;
}

Histogram auto_histogram(const std::vector<double>& values, double min_width) {
  if (values.empty()) return Histogram{};
  const double width = std::max(freedman_diaconis_width(values), min_width);
  const double lo = std::floor(*std::min_element(values.begin(), values.end()) / width) * width;
  double hi = *std::max_element(values.begin(), values.end());
  if (!(hi > lo)) hi = lo + width;
  return make_histogram(values, lo, hi, width);
}

}  // namespace

void write_reports(const ScanSnapshot& s, const LabelView& labels, const std::filesystem::path& out_dir,
                   const ReportOptions& options) {
  std::filesystem::create_directories(out_dir);
  const auto coherence_of = [&](int id) { return s.diagnostics[static_cast<std::size_t>(id)].coherence; };
  const auto size_of = [&](int id) { return s.sizes[static_cast<std::size_t>(id)]; };

  {
    const auto rows = rank_emerging(s.fits, size_of, coherence_of, [&](int id) { return labels.is_junk(id); },
                                    options.rank);
    std::string out = "rank,topic_id,topic_name,super_topic_name,size,cagr,err_cagr,coherence,top_terms\n";
    int rank = 1;
    for (const auto& r : rows) {
      const auto* label = labels.find(r.topic_id);
      std::string terms;
      for (const auto w : top_term_indices(s.model, static_cast<std::size_t>(r.topic_id), 5)) {
        if (!terms.empty()) terms += ' ';
        terms += s.vocabulary[w];
      }
      fmt::format_to(std::back_inserter(out), "{},{},{},{},{},{},{},{},{}\n", rank++, r.topic_id,
                     csv_escape(label ? label->topic_name : ""), csv_escape(label ? label->super_topic_name : ""),
                     num(r.size), num(r.cagr), num(r.err_cagr), num(r.coherence), csv_escape(terms));
    }
    write_file_atomic(out_dir / "table1.csv", out);
  }

  {
    std::map<std::string, std::vector<int>> members;
    for (const auto& [id, r] : labels.current) {
      if (r.junk || r.super_topic_name.empty()) continue;
      if (id < 0 || static_cast<std::size_t>(id) >= s.num_topics()) continue;
      members[r.super_topic_name].push_back(id);
    }
    struct Row {
      std::string name;
      std::size_t count;
      double size;
      FitResult fit;
    };
    std::vector<Row> rows;
    for (const auto& [name, ids] : members) {
      double size = 0.0;
      for (const int id : ids) size += size_of(id);
      rows.push_back({name, ids.size(), size, aggregate_supertopic_fit(ids, s.yearly, s.manifest.error_scale)});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      const bool fa = std::isfinite(a.fit.cagr);
      const bool fb = std::isfinite(b.fit.cagr);
      if (fa != fb) return fa;
      if (fa && a.fit.cagr != b.fit.cagr) return a.fit.cagr > b.fit.cagr;
      return a.name < b.name;
    });
    std::string out = "super_topic_name,members,size,cagr,err_cagr,chi2_red,converged\n";
    for (const auto& r : rows) {
      fmt::format_to(std::back_inserter(out), "{},{},{},{},{},{},{}\n", csv_escape(r.name), r.count, num(r.size),
                     num(r.fit.cagr), num(r.fit.err_cagr), num(r.fit.chi2_red), r.fit.converged ? 1 : 0);
    }
    write_file_atomic(out_dir / "table2.csv", out);
  }

  {
    std::vector<double> cagr;
    std::vector<double> err;
    std::vector<double> chi;
    for (const auto& f : s.fits) {
      if (!f.fittable || !f.converged || !std::isfinite(f.cagr)) continue;
      cagr.push_back(f.cagr);
      err.push_back(f.err_cagr);
      chi.push_back(f.chi2_red);
    }
    nlohmann::ordered_json stats;
    stats["n_fits"] = cagr.size();
    if (cagr.size() >= 2) {
      const auto st = cagr_distribution_stats(cagr, err);
      write_file_atomic(out_dir / "cagr_histogram.csv", histogram_csv(st.histogram));
      stats["mean"] = st.mean;
      stats["std"] = st.std;
      stats["mean_std_err"] = st.mean_std_err;
      stats["n_excluded"] = st.n_excluded;
      stats["passes"] = st.passes;
    } else {
      write_file_atomic(out_dir / "cagr_histogram.csv", "bin_lo,bin_hi,count\n");
    }
    write_file_atomic(out_dir / "cagr_stats.json", stats.dump(2) + "\n");
    write_file_atomic(out_dir / "chi2_histogram.csv",
                      histogram_csv(chi.empty() ? Histogram{} : auto_histogram(chi, 0.05)));
  }

  {
    std::vector<double> coh;
    for (const auto& d : s.diagnostics) {
      if (d.has_coherence()) coh.push_back(d.coherence);
    }
    write_file_atomic(out_dir / "coherence_histogram.csv",
                      histogram_csv(coh.empty() ? Histogram{} : auto_histogram(coh, 1.0)));
  }

  {
    std::string out = "topic_id,cagr_fit,err_cagr,cagr_two_point\n";
    const std::size_t last = s.yearly.num_years() ? s.yearly.num_years() - 1 : 0;
    for (const auto& f : s.fits) {
      if (!f.fittable || !f.converged) continue;
      double two_point = kNaN;
      const std::size_t row = s.yearly.row_of(f.topic_id);
      const double n0 = s.yearly.counts(row, 0);
      const double nn = s.yearly.counts(row, last);
      if (n0 > 0.0 && nn > 0.0 && last > 0) two_point = cagr_two_point(n0, nn, 0, static_cast<int>(last));
      fmt::format_to(std::back_inserter(out), "{},{},{},{}\n", f.topic_id, num(f.cagr), num(f.err_cagr), num(two_point));
    }
    write_file_atomic(out_dir / "fig3_calibration.csv", out);
  }
}

}  // namespace hscan
