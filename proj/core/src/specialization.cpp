#include "hscan/specialization.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <fmt/format.h>

#include "hscan/corpus.hpp"
#include "hscan/error.hpp"
#include "hscan/growth.hpp"
#include "hscan/text_io.hpp"

namespace hscan {

namespace {

std::size_t index_in(const std::vector<std::string>& ids, std::string_view id) {
  const auto it = std::find(ids.begin(), ids.end(), id);
  return it == ids.end() ? static_cast<std::size_t>(-1) : static_cast<std::size_t>(it - ids.begin());
}

std::string join(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

}  // namespace

std::size_t ActivityMatrix::category_index(std::string_view id) const { return index_in(categories, id); }
std::size_t ActivityMatrix::entity_index(std::string_view id) const { return index_in(entities, id); }

LqTable compute_lq(const ActivityMatrix& m) {
  const std::size_t C = m.n.rows();
  const std::size_t E = m.n.cols();
  if (C == 0 || E == 0) throw InputError("activity matrix is empty");
  if (m.categories.size() != C || m.entities.size() != E) throw InputError("activity matrix ids do not match its shape");
  for (const double v : m.n.values()) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("activity counts must be finite and non-negative");
  }
  LqTable t;
  t.category_totals.assign(C, 0.0);
  t.entity_totals.assign(E, 0.0);
  for (std::size_t i = 0; i < C; ++i) {
    for (std::size_t j = 0; j < E; ++j) {
      t.category_totals[i] += m.n(i, j);
      t.entity_totals[j] += m.n(i, j);
    }
  }
  t.grand_total = std::accumulate(t.entity_totals.begin(), t.entity_totals.end(), 0.0);
  if (!(t.grand_total > 0.0)) throw InputError("activity matrix has zero total");

  t.lq = Matrix(C, E, kNaN);
  t.err = Matrix(C, E, kNaN);
  t.rel_err = Matrix(C, E, kNaN);
  t.flags.assign(C, std::vector<unsigned>(E, 0));
  for (std::size_t i = 0; i < C; ++i) {
    for (std::size_t j = 0; j < E; ++j) {
      const double nij = m.n(i, j);
      const double col = t.entity_totals[j];
      const double row = t.category_totals[i];
      unsigned& flag = t.flags[i][j];
      if (col == 0.0 || row == 0.0) {
        flag |= unsigned(LqFlag::lq_undefined) | unsigned(LqFlag::err_undefined);
        continue;
      }
      t.lq(i, j) = (nij / col) / (row / t.grand_total);
      if (nij == 0.0) {
        flag |= unsigned(LqFlag::err_undefined);
        continue;
      }
      const double rel = std::sqrt(1.0 / nij + 1.0 / col + 1.0 / row + 1.0 / t.grand_total);
      t.rel_err(i, j) = rel;
      t.err(i, j) = rel * t.lq(i, j);
      if (rel > 1.0) flag |= unsigned(LqFlag::low_confidence);
    }
  }
  return t;
}

Matrix propagate_lq_error(const ActivityMatrix& m) { return compute_lq(m).err; }

std::string flag_string(unsigned flags) {
  std::string out;
  const auto add = [&](const char* name) {
    if (!out.empty()) out += '|';
    out += name;
  };
  if (flags & unsigned(LqFlag::lq_undefined)) add("lq_undefined");
  if (flags & unsigned(LqFlag::err_undefined)) add("err_undefined");
  if (flags & unsigned(LqFlag::low_confidence)) add("low_confidence");
  return out;
}

std::string_view to_string(Quadrant q) {
  switch (q) {
    case Quadrant::I: return "I";
    case Quadrant::II: return "II";
    case Quadrant::III: return "III";
    case Quadrant::IV: return "IV";
    case Quadrant::unclassified: return "unclassified";
  }
  return "unclassified";
}

Quadrant quadrant(double lq_a, double lq_b) {
  if (!std::isfinite(lq_a) || !std::isfinite(lq_b)) return Quadrant::unclassified;
  const bool a = lq_a > 1.0;
  const bool b = lq_b > 1.0;
  if (a && b) return Quadrant::I;
  if (a) return Quadrant::II;
  if (b) return Quadrant::IV;
  return Quadrant::III;
}

std::vector<Quadrant> quadrant_classify(std::span<const double> lqs_a, std::span<const double> lqs_b) {
  if (lqs_a.size() != lqs_b.size()) throw InputError("quadrant inputs cover different category sets");
  std::vector<Quadrant> out(lqs_a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = quadrant(lqs_a[i], lqs_b[i]);
  return out;
}

ActivityMatrix activity_from_sums(const GroupedSums& sums) {
  ActivityMatrix m;
  for (std::size_t k = 0; k < sums.sums.rows(); ++k) m.categories.push_back(std::to_string(k));
  m.entities = sums.groups;
  m.n = sums.sums;
  return m;
}

LqTable lq_by_source(const GroupedSums& by_source, ActivityMatrix* activity) {
  if (by_source.attribute != DocumentAttribute::source) throw InputError("expected sums grouped by source");
  ActivityMatrix m;
  const std::size_t K = by_source.sums.rows();
  for (std::size_t k = 0; k < K; ++k) m.categories.push_back(std::to_string(k));
  m.n = Matrix(K, std::size(kAllSources));
  for (std::size_t s = 0; s < std::size(kAllSources); ++s) {
    m.entities.emplace_back(to_string(kAllSources[s]));
    const std::size_t g = by_source.group_index(m.entities.back());
    if (g == static_cast<std::size_t>(-1)) continue;
    for (std::size_t k = 0; k < K; ++k) m.n(k, s) = by_source.sums(k, g);
  }
  auto table = compute_lq(m);
  if (activity) *activity = std::move(m);
  return table;
}

ActivityMatrix select_entities(const ActivityMatrix& m, std::span<const std::string> entities) {
  ActivityMatrix out;
  out.categories = m.categories;
  out.n = Matrix(m.n.rows(), entities.size());
  for (std::size_t e = 0; e < entities.size(); ++e) {
    const std::size_t j = m.entity_index(entities[e]);
    if (j == static_cast<std::size_t>(-1)) {
      throw NotFoundError(fmt::format("unknown entity '{}'; known: {}", entities[e], join(m.entities)));
    }
    out.entities.push_back(entities[e]);
    for (std::size_t i = 0; i < m.n.rows(); ++i) out.n(i, e) = m.n(i, j);
  }
  return out;
}

ActivityMatrix select_categories(const ActivityMatrix& m, std::span<const std::string> categories) {
  ActivityMatrix out;
  out.entities = m.entities;
  out.n = Matrix(categories.size(), m.n.cols());
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const std::size_t i = m.category_index(categories[c]);
    if (i == static_cast<std::size_t>(-1)) throw NotFoundError(fmt::format("unknown category '{}'", categories[c]));
    out.categories.push_back(categories[c]);
    for (std::size_t j = 0; j < m.n.cols(); ++j) out.n(c, j) = m.n(i, j);
  }
  return out;
}

ActivityMatrix aggregate_categories(const ActivityMatrix& m,
                                    const std::function<std::optional<std::string>(const std::string&)>& group_of) {
  std::map<std::string, std::vector<double>> groups;
  for (std::size_t i = 0; i < m.categories.size(); ++i) {
    const auto group = group_of(m.categories[i]);
    if (!group) continue;
    auto& row = groups[*group];
    row.resize(m.n.cols(), 0.0);
    for (std::size_t j = 0; j < m.n.cols(); ++j) row[j] += m.n(i, j);
  }
  ActivityMatrix out;
  out.entities = m.entities;
  out.n = Matrix(groups.size(), m.n.cols());
  std::size_t r = 0;
  for (const auto& [name, row] : groups) {
    out.categories.push_back(name);
    std::copy(row.begin(), row.end(), out.n.row(r++).begin());
  }
  return out;
}

ActivityMatrix read_activity_csv(const std::filesystem::path& path, const std::string& entity_type) {
  const auto table = read_csv(path);
  const std::string origin = path.string();
  const auto c_type = table.column("entity_type", origin);
  const auto c_entity = table.column("entity_id", origin);
  const auto c_cat = table.column("category_id", origin);
  const auto c_count = table.column("count", origin);
  std::map<std::pair<std::string, std::string>, double> cells;
  std::vector<std::string> entities;
  std::vector<std::string> categories;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    if (!entity_type.empty() && row[c_type] != entity_type) continue;
    const auto count = parse_double(row[c_count]);
    if (!count || !std::isfinite(*count) || *count < 0.0) {
      throw FormatError(origin, table.row_lines[r], fmt::format("invalid count '{}'", row[c_count]));
    }
    if (!cells.emplace(std::pair{row[c_cat], row[c_entity]}, *count).second) {
      throw FormatError(origin, table.row_lines[r],
                        fmt::format("duplicate cell ({}, {})", row[c_entity], row[c_cat]));
    }
    if (index_in(entities, row[c_entity]) == static_cast<std::size_t>(-1)) entities.push_back(row[c_entity]);
    if (index_in(categories, row[c_cat]) == static_cast<std::size_t>(-1)) categories.push_back(row[c_cat]);
  }
  ActivityMatrix m;
  m.entities = entities;
  m.categories = categories;
  m.n = Matrix(categories.size(), entities.size());
  for (const auto& [key, value] : cells) m.n(m.category_index(key.first), m.entity_index(key.second)) = value;
  return m;
}

void write_activity_csv(const std::filesystem::path& path, const std::string& entity_type, const ActivityMatrix& m) {
  std::string out = "entity_type,entity_id,category_id,count\n";
  for (std::size_t j = 0; j < m.entities.size(); ++j) {
    for (std::size_t i = 0; i < m.categories.size(); ++i) {
      fmt::format_to(std::back_inserter(out), "{},{},{},{}\n", csv_escape(entity_type), csv_escape(m.entities[j]),
                     csv_escape(m.categories[i]), format_double(m.n(i, j)));
    }
  }
  write_file_atomic(path, out);
}

void write_lq_csv(const std::filesystem::path& path, const ActivityMatrix& m, const LqTable& table) {
  std::string out = "entity_id,category_id,lq,lq_err,flag\n";
  for (std::size_t j = 0; j < m.entities.size(); ++j) {
    for (std::size_t i = 0; i < m.categories.size(); ++i) {
      fmt::format_to(std::back_inserter(out), "{},{},{},{},{}\n", csv_escape(m.entities[j]),
                     csv_escape(m.categories[i]), format_double(table.lq(i, j)), format_double(table.err(i, j)),
                     flag_string(table.flags[i][j]));
    }
  }
  write_file_atomic(path, out);
}

void write_quadrant_csv(const std::filesystem::path& path, const ActivityMatrix& m, const LqTable& table,
                        std::size_t entity_a, std::size_t entity_b) {
  std::string out = fmt::format("category_id,lq_{},lq_{},quadrant\n", m.entities.at(entity_a), m.entities.at(entity_b));
  for (std::size_t i = 0; i < m.categories.size(); ++i) {
    const double a = table.lq(i, entity_a);
    const double b = table.lq(i, entity_b);
    fmt::format_to(std::back_inserter(out), "{},{},{},{}\n", csv_escape(m.categories[i]), format_double(a),
                   format_double(b), to_string(quadrant(a, b)));
  }
  write_file_atomic(path, out);
}

}  // namespace hscan
