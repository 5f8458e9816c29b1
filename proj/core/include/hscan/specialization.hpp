#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hscan/dense_matrix.hpp"
#include "hscan/topic_model.hpp"

namespace hscan {

/// n(i, j): activity of entity j in category i (categories x entities).
struct ActivityMatrix {
  std::vector<std::string> categories;
  std::vector<std::string> entities;
  Matrix n;

  std::size_t category_index(std::string_view id) const;  // npos if absent
  std::size_t entity_index(std::string_view id) const;    // npos if absent
};

enum class LqFlag : unsigned {
  none = 0,
  lq_undefined = 1,     // zero entity column or category row
  err_undefined = 2,    // n(i, j) = 0
  low_confidence = 4,   // relative error above 1
};

struct LqTable {
  Matrix lq;
  Matrix err;
  Matrix rel_err;
  std::vector<std::vector<unsigned>> flags;  // categories x entities, LqFlag bits
  std::vector<double> category_totals;       // row sums
  std::vector<double> entity_totals;         // column sums
  double grand_total = 0.0;

  bool defined(std::size_t i, std::size_t j) const { return !(flags[i][j] & unsigned(LqFlag::lq_undefined)); }
};

/// LQ(i,j) = (n(i,j) / sum_k n(k,j)) / (sum_l n(i,l) / sum_kl n(k,l)), with
/// relative error sqrt(1/n(i,j) + 1/col + 1/row + 1/grand). Undefined cells
/// hold NaN and carry a flag.
LqTable compute_lq(const ActivityMatrix& m);
/// The error matrix of compute_lq.
Matrix propagate_lq_error(const ActivityMatrix& m);
std::string flag_string(unsigned flags);

enum class Quadrant { I, II, III, IV, unclassified };
std::string_view to_string(Quadrant q);
/// I: both above 1, II: only A, IV: only B, III: neither. Exactly 1 counts
/// as not above; a non-finite value on either side is unclassified.
Quadrant quadrant(double lq_a, double lq_b);
std::vector<Quadrant> quadrant_classify(std::span<const double> lqs_a, std::span<const double> lqs_b);

/// Categories are topics ("0".."K-1"), entities the groups of `sums`.
ActivityMatrix activity_from_sums(const GroupedSums& sums);
/// Entities are the three sources in publication, patent, grant order.
LqTable lq_by_source(const GroupedSums& by_source, ActivityMatrix* activity = nullptr);

/// Keeps only the listed entities (in the given order). Throws NotFoundError
/// listing the known ids when one is missing.
ActivityMatrix select_entities(const ActivityMatrix& m, std::span<const std::string> entities);
/// Keeps only the listed category rows.
ActivityMatrix select_categories(const ActivityMatrix& m, std::span<const std::string> categories);
/// Sums member category rows into named groups; `group_of(category)` returns
/// the group or nullopt to drop the row. Groups are sorted by name.
ActivityMatrix aggregate_categories(const ActivityMatrix& m,
                                    const std::function<std::optional<std::string>(const std::string&)>& group_of);

/// `entity_type,entity_id,category_id,count`, filtered to one entity type
/// when `entity_type` is non-empty.
ActivityMatrix read_activity_csv(const std::filesystem::path& path, const std::string& entity_type = "");
void write_activity_csv(const std::filesystem::path& path, const std::string& entity_type, const ActivityMatrix& m);
/// `entity_id,category_id,lq,lq_err,flag`
void write_lq_csv(const std::filesystem::path& path, const ActivityMatrix& m, const LqTable& table);
/// `category_id,lq_a,lq_b,quadrant` for entities a and b.
void write_quadrant_csv(const std::filesystem::path& path, const ActivityMatrix& m, const LqTable& table,
                        std::size_t entity_a, std::size_t entity_b);

}  // namespace hscan
