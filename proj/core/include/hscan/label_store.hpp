#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hscan {

enum class JunkReason { none, non_technical, mixed, trivial, non_specific };
std::string_view to_string(JunkReason reason);
std::optional<JunkReason> parse_junk_reason(std::string_view text);

struct TopicLabelRecord {
  int topic_id = 0;
  std::string topic_name;
  std::string super_topic_name;
  bool junk = false;
  JunkReason junk_reason = JunkReason::none;
  std::string updated_at;
  std::string author;

  friend bool operator==(const TopicLabelRecord&, const TopicLabelRecord&) = default;
};

/// Immutable state of the store at one journal position.
struct LabelView {
  std::uint64_t version = 0;
  std::map<int, TopicLabelRecord> current;
  std::map<int, std::vector<TopicLabelRecord>> history;  // superseded records, oldest first
  std::vector<std::string> supertopics;                  // registration order

  const TopicLabelRecord* find(int topic_id) const;
  bool is_junk(int topic_id) const;
  bool has_supertopic(std::string_view name) const;
};

struct LabelWriteResult {
  TopicLabelRecord record;
  std::vector<std::string> warnings;
};

/// Append-only JSON-lines journal. Each write is fsynced before the new view
/// is published; readers hold a shared_ptr to an immutable LabelView. A torn
/// final line (from a crash mid-append) is dropped and the journal rewritten
/// on open.
class LabelStore {
 public:
  static constexpr std::size_t kSupertopicSoftLimit = 20;

  LabelStore(std::filesystem::path journal, std::string run_id);

  std::shared_ptr<const LabelView> view() const;

  /// Validates the record (junk needs a reason, super topic must be
  /// registered) and stamps updated_at when empty.
  LabelWriteResult put_label(TopicLabelRecord record);
  /// Registering past the soft limit succeeds with a warning.
  std::vector<std::string> add_supertopic(const std::string& name);
  /// Fails while a current label still uses the name.
  void remove_supertopic(const std::string& name);

  const std::filesystem::path& path() const noexcept { return journal_; }
  /// True when the last open discarded a torn tail.
  bool recovered_torn_tail() const noexcept { return recovered_; }

 private:
  void append(const std::string& line);
  void publish(std::shared_ptr<const LabelView> next);

  std::filesystem::path journal_;
  std::string run_id_;
  bool recovered_ = false;
  std::mutex write_mu_;
  mutable std::mutex view_mu_;
  std::shared_ptr<const LabelView> view_;
};

}  // namespace hscan
