#include "hscan/label_store.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>

#include <fcntl.h>
#include <unistd.h>

#include <fmt/format.h>
#include <json.hpp>

#include "hscan/error.hpp"
#include "hscan/text_io.hpp"
#include "label_json.hpp"

namespace hscan {

using nlohmann::ordered_json;

std::string_view to_string(JunkReason reason) {
  switch (reason) {
    case JunkReason::none: return "none";
    case JunkReason::non_technical: return "non_technical";
    case JunkReason::mixed: return "mixed";
    case JunkReason::trivial: return "trivial";
    case JunkReason::non_specific: return "non_specific";
  }
  return "none";
}

std::optional<JunkReason> parse_junk_reason(std::string_view text) {
  for (auto r : {JunkReason::none, JunkReason::non_technical, JunkReason::mixed, JunkReason::trivial,
                 JunkReason::non_specific}) {
    if (text == to_string(r)) return r;
  }
  return std::nullopt;
}

const TopicLabelRecord* LabelView::find(int topic_id) const {
  const auto it = current.find(topic_id);
  return it == current.end() ? nullptr : &it->second;
}

bool LabelView::is_junk(int topic_id) const {
  const auto* r = find(topic_id);
  return r && r->junk;
}

bool LabelView::has_supertopic(std::string_view name) const {
  return std::find(supertopics.begin(), supertopics.end(), name) != supertopics.end();
}

namespace {

void apply_event(LabelView& view, const nlohmann::json& event) {
  const std::string kind = event.at("event").get<std::string>();
  if (kind == "label") {
    auto record = record_from_json(event.at("record"));
    auto it = view.current.find(record.topic_id);
    if (it != view.current.end()) {
      view.history[record.topic_id].push_back(std::move(it->second));
      it->second = std::move(record);
    } else {
      const int id = record.topic_id;
      view.current.emplace(id, std::move(record));
    }
  } else if (kind == "supertopic_add") {
    const auto name = event.at("name").get<std::string>();
    if (!view.has_supertopic(name)) view.supertopics.push_back(name);
  } else if (kind == "supertopic_remove") {
    const auto name = event.at("name").get<std::string>();
    view.supertopics.erase(std::remove(view.supertopics.begin(), view.supertopics.end(), name),
                           view.supertopics.end());
  } else {
    throw ValidationError(fmt::format("unknown journal event '{}'", kind));
  }
  ++view.version;
}

void validate_record(const TopicLabelRecord& r, const LabelView& view) {
  if (r.junk && r.junk_reason == JunkReason::none) {
    throw ValidationError("junk labels need a junk_reason other than none");
  }
  if (!r.super_topic_name.empty() && !view.has_supertopic(r.super_topic_name)) {
    throw ValidationError(fmt::format("super topic '{}' is not registered", r.super_topic_name));
  }
}

}  // namespace

LabelStore::LabelStore(std::filesystem::path journal, std::string run_id)
    : journal_(std::move(journal)), run_id_(std::move(run_id)) {
  auto view = std::make_shared<LabelView>();
  if (std::filesystem::exists(journal_)) {
    const std::string text = read_file(journal_);
    const auto lines = split_lines(text);
    const bool ends_clean = text.empty() || text.back() == '\n';
    std::string kept;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const bool last = i + 1 == lines.size();
      if (lines[i].empty()) continue;
      nlohmann::json event;
      try {
        if (last && !ends_clean) throw std::runtime_error("unterminated line");
        event = nlohmann::json::parse(lines[i]);
        apply_event(*view, event);
      } catch (const std::exception& e) {
        if (last) {
          recovered_ = true;
          break;
        }
        throw FormatError(journal_.string(), i + 1, fmt::format("corrupt journal entry: {}", e.what()));
      }
      if (event.contains("run_id") && event["run_id"] != run_id_) {
        throw ValidationError(fmt::format("{}: journal belongs to run {}, expected {}", journal_.string(),
                                          event["run_id"].get<std::string>(), run_id_));
      }
      kept.append(lines[i]);
      kept.push_back('\n');
    }
    if (recovered_) write_file_atomic(journal_, kept);
  } else {
    write_file_atomic(journal_, "");
  }
  view_ = std::move(view);
}

std::shared_ptr<const LabelView> LabelStore::view() const {
  std::lock_guard lock(view_mu_);
  return view_;
}

void LabelStore::publish(std::shared_ptr<const LabelView> next) {
  std::lock_guard lock(view_mu_);
  view_ = std::move(next);
}

void LabelStore::append(const std::string& line) {
  const int fd = ::open(journal_.c_str(), O_WRONLY | O_APPEND | O_CREAT | O_CLOEXEC, 0644);
  if (fd < 0) throw Error(fmt::format("cannot open {}: {}", journal_.string(), std::strerror(errno)));
  const std::string data = line + "\n";
  std::size_t done = 0;
  while (done < data.size()) {
    const auto n = ::write(fd, data.data() + done, data.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw Error(fmt::format("cannot append to {}: {}", journal_.string(), std::strerror(err)));
    }
    done += static_cast<std::size_t>(n);
  }
  const bool synced = ::fsync(fd) == 0;
  ::close(fd);
  if (!synced) throw Error(fmt::format("cannot sync {}", journal_.string()));
}

LabelWriteResult LabelStore::put_label(TopicLabelRecord record) {
  std::lock_guard lock(write_mu_);
  const auto current = view();
  validate_record(record, *current);
  if (record.updated_at.empty()) record.updated_at = utc_timestamp();
  LabelWriteResult result;
  if (split_whitespace(record.topic_name).size() > 4) {
    result.warnings.push_back("topic name is longer than 4 words");
  }
  ordered_json event;
  event["event"] = "label";
  event["run_id"] = run_id_;
  event["record"] = record_json(record);
  append(event.dump());
  auto next = std::make_shared<LabelView>(*current);
  apply_event(*next, event);
  publish(std::move(next));
  result.record = std::move(record);
  return result;
}

std::vector<std::string> LabelStore::add_supertopic(const std::string& name) {
  if (trim(name).empty()) throw ValidationError("super topic name is empty");
  std::lock_guard lock(write_mu_);
  const auto current = view();
  std::vector<std::string> warnings;
  if (current->has_supertopic(name)) return warnings;
  ordered_json event;
  event["event"] = "supertopic_add";
  event["run_id"] = run_id_;
  event["name"] = name;
  append(event.dump());
  auto next = std::make_shared<LabelView>(*current);
  apply_event(*next, event);
  if (next->supertopics.size() > kSupertopicSoftLimit) {
    warnings.push_back(fmt::format("{} super topics registered; more than {} is hard to manage",
                                   next->supertopics.size(), kSupertopicSoftLimit));
  }
  publish(std::move(next));
  return warnings;
}

void LabelStore::remove_supertopic(const std::string& name) {
  std::lock_guard lock(write_mu_);
  const auto current = view();
  if (!current->has_supertopic(name)) throw NotFoundError(fmt::format("super topic '{}' is not registered", name));
  for (const auto& [id, r] : current->current) {
    if (r.super_topic_name == name) {
      throw ValidationError(fmt::format("super topic '{}' is still used by topic {}", name, id));
    }
  }
  ordered_json event;
  event["event"] = "supertopic_remove";
  event["run_id"] = run_id_;
  event["name"] = name;
  append(event.dump());
  auto next = std::make_shared<LabelView>(*current);
  apply_event(*next, event);
  publish(std::move(next));
}

}  // namespace hscan
