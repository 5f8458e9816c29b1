#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hscan/coherence.hpp"
#include "hscan/corpus.hpp"
#include "hscan/topic_model.hpp"

namespace hscan {

struct MalletState {
  GibbsState state;
  /// Documents and vocabulary implied by the assignments. Doc ids are the
  /// state's source column; documents absent from the file are empty.
  TokenizedCorpus corpus;
};

/// Text form of the toolkit's gzip state file:
///   #doc source pos typeindex type topic
///   #alpha : a0 a1 ...
///   #beta : b
///   <doc> <source> <pos> <typeindex> <type> <topic>
std::string format_mallet_state(const GibbsState& state);
MalletState parse_mallet_state_text(std::string_view text, const std::string& origin);

void write_mallet_state(const std::filesystem::path& path, const GibbsState& state);
/// Throws FormatError (with line number) for grammar violations and for a
/// corrupt or truncated gzip stream.
MalletState parse_mallet_state(const std::filesystem::path& path);

/// `<model><topic id= tokens= coherence=><word rank= prob= count=>term</word>...`
std::string format_diagnostics_xml(const std::vector<TopicDiagnostics>& topics);
void write_diagnostics_xml(const std::filesystem::path& path, const std::vector<TopicDiagnostics>& topics);
/// Topics lacking a coherence attribute keep the NaN sentinel.
std::vector<TopicDiagnostics> parse_diagnostics_xml(const std::filesystem::path& path);
std::vector<TopicDiagnostics> parse_diagnostics_xml_text(const std::string& text, const std::string& origin);

}  // namespace hscan
