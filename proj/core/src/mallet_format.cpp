#include "hscan/mallet_format.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <fmt/format.h>

#include "hscan/error.hpp"
#include "hscan/text_io.hpp"

namespace hscan {

namespace {

constexpr std::string_view kStateHeader = "#doc source pos typeindex type topic";

std::vector<double> parse_float_list(std::string_view rest, const std::string& origin, std::size_t line) {
  std::vector<double> values;
  for (const auto field : split_whitespace(rest)) {
    const auto v = parse_double(field);
    if (!v) throw FormatError(origin, line, fmt::format("invalid number '{}'", field));
    values.push_back(*v);
  }
  return values;
}

std::string_view after_colon(std::string_view line, const std::string& origin, std::size_t line_no) {
  const auto colon = line.find(':');
  if (colon == std::string_view::npos) throw FormatError(origin, line_no, "expected ':' in header line");
  return line.substr(colon + 1);
}

std::uint32_t parse_index(std::string_view field, const char* what, const std::string& origin,
                          std::size_t line) {
  const auto v = parse_int(field);
  if (!v || *v < 0 || *v > 0xffffffffLL) {
    throw FormatError(origin, line, fmt::format("{} '{}' is not a non-negative integer", what, field));
  }
  return static_cast<std::uint32_t>(*v);
}

}  // namespace

std::string format_mallet_state(const GibbsState& state) {
  std::string out;
  out.reserve(state.tokens.size() * 24 + 256);
  out += kStateHeader;
  out += "\n#alpha : ";
  for (const double a : state.alpha) {
    out += format_double(a);
    out += ' ';
  }
  out += "\n#beta : ";
  out += format_double(state.beta);
  out += '\n';
  for (const auto& t : state.tokens) {
    const std::string_view source =
        t.doc < state.doc_sources.size() ? std::string_view(state.doc_sources[t.doc]) : "NA";
    const std::string_view type =
        t.type < state.type_names.size() ? std::string_view(state.type_names[t.type]) : "";
    fmt::format_to(std::back_inserter(out), "{} {} {} {} {} {}\n", t.doc, source, t.pos, t.type, type,
                   t.topic);
  }
  return out;
}

MalletState parse_mallet_state_text(std::string_view text, const std::string& origin) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0].substr(0, kStateHeader.size()) != kStateHeader) {
    throw FormatError(origin, 1, fmt::format("missing state header '{}'", kStateHeader));
  }
  MalletState result;
  GibbsState& state = result.state;
  bool have_alpha = false;
  bool have_beta = false;
  std::vector<std::size_t> token_lines;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const std::string_view line = lines[i];
    if (trim(line).empty()) continue;
    if (line.front() == '#') {
      if (line.rfind("#alpha", 0) == 0) {
        state.alpha = parse_float_list(after_colon(line, origin, line_no), origin, line_no);
        if (state.alpha.empty()) throw FormatError(origin, line_no, "empty alpha line");
        have_alpha = true;
      } else if (line.rfind("#beta", 0) == 0) {
        const auto values = parse_float_list(after_colon(line, origin, line_no), origin, line_no);
        if (values.size() != 1) throw FormatError(origin, line_no, "beta line must hold one value");
        state.beta = values[0];
        have_beta = true;
      }
      continue;
    }
    if (!have_alpha || !have_beta) {
      throw FormatError(origin, line_no, "data line before #alpha and #beta header lines");
    }
    const auto fields = split_whitespace(line);
    if (fields.size() != 6) {
      throw FormatError(origin, line_no, fmt::format("expected 6 fields, found {}", fields.size()));
    }
    TokenAssignment t;
    t.doc = parse_index(fields[0], "doc", origin, line_no);
    t.pos = parse_index(fields[2], "pos", origin, line_no);
    t.type = parse_index(fields[3], "typeindex", origin, line_no);
    t.topic = parse_index(fields[5], "topic", origin, line_no);
    if (t.topic >= state.alpha.size()) {
      throw FormatError(origin, line_no,
                        fmt::format("topic {} out of range for {} alpha values", t.topic, state.alpha.size()));
    }
    if (state.doc_sources.size() <= t.doc) state.doc_sources.resize(t.doc + 1, "NA");
    state.doc_sources[t.doc] = std::string(fields[1]);
    if (state.type_names.size() <= t.type) state.type_names.resize(t.type + 1);
    auto& name = state.type_names[t.type];
    if (name.empty()) {
      name = std::string(fields[4]);
    } else if (name != fields[4]) {
      throw FormatError(origin, line_no,
                        fmt::format("type index {} named both '{}' and '{}'", t.type, name, fields[4]));
    }
    state.tokens.push_back(t);
    token_lines.push_back(line_no);
  }
  if (!have_alpha) throw FormatError(origin, 0, "missing #alpha line");
  if (!have_beta) throw FormatError(origin, 0, "missing #beta line");

  TokenizedCorpus& corpus = result.corpus;
  corpus.docs.resize(state.doc_sources.size());
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) corpus.docs[d].doc_id = state.doc_sources[d];
  for (std::size_t i = 0; i < state.tokens.size(); ++i) {
    const auto& t = state.tokens[i];
    auto& tokens = corpus.docs[t.doc].tokens;
    if (t.pos != tokens.size()) {
      throw FormatError(origin, token_lines[i],
                        fmt::format("doc {} position {} out of sequence", t.doc, t.pos));
    }
    tokens.push_back(t.type);
  }
  corpus.vocabulary = state.type_names;
  corpus.doc_freq.assign(corpus.vocabulary.size(), 0);
  for (const auto& doc : corpus.docs) {
    auto types = doc.tokens;
    std::sort(types.begin(), types.end());
    types.erase(std::unique(types.begin(), types.end()), types.end());
    for (const auto t : types) ++corpus.doc_freq[t];
  }
  std::uint32_t cutoff = 0;
  for (const auto f : corpus.doc_freq) {
    if (f > 0 && (cutoff == 0 || f < cutoff)) cutoff = f;
  }
  corpus.lower_cutoff = cutoff;
  return result;
}

void write_mallet_state(const std::filesystem::path& path, const GibbsState& state) {
  write_gzip_file(path, format_mallet_state(state));
}

MalletState parse_mallet_state(const std::filesystem::path& path) {
  return parse_mallet_state_text(read_gzip_file(path), path.string());
}

namespace {

std::string xml_escape(std::string_view text) {
  std::string out;
  for (const char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string format_diagnostics_xml(const std::vector<TopicDiagnostics>& topics) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<model>\n";
  for (const auto& topic : topics) {
    fmt::format_to(std::back_inserter(out), "<topic id='{}' tokens='{}'", topic.topic_id,
                   format_double(topic.token_count));
    if (topic.has_coherence()) {
      fmt::format_to(std::back_inserter(out), " coherence='{}'", format_double(topic.coherence));
    }
    out += ">\n";
    int rank = 1;
    for (const auto& [term, weight] : topic.top_terms) {
      fmt::format_to(std::back_inserter(out), "<word rank='{}' prob='{}'>{}</word>\n", rank++,
                     format_double(weight), xml_escape(term));
    }
    out += "</topic>\n";
  }
  out += "</model>\n";
  return out;
}

void write_diagnostics_xml(const std::filesystem::path& path, const std::vector<TopicDiagnostics>& topics) {
  write_file_atomic(path, format_diagnostics_xml(topics));
}

std::vector<TopicDiagnostics> parse_diagnostics_xml_text(const std::string& text, const std::string& origin) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_xml(in, tree, pt::xml_parser::trim_whitespace);
  } catch (const pt::xml_parser_error& e) {
    throw FormatError(origin, e.line(), e.message());
  }
  const auto model = tree.get_child_optional("model");
  if (!model) throw FormatError(origin, 0, "missing <model> root element");

  const auto number = [&](const pt::ptree& attrs, const char* name, std::size_t topic_index)
      -> std::optional<double> {
    const auto raw = attrs.get_optional<std::string>(name);
    if (!raw) return std::nullopt;
    const auto v = parse_double(trim(*raw));
    if (!v) {
      throw FormatError(origin, 0,
                        fmt::format("topic element {}: attribute {}='{}' is not a number", topic_index,
                                    name, *raw));
    }
    return v;
  };

  std::vector<TopicDiagnostics> out;
  std::size_t index = 0;
  for (const auto& [tag, node] : *model) {
    if (tag != "topic") continue;
    ++index;
    TopicDiagnostics diag;
    const pt::ptree empty;
    const auto& attrs = node.get_child("<xmlattr>", empty);
    const auto id = number(attrs, "id", index);
    if (!id) throw FormatError(origin, 0, fmt::format("topic element {} has no id attribute", index));
    diag.topic_id = static_cast<int>(*id);
    if (const auto c = number(attrs, "coherence", index)) diag.coherence = *c;
    if (const auto tokens = number(attrs, "tokens", index)) diag.token_count = *tokens;
    for (const auto& [child_tag, word] : node) {
      if (child_tag != "word") continue;
      const auto& wattrs = word.get_child("<xmlattr>", empty);
      double weight = 0.0;
      if (const auto p = number(wattrs, "prob", index)) {
        weight = *p;
      } else if (const auto w = number(wattrs, "weight", index)) {
        weight = *w;
      } else if (const auto c = number(wattrs, "count", index)) {
        weight = *c;
      }
      diag.top_terms.emplace_back(word.get_value<std::string>(), weight);
    }
    out.push_back(std::move(diag));
  }
  return out;
}

std::vector<TopicDiagnostics> parse_diagnostics_xml(const std::filesystem::path& path) {
  return parse_diagnostics_xml_text(read_file(path), path.string());
}

}  // namespace hscan
