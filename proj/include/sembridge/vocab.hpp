#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/uscript.h>

#include "sembridge/error.hpp"

namespace sembridge {

using TokenId = std::uint32_t;

/// Token strings indexed by dense id.
class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
    if (tokens_.empty()) fail(ErrorKind::validation, "vocabulary must contain at least one token");
    id_of_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      auto [it, inserted] = id_of_.emplace(tokens_[i], static_cast<TokenId>(i));
      if (!inserted) {
        fail(ErrorKind::validation, "duplicate token \"" + tokens_[i] + "\" at ids " + std::to_string(it->second) +
                                        " and " + std::to_string(i));
      }
    }
  }

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::optional<TokenId> find(std::string_view token) const {
    if (auto it = id_of_.find(std::string(token)); it != id_of_.end()) return it->second;
    return std::nullopt;
  }

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> id_of_;
};

/// Reads JSON-lines {"id": <int>, "token": <string>}; ids must be 0,1,2,... in order.
inline Vocabulary read_vocabulary(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (!obj.is_object() || !obj.contains("id") || !obj.contains("token") || !obj["id"].is_number_integer() ||
        !obj["token"].is_string()) {
      fail(ErrorKind::format, path.string() + ":" + std::to_string(lineno) + ": expected {\"id\": int, \"token\": string}");
    }
    if (obj["id"].get<std::int64_t>() != static_cast<std::int64_t>(tokens.size())) {
      fail(ErrorKind::validation, path.string() + ":" + std::to_string(lineno) + ": id " +
                                      obj["id"].dump() + " breaks dense ascending order (expected " +
                                      std::to_string(tokens.size()) + ")");
    }
    tokens.push_back(obj["token"].get<std::string>());
  }
  return Vocabulary(std::move(tokens));
}

inline void write_vocabulary(const Vocabulary& vocab, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out << nlohmann::json{{"id", i}, {"token", vocab.token(static_cast<TokenId>(i))}}.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Normalization

struct NormalizationPolicy {
  bool case_fold = false;
  bool trim_whitespace = false;
  std::vector<std::string> strip_subword_markers;
  bool apply_unicode_nfkc = false;

  void validate() const {
    for (const auto& m : strip_subword_markers) {
      if (m.empty()) fail(ErrorKind::config, "subword markers must be nonempty");
    }
  }

  friend bool operator==(const NormalizationPolicy&, const NormalizationPolicy&) = default;
};

inline void to_json(nlohmann::json& j, const NormalizationPolicy& p) {
  j = {{"case_fold", p.case_fold},
       {"trim_whitespace", p.trim_whitespace},
       {"strip_subword_markers", p.strip_subword_markers},
       {"apply_unicode_nfkc", p.apply_unicode_nfkc}};
}

inline void from_json(const nlohmann::json& j, NormalizationPolicy& p) {
  p.case_fold = j.value("case_fold", false);
  p.trim_whitespace = j.value("trim_whitespace", false);
  p.strip_subword_markers = j.value("strip_subword_markers", std::vector<std::string>{});
  p.apply_unicode_nfkc = j.value("apply_unicode_nfkc", false);
}

namespace detail {

inline icu::UnicodeString trim_unicode(const icu::UnicodeString& s) {
  int32_t begin = 0;
  int32_t end = s.length();
  while (begin < end && u_isUWhiteSpace(s.char32At(begin))) begin = s.moveIndex32(begin, 1);
  while (end > begin) {
    const int32_t prev = s.moveIndex32(end, -1);
    if (!u_isUWhiteSpace(s.char32At(prev))) break;
    end = prev;
  }
  return icu::UnicodeString(s, begin, end - begin);
}

}  // namespace detail

/// NFKC (optional), first matching marker stripped once, whitespace trim,
/// case fold, in that order.
inline std::string normalize_token(std::string_view token, const NormalizationPolicy& policy) {
  std::string work(token);
  if (policy.apply_unicode_nfkc) {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
    if (U_FAILURE(status)) fail(ErrorKind::numeric, "ICU NFKC unavailable");
    icu::UnicodeString normalized = nfkc->normalize(icu::UnicodeString::fromUTF8(work), status);
    if (U_FAILURE(status)) fail(ErrorKind::validation, "NFKC failed for token \"" + work + "\"");
    work.clear();
    normalized.toUTF8String(work);
  }
  for (const auto& marker : policy.strip_subword_markers) {
    if (work.starts_with(marker)) {
      work.erase(0, marker.size());
      break;
    }
  }
  if (policy.trim_whitespace || policy.case_fold) {
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(work);
    if (policy.trim_whitespace) u = detail::trim_unicode(u);
    if (policy.case_fold) u.foldCase();
    work.clear();
    u.toUTF8String(work);
  }
  return work;
}

// ---------------------------------------------------------------------------
// Overlap

struct OverlapConflict {
  TokenId target_id;
  std::string normalized;
  std::vector<TokenId> source_ids;  // ascending; the first one won
};

/// target id -> source id for the overlapping set; unmapped target ids form
/// the remaining set.
class OverlapMap {
 public:
  OverlapMap() = default;
  explicit OverlapMap(std::size_t target_size) : source_of_(target_size) {}

  std::size_t target_size() const noexcept { return source_of_.size(); }

  std::optional<TokenId> source_of(TokenId target) const { return source_of_.at(target); }
  bool is_overlap(TokenId target) const { return source_of_.at(target).has_value(); }

  void set(TokenId target, TokenId source) { source_of_.at(target) = source; }

  std::vector<std::pair<TokenId, TokenId>> pairs() const {
    std::vector<std::pair<TokenId, TokenId>> out;
    for (std::size_t t = 0; t < source_of_.size(); ++t) {
      if (source_of_[t]) out.emplace_back(static_cast<TokenId>(t), *source_of_[t]);
    }
    return out;
  }

  std::vector<TokenId> remaining() const {
    std::vector<TokenId> out;
    for (std::size_t t = 0; t < source_of_.size(); ++t) {
      if (!source_of_[t]) out.push_back(static_cast<TokenId>(t));
    }
    return out;
  }

  std::size_t overlap_count() const {
    return static_cast<std::size_t>(std::count_if(source_of_.begin(), source_of_.end(), [](auto& s) { return s.has_value(); }));
  }

  std::vector<OverlapConflict> conflicts;

 private:
  std::vector<std::optional<TokenId>> source_of_;
};

inline OverlapMap compute_overlap(const Vocabulary& source, const Vocabulary& target, const NormalizationPolicy& policy) {
  policy.validate();
  OverlapMap overlap(target.size());

  std::unordered_map<std::string, std::vector<TokenId>> by_normalized;
  for (std::size_t s = 0; s < source.size(); ++s) {
    std::string norm = normalize_token(source.token(static_cast<TokenId>(s)), policy);
    if (!norm.empty()) by_normalized[std::move(norm)].push_back(static_cast<TokenId>(s));
  }

  for (std::size_t t = 0; t < target.size(); ++t) {
    const auto tid = static_cast<TokenId>(t);
    if (auto exact = source.find(target.token(tid))) {
      overlap.set(tid, *exact);
      continue;
    }
    std::string norm = normalize_token(target.token(tid), policy);
    if (norm.empty()) continue;
    auto it = by_normalized.find(norm);
    if (it == by_normalized.end()) continue;
    const auto& candidates = it->second;  // ascending by construction
    overlap.set(tid, candidates.front());
    if (candidates.size() > 1) overlap.conflicts.push_back({tid, norm, candidates});
  }
  return overlap;
}

inline nlohmann::json overlap_report_json(const OverlapMap& overlap, const NormalizationPolicy& policy) {
  nlohmann::json pairs = nlohmann::json::array();
  for (auto [t, s] : overlap.pairs()) pairs.push_back({{"target_id", t}, {"source_id", s}});
  nlohmann::json conflicts = nlohmann::json::array();
  for (const auto& c : overlap.conflicts) {
    conflicts.push_back({{"target_id", c.target_id}, {"normalized", c.normalized}, {"source_ids", c.source_ids}});
  }
  return {{"pairs", pairs},
          {"conflicts", conflicts},
          {"remaining_count", overlap.target_size() - overlap.overlap_count()},
          {"policy", policy}};
}

// ---------------------------------------------------------------------------
// Script distribution

enum class ScriptClass { latin, arabic, han, devanagari, hangul, cyrillic, other_script, etc };

inline constexpr std::array<ScriptClass, 8> all_script_classes = {
    ScriptClass::latin,  ScriptClass::arabic,   ScriptClass::han,          ScriptClass::devanagari,
    ScriptClass::hangul, ScriptClass::cyrillic, ScriptClass::other_script, ScriptClass::etc};

inline std::string_view to_string(ScriptClass c) {
  switch (c) {
    case ScriptClass::latin: return "Latin";
    case ScriptClass::arabic: return "Arabic";
    case ScriptClass::han: return "Han";
    case ScriptClass::devanagari: return "Devanagari";
    case ScriptClass::hangul: return "Hangul";
    case ScriptClass::cyrillic: return "Cyrillic";
    case ScriptClass::other_script: return "Other-script";
    case ScriptClass::etc: return "ETC";
  }
  return "ETC";
}

inline ScriptClass script_of_letter(UChar32 c) {
  UErrorCode status = U_ZERO_ERROR;
  const UScriptCode code = uscript_getScript(c, &status);
  if (U_FAILURE(status)) return ScriptClass::other_script;
  switch (code) {
    case USCRIPT_LATIN: return ScriptClass::latin;
    case USCRIPT_ARABIC: return ScriptClass::arabic;
    case USCRIPT_HAN: return ScriptClass::han;
    case USCRIPT_DEVANAGARI: return ScriptClass::devanagari;
    case USCRIPT_HANGUL: return ScriptClass::hangul;
    case USCRIPT_CYRILLIC: return ScriptClass::cyrillic;
    default: return ScriptClass::other_script;
  }
}

/// Majority script over the token's letters; ETC when it has none. Ties go to
/// the class listed first in all_script_classes.
inline ScriptClass classify_token(std::string_view token) {
  std::array<std::size_t, all_script_classes.size()> votes{};
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(token.data(), static_cast<int32_t>(token.size())));
  bool any = false;
  for (int32_t i = 0; i < u.length(); i = u.moveIndex32(i, 1)) {
    const UChar32 c = u.char32At(i);
    if (!u_isalpha(c)) continue;
    any = true;
    ++votes[static_cast<std::size_t>(script_of_letter(c))];
  }
  if (!any) return ScriptClass::etc;
  const auto best = std::max_element(votes.begin(), votes.end());
  return all_script_classes[static_cast<std::size_t>(best - votes.begin())];
}

inline std::map<ScriptClass, std::size_t> script_distribution(const Vocabulary& vocab) {
  std::map<ScriptClass, std::size_t> counts;
  for (const auto& tok : vocab.tokens()) ++counts[classify_token(tok)];
  return counts;
}

}  // namespace sembridge
