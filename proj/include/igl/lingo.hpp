// Tokenization, coarse POS tagging, head-verb detection and appended tokens.
#pragma once

#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "igl/core.hpp"
#include "igl/shipped_data.hpp"

namespace igl::lingo {

// ---------------------------------------------------------------------------
// Tokenizer

namespace detail {

inline bool is_punct(char c) {
  return std::ispunct(static_cast<unsigned char>(c)) != 0;
}

inline void split_chunk(std::string_view chunk, std::vector<std::string>& out) {
  if (is_appended_surface(chunk)) {
    out.emplace_back(chunk);
    return;
  }
  std::size_t b = 0, e = chunk.size();
  while (b < e && is_punct(chunk[b])) out.emplace_back(1, chunk[b++]);
  std::vector<std::string> trailing;
  while (e > b && is_punct(chunk[e - 1])) trailing.emplace_back(1, chunk[--e]);
  if (e > b) out.emplace_back(chunk.substr(b, e - b));
  out.insert(out.end(), trailing.rbegin(), trailing.rend());
}

}  // namespace detail

/// Whitespace tokenization that peels punctuation off both ends of every
/// chunk. Punctuation inside a word ("City-based", "it's", "3.5") stays.
inline std::vector<std::string> tokenize_words(std::string_view raw) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < raw.size()) {
    while (i < raw.size() && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
    std::size_t j = i;
    while (j < raw.size() && !std::isspace(static_cast<unsigned char>(raw[j]))) ++j;
    if (j > i) detail::split_chunk(raw.substr(i, j - i), out);
    i = j;
  }
  return out;
}

inline Sentence tokenize(std::string_view raw) {
  auto words = tokenize_words(raw);
  if (words.empty()) throw ValidationError("cannot tokenize empty or blank text");
  return Sentence(std::move(words), std::string(raw));
}

inline std::string detokenize(const Sentence& s) { return s.text(); }

inline Sentence append_special(const Sentence& s) {
  if (s.has_appended()) throw ValidationError("sentence already carries appended tokens");
  auto words = s.surfaces();
  words.emplace_back(kAppendedIs);
  words.emplace_back(kAppendedOf);
  words.emplace_back(kAppendedFrom);
  return Sentence(std::move(words), s.raw());
}

/// Sentence without its appended tokens.
inline Sentence strip_special(const Sentence& s) {
  if (!s.has_appended()) return s;
  auto words = s.surfaces();
  words.resize(s.real_size());
  return Sentence(std::move(words), s.raw());
}

// ---------------------------------------------------------------------------
// POS tags

enum class PosTag : std::uint8_t { NOUN, VERB, ADJ, ADV, OTHER };

inline std::string_view pos_name(PosTag t) {
  static constexpr std::string_view names[] = {"NOUN", "VERB", "ADJ", "ADV", "OTHER"};
  return names[static_cast<std::size_t>(t)];
}

inline PosTag parse_pos(std::string_view s) {
  static const std::map<std::string_view, PosTag> table = {
      {"NOUN", PosTag::NOUN}, {"VERB", PosTag::VERB}, {"ADJ", PosTag::ADJ},
      {"ADV", PosTag::ADV},   {"OTHER", PosTag::OTHER}};
  auto it = table.find(s);
  if (it == table.end()) throw ValidationError("unknown POS tag '" + std::string(s) + "'");
  return it->second;
}

inline bool is_important(PosTag t) {
  return t == PosTag::NOUN || t == PosTag::VERB || t == PosTag::ADJ || t == PosTag::ADV;
}

class Tagger {
 public:
  virtual ~Tagger() = default;
  /// One tag per word; must be total over any input.
  virtual std::vector<PosTag> tag_words(const std::vector<std::string>& words) const = 0;
};

/// Deterministic lexicon lookup with suffix and capitalization fallbacks.
class LexiconTagger final : public Tagger {
 public:
  LexiconTagger() = default;
  explicit LexiconTagger(std::unordered_map<std::string, PosTag> lexicon)
      : lexicon_(std::move(lexicon)) {}

  /// Parses `token<TAB>tag` lines; '#' starts a comment line.
  static LexiconTagger parse(std::string_view text, std::string_view origin = "<lexicon>") {
    std::unordered_map<std::string, PosTag> lex;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos) {
        throw ValidationError(std::string(origin) + ":" + std::to_string(lineno) +
                              ": expected token<TAB>tag");
      }
      try {
        lex[casefold(line.substr(0, tab))] = parse_pos(line.substr(tab + 1));
      } catch (const ValidationError& e) {
        throw ValidationError(std::string(origin) + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
    return LexiconTagger(std::move(lex));
  }

  static const LexiconTagger& shipped() {
    static const LexiconTagger t = parse(shipped::kLexicon, "data/lexicon.tsv");
    return t;
  }

  static LexiconTagger from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot open lexicon file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path);
  }

  std::vector<PosTag> tag_words(const std::vector<std::string>& words) const override {
    std::vector<PosTag> out;
    out.reserve(words.size());
    for (const auto& w : words) out.push_back(tag_word(w));
    return out;
  }

  PosTag tag_word(const std::string& word) const {
    std::string lower = casefold(word);
    if (auto it = lexicon_.find(lower); it != lexicon_.end()) return it->second;
    bool has_alpha = false, all_digit_or_punct = true;
    for (char c : word) {
      auto u = static_cast<unsigned char>(c);
      if (std::isalpha(u) || u >= 0x80) has_alpha = true;
      if (!std::isdigit(u) && !std::ispunct(u)) all_digit_or_punct = false;
    }
    if (!has_alpha || all_digit_or_punct) return PosTag::OTHER;
    if (std::isupper(static_cast<unsigned char>(word[0]))) return PosTag::NOUN;
    auto ends = [&](std::string_view suf) {
      return lower.size() > suf.size() + 1 &&
             std::string_view(lower).substr(lower.size() - suf.size()) == suf;
    };
    if (ends("ly")) return PosTag::ADV;
    for (auto suf : {"tion", "sion", "ness", "ment", "ity", "ance", "ence", "ism", "ship", "hood"})
      if (ends(suf)) return PosTag::NOUN;
    if (ends("ed") || ends("ing") || ends("ize") || ends("ise")) return PosTag::VERB;
    for (auto suf : {"ous", "ful", "ive", "able", "ible", "al", "ic", "less", "ish", "ary"})
      if (ends(suf)) return PosTag::ADJ;
    return PosTag::NOUN;
  }

 private:
  std::unordered_map<std::string, PosTag> lexicon_;
};

/// Returns tags supplied alongside the input verbatim. Sentences without
/// supplied tags fall back to the shipped lexicon tagger.
class GoldTagger final : public Tagger {
 public:
  void add(const std::vector<std::string>& words, std::vector<PosTag> tags) {
    if (words.size() != tags.size())
      throw ValidationError("gold tag count does not match token count");
    tags_[key(words)] = std::move(tags);
  }

  /// Reads `sentence<TAB>TAG TAG ...` lines.
  static GoldTagger from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot open tags file " + path);
    GoldTagger g;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      auto where = path + ":" + std::to_string(lineno) + ": ";
      auto tab = line.find('\t');
      if (tab == std::string::npos) throw ValidationError(where + "expected sentence<TAB>tags");
      auto words = tokenize_words(line.substr(0, tab));
      std::vector<PosTag> tags;
      std::istringstream ts(line.substr(tab + 1));
      std::string t;
      try {
        while (ts >> t) tags.push_back(parse_pos(t));
        g.add(words, std::move(tags));
      } catch (const ValidationError& e) {
        throw ValidationError(where + e.what());
      }
    }
    return g;
  }

  std::size_t size() const { return tags_.size(); }

  std::vector<PosTag> tag_words(const std::vector<std::string>& words) const override {
    if (auto it = tags_.find(key(words)); it != tags_.end()) return it->second;
    return LexiconTagger::shipped().tag_words(words);
  }

 private:
  static std::string key(const std::vector<std::string>& words) {
    std::string k;
    for (const auto& w : words) {
      k += w;
      k += '\x1f';
    }
    return k;
  }
  std::unordered_map<std::string, std::vector<PosTag>> tags_;
};

/// Tags every real token with `tagger`; appended tokens are OTHER.
inline std::vector<PosTag> tag(const Sentence& s, const Tagger& tagger) {
  auto words = s.surfaces();
  words.resize(s.real_size());
  auto tags = tagger.tag_words(words);
  if (tags.size() != words.size()) throw RuntimeError("tagger returned wrong number of tags");
  tags.resize(s.size(), PosTag::OTHER);
  return tags;
}

// ---------------------------------------------------------------------------
// Head verbs

class LightVerbList {
 public:
  static LightVerbList parse(std::string_view text) {
    LightVerbList l;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
      auto b = line.find_first_not_of(" \t\r");
      if (b == std::string::npos || line[b] == '#') continue;
      auto e = line.find_last_not_of(" \t\r");
      l.verbs_.insert(casefold(line.substr(b, e - b + 1)));
    }
    return l;
  }
  static const LightVerbList& shipped() {
    static const LightVerbList l = parse(shipped::kLightVerbs);
    return l;
  }
  static LightVerbList from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RuntimeError("cannot open light-verb file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  bool contains(std::string_view word) const { return verbs_.count(casefold(word)) > 0; }
  std::size_t size() const { return verbs_.size(); }

 private:
  std::unordered_set<std::string> verbs_;
};

/// Per-token indicator masks consulted by the coverage penalties.
struct TokenMasks {
  std::vector<bool> important;
  std::vector<bool> head_verb;

  std::size_t size() const { return important.size(); }
  std::size_t head_verb_count() const {
    return static_cast<std::size_t>(std::count(head_verb.begin(), head_verb.end(), true));
  }
};

inline TokenMasks head_verbs(const Sentence& s, const std::vector<PosTag>& tags,
                             const LightVerbList& light = LightVerbList::shipped()) {
  if (tags.size() != s.size()) throw ValidationError("tags are not aligned with the sentence");
  TokenMasks m{std::vector<bool>(s.size(), false), std::vector<bool>(s.size(), false)};
  for (std::size_t n = 0; n < s.size(); ++n) {
    if (s[n].is_appended) continue;
    m.important[n] = is_important(tags[n]);
    m.head_verb[n] = tags[n] == PosTag::VERB && !light.contains(s[n].surface);
  }
  return m;
}

inline TokenMasks masks_for(const Sentence& s, const Tagger& tagger,
                            const LightVerbList& light = LightVerbList::shipped()) {
  return head_verbs(s, tag(s, tagger), light);
}

}  // namespace igl::lingo
