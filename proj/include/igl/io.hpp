// File formats and run configuration.
//
//   sentences     one sentence per line; the 1-based line number is its id
//   system TSV    id <TAB> confidence <TAB> subject <TAB> relation <TAB> object
//   gold TSV      id <TAB> subject <TAB> relation <TAB> object
//   OIE training  sentence <TAB> subject <TAB> relation <TAB> object
//                 (consecutive lines with the same sentence form one example)
//   coord training  a sentence line, then one line of space-separated labels
//                 (CC, CONJ, N) per level; records separated by blank lines
//   config        key=value lines; '#' comments
#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "igl/constraints.hpp"
#include "igl/core.hpp"
#include "igl/eval/scorers.hpp"
#include "igl/lingo.hpp"
#include "igl/nnet/network.hpp"
#include "igl/nnet/optim.hpp"

namespace igl::io {

inline std::string where(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line) + ": ";
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t b = 0;
  while (true) {
    auto e = line.find('\t', b);
    out.push_back(line.substr(b, e == std::string::npos ? std::string::npos : e - b));
    if (e == std::string::npos) break;
    b = e + 1;
  }
  return out;
}

inline std::string chomp(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open " + path);
  return in;
}

inline double parse_double(const std::string& s, const std::string& ctx) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ValidationError(ctx + "expected a number, got '" + s + "'");
  }
}

inline std::uint64_t parse_uint(const std::string& s, const std::string& ctx) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || s.empty())
    throw ValidationError(ctx + "expected a non-negative integer, got '" + s + "'");
  return v;
}

// ---------------------------------------------------------------------------
// Sentences

struct SentenceLine {
  std::string id;
  std::string text;
};

inline std::vector<SentenceLine> read_sentences(const std::string& path) {
  auto in = open_in(path);
  std::vector<SentenceLine> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = chomp(line);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    out.push_back({std::to_string(n), line});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Extraction TSV

inline eval::ExtractionSet read_extractions(const std::string& path, bool with_confidence) {
  auto in = open_in(path);
  eval::ExtractionSet out;
  std::string line;
  std::size_t n = 0;
  const std::size_t fields = with_confidence ? 5 : 4;
  while (std::getline(in, line)) {
    ++n;
    line = chomp(line);
    if (line.empty() || line[0] == '#') continue;
    auto f = split_tabs(line);
    if (f.size() != fields)
      throw ValidationError(where(path, n) + "expected " + std::to_string(fields) + " tab-separated fields, got " +
                            std::to_string(f.size()));
    if (f[0].empty()) throw ValidationError(where(path, n) + "empty sentence id");
    eval::ScoredTriple t;
    std::size_t k = 1;
    if (with_confidence) t.confidence = parse_double(f[k++], where(path, n));
    t.triple = {f[k], f[k + 1], f[k + 2]};
    if (t.triple.relation.find_first_not_of(' ') == std::string::npos)
      throw ValidationError(where(path, n) + "empty relation");
    out[f[0]].push_back(std::move(t));
  }
  return out;
}

inline std::string format_confidence(double c) {
  std::ostringstream s;
  s << std::setprecision(6) << std::fixed << c;
  return s.str();
}

inline void write_extraction_line(std::ostream& out, const std::string& id, const Extraction& e) {
  auto t = to_text(e, *e.source);
  out << id << '\t' << format_confidence(e.confidence) << '\t' << t.subject << '\t' << t.relation << '\t'
      << t.object << '\n';
}

// ---------------------------------------------------------------------------
// Training files

struct OieRecord {
  std::string sentence;
  std::vector<TextTriple> gold;
  std::size_t line = 0;
};

inline std::vector<OieRecord> read_oie_training(const std::string& path) {
  auto in = open_in(path);
  std::vector<OieRecord> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = chomp(line);
    if (line.empty() || line[0] == '#') continue;
    auto f = split_tabs(line);
    if (f.size() != 4)
      throw ValidationError(where(path, n) + "expected sentence, subject, relation, object (4 fields), got " +
                            std::to_string(f.size()));
    if (f[0].find_first_not_of(' ') == std::string::npos) throw ValidationError(where(path, n) + "empty sentence");
    if (f[2].find_first_not_of(' ') == std::string::npos) throw ValidationError(where(path, n) + "empty relation");
    if (out.empty() || out.back().sentence != f[0]) out.push_back({f[0], {}, n});
    out.back().gold.push_back({f[1], f[2], f[3]});
  }
  if (out.empty()) throw ValidationError(path + ": no training examples");
  return out;
}

struct CoordRecord {
  Sentence sentence;
  std::vector<std::vector<CoordLabel>> levels;
  std::size_t line = 0;
};

inline std::vector<CoordRecord> read_coord_training(const std::string& path) {
  auto in = open_in(path);
  std::vector<CoordRecord> out;
  std::string line;
  std::size_t n = 0;
  bool open = false;
  while (std::getline(in, line)) {
    ++n;
    line = chomp(line);
    if (!line.empty() && line[0] == '#') continue;
    if (line.find_first_not_of(" \t") == std::string::npos) {
      open = false;
      continue;
    }
    if (!open) {
      out.push_back({lingo::tokenize(line), {}, n});
      open = true;
      continue;
    }
    std::istringstream ls(line);
    std::vector<CoordLabel> row;
    std::string tok;
    try {
      while (ls >> tok) row.push_back(parse_label<CoordLabel>(tok));
    } catch (const ValidationError& e) {
      throw ValidationError(where(path, n) + e.what());
    }
    if (row.size() != out.back().sentence.size())
      throw ValidationError(where(path, n) + "label row has " + std::to_string(row.size()) +
                            " labels for a sentence of " + std::to_string(out.back().sentence.size()) + " tokens");
    out.back().levels.push_back(std::move(row));
  }
  if (out.empty()) throw ValidationError(path + ": no training examples");
  return out;
}

inline void write_coord_record(std::ostream& out, const Sentence& s, const std::vector<std::vector<CoordLabel>>& rows) {
  out << s.text() << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? " " : "") << label_name(r[i]);
    out << '\n';
  }
  out << '\n';
}

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  nnet::EncoderConfig encoder;
  std::size_t levels_oie = 5;
  std::size_t levels_coord = 3;
  constraints::PenaltyWeights weights;
  std::size_t warmup_epochs = 2;
  std::size_t batch_size = 24;
  std::size_t epochs = 30;
  nnet::AdamWConfig optim;
  std::uint64_t shuffle_seed = 7;
  std::string tagger = "lexicon";  // or "gold"
  std::string tags_file;
  std::string lexicon_file;
  std::string light_verbs_file;

  /// Applies one key=value pair; unknown keys are rejected.
  void set(const std::string& key, const std::string& value, const std::string& ctx = "") {
    auto u = [&] { return static_cast<std::size_t>(parse_uint(value, ctx + key + ": ")); };
    auto d = [&] { return parse_double(value, ctx + key + ": "); };
    if (key == "d_model") encoder.d_model = u();
    else if (key == "encoder_layers") encoder.encoder_layers = u();
    else if (key == "heads") encoder.heads = u();
    else if (key == "iterative_layers") encoder.iterative_layers = u();
    else if (key == "ffn_dim") encoder.ffn_dim = u();
    else if (key == "max_len") encoder.max_len = u();
    else if (key == "seed") encoder.seed = parse_uint(value, ctx + key + ": ");
    else if (key == "levels_oie") levels_oie = u();
    else if (key == "levels_coord") levels_coord = u();
    else if (key == "lambda") weights.posc = weights.hvc = weights.hve = weights.ec = d();
    else if (key == "lambda_posc") weights.posc = d();
    else if (key == "lambda_hvc") weights.hvc = d();
    else if (key == "lambda_hve") weights.hve = d();
    else if (key == "lambda_ec") weights.ec = d();
    else if (key == "warmup_epochs") warmup_epochs = u();
    else if (key == "batch_size") batch_size = u();
    else if (key == "epochs") epochs = u();
    else if (key == "lr") optim.lr = d();
    else if (key == "weight_decay") optim.weight_decay = d();
    else if (key == "beta1") optim.beta1 = d();
    else if (key == "beta2") optim.beta2 = d();
    else if (key == "adam_eps") optim.eps = d();
    else if (key == "clip_norm") optim.clip_norm = d();
    else if (key == "shuffle_seed") shuffle_seed = parse_uint(value, ctx + key + ": ");
    else if (key == "tagger") {
      if (value != "lexicon" && value != "gold") throw ValidationError(ctx + "tagger must be lexicon or gold");
      tagger = value;
    } else if (key == "tags_file") tags_file = value;
    else if (key == "lexicon_file") lexicon_file = value;
    else if (key == "light_verbs_file") light_verbs_file = value;
    else throw ValidationError(ctx + "unknown configuration key '" + key + "'");
  }

  void set_pair(const std::string& kv, const std::string& ctx = "") {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw ValidationError(ctx + "expected key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t");
      auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    set(trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)), ctx);
  }

  static RunConfig from_file(const std::string& path) {
    RunConfig c;
    auto in = open_in(path);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      line = chomp(line);
      auto b = line.find_first_not_of(" \t");
      if (b == std::string::npos || line[b] == '#') continue;
      c.set_pair(line, where(path, n));
    }
    return c;
  }

  void validate() const {
    encoder.validate();
    weights.validate();
    optim.validate();
    if (batch_size == 0) throw ValidationError("batch_size must be positive");
    if (levels_oie == 0 || levels_coord == 0) throw ValidationError("level counts must be positive");
    if (tagger == "gold" && tags_file.empty()) throw ValidationError("tagger=gold needs tags_file");
  }
};

}  // namespace igl::io
