// Turns text training data into gold grids and training examples.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "igl/core.hpp"
#include "igl/io.hpp"
#include "igl/lingo.hpp"
#include "igl/nnet/network.hpp"
#include "igl/nnet/train.hpp"
#include "igl/pipeline.hpp"
#include "igl/synthetic.hpp"

namespace igl::dataset {

template <typename Label>
struct GridItem {
  Sentence sentence;
  HardGrid<Label> gold;
  lingo::TokenMasks masks;
};

struct AlignStats {
  std::size_t sentences = 0;
  std::size_t triples = 0;
  std::size_t aligned = 0;
  std::size_t skipped = 0;
  std::size_t truncated = 0;
  std::size_t empty_sentences = 0;  // every triple skipped; example dropped
  std::map<std::string, std::size_t> reasons;
};

/// Aligns every record's triples to its sentence (with appended tokens).
inline std::vector<GridItem<OieLabel>> oie_grids(const std::vector<io::OieRecord>& records, const lingo::Tagger& tagger,
                                                 const lingo::LightVerbList& light, std::size_t levels,
                                                 AlignStats* stats = nullptr) {
  AlignStats st;
  std::vector<GridItem<OieLabel>> out;
  for (const auto& r : records) {
    ++st.sentences;
    auto s = lingo::append_special(lingo::tokenize(r.sentence));
    auto g = pipeline::build_gold_grid(s, r.gold, levels);
    st.triples += r.gold.size();
    st.aligned += g.aligned;
    st.truncated += g.truncated;
    st.skipped += g.skipped.size();
    for (const auto& why : g.skipped) ++st.reasons[why];
    if (g.aligned == 0) {
      ++st.empty_sentences;
      continue;
    }
    auto masks = lingo::masks_for(s, tagger, light);
    out.push_back({std::move(s), std::move(g.grid), std::move(masks)});
  }
  if (stats) *stats = st;
  return out;
}

inline std::vector<GridItem<CoordLabel>> coord_grids(const std::vector<io::CoordRecord>& records, std::size_t levels) {
  std::vector<GridItem<CoordLabel>> out;
  for (const auto& r : records) {
    HardGrid<CoordLabel> g(levels, r.sentence.size());
    for (std::size_t m = 0; m < std::min(levels, r.levels.size()); ++m) g.set_row(m, r.levels[m]);
    out.push_back({r.sentence, std::move(g), {}});
  }
  return out;
}

template <typename Label>
nnet::Vocabulary vocabulary_of(const std::vector<GridItem<Label>>& items) {
  std::vector<Sentence> all;
  for (const auto& it : items) all.push_back(it.sentence);
  return nnet::Vocabulary::build(all);
}

template <typename T, typename Label>
std::vector<nnet::TrainingExample<Label>> examples(const nnet::IglNetwork<T>& net,
                                                   const std::vector<GridItem<Label>>& items) {
  std::vector<nnet::TrainingExample<Label>> out;
  out.reserve(items.size());
  for (const auto& it : items) out.push_back(nnet::make_example(net, it.sentence, it.gold, it.masks));
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic corpora as records

inline std::vector<io::OieRecord> records_of(const std::vector<synthetic::OieSample>& samples) {
  std::vector<io::OieRecord> out;
  for (const auto& s : samples) out.push_back({s.sentence.text(), s.gold, 0});
  return out;
}

inline lingo::GoldTagger tagger_of(const std::vector<synthetic::OieSample>& samples) {
  lingo::GoldTagger t;
  for (const auto& s : samples) t.add(s.sentence.surfaces(), s.tags);
  return t;
}

inline std::vector<io::CoordRecord> records_of(const std::vector<synthetic::CoordSample>& samples) {
  std::vector<io::CoordRecord> out;
  for (const auto& s : samples) out.push_back({s.sentence, s.levels, 0});
  return out;
}

}  // namespace igl::dataset
