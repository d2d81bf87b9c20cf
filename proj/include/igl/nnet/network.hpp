// The Iterative Grid Labeling network.
//
// A sentence is encoded once; the encoder output then passes through a
// shared stack of iterative transformer blocks once per grid row. After each
// row is labeled, the embeddings of the predicted (argmax) labels are added
// to that row's representations before they feed the next row.
#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "igl/core.hpp"
#include "igl/nnet/layers.hpp"

namespace igl::nnet {

enum class Task : std::uint8_t { Oie = 0, Coord = 1 };

inline std::string_view task_name(Task t) { return t == Task::Oie ? "oie" : "coord"; }

inline Task parse_task(std::string_view s) {
  if (s == "oie") return Task::Oie;
  if (s == "coord") return Task::Coord;
  throw ValidationError("unknown task '" + std::string(s) + "' (expected oie or coord)");
}

inline std::size_t alphabet_size(Task t) {
  return t == Task::Oie ? LabelTraits<OieLabel>::kSize : LabelTraits<CoordLabel>::kSize;
}

struct EncoderConfig {
  Task task = Task::Oie;
  std::size_t d_model = 64;
  std::size_t encoder_layers = 2;
  std::size_t heads = 4;
  std::size_t iterative_layers = 2;
  std::size_t ffn_dim = 128;
  std::size_t max_levels = 5;
  std::size_t max_len = 256;
  std::uint64_t seed = 13;

  std::size_t num_labels() const { return alphabet_size(task); }

  void validate() const {
    if (d_model == 0 || heads == 0 || d_model % heads != 0)
      throw ValidationError("d_model must be a positive multiple of heads");
    if (max_levels < 1) throw ValidationError("max_levels must be at least 1");
    if (iterative_layers < 1) throw ValidationError("iterative_layers must be at least 1");
    if (ffn_dim == 0 || max_len == 0) throw ValidationError("ffn_dim and max_len must be positive");
  }

  bool operator==(const EncoderConfig&) const = default;
};

/// Word vocabulary. Ids 0..3 are reserved for the unknown word and the three
/// appended tokens.
class Vocabulary {
 public:
  static constexpr std::size_t kUnk = 0;

  Vocabulary() {
    for (auto w : {std::string_view("<unk>"), kAppendedIs, kAppendedOf, kAppendedFrom}) insert(w);
  }

  static Vocabulary build(const std::vector<Sentence>& corpus) {
    Vocabulary v;
    for (const auto& s : corpus)
      for (const auto& t : s.tokens()) v.insert(t.surface);
    return v;
  }

  std::size_t insert(std::string_view w) {
    auto [it, fresh] = index_.emplace(std::string(w), words_.size());
    if (fresh) words_.emplace_back(w);
    return it->second;
  }

  std::size_t id(const std::string& w) const {
    auto it = index_.find(w);
    return it == index_.end() ? kUnk : it->second;
  }

  std::vector<std::size_t> ids(const Sentence& s) const {
    std::vector<std::size_t> out;
    out.reserve(s.size());
    for (const auto& t : s.tokens()) out.push_back(id(t.surface));
    return out;
  }

  std::size_t size() const { return words_.size(); }
  const std::vector<std::string>& words() const { return words_; }

  bool operator==(const Vocabulary& o) const { return words_ == o.words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Copyable atomic counter for encoder passes.
class InvocationCounter {
 public:
  InvocationCounter() = default;
  InvocationCounter(const InvocationCounter& o) : n_(o.get()) {}
  InvocationCounter& operator=(const InvocationCounter& o) {
    n_.store(o.get());
    return *this;
  }
  void bump() { n_.fetch_add(1, std::memory_order_relaxed); }
  std::uint64_t get() const { return n_.load(std::memory_order_relaxed); }
  void reset() { n_.store(0); }

 private:
  std::atomic<std::uint64_t> n_{0};
};

template <typename T>
struct ActivationCache {
  std::vector<std::size_t> ids;
  std::vector<BlockCache<T>> encoder;
  std::vector<std::vector<BlockCache<T>>> levels;  // [level][iterative layer]
  std::vector<NormCache<T>> head_norm;             // per level
  std::vector<Mat<T>> head_input;                  // per level, normalized features
};

/// Output of one forward pass: per-level label distributions and argmax
/// labels, plus the activations needed for a backward pass when requested.
template <typename T>
struct ForwardTrace {
  std::vector<Mat<T>> probs;                       // [level] N x K
  std::vector<std::vector<std::size_t>> labels;    // [level][token]
  std::shared_ptr<const ActivationCache<T>> cache;

  std::size_t levels() const { return probs.size(); }
  std::size_t tokens() const { return probs.empty() ? 0 : static_cast<std::size_t>(probs[0].rows()); }

  template <typename Label>
  ProbGrid<Label, T> grid() const {
    ProbGrid<Label, T> g(levels(), tokens());
    for (std::size_t m = 0; m < levels(); ++m)
      for (std::size_t n = 0; n < tokens(); ++n)
        for (std::size_t k = 0; k < LabelTraits<Label>::kSize; ++k)
          g.at(m, n, k) = probs[m](static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    return g;
  }

  template <typename Label>
  HardGrid<Label> hard() const {
    HardGrid<Label> g(levels(), tokens());
    for (std::size_t m = 0; m < levels(); ++m)
      for (std::size_t n = 0; n < tokens(); ++n) g(m, n) = label_from_index<Label>(labels[m][n]);
    return g;
  }

  template <typename Label>
  PredictedGrid<Label> predicted() const {
    PredictedGrid<Label> out;
    auto g = grid<Label>();
    out.probs = ProbGrid<Label>(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.data().size(); ++i)
      out.probs.data()[i] = static_cast<double>(g.data()[i]);
    out.labels = hard<Label>();
    return out;
  }
};

template <typename T>
class IglNetwork {
 public:
  IglNetwork(EncoderConfig config, Vocabulary vocab) : config_(config), vocab_(std::move(vocab)) {
    config_.validate();
    build_layout();
    params_.assign(layout_.total(), T(0));
    initialize();
  }

  const EncoderConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  const ParameterLayout& layout() const { return layout_; }
  std::span<const T> parameters() const { return params_; }
  std::span<T> mutable_parameters() { return params_; }
  std::size_t parameter_count() const { return params_.size(); }

  std::uint64_t encoder_invocations() const { return encoder_calls_.get(); }
  void reset_encoder_invocations() { encoder_calls_.reset(); }

  /// Label-embedding rows live here; zeroing them cuts the row-to-row feedback.
  std::size_t label_embedding_slot() const { return label_emb_; }

  /// Contextual embeddings (N x d) for the given token ids.
  Mat<T> encode(const std::vector<std::size_t>& ids, ActivationCache<T>* cache = nullptr) const {
    if (ids.empty()) throw ValidationError("cannot encode an empty sentence");
    if (ids.size() > config_.max_len) {
      throw ValidationError("sentence of " + std::to_string(ids.size()) +
                            " tokens exceeds max_len " + std::to_string(config_.max_len));
    }
    encoder_calls_.bump();
    const auto p = parameters();
    const auto tok = layout_.view(p, tok_emb_);
    const auto pos = layout_.view(p, pos_emb_);
    Mat<T> x(static_cast<Eigen::Index>(ids.size()), static_cast<Eigen::Index>(config_.d_model));
    for (std::size_t n = 0; n < ids.size(); ++n) {
      auto id = ids[n] < vocab_.size() ? ids[n] : Vocabulary::kUnk;
      x.row(static_cast<Eigen::Index>(n)) =
          tok.row(static_cast<Eigen::Index>(id)) + pos.row(static_cast<Eigen::Index>(n));
    }
    if (cache) {
      cache->ids = ids;
      cache->encoder.resize(encoder_.size());
    }
    for (std::size_t l = 0; l < encoder_.size(); ++l)
      x = block(encoder_[l]).forward(p, x, cache ? &cache->encoder[l] : nullptr);
    return x;
  }

  Mat<T> encode(const Sentence& s) const { return encode(vocab_.ids(s)); }

  /// Full grid forward: one encoder pass followed by `levels` iterations.
  ForwardTrace<T> forward(const std::vector<std::size_t>& ids, bool keep_cache = false,
                          std::size_t levels = 0) const {
    if (levels == 0) levels = config_.max_levels;
    std::shared_ptr<ActivationCache<T>> cache;
    if (keep_cache) cache = std::make_shared<ActivationCache<T>>();
    Mat<T> cur = encode(ids, cache.get());
    return iterate(std::move(cur), levels, cache);
  }

  ForwardTrace<T> forward(const Sentence& s, std::size_t levels = 0) const {
    return forward(vocab_.ids(s), false, levels);
  }

  /// Iterative stage over precomputed embeddings; does not touch the encoder.
  ForwardTrace<T> iterate(Mat<T> cur, std::size_t levels,
                          const std::shared_ptr<ActivationCache<T>>& cache = nullptr) const {
    const auto p = parameters();
    const auto head_w = layout_.view(p, head_w_);
    const auto head_b = layout_.view(p, head_b_);
    const auto label_emb = layout_.view(p, label_emb_);
    ForwardTrace<T> trace;
    trace.probs.reserve(levels);
    trace.labels.reserve(levels);
    if (cache) {
      cache->levels.assign(levels, std::vector<BlockCache<T>>(iterative_.size()));
      cache->head_norm.resize(levels);
      cache->head_input.resize(levels);
    }
    for (std::size_t m = 0; m < levels; ++m) {
      for (std::size_t l = 0; l < iterative_.size(); ++l)
        cur = block(iterative_[l]).forward(p, cur, cache ? &cache->levels[m][l] : nullptr);
      NormCache<T> nc;
      Mat<T> feat = layer_norm<T>(cur, layout_.view(p, head_norm_.gain),
                                  layout_.view(p, head_norm_.bias), nc);
      Mat<T> logits = feat * head_w;
      logits.rowwise() += head_b.row(0);
      Mat<T> probs = softmax_rows<T>(logits);
      std::vector<std::size_t> hard(static_cast<std::size_t>(probs.rows()));
      for (Eigen::Index n = 0; n < probs.rows(); ++n) {
        Eigen::Index k = 0;
        probs.row(n).maxCoeff(&k);
        hard[static_cast<std::size_t>(n)] = static_cast<std::size_t>(k);
        cur.row(n) += label_emb.row(k);
      }
      if (cache) {
        cache->head_norm[m] = std::move(nc);
        cache->head_input[m] = std::move(feat);
      }
      trace.probs.push_back(std::move(probs));
      trace.labels.push_back(std::move(hard));
    }
    trace.cache = cache;
    return trace;
  }

  /// Accumulates d(loss)/d(params) into `grad` given per-level logit
  /// gradients. Requires a trace produced with keep_cache = true.
  void backward(const ForwardTrace<T>& trace, const std::vector<Mat<T>>& dlogits,
                std::span<T> grad) const {
    if (!trace.cache) throw ValidationError("backward needs a trace with cached activations");
    if (grad.size() != params_.size()) throw ValidationError("gradient buffer has wrong size");
    if (dlogits.size() != trace.levels()) throw ValidationError("one logit gradient per level required");
    const auto& c = *trace.cache;
    const auto p = parameters();
    const auto n = static_cast<Eigen::Index>(trace.tokens());
    const auto d = static_cast<Eigen::Index>(config_.d_model);

    Mat<T> dnext = Mat<T>::Zero(n, d);  // gradient w.r.t. the input of level m+1
    for (std::size_t m = trace.levels(); m-- > 0;) {
      // cur_{m+1} = z_m + label_emb[hard_m]
      auto dlab = layout_.view(grad, label_emb_);
      for (Eigen::Index i = 0; i < n; ++i)
        dlab.row(static_cast<Eigen::Index>(trace.labels[m][static_cast<std::size_t>(i)])) += dnext.row(i);
      Mat<T> dz = dnext;
      const Mat<T>& dl = dlogits[m];
      layout_.view(grad, head_w_).noalias() += c.head_input[m].transpose() * dl;
      layout_.view(grad, head_b_).row(0) += dl.colwise().sum();
      Mat<T> dfeat = dl * layout_.view(p, head_w_).transpose();
      dz += layer_norm_backward<T>(dfeat, layout_.view(p, head_norm_.gain), c.head_norm[m],
                                   layout_.view(grad, head_norm_.gain),
                                   layout_.view(grad, head_norm_.bias));
      for (std::size_t l = iterative_.size(); l-- > 0;)
        dz = block(iterative_[l]).backward(p, c.levels[m][l], dz, grad);
      dnext = std::move(dz);
    }
    for (std::size_t l = encoder_.size(); l-- > 0;)
      dnext = block(encoder_[l]).backward(p, c.encoder[l], dnext, grad);
    auto dtok = layout_.view(grad, tok_emb_);
    auto dpos = layout_.view(grad, pos_emb_);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto id = c.ids[static_cast<std::size_t>(i)];
      if (id >= vocab_.size()) id = Vocabulary::kUnk;
      dtok.row(static_cast<Eigen::Index>(id)) += dnext.row(i);
      dpos.row(i) += dnext.row(i);
    }
  }

  /// Replaces all parameter values; used by checkpoint loading.
  void set_parameters(std::vector<T> values) {
    if (values.size() != params_.size()) throw ValidationError("parameter count mismatch");
    params_ = std::move(values);
  }

 private:
  void build_layout() {
    const auto d = config_.d_model;
    tok_emb_ = layout_.add("embed.tokens", vocab_.size(), d);
    pos_emb_ = layout_.add("embed.positions", config_.max_len, d);
    for (std::size_t l = 0; l < config_.encoder_layers; ++l)
      encoder_.push_back(BlockSlots::add(layout_, "encoder." + std::to_string(l), d, config_.ffn_dim));
    for (std::size_t l = 0; l < config_.iterative_layers; ++l)
      iterative_.push_back(BlockSlots::add(layout_, "iterative." + std::to_string(l), d, config_.ffn_dim));
    head_norm_ = {layout_.add("head.ln.gain", 1, d), layout_.add("head.ln.bias", 1, d)};
    head_w_ = layout_.add("head.weight", d, config_.num_labels());
    head_b_ = layout_.add("head.bias", 1, config_.num_labels());
    label_emb_ = layout_.add("label_embeddings", config_.num_labels(), d);
  }

  void initialize() {
    std::mt19937_64 rng(config_.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (const auto& s : layout_.slots()) {
      const bool is_gain = s.name.ends_with(".gain");
      const bool is_bias = s.name.ends_with(".bias") || s.name.ends_with(".bq") ||
                           s.name.ends_with(".bk") || s.name.ends_with(".bv") ||
                           s.name.ends_with(".bo") || s.name.ends_with(".b1") ||
                           s.name.ends_with(".b2");
      double stddev = 1.0 / std::sqrt(static_cast<double>(s.rows));
      if (s.name.starts_with("embed.") || s.name == "label_embeddings") stddev = 0.5;
      for (std::size_t i = 0; i < s.size(); ++i) {
        T v = is_gain ? T(1) : is_bias ? T(0) : static_cast<T>(stddev * normal(rng));
        params_[s.offset + i] = v;
      }
    }
  }

  EncoderConfig config_;
  Vocabulary vocab_;
  ParameterLayout layout_;
  std::vector<T> params_;
  TransformerBlock<T> block(const BlockSlots& s) const {
    return TransformerBlock<T>(layout_, s, config_.heads);
  }

  std::vector<BlockSlots> encoder_;
  std::vector<BlockSlots> iterative_;  // shared by every level
  std::size_t tok_emb_ = 0, pos_emb_ = 0, head_w_ = 0, head_b_ = 0, label_emb_ = 0;
  NormSlots head_norm_;
  mutable InvocationCounter encoder_calls_;
};

// ---------------------------------------------------------------------------
// Cross-entropy

template <typename T, typename Label>
void check_shape(const ForwardTrace<T>& trace, const HardGrid<Label>& gold) {
  if (gold.rows() != trace.levels() || gold.cols() != trace.tokens()) {
    throw ValidationError("gold grid is " + std::to_string(gold.rows()) + "x" +
                          std::to_string(gold.cols()) + " but prediction is " +
                          std::to_string(trace.levels()) + "x" + std::to_string(trace.tokens()));
  }
}

/// Sum over levels and tokens of -log Y(gold label).
template <typename T, typename Label>
T ce_loss(const ForwardTrace<T>& trace, const HardGrid<Label>& gold) {
  check_shape(trace, gold);
  T total = T(0);
  for (std::size_t m = 0; m < gold.rows(); ++m)
    for (std::size_t n = 0; n < gold.cols(); ++n)
      total -= std::log(trace.probs[m](static_cast<Eigen::Index>(n),
                                       static_cast<Eigen::Index>(label_index(gold(m, n)))));
  return total;
}

/// Adds scale * d(ce_loss)/d(logits) to `dlogits` (sized on first use).
template <typename T, typename Label>
void ce_logit_grad(const ForwardTrace<T>& trace, const HardGrid<Label>& gold, T scale,
                   std::vector<Mat<T>>& dlogits) {
  check_shape(trace, gold);
  if (dlogits.empty()) {
    for (const auto& p : trace.probs) dlogits.push_back(Mat<T>::Zero(p.rows(), p.cols()));
  }
  for (std::size_t m = 0; m < gold.rows(); ++m) {
    dlogits[m] += scale * trace.probs[m];
    for (std::size_t n = 0; n < gold.cols(); ++n)
      dlogits[m](static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(label_index(gold(m, n)))) -= scale;
  }
}

/// Fraction of grid cells whose argmax equals the gold label.
template <typename T, typename Label>
std::pair<std::size_t, std::size_t> label_hits(const ForwardTrace<T>& trace, const HardGrid<Label>& gold) {
  check_shape(trace, gold);
  std::size_t hit = 0;
  for (std::size_t m = 0; m < gold.rows(); ++m)
    for (std::size_t n = 0; n < gold.cols(); ++n) hit += trace.labels[m][n] == label_index(gold(m, n));
  return {hit, gold.rows() * gold.cols()};
}

}  // namespace igl::nnet
