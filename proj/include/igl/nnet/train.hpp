// Mini-batch training of the grid labeler with the optional constrained loss.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "igl/constraints.hpp"
#include "igl/core.hpp"
#include "igl/lingo.hpp"
#include "igl/nnet/network.hpp"
#include "igl/nnet/optim.hpp"

namespace igl::nnet {

template <typename Label>
struct TrainingExample {
  SentencePtr sentence;
  std::vector<std::size_t> ids;
  HardGrid<Label> gold;
  lingo::TokenMasks masks;  // consulted only for OpenIE grids
};

template <typename Label, typename T>
TrainingExample<Label> make_example(const IglNetwork<T>& net, Sentence s, HardGrid<Label> gold,
                                    lingo::TokenMasks masks = {}) {
  if (gold.cols() != s.size()) throw ValidationError("gold grid width does not match sentence length");
  if (gold.rows() != net.config().max_levels)
    throw ValidationError("gold grid has " + std::to_string(gold.rows()) + " rows, model expects " +
                          std::to_string(net.config().max_levels));
  TrainingExample<Label> ex;
  ex.ids = net.vocab().ids(s);
  ex.sentence = std::make_shared<const Sentence>(std::move(s));
  ex.gold = std::move(gold);
  ex.masks = std::move(masks);
  if (ex.masks.important.empty()) {
    ex.masks.important.assign(ex.ids.size(), false);
    ex.masks.head_verb.assign(ex.ids.size(), false);
  }
  return ex;
}

struct TrainConfig {
  std::size_t epochs = 20;
  std::size_t batch_size = 24;
  AdamWConfig optim;
  constraints::PenaltyWeights weights;
  std::size_t warmup_epochs = 2;
  bool shuffle = true;
  std::uint64_t shuffle_seed = 7;
  /// Stop once an epoch's training accuracy reaches this fraction; values
  /// above 1 never stop early.
  double stop_at_accuracy = 2.0;

  void validate() const {
    if (batch_size == 0) throw ValidationError("batch_size must be positive");
    optim.validate();
    weights.validate();
  }
};

struct EpochLog {
  std::size_t epoch = 0;
  double loss = 0;  // mean combined loss per sentence
  double ce = 0;
  constraints::PenaltyBreakdown penalties;  // mean per sentence
  double accuracy = 0;                      // grid cells, from the training passes
  constraints::ViolationReport violations;  // OpenIE only
  bool constraints_active = false;
};

struct EvalStats {
  double accuracy = 0;
  std::size_t cells = 0;
  constraints::ViolationReport violations;
};

/// Accuracy over all grid cells and discrete violations (OpenIE) on `data`.
template <typename T, typename Label>
EvalStats evaluate(const IglNetwork<T>& net, const std::vector<TrainingExample<Label>>& data) {
  EvalStats st;
  std::size_t hits = 0;
  for (const auto& ex : data) {
    auto tr = net.forward(ex.ids);
    auto [h, c] = label_hits(tr, ex.gold);
    hits += h;
    st.cells += c;
    if constexpr (std::is_same_v<Label, OieLabel>)
      st.violations += constraints::count_violations(tr.template hard<OieLabel>(), ex.masks);
  }
  st.accuracy = st.cells ? static_cast<double>(hits) / static_cast<double>(st.cells) : 0.0;
  return st;
}

template <typename T, typename Label>
class Trainer {
 public:
  Trainer(IglNetwork<T>& net, TrainConfig cfg)
      : net_(&net), cfg_(std::move(cfg)), opt_(cfg_.optim, net.parameter_count()), rng_(cfg_.shuffle_seed) {
    cfg_.validate();
  }

  const TrainConfig& config() const { return cfg_; }
  std::size_t steps() const { return opt_.steps(); }

  struct StepResult {
    double loss = 0, ce = 0;
    constraints::PenaltyBreakdown penalties;
    std::size_t hits = 0, cells = 0;
    constraints::ViolationReport violations;
  };

  /// One optimizer step on `batch`; losses are averaged over the batch.
  StepResult step(const std::vector<const TrainingExample<Label>*>& batch, bool constraints_on) {
    if (batch.empty()) throw ValidationError("empty training batch");
    StepResult r;
    std::vector<T> grad(net_->parameter_count(), T(0));
    const T scale = T(1) / static_cast<T>(batch.size());
    for (const auto* ex : batch) {
      auto tr = net_->forward(ex->ids, true);
      std::vector<Mat<T>> dlogits;
      double loss = 0;
      if constexpr (std::is_same_v<Label, OieLabel>) {
        constraints::PenaltyBreakdown pb;
        const double ce = static_cast<double>(ce_loss(tr, ex->gold));
        loss = static_cast<double>(constraints::combined_loss_grad(tr, ex->gold, ex->masks, cfg_.weights,
                                                                   constraints_on, scale, dlogits, &pb));
        r.ce += ce;
        r.penalties.posc += pb.posc;
        r.penalties.hvc += pb.hvc;
        r.penalties.hve += pb.hve;
        r.penalties.ec += pb.ec;
        r.violations += constraints::count_violations(tr.template hard<OieLabel>(), ex->masks);
      } else {
        loss = static_cast<double>(ce_loss(tr, ex->gold));
        ce_logit_grad(tr, ex->gold, scale, dlogits);
        r.ce += loss;
      }
      if (!std::isfinite(loss)) {
        throw RuntimeError("non-finite loss at optimizer step " + std::to_string(opt_.steps() + 1) +
                           " on sentence '" + ex->sentence->text() + "'");
      }
      r.loss += loss;
      auto [h, c] = label_hits(tr, ex->gold);
      r.hits += h;
      r.cells += c;
      net_->backward(tr, dlogits, grad);
    }
    for (auto g : grad)
      if (!std::isfinite(static_cast<double>(g)))
        throw RuntimeError("non-finite gradient at optimizer step " + std::to_string(opt_.steps() + 1));
    opt_.step(net_->mutable_parameters(), grad);
    return r;
  }

  EpochLog epoch(const std::vector<TrainingExample<Label>>& data) {
    if (data.empty()) throw ValidationError("no training examples");
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    if (cfg_.shuffle) std::shuffle(order.begin(), order.end(), rng_);
    const std::size_t per_epoch = (data.size() + cfg_.batch_size - 1) / cfg_.batch_size;
    const std::size_t warmup_steps = cfg_.warmup_epochs * per_epoch;
    EpochLog log;
    log.epoch = ++epochs_;
    std::size_t hits = 0, cells = 0;
    for (std::size_t b = 0; b < data.size(); b += cfg_.batch_size) {
      std::vector<const TrainingExample<Label>*> batch;
      for (std::size_t i = b; i < std::min(data.size(), b + cfg_.batch_size); ++i) batch.push_back(&data[order[i]]);
      const bool on = constraints::constraints_active(opt_.steps(), warmup_steps) && !cfg_.weights.all_zero();
      log.constraints_active = log.constraints_active || on;
      auto r = step(batch, on);
      log.loss += r.loss;
      log.ce += r.ce;
      log.penalties.posc += r.penalties.posc;
      log.penalties.hvc += r.penalties.hvc;
      log.penalties.hve += r.penalties.hve;
      log.penalties.ec += r.penalties.ec;
      log.violations += r.violations;
      hits += r.hits;
      cells += r.cells;
    }
    const double n = static_cast<double>(data.size());
    log.loss /= n;
    log.ce /= n;
    log.penalties.posc /= n;
    log.penalties.hvc /= n;
    log.penalties.hve /= n;
    log.penalties.ec /= n;
    log.accuracy = cells ? static_cast<double>(hits) / static_cast<double>(cells) : 0.0;
    return log;
  }

  /// Runs up to cfg.epochs epochs; `on_epoch` sees every log line.
  std::vector<EpochLog> fit(const std::vector<TrainingExample<Label>>& data,
                            const std::function<void(const EpochLog&)>& on_epoch = {}) {
    std::vector<EpochLog> logs;
    for (std::size_t e = 0; e < cfg_.epochs; ++e) {
      logs.push_back(epoch(data));
      if (on_epoch) on_epoch(logs.back());
      if (logs.back().accuracy >= cfg_.stop_at_accuracy) break;
    }
    return logs;
  }

 private:
  IglNetwork<T>* net_;
  TrainConfig cfg_;
  AdamW<T> opt_;
  std::mt19937_64 rng_;
  std::size_t epochs_ = 0;
};

}  // namespace igl::nnet
