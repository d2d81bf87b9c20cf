// igl: train, predict, eval, bench and synth subcommands.
//
// Exit codes: 0 success, 1 validation error (bad input or arguments),
// 2 runtime error (I/O, numerical failure).

#include <chrono>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "igl/igl.hpp"

using namespace igl;

namespace {

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;

  io::RunConfig load() const {
    io::RunConfig c = config_file.empty() ? io::RunConfig{} : io::RunConfig::from_file(config_file);
    for (const auto& kv : overrides) c.set_pair(kv, "--set: ");
    c.validate();
    return c;
  }
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "key=value configuration file");
  cmd->add_option("--set", c.overrides, "override one configuration key (key=value); repeatable");
}

std::unique_ptr<lingo::Tagger> make_tagger(const io::RunConfig& c) {
  if (c.tagger == "gold") return std::make_unique<lingo::GoldTagger>(lingo::GoldTagger::from_file(c.tags_file));
  if (!c.lexicon_file.empty()) return std::make_unique<lingo::LexiconTagger>(lingo::LexiconTagger::from_file(c.lexicon_file));
  return std::make_unique<lingo::LexiconTagger>(lingo::LexiconTagger::shipped());
}

lingo::LightVerbList make_light_verbs(const io::RunConfig& c) {
  return c.light_verbs_file.empty() ? lingo::LightVerbList::shipped() : lingo::LightVerbList::from_file(c.light_verbs_file);
}

std::string violation_line(const constraints::ViolationReport& v) {
  std::ostringstream s;
  s << v.posc << '\t' << v.hvc << '\t' << v.hve << '\t' << v.ec << '\t' << v.extraction_count;
  return s.str();
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  Common common;
  std::string task = "oie";
  std::string train_file;
  std::string out;
  std::string log_file;
};

template <typename Label>
void run_training(const io::RunConfig& cfg, nnet::EncoderConfig enc, nnet::Vocabulary vocab,
                  const std::vector<dataset::GridItem<Label>>& items, const TrainArgs& a) {
  nnet::IglNetwork<float> net(enc, std::move(vocab));
  auto data = dataset::examples(net, items);
  nnet::TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.optim = cfg.optim;
  tc.weights = cfg.weights;
  tc.warmup_epochs = cfg.warmup_epochs;
  tc.shuffle_seed = cfg.shuffle_seed;
  nnet::Trainer<float, Label> trainer(net, tc);

  std::ofstream log_out;
  if (!a.log_file.empty()) {
    log_out.open(a.log_file);
    if (!log_out) throw RuntimeError("cannot write " + a.log_file);
  }
  const std::string header = "epoch\tloss\tce\tposc\thvc\thve\tec\taccuracy\tconstraints\tv_posc\tv_hvc\tv_hve\tv_ec\tv_extractions";
  std::cout << header << '\n';
  if (log_out) log_out << header << '\n';
  trainer.fit(data, [&](const nnet::EpochLog& l) {
    std::ostringstream line;
    line << l.epoch << '\t' << std::fixed << std::setprecision(4) << l.loss << '\t' << l.ce << '\t'
         << l.penalties.posc << '\t' << l.penalties.hvc << '\t' << l.penalties.hve << '\t' << l.penalties.ec << '\t'
         << l.accuracy << '\t' << (l.constraints_active ? "on" : "off") << '\t' << violation_line(l.violations);
    std::cout << line.str() << std::endl;
    if (log_out) log_out << line.str() << '\n';
  });
  nnet::save_checkpoint(net, a.out);
  std::cout << "wrote " << a.out << " (" << net.parameter_count() << " parameters)\n";
}

void cmd_train(const TrainArgs& a) {
  const auto cfg = a.common.load();
  const auto task = nnet::parse_task(a.task);
  auto enc = cfg.encoder;
  enc.task = task;
  if (task == nnet::Task::Oie) {
    enc.max_levels = cfg.levels_oie;
    auto tagger = make_tagger(cfg);
    dataset::AlignStats st;
    auto items = dataset::oie_grids(io::read_oie_training(a.train_file), *tagger, make_light_verbs(cfg), enc.max_levels, &st);
    std::cout << "sentences " << st.sentences << ", triples " << st.triples << ", aligned " << st.aligned
              << ", skipped " << st.skipped << ", truncated " << st.truncated << ", sentences without rows "
              << st.empty_sentences << '\n';
    for (const auto& [why, n] : st.reasons) std::cout << "  skipped " << n << ": " << why << '\n';
    if (items.empty()) throw ValidationError(a.train_file + ": no training triple could be aligned");
    auto vocab = dataset::vocabulary_of(items);
    run_training(cfg, enc, std::move(vocab), items, a);
  } else {
    enc.max_levels = cfg.levels_coord;
    auto items = dataset::coord_grids(io::read_coord_training(a.train_file), enc.max_levels);
    auto vocab = dataset::vocabulary_of(items);
    run_training(cfg, enc, std::move(vocab), items, a);
  }
}

// ---------------------------------------------------------------------------
// predict / bench

struct PredictArgs {
  std::string input;
  std::string oie_ckpt;
  std::string coord_ckpt;
  std::string out;
  double min_confidence = -std::numeric_limits<double>::infinity();
  std::size_t levels = 0;
};

struct Models {
  nnet::IglNetwork<float> oie;
  std::optional<nnet::IglNetwork<float>> coord;
};

Models load_models(const PredictArgs& a) {
  Models m{nnet::load_checkpoint<float>(a.oie_ckpt), std::nullopt};
  if (m.oie.config().task != nnet::Task::Oie) throw ValidationError(a.oie_ckpt + " is not an extraction model");
  if (!a.coord_ckpt.empty()) {
    m.coord.emplace(nnet::load_checkpoint<float>(a.coord_ckpt));
    if (m.coord->config().task != nnet::Task::Coord) throw ValidationError(a.coord_ckpt + " is not a coordination model");
  }
  return m;
}

void cmd_predict(const PredictArgs& a) {
  auto models = load_models(a);
  pipeline::NetworkOieSource<float> oie(models.oie, a.levels);
  std::optional<pipeline::NetworkCoordSource<float>> coord;
  if (models.coord) coord.emplace(*models.coord);
  pipeline::ExtractConfig cfg;
  cfg.decode.min_confidence = a.min_confidence;
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw RuntimeError("cannot write " + a.out);
  }
  std::ostream& out = a.out.empty() ? std::cout : file;
  std::size_t total = 0;
  const auto sentences = io::read_sentences(a.input);
  for (const auto& line : sentences) {
    auto r = pipeline::extract_sentence(lingo::tokenize(line.text), oie, coord ? &*coord : nullptr, cfg);
    for (const auto& e : r.extractions) io::write_extraction_line(out, line.id, e);
    total += r.extractions.size();
  }
  if (!a.out.empty()) std::cout << "wrote " << total << " extractions for " << sentences.size() << " sentences to " << a.out << '\n';
}

void cmd_bench(const PredictArgs& a) {
  auto models = load_models(a);
  pipeline::NetworkOieSource<float> oie(models.oie, a.levels);
  std::optional<pipeline::NetworkCoordSource<float>> coord;
  if (models.coord) coord.emplace(*models.coord);
  const auto sentences = io::read_sentences(a.input);
  std::vector<Sentence> tokenized;
  for (const auto& l : sentences) tokenized.push_back(lingo::tokenize(l.text));
  models.oie.reset_encoder_invocations();
  if (models.coord) models.coord->reset_encoder_invocations();
  std::size_t leaves = 0, extractions = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& s : tokenized) {
    auto r = pipeline::extract_sentence(s, oie, coord ? &*coord : nullptr);
    leaves += r.leaves;
    extractions += r.extractions.size();
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double rate = secs > 0 ? static_cast<double>(tokenized.size()) / secs : 0.0;
  const auto enc = models.oie.encoder_invocations();
  const auto coord_enc = models.coord ? models.coord->encoder_invocations() : 0;
  std::cout << "sentences\t" << tokenized.size() << '\n'
            << "split_sentences\t" << leaves << '\n'
            << "extractions\t" << extractions << '\n'
            << "seconds\t" << std::fixed << std::setprecision(4) << secs << '\n'
            << "sentences_per_second\t" << std::setprecision(2) << rate << '\n'
            << "encoder_invocations\t" << enc << '\n'
            << "coord_encoder_invocations\t" << coord_enc << '\n'
            << "levels\t" << (a.levels ? a.levels : models.oie.config().max_levels) << '\n';
  if (enc != leaves) throw RuntimeError("encoder invocations do not match processed sentences");
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  Common common;
  std::string system;
  std::string gold;
  std::vector<std::string> scorers;
  bool auc = false;
  std::string tsv;
  std::string sentences;
};

void cmd_eval(const EvalArgs& a) {
  std::vector<eval::Scorer> scorers;
  for (const auto& s : a.scorers) scorers.push_back(eval::parse_scorer(s));
  if (scorers.empty()) scorers = {eval::Scorer::Carb, eval::Scorer::CarbOneOne, eval::Scorer::Oie16C, eval::Scorer::Wire57C};
  if (a.auc) {
    for (auto s : scorers)
      if (s == eval::Scorer::Wire57C) throw ValidationError("AUC undefined for Wire57-C");
  }
  const auto system = io::read_extractions(a.system, true);
  const auto gold = io::read_extractions(a.gold, false);

  std::vector<eval::ScoreReport> reports;
  for (auto s : scorers) reports.push_back(a.auc ? eval::pr_curve_auc(s, system, gold) : eval::score(s, system, gold));

  for (const auto& w : reports.front().warnings) std::cerr << "warning: " << w << '\n';
  std::ostringstream tsv;
  tsv << "scorer\tprecision\trecall\tf1\tauc\n";
  std::cout << std::left << std::setw(14) << "scorer" << std::right << std::setw(10) << "P" << std::setw(10) << "R"
            << std::setw(10) << "F1" << std::setw(10) << "AUC" << '\n';
  for (const auto& r : reports) {
    std::ostringstream auc;
    if (r.auc) auc << std::fixed << std::setprecision(1) << *r.auc;
    else auc << "n/a";
    std::cout << std::left << std::setw(14) << eval::scorer_name(r.scorer) << std::right << std::fixed << std::setprecision(1)
              << std::setw(10) << r.precision << std::setw(10) << r.recall << std::setw(10) << r.f1 << std::setw(10)
              << auc.str() << '\n';
    tsv << eval::scorer_name(r.scorer) << '\t' << std::fixed << std::setprecision(2) << r.precision << '\t' << r.recall
        << '\t' << r.f1 << '\t';
    if (r.auc) tsv << *r.auc;
    else tsv << "n/a";
    tsv << '\n';
  }

  if (!a.sentences.empty()) {
    const auto cfg = a.common.load();
    auto tagger = make_tagger(cfg);
    auto light = make_light_verbs(cfg);
    constraints::ViolationReport total;
    std::size_t unaligned = 0;
    for (const auto& line : io::read_sentences(a.sentences)) {
      auto s = lingo::append_special(lingo::tokenize(line.text));
      std::vector<TextTriple> triples;
      if (auto it = system.find(line.id); it != system.end())
        for (const auto& t : it->second) triples.push_back(t.triple);
      auto g = pipeline::build_gold_grid(s, triples, std::max<std::size_t>(triples.size(), 1));
      unaligned += g.skipped.size();
      total += constraints::count_violations(g.grid, lingo::masks_for(s, *tagger, light));
    }
    std::cout << "violations (posc hvc hve ec extractions): " << violation_line(total) << '\n';
    if (unaligned) std::cout << "note: " << unaligned << " system extractions could not be placed on their sentence\n";
    tsv << "violations\t" << violation_line(total) << '\n';
  }

  if (!a.tsv.empty()) {
    std::ofstream out(a.tsv);
    if (!out) throw RuntimeError("cannot write " + a.tsv);
    out << tsv.str();
  } else {
    std::cout << '\n' << tsv.str();
  }
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string task = "oie";
  std::size_t count = 200;
  std::uint64_t seed = 11;
  double drop_last = 0.0;
  std::size_t levels = 3;
  std::string out;
  std::string tags;
  std::string sentences;
  std::string gold;
};

void cmd_synth(const SynthArgs& a) {
  synthetic::Generator gen(a.seed);
  std::ofstream out(a.out);
  if (!out) throw RuntimeError("cannot write " + a.out);
  if (nnet::parse_task(a.task) == nnet::Task::Coord) {
    for (const auto& s : gen.coord(a.count, a.levels)) io::write_coord_record(out, s.sentence, s.levels);
    return;
  }
  const auto samples = gen.oie(a.count, a.drop_last);
  auto open = [](const std::string& path) {
    std::ofstream f(path);
    if (!f) throw RuntimeError("cannot write " + path);
    return f;
  };
  std::ofstream tags, sents, gold;
  if (!a.tags.empty()) tags = open(a.tags);
  if (!a.sentences.empty()) sents = open(a.sentences);
  if (!a.gold.empty()) gold = open(a.gold);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    const auto text = s.sentence.text();
    for (const auto& t : s.gold) out << text << '\t' << t.subject << '\t' << t.relation << '\t' << t.object << '\n';
    if (tags) {
      tags << text << '\t';
      for (std::size_t k = 0; k < s.tags.size(); ++k) tags << (k ? " " : "") << lingo::pos_name(s.tags[k]);
      tags << '\n';
    }
    if (sents) sents << text << '\n';
    if (gold)
      for (const auto& t : s.gold) gold << (i + 1) << '\t' << t.subject << '\t' << t.relation << '\t' << t.object << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Iterative grid labeling for open information extraction"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "train an extraction or coordination model");
  t->add_option("--task", train.task, "oie or coord")->check(CLI::IsMember({"oie", "coord"}));
  t->add_option("--train", train.train_file, "training file")->required();
  t->add_option("--out", train.out, "checkpoint to write")->required();
  t->add_option("--log", train.log_file, "per-epoch TSV log");
  add_common(t, train.common);

  PredictArgs predict;
  auto* p = app.add_subcommand("predict", "extract tuples from a sentence file");
  p->add_option("--input", predict.input, "one sentence per line")->required();
  p->add_option("--oie", predict.oie_ckpt, "extraction checkpoint")->required();
  p->add_option("--coord", predict.coord_ckpt, "coordination checkpoint (enables splitting)");
  p->add_option("--out", predict.out, "output TSV (default stdout)");
  p->add_option("--min-confidence", predict.min_confidence, "drop extractions below this log confidence");
  p->add_option("--levels", predict.levels, "grid rows to decode (default: the model's)");

  PredictArgs bench;
  auto* b = app.add_subcommand("bench", "time end-to-end extraction");
  b->add_option("--input", bench.input, "one sentence per line")->required();
  b->add_option("--oie", bench.oie_ckpt, "extraction checkpoint")->required();
  b->add_option("--coord", bench.coord_ckpt, "coordination checkpoint");
  b->add_option("--levels", bench.levels, "grid rows to decode (default: the model's)");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "score system extractions against gold");
  e->add_option("--system", ev.system, "system TSV: id, confidence, subject, relation, object")->required();
  e->add_option("--gold", ev.gold, "gold TSV: id, subject, relation, object")->required();
  e->add_option("--scorer", ev.scorers, "carb, carb_one_one, oie16c, wire57c; repeatable (default all)");
  e->add_flag("--auc", ev.auc, "sweep confidences and report the P-R area");
  e->add_option("--tsv", ev.tsv, "write the machine-readable report here");
  e->add_option("--sentences", ev.sentences, "sentence file; adds a constraint-violation line");
  add_common(e, ev.common);

  SynthArgs sy;
  auto* s = app.add_subcommand("synth", "write a templated toy corpus");
  s->add_option("--task", sy.task, "oie or coord")->check(CLI::IsMember({"oie", "coord"}));
  s->add_option("--count", sy.count, "number of sentences");
  s->add_option("--seed", sy.seed, "random seed");
  s->add_option("--drop-last", sy.drop_last, "probability of withholding the last triple of a sentence");
  s->add_option("--levels", sy.levels, "coordination rows per sentence");
  s->add_option("--out", sy.out, "training file")->required();
  s->add_option("--tags", sy.tags, "gold POS tags file (oie)");
  s->add_option("--sentences", sy.sentences, "plain sentence file (oie)");
  s->add_option("--gold", sy.gold, "gold TSV keyed by sentence line (oie)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*t) cmd_train(train);
    else if (*p) cmd_predict(predict);
    else if (*b) cmd_bench(bench);
    else if (*e) cmd_eval(ev);
    else if (*s) cmd_synth(sy);
  } catch (const ValidationError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}
