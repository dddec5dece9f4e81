// rstparse: train, run and evaluate the top-down splitting discourse parser.
//
// Subcommands: gen, validate, convert, train, parse, eval. Exit codes:
// 0 success, 1 usage error, 2 data error, 3 runtime error.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "rst/infer.hpp"
#include "rst/textform.hpp"
#include "rst/train.hpp"

using namespace rst;
using nlohmann::json;

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

struct GenArgs {
  int docs = 50;
  int vocab = 200;
  int mean_tokens = 30;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_gen(const GenArgs& a) {
  auto corpus = generate_synthetic_corpus({a.docs, a.vocab, a.mean_tokens, a.seed});
  save_corpus(corpus, a.out);
  std::cout << "wrote " << corpus.size() << " documents to " << a.out << "\n";
  return 0;
}

int cmd_validate(const std::vector<std::string>& paths) {
  for (const auto& p : paths) {
    auto docs = load_corpus(p);
    long long tokens = 0, with_trees = 0;
    for (const auto& d : docs) {
      tokens += d.n();
      with_trees += d.has_gold_tree() ? 1 : 0;
    }
    std::cout << p << ": " << docs.size() << " documents, " << tokens << " tokens, "
              << with_trees << " with trees -- ok\n";
  }
  return 0;
}

struct ConvertArgs {
  std::string in, out;
  std::string to = "brackets";
};

int cmd_convert(const ConvertArgs& a) {
  auto docs = load_corpus(a.in);
  auto out = open_out(a.out);
  for (const auto& doc : docs) {
    json rec = json::parse(document_record(doc));
    if (doc.gold_tree) {
      if (a.to == "brackets")
        rec["tree"] = bracketed(doc.gold());
      // "splits" is document_record's native form already.
    }
    out << rec.dump() << "\n";
  }
  std::cout << "wrote " << docs.size() << " records to " << a.out << "\n";
  return 0;
}

struct TrainArgs {
  std::string train_path, dev_path, checkpoint = "model.ckpt", log_path, embeddings;
  std::string mode = "gold-edu";
  TrainConfig cfg;
  ModelConfig model_cfg;
  std::uint64_t split_seed = 0;
  bool no_boundary_lstm = false;
  bool no_char_lstm = false;
  bool no_sentence_guidance = false;
  bool zero_init_decoder = false;
};

int cmd_train(TrainArgs& a) {
  a.cfg.mode = mode_from_string(a.mode);
  a.cfg.sentence_guidance = !a.no_sentence_guidance;
  auto corpus = load_corpus(a.train_path);
  std::vector<Document> dev;
  if (!a.dev_path.empty()) {
    dev = load_corpus(a.dev_path);
  } else if (corpus.size() > 1) {
    // Carve a deterministic 10% development split (at least one document).
    std::vector<int> order(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) order[i] = static_cast<int>(i);
    Rng rng(a.split_seed);
    rng.shuffle(order);
    std::size_t dev_count = std::max<std::size_t>(1, corpus.size() / 10);
    std::vector<Document> rest;
    for (std::size_t i = 0; i < order.size(); ++i)
      (i < dev_count ? dev : rest).push_back(corpus[static_cast<std::size_t>(order[i])]);
    corpus = std::move(rest);
  }
  if (a.cfg.mode == Mode::GoldEdu)
    for (const auto& d : corpus)
      if (!d.edu_ends)
        throw DataError("gold-edu training needs edu_ends in every document ('" +
                        d.id + "' lacks them)");

  ParserBundle bundle;
  bundle.vocab = Vocab::build(corpus);
  bundle.chars = CharVocab::build(corpus);
  std::vector<RelationLabel> observed;
  for (const auto& d : corpus)
    for (const auto& c : constituents(d.gold())) observed.push_back(c.label);
  bundle.labels = LabelInventory::from_observed(std::move(observed));
  if (bundle.labels.empty()) bundle.labels = LabelInventory::full();

  ModelConfig mc = a.model_cfg;
  mc.use_boundary_lstm = !a.no_boundary_lstm;
  mc.use_char_lstm = !a.no_char_lstm;
  mc.decoder_zero_init = a.zero_init_decoder;
  mc.word_vocab = bundle.vocab.size();
  mc.char_vocab = bundle.chars.size();
  mc.label_count = bundle.labels.size();
  Rng rng(a.cfg.seed);
  bundle.model = build_model<float>(mc, rng);
  if (!a.embeddings.empty()) {
    int loaded = load_pretrained_embeddings(a.embeddings, bundle.model, bundle.vocab);
    std::cout << "loaded " << loaded << " pretrained embedding rows (frozen)\n";
  }
  std::cout << "model: " << bundle.model.total_parameters() << " parameters, "
            << bundle.labels.size() << " labels, vocab " << bundle.vocab.size()
            << "\n";

  std::ofstream log_stream;
  std::ostream* log = nullptr;
  if (!a.log_path.empty()) {
    log_stream = open_out(a.log_path);
    log = &log_stream;
  }

  TrainResult res = train(bundle, corpus, dev, a.cfg, a.checkpoint, log);
  for (const auto& e : res.epoch_log)
    std::cout << "epoch " << std::setw(3) << e.epoch << "  span " << std::fixed
              << std::setprecision(2) << e.span << "  nuc " << e.nuc << "  rel "
              << e.rel << "  full " << e.full << (e.improved ? "  *" : "") << "\n";
  std::cout << "best dev Full F1 " << std::fixed << std::setprecision(2)
            << res.best_dev_full << " at epoch " << res.best_epoch << "; checkpoint "
            << a.checkpoint << "\n";
  return 0;
}

struct ParseArgs {
  std::string checkpoint, in, out;
  std::string mode = "gold-edu";
  int beam = 20;
  int workers = 1;
  bool no_sentence_guidance = false;
  bool no_boundary_lstm = false;
  bool e2e_beam = false;
};

int cmd_parse(const ParseArgs& a) {
  ParserBundle bundle = load_checkpoint(a.checkpoint);
  if (a.no_boundary_lstm) bundle.model.cfg.use_boundary_lstm = false;
  Mode mode = mode_from_string(a.mode);
  auto docs = load_corpus(a.in);
  for (const auto& d : docs)
    if (mode == Mode::GoldEdu && !d.edu_ends)
      throw DataError("gold-edu parsing needs edu_ends ('" + d.id + "' lacks them)");

  InferOptions opts;
  opts.sentence_guidance = !a.no_sentence_guidance;

  std::vector<std::string> records(docs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= docs.size()) return;
      Document doc = docs[idx];
      ParseResult res = mode == Mode::GoldEdu
                            ? beam_parse_gold_edu(bundle, doc, a.beam)
                            : (a.e2e_beam ? beam_parse_e2e(bundle, doc, a.beam, opts)
                                          : greedy_parse_e2e(bundle, doc, opts));
      // Gold-EDU predictions keep the given segmentation, so the compact
      // EDU form suffices (single-EDU documents get an empty split list);
      // end-to-end output carries its terminals.
      doc.gold_tree = mode == Mode::GoldEdu ? tree_to_splits_edu(res.tree)
                                            : tree_to_splits_e2e(res.tree);
      doc.edu_ends = res.edu_ends;
      records[idx] = document_record(doc);
    }
  };
  int n_workers = std::max(1, a.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  auto out = open_out(a.out);
  for (const auto& r : records) out << r << "\n";
  std::cout << "parsed " << docs.size() << " documents to " << a.out << "\n";
  return 0;
}

struct EvalArgs {
  std::string gold_path, pred_path, out, per_doc;
  std::string mode = "auto";
};

void print_table(const ScoreReport& p, const ScoreReport& r, bool have_seg, double seg) {
  std::cout << std::fixed << std::setprecision(2);
  std::cout << std::left << std::setw(14) << "metric" << std::right << std::setw(8)
            << "Span" << std::setw(8) << "Nuc" << std::setw(8) << "Rel" << std::setw(8)
            << "Full" << "\n";
  std::cout << std::left << std::setw(14) << "parseval" << std::right << std::setw(8)
            << p.span_f1() << std::setw(8) << p.nuc_f1() << std::setw(8) << p.rel_f1()
            << std::setw(8) << p.full_f1() << "\n";
  std::cout << std::left << std::setw(14) << "rst-parseval" << std::right << std::setw(8)
            << r.span_f1() << std::setw(8) << r.nuc_f1() << std::setw(8) << r.rel_f1()
            << std::setw(8) << "-" << "\n";
  if (have_seg) std::cout << "segmentation F1: " << seg << "\n";
}

int cmd_eval(const EvalArgs& a) {
  auto gold_docs = load_corpus(a.gold_path);
  auto pred_docs = load_corpus(a.pred_path);
  std::unordered_map<std::string, const Document*> by_id;
  for (const auto& d : pred_docs) by_id[d.id] = &d;

  ScoreReport parseval_total, rst_total;
  FacetCounts seg_total;
  bool all_have_edus = true;
  std::ofstream per_doc;
  if (!a.per_doc.empty()) per_doc = open_out(a.per_doc);

  for (const auto& gold_doc : gold_docs) {
    auto it = by_id.find(gold_doc.id);
    if (it == by_id.end())
      throw DataError("predictions are missing document id '" + gold_doc.id + "'");
    const Document& pred_doc = *it->second;
    if (!gold_doc.has_gold_tree())
      throw DataError("gold document '" + gold_doc.id + "' has no tree");
    if (!pred_doc.has_gold_tree())
      throw DataError("prediction for '" + gold_doc.id + "' has no tree");
    if (pred_doc.n() != gold_doc.n())
      throw DataError("token count mismatch for document '" + gold_doc.id + "'");
    DiscourseTree gold = gold_doc.gold();
    DiscourseTree pred = pred_doc.gold();
    ScoreReport p = parseval(pred, gold);
    ScoreReport r = rst_parseval(pred, gold);
    parseval_total += p;
    rst_total += r;
    FacetCounts sc;
    if (gold_doc.edu_ends) {
      sc = segmentation_counts(pred.edu_boundaries(), *gold_doc.edu_ends,
                               gold_doc.sentence_ends, gold_doc.n());
      seg_total += sc;
    } else {
      all_have_edus = false;
    }
    if (per_doc) {
      json rec{{"id", gold_doc.id},
               {"parseval",
                {{"span", p.span_f1()},
                 {"nuc", p.nuc_f1()},
                 {"rel", p.rel_f1()},
                 {"full", p.full_f1()}}},
               {"rst_parseval",
                {{"span", r.span_f1()}, {"nuc", r.nuc_f1()}, {"rel", r.rel_f1()}}}};
      if (gold_doc.edu_ends) rec["segmentation_f1"] = sc.f1();
      per_doc << rec.dump() << "\n";
    }
  }

  bool show_seg = a.mode == "end-to-end" || a.mode == "e2e" ||
                  (a.mode == "auto" && all_have_edus);
  if ((a.mode == "end-to-end" || a.mode == "e2e") && !all_have_edus)
    throw DataError("end-to-end evaluation needs edu_ends in the gold corpus");
  print_table(parseval_total, rst_total, show_seg, seg_total.f1());

  if (!a.out.empty()) {
    json rep{{"parseval",
              {{"span", parseval_total.span_f1()},
               {"nuc", parseval_total.nuc_f1()},
               {"rel", parseval_total.rel_f1()},
               {"full", parseval_total.full_f1()},
               {"counts",
                {{"matched", parseval_total.full.matched},
                 {"predicted", parseval_total.full.predicted},
                 {"gold", parseval_total.full.gold}}}}},
             {"rst_parseval",
              {{"span", rst_total.span_f1()},
               {"nuc", rst_total.nuc_f1()},
               {"rel", rst_total.rel_f1()}}},
             {"documents", gold_docs.size()}};
    if (show_seg) rep["segmentation_f1"] = seg_total.f1();
    open_out(a.out) << rep.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Top-down splitting discourse parser"};
  app.require_subcommand(1);
  if (const char* cfg_env = std::getenv("RSTPARSE_CONFIG"))
    app.set_config("--config", cfg_env, "configuration file (flags win)", false);
  else
    app.set_config("--config", "", "configuration file (flags win)", false);

  GenArgs gen;
  auto* sc_gen = app.add_subcommand("gen", "generate a synthetic corpus");
  sc_gen->add_option("--docs", gen.docs, "number of documents")->check(CLI::PositiveNumber);
  sc_gen->add_option("--vocab", gen.vocab, "vocabulary size");
  sc_gen->add_option("--mean-tokens", gen.mean_tokens, "average document length");
  sc_gen->add_option("--seed", gen.seed, "random seed");
  sc_gen->add_option("-o,--out", gen.out, "output corpus file")->required();

  std::vector<std::string> validate_paths;
  auto* sc_val = app.add_subcommand("validate", "validate corpus files");
  sc_val->add_option("paths", validate_paths, "corpus files")->required();

  ConvertArgs conv;
  auto* sc_conv = app.add_subcommand("convert", "convert tree encodings");
  sc_conv->add_option("input", conv.in, "input corpus")->required();
  sc_conv->add_option("-o,--out", conv.out, "output corpus")->required();
  sc_conv->add_option("--to", conv.to, "target tree form: splits | brackets")
      ->check(CLI::IsMember({"splits", "brackets"}));

  TrainArgs tr;
  auto* sc_train = app.add_subcommand("train", "train a parser");
  sc_train->add_option("--train", tr.train_path, "training corpus")->required();
  sc_train->add_option("--dev", tr.dev_path, "development corpus (default: 10% split)");
  sc_train->add_option("--checkpoint", tr.checkpoint, "checkpoint output path");
  sc_train->add_option("--log", tr.log_path, "JSONL training log");
  sc_train->add_option("--embeddings", tr.embeddings, "pretrained word vectors (frozen)");
  sc_train->add_option("--mode", tr.mode, "end-to-end | gold-edu");
  sc_train->add_option("--seed", tr.cfg.seed, "random seed");
  sc_train->add_option("--split-seed", tr.split_seed, "dev split seed");
  sc_train->add_option("--epochs", tr.cfg.max_epochs, "training epochs");
  sc_train->add_option("--lr", tr.cfg.learning_rate, "initial learning rate");
  sc_train->add_option("--decay-rate", tr.cfg.decay_rate, "exponential decay factor");
  sc_train->add_option("--decay-every", tr.cfg.decay_every, "steps per decay bucket");
  sc_train->add_option("--batch-tokens", tr.cfg.batch_size_tokens, "tokens per batch");
  sc_train->add_option("--beam", tr.cfg.beam_width_eval, "beam width for dev decoding");
  sc_train->add_option("--clip-norm", tr.cfg.clip_norm, "gradient norm clip (0 = off)");
  sc_train->add_option("--word-dim", tr.model_cfg.word_dim, "word embedding size");
  sc_train->add_option("--char-dim", tr.model_cfg.char_dim, "char embedding size");
  sc_train->add_option("--char-hidden", tr.model_cfg.char_hidden, "char LSTM size");
  sc_train->add_option("--hidden", tr.model_cfg.hidden, "encoder LSTM size per direction");
  sc_train->add_option("--enc-layers", tr.model_cfg.enc_layers, "encoder layers");
  sc_train->add_option("--dec-layers", tr.model_cfg.dec_layers, "decoder layers");
  sc_train->add_option("--mlp-dim", tr.model_cfg.mlp_dim, "MLP/biaffine size");
  sc_train->add_option("--dropout", tr.model_cfg.dropout, "dropout rate")
      ->check(CLI::Range(0.0, 0.999));
  sc_train->add_flag("--no-boundary-lstm", tr.no_boundary_lstm,
                     "disable the EDU-boundary LSTM");
  sc_train->add_flag("--no-char-lstm", tr.no_char_lstm, "word embeddings only");
  sc_train->add_flag("--no-sentence-guidance", tr.no_sentence_guidance,
                     "disable sentence guidance in end-to-end dev decoding");
  sc_train->add_flag("--zero-init-decoder", tr.zero_init_decoder,
                     "zero decoder initial state instead of the learned projection");

  ParseArgs pa;
  auto* sc_parse = app.add_subcommand("parse", "parse a corpus with a checkpoint");
  sc_parse->add_option("--checkpoint", pa.checkpoint, "checkpoint path")->required();
  sc_parse->add_option("input", pa.in, "input corpus")->required();
  sc_parse->add_option("-o,--out", pa.out, "predictions file")->required();
  sc_parse->add_option("--mode", pa.mode, "end-to-end | gold-edu");
  sc_parse->add_option("--beam", pa.beam, "beam width")->check(CLI::PositiveNumber);
  sc_parse->add_option("--workers", pa.workers, "parallel parsing threads");
  sc_parse->add_flag("--no-sentence-guidance", pa.no_sentence_guidance,
                     "disable sentence guidance (end-to-end)");
  sc_parse->add_flag("--no-boundary-lstm", pa.no_boundary_lstm,
                     "skip the EDU-boundary LSTM");
  sc_parse->add_flag("--e2e-beam", pa.e2e_beam,
                     "use beam search in end-to-end mode (default greedy)");

  EvalArgs ev;
  auto* sc_eval = app.add_subcommand("eval", "score predictions against gold trees");
  sc_eval->add_option("--gold", ev.gold_path, "gold corpus")->required();
  sc_eval->add_option("--pred", ev.pred_path, "predictions corpus")->required();
  sc_eval->add_option("-o,--out", ev.out, "JSON report path");
  sc_eval->add_option("--per-doc", ev.per_doc, "per-document JSONL breakdown");
  sc_eval->add_option("--mode", ev.mode, "auto | end-to-end | gold-edu");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sc_gen->parsed()) return cmd_gen(gen);
    if (sc_val->parsed()) return cmd_validate(validate_paths);
    if (sc_conv->parsed()) return cmd_convert(conv);
    if (sc_train->parsed()) return cmd_train(tr);
    if (sc_parse->parsed()) return cmd_parse(pa);
    if (sc_eval->parsed()) return cmd_eval(ev);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
