// Acceptance suite: runs every gating criterion end to end and prints one
// PASS/FAIL line each (plus one informational NOTE). Exit code 0 iff all
// checks pass. `--only N` restricts the run to a single criterion.

#include <chrono>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "grad_check.hpp"
#include "rst/infer.hpp"
#include "rst/metrics.hpp"
#include "rst/train.hpp"
#include "test_support.hpp"

using namespace rst;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  double seconds = 0.0;
};

using Clock = std::chrono::steady_clock;

double elapsed(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// --- 1. Bijection suite -----------------------------------------------------

Outcome criterion_bijection() {
  auto start = Clock::now();
  Outcome out;
  Rng rng(20240207);
  int trees = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    DiscourseTree t = rsttest::random_labeled_tree(rng, 12);
    int m = t.edu_count();
    SplitSequence edu = tree_to_splits_edu(t);
    SplitSequence e2e = tree_to_splits_e2e(t);
    bool ok = static_cast<int>(edu.size()) == m - 1 &&
              static_cast<int>(e2e.size()) == 2 * m - 1 &&
              splits_to_tree(edu, t.n()) == t && splits_to_tree(e2e, t.n()) == t;
    if (!ok) {
      out.pass = false;
      out.detail = "round-trip failed for a tree with m=" + std::to_string(m);
      break;
    }
    ++trees;
  }
  out.seconds = elapsed(start);
  if (out.pass && out.seconds >= 5.0) {
    out.pass = false;
    out.detail = "exceeded the 5 s budget";
  }
  if (out.pass)
    out.detail = std::to_string(trees) + " trees round-tripped, counting laws hold";
  return out;
}

// --- 2. Printed example golden test ------------------------------------------

Outcome criterion_golden_example() {
  Outcome out;
  auto start = Clock::now();
  DiscourseTree tree = rsttest::example_tree();
  auto dec = [](int i, int j, int k) { return SplitDecision{i, j, k, std::nullopt}; };
  const SplitSequence want_edu = {dec(0, 44, 4), dec(4, 44, 25), dec(4, 25, 17),
                                  dec(25, 44, 37), dec(25, 37, 33)};
  const SplitSequence want_e2e = {dec(0, 44, 4),   dec(0, 4, 4),    dec(4, 44, 25),
                                  dec(4, 25, 17),  dec(4, 17, 17),  dec(17, 25, 25),
                                  dec(25, 44, 37), dec(25, 37, 33), dec(25, 33, 33),
                                  dec(33, 37, 37), dec(37, 44, 44)};
  auto same = [](const SplitSequence& a, const SplitSequence& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t t = 0; t < a.size(); ++t)
      if (a[t].i != b[t].i || a[t].j != b[t].j || a[t].k != b[t].k) return false;
    return true;
  };
  SplitSequence got_edu = tree_to_splits_edu(tree);
  SplitSequence got_e2e = tree_to_splits_e2e(tree);
  out.pass = same(got_edu, want_edu) && same(got_e2e, want_e2e) &&
             splits_to_tree(got_e2e, 44) == tree;
  out.detail = out.pass ? "5-decision and 11-decision sequences match exactly"
                        : "sequence mismatch: " + to_string(got_edu) + " / " +
                              to_string(got_e2e);
  out.seconds = elapsed(start);
  return out;
}

// --- 3. Beam-optimality oracle ----------------------------------------------

Outcome criterion_beam_oracle() {
  Outcome out;
  auto start = Clock::now();
  auto catalan = [](int q) {
    long long c[13] = {1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796, 58786, 208012};
    return c[q];
  };
  int oracle_matches = 0, greedy_matches = 0, monotone_checks = 0;
  for (int m = 3; m <= 7 && out.pass; ++m) {
    Document doc;
    doc.id = "beam-m" + std::to_string(m);
    for (int t = 0; t < 2 * m; ++t) doc.tokens.push_back("w" + std::to_string(t % 9));
    doc.sentence_ends = {2 * m};
    std::vector<int> ends;
    for (int e = 1; e <= m; ++e) ends.push_back(2 * e);
    doc.edu_ends = ends;
    const int full_width = static_cast<int>(catalan(m - 1));
    for (std::uint64_t seed = 0; seed < 50 && out.pass; ++seed) {
      ParserBundle bundle = rsttest::tiny_bundle({doc}, 7000 + seed * 31 + m);
      ParseResult oracle = exhaustive_oracle(bundle, doc, Mode::GoldEdu);
      ParseResult beam = beam_parse_gold_edu(bundle, doc, full_width);
      if (!(beam.tree == oracle.tree) ||
          std::abs(beam.logprob - oracle.logprob) > 1e-9) {
        out.pass = false;
        out.detail = "beam(Catalan) != oracle at m=" + std::to_string(m) +
                     " seed=" + std::to_string(seed);
        break;
      }
      ++oracle_matches;
      ParseResult b1 = beam_parse_gold_edu(bundle, doc, 1);
      ParseResult greedy = greedy_parse_gold_edu(bundle, doc);
      if (!(b1.tree == greedy.tree)) {
        out.pass = false;
        out.detail = "beam(1) != greedy at m=" + std::to_string(m);
        break;
      }
      ++greedy_matches;
      double prev = -1e300;
      for (int b : {1, 2, 5, 20}) {
        ParseResult r = beam_parse_gold_edu(bundle, doc, b);
        if (r.logprob < prev - 1e-9) {
          out.pass = false;
          out.detail = "log-prob decreased from B to " + std::to_string(b) +
                       " at m=" + std::to_string(m) + " seed=" + std::to_string(seed);
          break;
        }
        prev = r.logprob;
        ++monotone_checks;
      }
    }
  }
  out.seconds = elapsed(start);
  if (out.pass && out.seconds >= 120.0) {
    out.pass = false;
    out.detail = "exceeded the 2 min budget";
  }
  if (out.pass)
    out.detail = std::to_string(oracle_matches) + " oracle matches, " +
                 std::to_string(greedy_matches) + " greedy matches, " +
                 std::to_string(monotone_checks) + " monotone width steps";
  return out;
}

// --- 4. Sentence guidance property -------------------------------------------

Outcome criterion_sentence_guidance() {
  Outcome out;
  auto start = Clock::now();
  auto corpus = generate_synthetic_corpus({40, 60, 18, 13});
  int parses = 0;
  for (std::uint64_t seed = 0; seed < 5 && out.pass; ++seed) {
    ParserBundle bundle = rsttest::tiny_bundle(corpus, 9000 + seed);
    for (const auto& doc : corpus) {
      ParseResult r = greedy_parse_e2e(bundle, doc);
      std::set<std::pair<int, int>> spans;
      for (int v = 0; v < r.tree.node_count(); ++v)
        spans.insert({r.tree.node(v).i, r.tree.node(v).j});
      int prev = 0;
      for (int s : doc.sentence_ends) {
        if (!spans.count({prev, s})) {
          out.pass = false;
          out.detail = "sentence span (" + std::to_string(prev) + "," +
                       std::to_string(s) + ") missing in '" + doc.id + "'";
          break;
        }
        prev = s;
      }
      // EDUs are nested within sentences and form a valid segmentation.
      Document check = doc;
      check.edu_ends = r.edu_ends;
      check.gold_tree.reset();
      try {
        validate_document(check);
      } catch (const DataError& e) {
        out.pass = false;
        out.detail = e.what();
      }
      if (!out.pass) break;
      ++parses;
    }
  }
  out.seconds = elapsed(start);
  if (out.pass)
    out.detail = std::to_string(parses) + " parses, all sentence spans intact";
  return out;
}

// --- 5. Gradient checks -------------------------------------------------------

Outcome criterion_gradients() {
  Outcome out;
  auto start = Clock::now();
  auto gold = rsttest::run_grad_check(424242, Mode::GoldEdu);
  auto e2e = rsttest::run_grad_check(424242, Mode::EndToEnd);
  double worst = std::max(gold.max_err, e2e.max_err);
  out.pass = worst <= 1e-4;
  out.seconds = elapsed(start);
  if (out.pass && out.seconds >= 60.0) {
    out.pass = false;
    out.detail = "exceeded the 1 min budget";
  }
  if (out.pass) {
    std::ostringstream os;
    os << (gold.checked + e2e.checked) << " derivatives checked, max rel err "
       << std::scientific << std::setprecision(2) << worst;
    out.detail = os.str();
  } else if (out.detail.empty()) {
    out.detail = "max rel err " + std::to_string(worst) + " at " +
                 (gold.max_err > e2e.max_err ? gold.worst : e2e.worst);
  }
  return out;
}

// --- 6. Pointing distributions sum to one -------------------------------------

Outcome criterion_pointing_sums() {
  Outcome out;
  auto start = Clock::now();
  Rng rng(606060);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor<float> s({static_cast<std::size_t>(rng.next_int(2, 60))});
    for (auto& x : s.v) x = static_cast<float>(rng.next_uniform(-10, 10));
    auto p = pointing_distribution(s);
    double total = 0.0;
    bool nonneg = true;
    for (double x : p) {
      total += x;
      nonneg = nonneg && x >= 0.0;
    }
    worst = std::max(worst, std::abs(total - 1.0));
    if (!nonneg || std::abs(total - 1.0) > 1e-6) {
      out.pass = false;
      out.detail = "distribution sum off by " + std::to_string(total - 1.0);
      break;
    }
  }
  out.seconds = elapsed(start);
  if (out.pass) {
    std::ostringstream os;
    os << "100 instances, worst |sum-1| = " << std::scientific
       << std::setprecision(2) << worst;
    out.detail = os.str();
  }
  return out;
}

// --- 7. Overfit test ------------------------------------------------------------

ModelConfig overfit_model_config() {
  ModelConfig mc;
  mc.word_dim = 32;
  mc.use_char_lstm = false;
  mc.hidden = 36;
  mc.enc_layers = 2;
  mc.dec_layers = 1;
  mc.mlp_dim = 48;
  mc.use_boundary_lstm = true;
  return mc;
}

Outcome criterion_overfit() {
  Outcome out;
  auto start = Clock::now();
  auto corpus = generate_synthetic_corpus({50, 200, 30, 4242});

  // Gold-EDU run: >= 99% split accuracy and >= 95 Full F1 on the training
  // split within 200 epochs.
  {
    ParserBundle bundle;
    bundle.vocab = Vocab::build(corpus);
    bundle.chars = CharVocab::build(corpus);
    bundle.labels = LabelInventory::full();
    ModelConfig mc = overfit_model_config();
    mc.word_vocab = bundle.vocab.size();
    mc.char_vocab = bundle.chars.size();
    mc.label_count = bundle.labels.size();
    Rng rng(11);
    bundle.model = build_model<float>(mc, rng);

    TrainConfig cfg;
    cfg.mode = Mode::GoldEdu;
    cfg.max_epochs = 200;
    cfg.batch_size_tokens = 300;
    cfg.learning_rate = 0.004;
    cfg.beam_width_eval = 5;
    cfg.seed = 11;

    double split_acc = 0.0, full_f1 = 0.0;
    auto stop = [&](const EpochStats& es, ParserBundle& b) {
      full_f1 = es.full;
      if (es.full < 95.0) return false;
      split_acc = 100.0 * teacher_forced_split_accuracy(b.model, b.vocab, b.chars,
                                                        corpus, Mode::GoldEdu);
      return split_acc >= 99.0;
    };
    TrainResult res = train(bundle, corpus, corpus, cfg, "", nullptr, stop);
    if (split_acc < 99.0 || full_f1 < 95.0) {
      out.pass = false;
      std::ostringstream os;
      os << "gold-EDU run: split acc " << std::fixed << std::setprecision(2)
         << split_acc << "%, Full F1 " << full_f1 << " after "
         << res.epoch_log.size() << " epochs";
      out.detail = os.str();
    } else {
      std::ostringstream os;
      os << "gold-EDU: split acc " << std::fixed << std::setprecision(2) << split_acc
         << "%, Full F1 " << full_f1 << " at epoch " << res.epoch_log.size() - 1;
      out.detail = os.str();
    }
  }

  // End-to-end run: >= 90 segmentation F1 on the training split.
  if (out.pass) {
    ParserBundle bundle;
    bundle.vocab = Vocab::build(corpus);
    bundle.chars = CharVocab::build(corpus);
    bundle.labels = LabelInventory::full();
    ModelConfig mc = overfit_model_config();
    mc.word_vocab = bundle.vocab.size();
    mc.char_vocab = bundle.chars.size();
    mc.label_count = bundle.labels.size();
    Rng rng(12);
    bundle.model = build_model<float>(mc, rng);

    TrainConfig cfg;
    cfg.mode = Mode::EndToEnd;
    cfg.max_epochs = 200;
    cfg.batch_size_tokens = 300;
    cfg.learning_rate = 0.004;
    cfg.seed = 12;

    double seg = 0.0;
    auto seg_f1_now = [&](ParserBundle& b) {
      FacetCounts total;
      for (const auto& doc : corpus) {
        ParseResult r = greedy_parse_e2e(b, doc);
        total += segmentation_counts(r.edu_ends, *doc.edu_ends, doc.sentence_ends,
                                     doc.n());
      }
      return total.f1();
    };
    auto stop = [&](const EpochStats& es, ParserBundle& b) {
      if (es.full < 40.0) return false;  // skip the expensive check early on
      seg = seg_f1_now(b);
      return seg >= 90.0;
    };
    TrainResult res = train(bundle, corpus, corpus, cfg, "", nullptr, stop);
    if (seg < 90.0) seg = seg_f1_now(bundle);
    if (seg < 90.0) {
      out.pass = false;
      std::ostringstream os;
      os << "end-to-end run: segmentation F1 " << std::fixed << std::setprecision(2)
         << seg << " after " << res.epoch_log.size() << " epochs";
      out.detail = os.str();
    } else {
      std::ostringstream os;
      os << out.detail << "; e2e segmentation F1 " << std::fixed
         << std::setprecision(2) << seg << " at epoch " << res.epoch_log.size() - 1;
      out.detail = os.str();
    }
  }

  out.seconds = elapsed(start);
  if (out.pass && out.seconds >= 600.0) {
    out.pass = false;
    out.detail += " (exceeded the 10 min budget)";
  }
  return out;
}

// --- 8. Metric oracles ----------------------------------------------------------

Outcome criterion_metric_oracles() {
  Outcome out;
  auto start = Clock::now();

  // pred == gold scores 100 everywhere, both families.
  Rng rng(515151);
  for (int trial = 0; trial < 100 && out.pass; ++trial) {
    DiscourseTree t = rsttest::random_labeled_tree(rng, 10);
    ScoreReport p = parseval(t, t);
    ScoreReport r = rst_parseval(t, t);
    if (p.span_f1() != 100.0 || p.nuc_f1() != 100.0 || p.rel_f1() != 100.0 ||
        p.full_f1() != 100.0 || r.span_f1() != 100.0 || r.nuc_f1() != 100.0 ||
        r.rel_f1() != 100.0) {
      out.pass = false;
      out.detail = "identical trees did not score 100";
    }
  }

  // Perturbed worked example: Parseval Span F1 = 75.0 by hand enumeration.
  if (out.pass) {
    ScoreReport r = parseval(rsttest::perturbed_example_tree(), rsttest::example_tree());
    if (std::abs(r.span_f1() - 75.0) > 1e-9 || r.span.matched != 3 ||
        r.span.predicted != 4 || r.span.gold != 4) {
      out.pass = false;
      out.detail = "perturbed fixture Span F1 = " + std::to_string(r.span_f1());
    }
  }

  // Micro-average identity over random corpora.
  if (out.pass) {
    for (int trial = 0; trial < 20 && out.pass; ++trial) {
      int docs = rng.next_int(2, 6);
      ScoreReport summed;
      std::map<std::tuple<int, int, int, int>, int> gold_bag;
      std::vector<std::tuple<int, int, int, int>> pred_items;
      for (int d = 0; d < docs; ++d) {
        DiscourseTree gold = rsttest::random_labeled_tree(rng, 8);
        DiscourseTree pred = randomize_labels(rng, gold, LabelInventory::full());
        summed += parseval(pred, gold);
        for (const auto& it : parseval_items(gold)) ++gold_bag[{d, it.i, it.k, it.j}];
        for (const auto& it : parseval_items(pred))
          pred_items.emplace_back(d, it.i, it.k, it.j);
      }
      FacetCounts concat;
      for (const auto& key : pred_items) {
        ++concat.predicted;
        auto it = gold_bag.find(key);
        if (it != gold_bag.end() && it->second > 0) {
          --it->second;
          ++concat.matched;
        }
      }
      for (const auto& [k, c] : gold_bag) concat.gold += c;
      concat.gold += concat.matched;
      if (std::abs(concat.f1() - summed.span_f1()) > 1e-9) {
        out.pass = false;
        out.detail = "micro-average identity violated";
      }
    }
  }

  out.seconds = elapsed(start);
  if (out.pass)
    out.detail = "perfect-match 100s, perturbed fixture 75.0, micro-average identity";
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int a = 1; a < argc; ++a)
    if (std::strcmp(argv[a], "--only") == 0 && a + 1 < argc) only = std::atoi(argv[a + 1]);

  struct Entry {
    int id;
    const char* name;
    Outcome (*fn)();
  };
  const Entry entries[] = {
      {1, "bijection suite (1000 random trees, m <= 12)", criterion_bijection},
      {2, "printed-example golden conversions", criterion_golden_example},
      {3, "beam-optimality oracle and width monotonicity", criterion_beam_oracle},
      {4, "sentence guidance: 200 end-to-end parses", criterion_sentence_guidance},
      {5, "finite-difference gradient checks", criterion_gradients},
      {6, "pointing distributions sum to 1", criterion_pointing_sums},
      {7, "overfit: 50-doc synthetic corpus, both modes", criterion_overfit},
      {8, "metric oracles", criterion_metric_oracles},
  };

  bool all_pass = true;
  for (const auto& e : entries) {
    if (only != 0 && e.id != only) continue;
    Outcome o;
    try {
      o = e.fn();
    } catch (const std::exception& ex) {
      o.pass = false;
      o.detail = std::string("exception: ") + ex.what();
    }
    all_pass = all_pass && o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << e.id << ": " << e.name
              << " -- " << o.detail << " [" << std::fixed << std::setprecision(1)
              << o.seconds << "s]" << std::endl;
  }
  if (only == 0 || only == 9)
    std::cout << "NOTE criterion 9: treebank-scale headline scores (46.8/50.2 and "
                 "42.1/46.6 Full, 96.30 segmentation F1) require the licensed "
                 "RST-DT corpus and a pretrained contextual encoder; criteria 1-8 "
                 "stand in for them. A corpus supplied in the documented record "
                 "format runs through the same train/parse/eval pipeline with no "
                 "accuracy threshold asserted."
              << std::endl;
  return all_pass ? 0 : 1;
}
