#include <doctest.h>

#include <fstream>
#include <sstream>

#include "rst/train.hpp"
#include "test_support.hpp"

using namespace rst;

namespace {

TrainConfig tiny_train_config(Mode mode) {
  TrainConfig cfg;
  cfg.mode = mode;
  cfg.max_epochs = 2;
  cfg.batch_size_tokens = 40;
  cfg.beam_width_eval = 4;
  cfg.seed = 9;
  return cfg;
}

ParserBundle trained_bundle(const std::vector<Document>& corpus, std::uint64_t seed,
                            const TrainConfig& cfg, const std::string& ckpt = "") {
  ParserBundle bundle = rsttest::tiny_bundle(corpus, seed);
  train(bundle, corpus, corpus, cfg, ckpt);
  return bundle;
}

}  // namespace

TEST_CASE("learning-rate schedule decays stepwise") {
  TrainConfig cfg;
  CHECK(lr_at(0, cfg) == doctest::Approx(0.002));
  CHECK(lr_at(4999, cfg) == doctest::Approx(0.002));
  CHECK(lr_at(5000, cfg) == doctest::Approx(0.0015));
  CHECK(lr_at(10000, cfg) == doctest::Approx(0.002 * 0.75 * 0.75));
  CHECK(lr_at(10000, cfg) == doctest::Approx(0.001125));
}

TEST_CASE("batches pack greedily and deterministically") {
  auto doc_of = [](int tokens, const std::string& id) {
    Document d;
    d.id = id;
    d.tokens.assign(static_cast<std::size_t>(tokens), "w");
    d.sentence_ends = {tokens};
    return d;
  };
  std::vector<Document> corpus{doc_of(4000, "a"), doc_of(4000, "b"), doc_of(4000, "c")};
  TrainConfig cfg;
  cfg.batch_size_tokens = 10000;
  auto batches = make_batches(corpus, cfg, 17);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].size() == 2);
  CHECK(batches[1].size() == 1);
  CHECK(make_batches(corpus, cfg, 17) == batches);
  CHECK(make_batches(corpus, cfg, 18) != batches);  // different shuffle

  std::vector<Document> oversize{doc_of(12000, "big"), doc_of(50, "small")};
  auto ob = make_batches(oversize, cfg, 3);
  for (const auto& b : ob) {
    int toks = 0;
    for (int idx : b) toks += oversize[static_cast<std::size_t>(idx)].n();
    CHECK((toks <= 10000 || b.size() == 1));
  }
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  auto corpus = generate_synthetic_corpus({4, 10, 8, 21});
  ParserBundle bundle = rsttest::tiny_bundle(corpus, 5);
  std::vector<Tensor<float>> before;
  for (std::size_t p = 0; p < bundle.model.params.count(); ++p)
    before.push_back(bundle.model.params.at(static_cast<int>(p)).value);
  TrainConfig cfg = tiny_train_config(Mode::GoldEdu);
  cfg.learning_rate = 1e-30;  // validate() requires > 0; decay keeps it ~0
  cfg.max_epochs = 1;
  train(bundle, corpus, corpus, cfg, "");
  for (std::size_t p = 0; p < bundle.model.params.count(); ++p) {
    const auto& after = bundle.model.params.at(static_cast<int>(p)).value;
    for (std::size_t k = 0; k < after.size(); ++k)
      CHECK(std::abs(after.v[k] - before[p].v[k]) <= 1e-25f);
  }
}

TEST_CASE("training logs steps, decreases the loss and stays finite") {
  auto corpus = generate_synthetic_corpus({6, 20, 10, 33});
  ParserBundle bundle = rsttest::tiny_bundle(corpus, 8);
  auto corpus_loss = [&]() {
    double total = 0.0;
    for (const auto& doc : corpus) {
      Tape<float> tape(std::as_const(bundle.model.params));
      total += total_loss(tape, bundle.model, bundle.vocab, bundle.chars,
                          bundle.labels, doc, Mode::GoldEdu)
                   .total_value;
    }
    return total;
  };
  double before = corpus_loss();
  TrainConfig cfg = tiny_train_config(Mode::GoldEdu);
  cfg.max_epochs = 12;
  cfg.learning_rate = 0.01;
  std::ostringstream log;
  TrainResult res = train(bundle, corpus, corpus, cfg, "", &log);
  REQUIRE(!res.step_log.empty());
  for (const auto& st : res.step_log) {
    CHECK(std::isfinite(st.loss_s));
    CHECK(std::isfinite(st.loss_l));
  }
  double after = corpus_loss();
  CHECK(std::isfinite(before));
  CHECK(std::isfinite(after));
  CHECK(after < before);
  // Log lines carry the documented fields.
  std::string first_line;
  std::getline(std::istringstream(log.str()), first_line);
  CHECK(first_line.find("\"step\"") != std::string::npos);
  CHECK(first_line.find("\"lr\"") != std::string::npos);
  CHECK(first_line.find("\"loss_s\"") != std::string::npos);
  CHECK(first_line.find("\"loss_l\"") != std::string::npos);
  CHECK(res.best_epoch >= 0);
}

TEST_CASE("identical config and seed reproduce the checkpoint bytes") {
  auto corpus = generate_synthetic_corpus({5, 15, 9, 55});
  TrainConfig cfg = tiny_train_config(Mode::GoldEdu);
  cfg.max_epochs = 3;
  ParserBundle a = trained_bundle(corpus, 77, cfg, "train_repro_a.bin");
  ParserBundle b = trained_bundle(corpus, 77, cfg, "train_repro_b.bin");
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };
  std::string bytes_a = slurp("train_repro_a.bin");
  std::string bytes_b = slurp("train_repro_b.bin");
  REQUIRE(!bytes_a.empty());
  CHECK(bytes_a == bytes_b);
  for (const char* base : {"train_repro_a.bin", "train_repro_b.bin"})
    for (const char* suffix : {"", ".vocab.txt", ".meta.json"})
      std::remove((std::string(base) + suffix).c_str());
}

TEST_CASE("frozen embedding rows survive training updates") {
  auto corpus = generate_synthetic_corpus({5, 12, 9, 66});
  ParserBundle bundle = rsttest::tiny_bundle(corpus, 10);
  Model<float>& model = bundle.model;
  // Freeze two known rows through the pretrained-embedding path.
  const std::string path = "frozen_rows_tmp.txt";
  {
    std::ofstream out(path);
    for (int row : {4, 6}) {
      out << bundle.vocab.tokens[static_cast<std::size_t>(row)];
      for (int c = 0; c < model.cfg.word_dim; ++c) out << " " << (0.25 * (c + row));
      out << "\n";
    }
  }
  CHECK(load_pretrained_embeddings(path, model, bundle.vocab) == 2);
  std::remove(path.c_str());
  Tensor<float> before = model.params.at(model.word_emb).value;

  TrainConfig cfg = tiny_train_config(Mode::GoldEdu);
  cfg.max_epochs = 10;  // at least 10 optimizer steps on this corpus
  train(bundle, corpus, corpus, cfg, "");
  const auto& after = model.params.at(model.word_emb).value;
  const std::size_t cols = after.cols();
  bool trainable_moved = false;
  for (std::size_t r = 0; r < after.rows(); ++r) {
    bool frozen = r == 4 || r == 6;
    for (std::size_t c = 0; c < cols; ++c) {
      if (frozen)
        CHECK(after.at2(r, c) == before.at2(r, c));
      else if (after.at2(r, c) != before.at2(r, c))
        trainable_moved = true;
    }
  }
  CHECK(trainable_moved);
}

TEST_CASE("checkpoint round-trip preserves the dev score") {
  auto corpus = generate_synthetic_corpus({6, 14, 9, 88});
  TrainConfig cfg = tiny_train_config(Mode::GoldEdu);
  cfg.max_epochs = 3;
  const std::string path = "roundtrip_ckpt.bin";
  ParserBundle bundle = rsttest::tiny_bundle(corpus, 12);
  TrainResult res = train(bundle, corpus, corpus, cfg, path);
  ParserBundle loaded = load_checkpoint(path);
  ScoreReport again = evaluate_corpus_parseval(loaded, corpus, cfg.mode,
                                               cfg.beam_width_eval);
  CHECK(again.full_f1() == doctest::Approx(res.best_dev_full).epsilon(1e-9));
  for (const char* suffix : {"", ".vocab.txt", ".meta.json"})
    std::remove((path + std::string(suffix)).c_str());
}

TEST_CASE("a tiny corpus is learnable (overfit smoke test)") {
  auto corpus = generate_synthetic_corpus({8, 25, 10, 99});
  ParserBundle bundle = rsttest::tiny_bundle(corpus, 14);
  TrainConfig cfg = tiny_train_config(Mode::GoldEdu);
  cfg.max_epochs = 60;
  cfg.learning_rate = 0.02;
  cfg.batch_size_tokens = 60;
  train(bundle, corpus, corpus, cfg, "");
  double acc = teacher_forced_split_accuracy(bundle.model, bundle.vocab, bundle.chars,
                                             corpus, Mode::GoldEdu);
  CHECK(acc >= 0.8);
}

TEST_CASE("training rejects corpora without gold trees") {
  auto corpus = generate_synthetic_corpus({2, 10, 8, 5});
  corpus[0].gold_tree.reset();
  ParserBundle bundle = rsttest::tiny_bundle(corpus, 3);
  TrainConfig cfg = tiny_train_config(Mode::GoldEdu);
  CHECK_THROWS_WITH_AS(train(bundle, corpus, corpus, cfg, ""),
                       doctest::Contains("gold tree"), DataError);
}
