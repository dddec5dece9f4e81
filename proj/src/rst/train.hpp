#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "rst/infer.hpp"
#include "rst/metrics.hpp"

namespace rst {

struct TrainConfig {
  double learning_rate = 0.002;
  double decay_rate = 0.75;
  int decay_every = 5000;
  int batch_size_tokens = 10000;
  int max_epochs = 10;
  std::uint64_t seed = 0;
  Mode mode = Mode::GoldEdu;
  int beam_width_eval = 20;
  // Optimizer details; defaults are the usual Adam constants with gradient
  // norm clipping to protect the LSTMs.
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 5.0;
  bool sentence_guidance = true;  // end-to-end dev decoding

  void validate() const;
};

// Stepwise exponential decay: lr * decay_rate^floor(step / decay_every).
double lr_at(long long step, const TrainConfig& cfg);

// Deterministic shuffle, then greedy packing: documents are added until the
// next one would exceed batch_size_tokens; oversize documents form singleton
// batches. Returns document indices per batch.
std::vector<std::vector<int>> make_batches(const std::vector<Document>& corpus,
                                           const TrainConfig& cfg,
                                           std::uint64_t shuffle_seed);

struct StepStats {
  long long step = 0;
  double lr = 0.0;
  double loss_s = 0.0;
  double loss_l = 0.0;
};

struct EpochStats {
  int epoch = 0;
  double span = 0.0, nuc = 0.0, rel = 0.0, full = 0.0;
  bool improved = false;
};

struct TrainResult {
  long long steps = 0;
  int best_epoch = -1;
  double best_dev_full = -1.0;
  std::vector<StepStats> step_log;
  std::vector<EpochStats> epoch_log;
};

// Parses every document with the configured decoder (beam over gold EDUs, or
// guided greedy end-to-end) and micro-averages Parseval counts against the
// gold trees.
ScoreReport evaluate_corpus_parseval(const ParserBundle& parser,
                                     const std::vector<Document>& docs, Mode mode,
                                     int beam_width, bool sentence_guidance = true);

// Invoked after each epoch's dev evaluation; returning true stops training.
using EpochCallback = std::function<bool(const EpochStats&, ParserBundle&)>;

// Teacher-forced training of L = L_s + L_l with Adam and the decay schedule;
// evaluates dev Full F1 after each epoch and checkpoints improvements to
// `checkpoint_path` (unless empty). `log` (when given) receives one JSON line
// per step {step, lr, loss_s, loss_l} and per epoch.
TrainResult train(ParserBundle& parser, const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs, const TrainConfig& cfg,
                  const std::string& checkpoint_path, std::ostream* log = nullptr,
                  const EpochCallback& after_epoch = {});

}  // namespace rst
