#include "rst/train.hpp"

#include <cmath>
#include <ostream>

#include <json.hpp>

#include "rst/model_io.hpp"

namespace rst {

using nlohmann::json;

void TrainConfig::validate() const {
  if (learning_rate <= 0 || decay_every <= 0 || batch_size_tokens <= 0 ||
      max_epochs <= 0 || beam_width_eval <= 0)
    throw DataError("training configuration values must be positive");
  if (decay_rate <= 0 || decay_rate > 1)
    throw DataError("decay_rate must lie in (0, 1]");
}

double lr_at(long long step, const TrainConfig& cfg) {
  long long buckets = step / cfg.decay_every;
  return cfg.learning_rate * std::pow(cfg.decay_rate, static_cast<double>(buckets));
}

std::vector<std::vector<int>> make_batches(const std::vector<Document>& corpus,
                                           const TrainConfig& cfg,
                                           std::uint64_t shuffle_seed) {
  std::vector<int> order(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) order[i] = static_cast<int>(i);
  Rng rng(shuffle_seed);
  rng.shuffle(order);

  std::vector<std::vector<int>> batches;
  std::vector<int> current;
  int current_tokens = 0;
  for (int idx : order) {
    int toks = corpus[static_cast<std::size_t>(idx)].n();
    if (!current.empty() && current_tokens + toks > cfg.batch_size_tokens) {
      batches.push_back(std::move(current));
      current.clear();
      current_tokens = 0;
    }
    current.push_back(idx);
    current_tokens += toks;
  }
  if (!current.empty()) batches.push_back(std::move(current));
  return batches;
}

namespace {

// Adam with bias correction; moments are kept per parameter tensor. Frozen
// embedding rows have their gradients cleared before the update, so they
// neither move nor accumulate moment state.
class Adam {
 public:
  Adam(ParamStore<float>& params, const TrainConfig& cfg) : params_(params), cfg_(cfg) {
    m_.resize(params.count());
    v_.resize(params.count());
    for (std::size_t p = 0; p < params.count(); ++p) {
      m_[p] = Tensor<float>::zeros_like(params.at(static_cast<int>(p)).value);
      v_[p] = Tensor<float>::zeros_like(params.at(static_cast<int>(p)).value);
    }
  }

  void step(double lr) {
    ++t_;
    zero_frozen_rows();
    clip_gradients();
    double bc1 = 1.0 - std::pow(cfg_.adam_beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.adam_beta2, static_cast<double>(t_));
    const float b1 = static_cast<float>(cfg_.adam_beta1);
    const float b2 = static_cast<float>(cfg_.adam_beta2);
    for (std::size_t p = 0; p < params_.count(); ++p) {
      auto& prm = params_.at(static_cast<int>(p));
      auto& m = m_[p];
      auto& v = v_[p];
      for (std::size_t k = 0; k < prm.value.size(); ++k) {
        float g = prm.grad.v[k];
        m.v[k] = b1 * m.v[k] + (1.0f - b1) * g;
        v.v[k] = b2 * v.v[k] + (1.0f - b2) * g * g;
        double mhat = static_cast<double>(m.v[k]) / bc1;
        double vhat = static_cast<double>(v.v[k]) / bc2;
        prm.value.v[k] -=
            static_cast<float>(lr * mhat / (std::sqrt(vhat) + cfg_.adam_eps));
      }
    }
    params_.zero_grad();
  }

 private:
  void zero_frozen_rows() {
    for (std::size_t p = 0; p < params_.count(); ++p) {
      auto& prm = params_.at(static_cast<int>(p));
      if (prm.frozen_rows.empty()) continue;
      std::size_t cols = prm.value.cols();
      for (std::size_t r = 0; r < prm.frozen_rows.size(); ++r)
        if (prm.frozen_rows[r])
          for (std::size_t c = 0; c < cols; ++c) prm.grad.v[r * cols + c] = 0.0f;
    }
  }

  void clip_gradients() {
    if (cfg_.clip_norm <= 0) return;
    double sq = 0.0;
    for (std::size_t p = 0; p < params_.count(); ++p)
      for (float g : params_.at(static_cast<int>(p)).grad.v)
        sq += static_cast<double>(g) * static_cast<double>(g);
    double norm = std::sqrt(sq);
    if (norm <= cfg_.clip_norm) return;
    float scale = static_cast<float>(cfg_.clip_norm / norm);
    for (std::size_t p = 0; p < params_.count(); ++p)
      for (float& g : params_.at(static_cast<int>(p)).grad.v) g *= scale;
  }

  ParamStore<float>& params_;
  const TrainConfig& cfg_;
  std::vector<Tensor<float>> m_, v_;
  long long t_ = 0;
};

}  // namespace

ScoreReport evaluate_corpus_parseval(const ParserBundle& parser,
                                     const std::vector<Document>& docs, Mode mode,
                                     int beam_width, bool sentence_guidance) {
  std::vector<ScoreReport> per_doc;
  per_doc.reserve(docs.size());
  InferOptions opts;
  opts.sentence_guidance = sentence_guidance;
  for (const auto& doc : docs) {
    DiscourseTree gold = doc.gold();
    ParseResult pred = mode == Mode::GoldEdu
                           ? beam_parse_gold_edu(parser, doc, beam_width)
                           : greedy_parse_e2e(parser, doc, opts);
    per_doc.push_back(parseval(pred.tree, gold));
  }
  return corpus_parseval(per_doc);
}

TrainResult train(ParserBundle& parser, const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs, const TrainConfig& cfg,
                  const std::string& checkpoint_path, std::ostream* log,
                  const EpochCallback& after_epoch) {
  cfg.validate();
  if (train_docs.empty()) throw DataError("training corpus is empty");
  for (const auto& d : train_docs)
    if (!d.has_gold_tree())
      throw DataError("training document '" + d.id + "' has no gold tree");

  Adam adam(parser.model.params, cfg);
  TrainResult result;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    auto batches = make_batches(train_docs, cfg,
                                Rng::mix(cfg.seed, static_cast<std::uint64_t>(epoch)));
    for (const auto& batch : batches) {
      double loss_s = 0.0, loss_l = 0.0;
      for (int idx : batch) {
        const Document& doc = train_docs[static_cast<std::size_t>(idx)];
        Tape<float> tape(parser.model.params);
        DropoutCtx drop;
        Rng drop_rng(Rng::mix(cfg.seed ^ 0x5eedULL, static_cast<std::uint64_t>(result.steps)));
        if (parser.model.cfg.dropout > 0) {
          drop.rng = &drop_rng;
          drop.rate = parser.model.cfg.dropout;
        }
        LossValue<float> loss = total_loss(tape, parser.model, parser.vocab,
                                           parser.chars, parser.labels, doc, cfg.mode, drop);
        if (!std::isfinite(loss.total_value))
          throw std::runtime_error("non-finite loss at step " +
                                   std::to_string(result.steps) + ", document '" +
                                   doc.id + "'");
        tape.backward(loss.total);
        loss_s += loss.split_value;
        loss_l += loss.label_value;
      }
      double lr = lr_at(result.steps, cfg);
      adam.step(lr);
      StepStats st{result.steps, lr, loss_s, loss_l};
      result.step_log.push_back(st);
      if (log) {
        json rec{{"step", st.step}, {"lr", st.lr}, {"loss_s", st.loss_s}, {"loss_l", st.loss_l}};
        (*log) << rec.dump() << "\n";
      }
      ++result.steps;
    }

    const std::vector<Document>& eval_docs = dev_docs.empty() ? train_docs : dev_docs;
    ScoreReport dev = evaluate_corpus_parseval(parser, eval_docs, cfg.mode,
                                               cfg.beam_width_eval, cfg.sentence_guidance);
    EpochStats es;
    es.epoch = epoch;
    es.span = dev.span_f1();
    es.nuc = dev.nuc_f1();
    es.rel = dev.rel_f1();
    es.full = dev.full_f1();
    es.improved = es.full > result.best_dev_full;
    if (es.improved) {
      result.best_dev_full = es.full;
      result.best_epoch = epoch;
      if (!checkpoint_path.empty()) save_checkpoint(parser, checkpoint_path);
    }
    result.epoch_log.push_back(es);
    if (log) {
      json rec{{"epoch", es.epoch}, {"span", es.span},         {"nuc", es.nuc},
               {"rel", es.rel},     {"improved", es.improved}, {"full", es.full}};
      (*log) << rec.dump() << "\n";
    }
    if (after_epoch && after_epoch(es, parser)) break;
  }
  return result;
}

}  // namespace rst
