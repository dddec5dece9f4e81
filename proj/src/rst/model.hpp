#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rst/doc.hpp"
#include "rst/rng.hpp"
#include "rst/tape.hpp"

namespace rst {

enum class Mode { EndToEnd, GoldEdu };

std::string to_string(Mode m);
Mode mode_from_string(const std::string& s);

// Architecture hyperparameters. Defaults follow the reference setup
// (100-dim words, 50-dim characters, 3x400 Bi-LSTM encoder, 3-layer decoder,
// 500-dim MLP/biaffine); span_dim and dec_hidden of 0 resolve to 2*hidden
// and hidden respectively.
struct ModelConfig {
  int word_dim = 100;
  bool use_char_lstm = true;
  int char_dim = 50;
  int char_hidden = 50;
  int hidden = 400;
  int enc_layers = 3;
  int dec_layers = 3;
  int dec_hidden = 0;
  int span_dim = 0;
  int mlp_dim = 500;
  double leaky_slope = 0.01;
  bool use_boundary_lstm = true;
  bool decoder_zero_init = false;
  double dropout = 0.0;
  // Data-dependent sizes, filled when the model is built.
  int word_vocab = 0;
  int char_vocab = 0;
  int label_count = 0;

  int resolved_dec_hidden() const { return dec_hidden > 0 ? dec_hidden : hidden; }
  int resolved_span_dim() const { return span_dim > 0 ? span_dim : 2 * hidden; }
  int boundary_dim() const { return 2 * hidden; }
  int embed_dim() const {
    return word_dim + (use_char_lstm ? 2 * char_hidden : 0);
  }
};

// Token vocabulary. Row 0 is <unk>; the <sod>/<eod> sentinels the encoder
// adds internally occupy rows 1 and 2.
struct Vocab {
  static constexpr int kUnk = 0, kSod = 1, kEod = 2;
  std::vector<std::string> tokens;

  static Vocab build(const std::vector<Document>& corpus);
  static Vocab from_tokens(std::vector<std::string> tokens);

  int id(const std::string& tok) const;
  int size() const { return static_cast<int>(tokens.size()); }

 private:
  std::unordered_map<std::string, int> index_;
  void rebuild_index();
};

// Byte-level character vocabulary for the character Bi-LSTM. The sentinel
// pseudo-tokens map to a single dedicated id each.
struct CharVocab {
  static constexpr int kUnk = 0, kSod = 1, kEod = 2;
  std::vector<std::string> chars;  // single-byte strings after the specials

  static CharVocab build(const std::vector<Document>& corpus);
  static CharVocab from_chars(std::vector<std::string> chars);

  int id(char c) const;
  int size() const { return static_cast<int>(chars.size()); }

 private:
  std::unordered_map<char, int> index_;
  void rebuild_index();
};

struct LstmParamIds {
  int Wx = -1, Wh = -1, b = -1;
};

// All trainable parameter groups. Field naming mirrors the scoring
// functions: span.* combines boundary endpoints, point.* produces the
// pointing scores, label.* the relation logits.
template <typename F>
struct Model {
  ModelConfig cfg;
  ParamStore<F> params;

  int word_emb = -1, char_emb = -1;
  LstmParamIds char_fw, char_bw;
  std::vector<LstmParamIds> enc_fw, enc_bw;
  LstmParamIds bnd_fw, bnd_bw;
  std::vector<LstmParamIds> dec;
  int dec_init_W = -1, dec_init_b = -1;
  int span_W1 = -1, span_W2 = -1;
  int mlp_d_W = -1, mlp_d_b = -1;
  int mlp_h_W = -1, mlp_h_b = -1;
  int W_dh = -1, w_h = -1;
  int mlp_l_W = -1, mlp_l_b = -1;
  int mlp_r_W = -1, mlp_r_b = -1;
  int W_lr = -1, W_l = -1, W_r = -1, label_b = -1;

  std::size_t total_parameters() const { return params.total_scalars(); }

  template <typename G>
  Model<G> cast() const {
    Model<G> out;
    out.cfg = cfg;
    out.params = params.template cast<G>();
    out.word_emb = word_emb;
    out.char_emb = char_emb;
    out.char_fw = char_fw;
    out.char_bw = char_bw;
    out.enc_fw = enc_fw;
    out.enc_bw = enc_bw;
    out.bnd_fw = bnd_fw;
    out.bnd_bw = bnd_bw;
    out.dec = dec;
    out.dec_init_W = dec_init_W;
    out.dec_init_b = dec_init_b;
    out.span_W1 = span_W1;
    out.span_W2 = span_W2;
    out.mlp_d_W = mlp_d_W;
    out.mlp_d_b = mlp_d_b;
    out.mlp_h_W = mlp_h_W;
    out.mlp_h_b = mlp_h_b;
    out.W_dh = W_dh;
    out.w_h = w_h;
    out.mlp_l_W = mlp_l_W;
    out.mlp_l_b = mlp_l_b;
    out.mlp_r_W = mlp_r_W;
    out.mlp_r_b = mlp_r_b;
    out.W_lr = W_lr;
    out.W_l = W_l;
    out.W_r = W_r;
    out.label_b = label_b;
    return out;
  }
};

namespace detail {

template <typename F>
void xavier_init(Tensor<F>& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (auto& x : t.v) x = static_cast<F>(rng.next_uniform(-r, r));
}

template <typename F>
LstmParamIds add_lstm(Model<F>& m, const std::string& prefix, int in_dim, int hidden,
                      Rng& rng) {
  LstmParamIds ids;
  ids.Wx = m.params.add(prefix + ".Wx",
                        {static_cast<std::size_t>(4 * hidden),
                         static_cast<std::size_t>(in_dim)});
  ids.Wh = m.params.add(prefix + ".Wh",
                        {static_cast<std::size_t>(4 * hidden),
                         static_cast<std::size_t>(hidden)});
  ids.b = m.params.add(prefix + ".b", {static_cast<std::size_t>(4 * hidden)});
  xavier_init(m.params.at(ids.Wx).value, in_dim, hidden, rng);
  xavier_init(m.params.at(ids.Wh).value, hidden, hidden, rng);
  // Forget-gate bias starts at +1 (gate order: input, forget, cell, output).
  auto& b = m.params.at(ids.b).value;
  for (int k = hidden; k < 2 * hidden; ++k) b.v[k] = F(1);
  return ids;
}

}  // namespace detail

// Builds a model with freshly initialized parameters. cfg must carry the
// data-dependent sizes (word_vocab, char_vocab, label_count).
template <typename F>
Model<F> build_model(const ModelConfig& cfg, Rng& rng) {
  if (cfg.word_vocab < 3 || cfg.label_count < 1)
    throw DataError("model config is missing vocabulary or label sizes");
  Model<F> m;
  m.cfg = cfg;
  const int H = cfg.hidden;
  const int Hd = cfg.resolved_dec_hidden();
  const int span = cfg.resolved_span_dim();
  const int d = cfg.mlp_dim;
  const int L = cfg.label_count;
  const int bdim = cfg.boundary_dim();
  auto sz = [](int x) { return static_cast<std::size_t>(x); };

  m.word_emb = m.params.add("embed.word", {sz(cfg.word_vocab), sz(cfg.word_dim)});
  {
    auto& t = m.params.at(m.word_emb).value;
    double r = std::sqrt(3.0 / cfg.word_dim);
    for (auto& x : t.v) x = static_cast<F>(rng.next_uniform(-r, r));
    m.params.at(m.word_emb).frozen_rows.assign(sz(cfg.word_vocab), 0);
  }
  if (cfg.use_char_lstm) {
    if (cfg.char_vocab < 3) throw DataError("char vocabulary missing");
    m.char_emb = m.params.add("embed.char", {sz(cfg.char_vocab), sz(cfg.char_dim)});
    auto& t = m.params.at(m.char_emb).value;
    double r = std::sqrt(3.0 / cfg.char_dim);
    for (auto& x : t.v) x = static_cast<F>(rng.next_uniform(-r, r));
    m.char_fw = detail::add_lstm(m, "char.fw", cfg.char_dim, cfg.char_hidden, rng);
    m.char_bw = detail::add_lstm(m, "char.bw", cfg.char_dim, cfg.char_hidden, rng);
  }
  for (int l = 0; l < cfg.enc_layers; ++l) {
    int in_dim = l == 0 ? cfg.embed_dim() : bdim;
    m.enc_fw.push_back(detail::add_lstm(m, "enc." + std::to_string(l) + ".fw", in_dim, H, rng));
    m.enc_bw.push_back(detail::add_lstm(m, "enc." + std::to_string(l) + ".bw", in_dim, H, rng));
  }
  if (cfg.use_boundary_lstm) {
    m.bnd_fw = detail::add_lstm(m, "boundary.fw", bdim, H, rng);
    m.bnd_bw = detail::add_lstm(m, "boundary.bw", bdim, H, rng);
  }
  for (int l = 0; l < cfg.dec_layers; ++l) {
    int in_dim = l == 0 ? span : Hd;
    m.dec.push_back(detail::add_lstm(m, "dec." + std::to_string(l), in_dim, Hd, rng));
  }
  m.dec_init_W = m.params.add("dec.init.W", {sz(2 * cfg.dec_layers * Hd), sz(bdim)});
  m.dec_init_b = m.params.add("dec.init.b", {sz(2 * cfg.dec_layers * Hd)});
  detail::xavier_init(m.params.at(m.dec_init_W).value, bdim, 2 * cfg.dec_layers * Hd, rng);

  m.span_W1 = m.params.add("span.W1", {sz(span), sz(bdim)});
  m.span_W2 = m.params.add("span.W2", {sz(span), sz(bdim)});
  detail::xavier_init(m.params.at(m.span_W1).value, bdim, span, rng);
  detail::xavier_init(m.params.at(m.span_W2).value, bdim, span, rng);

  m.mlp_d_W = m.params.add("point.mlp_d.W", {sz(d), sz(Hd)});
  m.mlp_d_b = m.params.add("point.mlp_d.b", {sz(d)});
  m.mlp_h_W = m.params.add("point.mlp_h.W", {sz(d), sz(bdim)});
  m.mlp_h_b = m.params.add("point.mlp_h.b", {sz(d)});
  detail::xavier_init(m.params.at(m.mlp_d_W).value, Hd, d, rng);
  detail::xavier_init(m.params.at(m.mlp_h_W).value, bdim, d, rng);
  m.W_dh = m.params.add("point.W_dh", {sz(d), sz(d)});
  m.w_h = m.params.add("point.w_h", {sz(d)});
  detail::xavier_init(m.params.at(m.W_dh).value, d, d, rng);
  detail::xavier_init(m.params.at(m.w_h).value, d, 1, rng);

  m.mlp_l_W = m.params.add("label.mlp_l.W", {sz(d), sz(2 * bdim)});
  m.mlp_l_b = m.params.add("label.mlp_l.b", {sz(d)});
  m.mlp_r_W = m.params.add("label.mlp_r.W", {sz(d), sz(2 * bdim)});
  m.mlp_r_b = m.params.add("label.mlp_r.b", {sz(d)});
  detail::xavier_init(m.params.at(m.mlp_l_W).value, 2 * bdim, d, rng);
  detail::xavier_init(m.params.at(m.mlp_r_W).value, 2 * bdim, d, rng);
  m.W_lr = m.params.add("label.W_lr", {sz(d), sz(L), sz(d)});
  m.W_l = m.params.add("label.W_l", {sz(d), sz(L)});
  m.W_r = m.params.add("label.W_r", {sz(d), sz(L)});
  m.label_b = m.params.add("label.b", {sz(L)});
  detail::xavier_init(m.params.at(m.W_lr).value, d, d, rng);
  detail::xavier_init(m.params.at(m.W_l).value, d, L, rng);
  detail::xavier_init(m.params.at(m.W_r).value, d, L, rng);

  return m;
}

// Rebuilds cached parameter ids after loading a ParamStore from disk; the
// construction order above is deterministic, so ids are found by name.
template <typename F>
void bind_param_ids(Model<F>& m) {
  auto req = [&](const std::string& name) {
    int id = m.params.find(name);
    if (id < 0) throw DataError("checkpoint is missing parameter '" + name + "'");
    return id;
  };
  m.word_emb = req("embed.word");
  if (m.cfg.use_char_lstm) {
    m.char_emb = req("embed.char");
    m.char_fw = {req("char.fw.Wx"), req("char.fw.Wh"), req("char.fw.b")};
    m.char_bw = {req("char.bw.Wx"), req("char.bw.Wh"), req("char.bw.b")};
  }
  m.enc_fw.clear();
  m.enc_bw.clear();
  for (int l = 0; l < m.cfg.enc_layers; ++l) {
    std::string p = "enc." + std::to_string(l);
    m.enc_fw.push_back({req(p + ".fw.Wx"), req(p + ".fw.Wh"), req(p + ".fw.b")});
    m.enc_bw.push_back({req(p + ".bw.Wx"), req(p + ".bw.Wh"), req(p + ".bw.b")});
  }
  if (m.cfg.use_boundary_lstm) {
    m.bnd_fw = {req("boundary.fw.Wx"), req("boundary.fw.Wh"), req("boundary.fw.b")};
    m.bnd_bw = {req("boundary.bw.Wx"), req("boundary.bw.Wh"), req("boundary.bw.b")};
  }
  m.dec.clear();
  for (int l = 0; l < m.cfg.dec_layers; ++l) {
    std::string p = "dec." + std::to_string(l);
    m.dec.push_back({req(p + ".Wx"), req(p + ".Wh"), req(p + ".b")});
  }
  m.dec_init_W = req("dec.init.W");
  m.dec_init_b = req("dec.init.b");
  m.span_W1 = req("span.W1");
  m.span_W2 = req("span.W2");
  m.mlp_d_W = req("point.mlp_d.W");
  m.mlp_d_b = req("point.mlp_d.b");
  m.mlp_h_W = req("point.mlp_h.W");
  m.mlp_h_b = req("point.mlp_h.b");
  m.W_dh = req("point.W_dh");
  m.w_h = req("point.w_h");
  m.mlp_l_W = req("label.mlp_l.W");
  m.mlp_l_b = req("label.mlp_l.b");
  m.mlp_r_W = req("label.mlp_r.W");
  m.mlp_r_b = req("label.mlp_r.b");
  m.W_lr = req("label.W_lr");
  m.W_l = req("label.W_l");
  m.W_r = req("label.W_r");
  m.label_b = req("label.b");
}

// Optional training-time dropout source. Inference passes nothing.
struct DropoutCtx {
  Rng* rng = nullptr;
  double rate = 0.0;
  bool active() const { return rng != nullptr && rate > 0.0; }
};

template <typename F>
struct Encoded {
  Mode mode = Mode::EndToEnd;
  int n = 0;
  int m = -1;  // EDU count in gold-EDU mode
  std::vector<typename Tape<F>::Id> boundary;      // h_0 .. h_n
  std::vector<typename Tape<F>::Id> edu_boundary;  // hbar_0 .. hbar_m
  typename Tape<F>::Id enc_final = -1;
  typename Tape<F>::Id point_matrix = -1;  // stacked MLP_h over active set

  // The boundary set the decoder and label classifier point into:
  // token-level for end-to-end, EDU-level with gold segmentation.
  const std::vector<typename Tape<F>::Id>& active() const {
    return mode == Mode::GoldEdu ? edu_boundary : boundary;
  }
};

namespace detail {

template <typename F>
std::pair<typename Tape<F>::Id, typename Tape<F>::Id> lstm_step(
    Tape<F>& tape, const LstmParamIds& w, typename Tape<F>::Id x,
    typename Tape<F>::Id h_prev, typename Tape<F>::Id c_prev, int hidden) {
  using Id = typename Tape<F>::Id;
  Id gates = tape.add(tape.affine(w.Wx, w.b, x), tape.matvec(w.Wh, h_prev));
  std::size_t H = static_cast<std::size_t>(hidden);
  Id ig = tape.sigmoid(tape.slice(gates, 0, H));
  Id fg = tape.sigmoid(tape.slice(gates, H, H));
  Id gg = tape.tanh_op(tape.slice(gates, 2 * H, H));
  Id og = tape.sigmoid(tape.slice(gates, 3 * H, H));
  Id c = tape.add(tape.mul(fg, c_prev), tape.mul(ig, gg));
  Id h = tape.mul(og, tape.tanh_op(c));
  return {h, c};
}

// Runs one LSTM over the inputs (optionally reversed) and returns the hidden
// state at every position, in input order.
template <typename F>
std::vector<typename Tape<F>::Id> lstm_run(Tape<F>& tape, const LstmParamIds& w,
                                           const std::vector<typename Tape<F>::Id>& xs,
                                           int hidden, bool reverse) {
  using Id = typename Tape<F>::Id;
  std::vector<Id> out(xs.size());
  Id h = tape.zeros(static_cast<std::size_t>(hidden));
  Id c = tape.zeros(static_cast<std::size_t>(hidden));
  for (std::size_t s = 0; s < xs.size(); ++s) {
    std::size_t pos = reverse ? xs.size() - 1 - s : s;
    auto hc = lstm_step(tape, w, xs[pos], h, c, hidden);
    h = hc.first;
    c = hc.second;
    out[pos] = h;
  }
  return out;
}

template <typename F>
typename Tape<F>::Id maybe_dropout(Tape<F>& tape, typename Tape<F>::Id x,
                                   const DropoutCtx& drop) {
  if (!drop.active()) return x;
  const auto& val = tape.value(x);
  Tensor<F> mask;
  mask.dims = val.dims;
  mask.v.resize(val.size());
  F keep_scale = static_cast<F>(1.0 / (1.0 - drop.rate));
  for (auto& mv : mask.v)
    mv = drop.rng->next_bernoulli(drop.rate) ? F(0) : keep_scale;
  return tape.mul_const(x, std::move(mask));
}

}  // namespace detail

// Embeds and encodes a document: sentinel markers are prepended/appended
// internally, tokens run through the (optional) character Bi-LSTM and the
// stacked encoder, and boundary k becomes [f_k; b_{k+1}] (fencepost over the
// padded sequence). In gold-EDU mode the boundary LSTM (or plain selection,
// when disabled) yields the EDU-level representations.
template <typename F>
Encoded<F> encode(Tape<F>& tape, const Model<F>& model, const Vocab& vocab,
                  const CharVocab& chars, const Document& doc, Mode mode,
                  const DropoutCtx& drop = {}) {
  using Id = typename Tape<F>::Id;
  const ModelConfig& cfg = model.cfg;
  const int n = doc.n();

  // Padded token ids: <sod> tokens... <eod>.
  std::vector<int> word_ids(static_cast<std::size_t>(n) + 2);
  word_ids.front() = Vocab::kSod;
  word_ids.back() = Vocab::kEod;
  for (int t = 0; t < n; ++t) word_ids[t + 1] = vocab.id(doc.tokens[t]);

  std::vector<Id> embeds(word_ids.size());
  for (std::size_t p = 0; p < word_ids.size(); ++p) {
    Id e_word = tape.lookup_row(model.word_emb, static_cast<std::size_t>(word_ids[p]));
    if (!cfg.use_char_lstm) {
      embeds[p] = e_word;
      continue;
    }
    std::vector<Id> ce;
    if (p == 0) {
      ce.push_back(tape.lookup_row(model.char_emb, CharVocab::kSod));
    } else if (p + 1 == word_ids.size()) {
      ce.push_back(tape.lookup_row(model.char_emb, CharVocab::kEod));
    } else {
      for (char c : doc.tokens[p - 1])
        ce.push_back(tape.lookup_row(model.char_emb,
                                     static_cast<std::size_t>(chars.id(c))));
    }
    auto fw = detail::lstm_run(tape, model.char_fw, ce, cfg.char_hidden, false);
    auto bw = detail::lstm_run(tape, model.char_bw, ce, cfg.char_hidden, true);
    Id e_char = tape.concat(fw.back(), bw.front());
    embeds[p] = tape.concat(e_char, e_word);
  }

  // Stacked Bi-LSTM; layer input is the concatenated output of the previous.
  std::vector<Id> layer_in = embeds;
  std::vector<Id> fw_top, bw_top;
  for (int l = 0; l < cfg.enc_layers; ++l) {
    fw_top = detail::lstm_run(tape, model.enc_fw[l], layer_in, cfg.hidden, false);
    bw_top = detail::lstm_run(tape, model.enc_bw[l], layer_in, cfg.hidden, true);
    if (l + 1 < cfg.enc_layers) {
      std::vector<Id> next(layer_in.size());
      for (std::size_t p = 0; p < layer_in.size(); ++p)
        next[p] = tape.concat(fw_top[p], bw_top[p]);
      layer_in = std::move(next);
    }
  }

  Encoded<F> enc;
  enc.mode = mode;
  enc.n = n;
  enc.boundary.resize(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    Id h = tape.concat(fw_top[static_cast<std::size_t>(k)],
                       bw_top[static_cast<std::size_t>(k) + 1]);
    enc.boundary[static_cast<std::size_t>(k)] = detail::maybe_dropout(tape, h, drop);
  }
  enc.enc_final = tape.concat(fw_top.back(), bw_top.front());

  if (mode == Mode::GoldEdu) {
    if (!doc.edu_ends)
      throw DataError("document '" + doc.id + "' lacks edu_ends required by gold-EDU mode");
    const auto& ends = *doc.edu_ends;
    enc.m = static_cast<int>(ends.size());
    std::vector<Id> picked;
    picked.push_back(enc.boundary[0]);
    for (int e : ends) picked.push_back(enc.boundary[static_cast<std::size_t>(e)]);
    if (cfg.use_boundary_lstm) {
      auto fw = detail::lstm_run(tape, model.bnd_fw, picked, cfg.hidden, false);
      auto bw = detail::lstm_run(tape, model.bnd_bw, picked, cfg.hidden, true);
      enc.edu_boundary.resize(picked.size());
      for (std::size_t p = 0; p < picked.size(); ++p)
        enc.edu_boundary[p] = tape.concat(fw[p], bw[p]);
    } else {
      enc.edu_boundary = std::move(picked);
    }
  }

  // Pointing projections, shared across decoding steps.
  const auto& active = enc.active();
  std::vector<Id> projected(active.size());
  for (std::size_t p = 0; p < active.size(); ++p)
    projected[p] = tape.leaky_relu(tape.affine(model.mlp_h_W, model.mlp_h_b, active[p]),
                                   static_cast<F>(cfg.leaky_slope));
  enc.point_matrix = tape.stack_rows(projected);
  return enc;
}

template <typename F>
struct DecoderState {
  std::vector<typename Tape<F>::Id> h, c;  // per decoder layer
};

// Learned linear projection of [f_last; b_first] into every layer's initial
// hidden and cell state (or all zeros when configured).
template <typename F>
DecoderState<F> init_decoder(Tape<F>& tape, const Model<F>& model, const Encoded<F>& enc) {
  using Id = typename Tape<F>::Id;
  const int layers = model.cfg.dec_layers;
  const std::size_t Hd = static_cast<std::size_t>(model.cfg.resolved_dec_hidden());
  DecoderState<F> st;
  st.h.resize(layers);
  st.c.resize(layers);
  if (model.cfg.decoder_zero_init) {
    for (int l = 0; l < layers; ++l) {
      st.h[l] = tape.zeros(Hd);
      st.c[l] = tape.zeros(Hd);
    }
    return st;
  }
  Id u = tape.affine(model.dec_init_W, model.dec_init_b, enc.enc_final);
  for (int l = 0; l < layers; ++l) {
    st.h[l] = tape.slice(u, static_cast<std::size_t>(2 * l) * Hd, Hd);
    st.c[l] = tape.slice(u, static_cast<std::size_t>(2 * l + 1) * Hd, Hd);
  }
  return st;
}

// The span representation fed to the decoder: W1 h_i + W2 h_j over the
// active boundary set.
template <typename F>
typename Tape<F>::Id span_rep(Tape<F>& tape, const Model<F>& model,
                              const Encoded<F>& enc, int i, int j) {
  const auto& active = enc.active();
  if (i < 0 || j <= i || j >= static_cast<int>(active.size()))
    throw std::out_of_range("span (" + std::to_string(i) + "," + std::to_string(j) +
                            ") outside the encoded boundary range");
  return tape.add(tape.matvec(model.span_W1, active[static_cast<std::size_t>(i)]),
                  tape.matvec(model.span_W2, active[static_cast<std::size_t>(j)]));
}

// One decoder step: consume the span representation, advance the stacked
// LSTM, and score every boundary in the active set with the biaffine
// pointing function. Scores are over the full range regardless of the input
// span, which is what keeps them comparable across steps (and beams).
template <typename F>
std::pair<DecoderState<F>, typename Tape<F>::Id> decoder_step(
    Tape<F>& tape, const Model<F>& model, const Encoded<F>& enc,
    const DecoderState<F>& state, int i, int j, const DropoutCtx& drop = {}) {
  using Id = typename Tape<F>::Id;
  Id x = span_rep(tape, model, enc, i, j);
  x = detail::maybe_dropout(tape, x, drop);
  DecoderState<F> next;
  next.h.resize(model.dec.size());
  next.c.resize(model.dec.size());
  for (std::size_t l = 0; l < model.dec.size(); ++l) {
    auto hc = detail::lstm_step(tape, model.dec[l], x, state.h[l], state.c[l],
                                model.cfg.resolved_dec_hidden());
    next.h[l] = hc.first;
    next.c[l] = hc.second;
    x = hc.first;
  }
  Id d_proj = tape.leaky_relu(tape.affine(model.mlp_d_W, model.mlp_d_b, x),
                              static_cast<F>(model.cfg.leaky_slope));
  Id q = tape.add_param(tape.matvec_t(model.W_dh, d_proj), model.w_h);
  Id scores = tape.matvec_node(enc.point_matrix, q);
  return {std::move(next), scores};
}

// Label logits for the split (i,k,j) over the active boundary set.
template <typename F>
typename Tape<F>::Id label_logits(Tape<F>& tape, const Model<F>& model,
                                  const Encoded<F>& enc, int i, int k, int j) {
  using Id = typename Tape<F>::Id;
  const auto& active = enc.active();
  if (!(0 <= i && i < k && k < j && j < static_cast<int>(active.size())))
    throw std::out_of_range("label_logits indices (" + std::to_string(i) + "," +
                            std::to_string(k) + "," + std::to_string(j) +
                            ") outside the encoded boundary range");
  Id hl = tape.leaky_relu(
      tape.affine(model.mlp_l_W, model.mlp_l_b,
                  tape.concat(active[static_cast<std::size_t>(i)],
                              active[static_cast<std::size_t>(k)])),
      static_cast<F>(model.cfg.leaky_slope));
  Id hr = tape.leaky_relu(
      tape.affine(model.mlp_r_W, model.mlp_r_b,
                  tape.concat(active[static_cast<std::size_t>(k)],
                              active[static_cast<std::size_t>(j)])),
      static_cast<F>(model.cfg.leaky_slope));
  return tape.label_biaffine(hl, hr, model.W_lr, model.W_l, model.W_r, model.label_b);
}

// Full softmax over a raw score vector, as a probability vector.
template <typename F>
std::vector<double> pointing_distribution(const Tensor<F>& scores) {
  double mx = -std::numeric_limits<double>::infinity();
  for (F s : scores.v) mx = std::max(mx, static_cast<double>(s));
  std::vector<double> p(scores.size());
  double z = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    p[k] = std::exp(static_cast<double>(scores.v[k]) - mx);
    z += p[k];
  }
  for (auto& x : p) x /= z;
  return p;
}

// log softmax value at one index, over the full score vector.
template <typename F>
double log_pointing_prob(const Tensor<F>& scores, std::size_t k) {
  double mx = -std::numeric_limits<double>::infinity();
  for (F s : scores.v) mx = std::max(mx, static_cast<double>(s));
  double z = 0.0;
  for (F s : scores.v) z += std::exp(static_cast<double>(s) - mx);
  return static_cast<double>(scores.v[k]) - mx - std::log(z);
}

// Maps the gold tree of `doc` into the decision sequence the decoder is
// teacher-forced on: the end-to-end form over token boundaries, or the
// gold-EDU form re-indexed to EDU coordinates.
SplitSequence teacher_sequence(const Document& doc, Mode mode);

// Converts an EDU-coordinate tree back to token boundaries.
DiscourseTree edu_tree_to_token(const DiscourseTree& tree, const std::vector<int>& edu_ends);

template <typename F>
struct LossValue {
  typename Tape<F>::Id total = -1;
  double total_value = 0.0;
  double split_value = 0.0;
  double label_value = 0.0;
  int split_decisions = 0;
  int label_decisions = 0;
};

// Teacher-forced total loss L = L_s + L_l for one document. The pointing
// cross-entropy normalizes over the full boundary range; the label
// cross-entropy only applies to internal decisions (k < j).
template <typename F>
LossValue<F> total_loss(Tape<F>& tape, const Model<F>& model, const Vocab& vocab,
                        const CharVocab& chars, const LabelInventory& inventory,
                        const Document& doc, Mode mode, const DropoutCtx& drop = {}) {
  using Id = typename Tape<F>::Id;
  if (!doc.gold_tree)
    throw DataError("document '" + doc.id + "' has no gold tree for training");
  SplitSequence seq = teacher_sequence(doc, mode);
  Encoded<F> enc = encode(tape, model, vocab, chars, doc, mode, drop);
  DecoderState<F> state = init_decoder(tape, model, enc);

  std::vector<Id> split_terms, label_terms;
  for (const auto& d : seq) {
    auto [next, scores] = decoder_step(tape, model, enc, state, d.i, d.j, drop);
    state = std::move(next);
    split_terms.push_back(tape.ce_loss(scores, static_cast<std::size_t>(d.k)));
    if (!d.terminal()) {
      Id logits = label_logits(tape, model, enc, d.i, d.k, d.j);
      int lid = inventory.require_id(*d.label);
      label_terms.push_back(tape.ce_loss(logits, static_cast<std::size_t>(lid)));
    }
  }

  LossValue<F> out;
  out.split_decisions = static_cast<int>(split_terms.size());
  out.label_decisions = static_cast<int>(label_terms.size());
  Id ls = split_terms.empty() ? tape.zeros(1) : tape.sum_scalars(split_terms);
  Id ll = label_terms.empty() ? tape.zeros(1) : tape.sum_scalars(label_terms);
  out.total = tape.add(ls, ll);
  out.split_value = static_cast<double>(tape.value(ls).v[0]);
  out.label_value = static_cast<double>(tape.value(ll).v[0]);
  out.total_value = static_cast<double>(tape.value(out.total).v[0]);
  return out;
}

// Arg-max of `scores` over the valid split points of span (i,j): i < k <= j
// end-to-end, i < k < j with gold EDUs. Ties break to the smallest k.
template <typename F>
int restricted_argmax(const Tensor<F>& scores, int i, int j, Mode mode) {
  int hi = mode == Mode::GoldEdu ? j - 1 : j;
  if (i + 1 > hi)
    throw std::logic_error("empty valid split range for span (" + std::to_string(i) +
                           "," + std::to_string(j) + ")");
  int best = i + 1;
  for (int k = i + 2; k <= hi; ++k)
    if (scores.v[static_cast<std::size_t>(k)] > scores.v[static_cast<std::size_t>(best)])
      best = k;
  return best;
}

// Fraction of teacher-forced decisions whose range-restricted argmax matches
// the gold split point.
template <typename F>
double teacher_forced_split_accuracy(const Model<F>& model, const Vocab& vocab,
                                     const CharVocab& chars,
                                     const std::vector<Document>& docs, Mode mode) {
  long long hits = 0, total = 0;
  for (const auto& doc : docs) {
    SplitSequence seq = teacher_sequence(doc, mode);
    if (seq.empty()) continue;
    Tape<F> tape(std::as_const(model.params));
    Encoded<F> enc = encode(tape, model, vocab, chars, doc, mode);
    DecoderState<F> state = init_decoder(tape, model, enc);
    for (const auto& d : seq) {
      auto [next, scores] = decoder_step(tape, model, enc, state, d.i, d.j);
      state = std::move(next);
      ++total;
      if (restricted_argmax(tape.value(scores), d.i, d.j, mode) == d.k) ++hits;
    }
  }
  return total == 0 ? 1.0 : static_cast<double>(hits) / static_cast<double>(total);
}

// Loads GloVe-style vectors ("token v1 ... vD" per line); matching vocabulary
// rows are overwritten and frozen (excluded from optimizer updates).
// Returns the number of rows loaded.
template <typename F>
int load_pretrained_embeddings(const std::string& path, Model<F>& model,
                               const Vocab& vocab) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open embeddings file '" + path + "'");
  Param<F>& emb = model.params.at(model.word_emb);
  if (emb.frozen_rows.size() != emb.value.rows())
    emb.frozen_rows.assign(emb.value.rows(), 0);
  const std::size_t dim = emb.value.cols();
  std::string line;
  int line_no = 0, loaded = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    std::vector<double> vals;
    double x;
    while (ls >> x) vals.push_back(x);
    if (vals.size() != dim)
      throw DataError("embeddings file '" + path + "', line " + std::to_string(line_no) +
                      ": expected " + std::to_string(dim) + " values, found " +
                      std::to_string(vals.size()));
    int row = vocab.id(tok);
    if (row == Vocab::kUnk && tok != vocab.tokens[Vocab::kUnk]) continue;
    for (std::size_t c = 0; c < dim; ++c)
      emb.value.at2(static_cast<std::size_t>(row), c) = static_cast<F>(vals[c]);
    emb.frozen_rows[static_cast<std::size_t>(row)] = 1;
    ++loaded;
  }
  return loaded;
}

}  // namespace rst
