#include "rst/infer.hpp"

#include <algorithm>
#include <array>

namespace rst {

namespace {

using Id = Tape<float>::Id;
using Triple = std::array<int, 3>;

// Pre-order triples -> unlabeled tree; leaves are implied by absent spans.
DiscourseTree tree_from_triples(const std::vector<Triple>& triples, int n) {
  struct Walker {
    const std::vector<Triple>& ts;
    std::size_t pos = 0;
    DiscourseTree::Builder b;

    int parse(int i, int j) {
      if (pos < ts.size() && ts[pos][0] == i && ts[pos][2] == j) {
        int k = ts[pos][1];
        ++pos;
        int l = parse(i, k);
        int r = parse(k, j);
        return b.internal(l, r, {});
      }
      return b.leaf(i, j);
    }
  };
  Walker w{triples, 0, {}};
  int root = w.parse(0, n);
  if (w.pos != triples.size())
    throw std::logic_error("decoded triples do not form a pre-order tree");
  return w.b.finish(root, n);
}

Encoded<float> encode_for(const ParserBundle& parser, Tape<float>& tape,
                          const Document& doc, Mode mode) {
  return encode(tape, parser.model, parser.vocab, parser.chars, doc, mode);
}

// Label assignment against an existing encoding; `tree` is in the encoding's
// active coordinates.
DiscourseTree assign_labels_encoded(Tape<float>& tape, const Model<float>& model,
                                    const LabelInventory& inventory,
                                    const Encoded<float>& enc, const DiscourseTree& tree) {
  SplitSequence seq = tree_to_splits_e2e(tree);
  for (auto& d : seq) {
    if (d.terminal()) continue;
    Id logits = label_logits(tape, model, enc, d.i, d.k, d.j);
    const Tensor<float>& v = tape.value(logits);
    std::size_t best = 0;
    for (std::size_t l = 1; l < v.size(); ++l)
      if (v.v[l] > v.v[best]) best = l;
    d.label = inventory.at(static_cast<int>(best));
  }
  return splits_to_tree(seq, tree.n());
}

}  // namespace

int apply_sentence_guidance(const Tensor<float>& scores, int i, int j,
                            const std::vector<int>& sentence_ends) {
  int best = -1;
  for (int s : sentence_ends) {
    if (s <= i) continue;
    if (s >= j) break;
    if (best < 0 || scores.v[static_cast<std::size_t>(s)] >
                        scores.v[static_cast<std::size_t>(best)])
      best = s;
  }
  if (best >= 0) return best;
  return restricted_argmax(scores, i, j, Mode::EndToEnd);
}

ParseResult greedy_parse_e2e(const ParserBundle& parser, const Document& doc,
                             const InferOptions& opts) {
  const Model<float>& model = parser.model;
  Tape<float> tape(std::as_const(model.params));
  Encoded<float> enc = encode_for(parser, tape, doc, Mode::EndToEnd);
  DecoderState<float> state = init_decoder(tape, model, enc);

  ParseResult out;
  std::vector<std::pair<int, int>> stack{{0, doc.n()}};
  std::vector<Triple> triples;
  while (!stack.empty()) {
    auto [i, j] = stack.back();
    stack.pop_back();
    auto [next, scores] = decoder_step(tape, model, enc, state, i, j);
    state = std::move(next);
    ++out.decoder_steps;
    const Tensor<float>& sv = tape.value(scores);
    int k = opts.sentence_guidance
                ? apply_sentence_guidance(sv, i, j, doc.sentence_ends)
                : restricted_argmax(sv, i, j, Mode::EndToEnd);
    out.logprob += log_pointing_prob(sv, static_cast<std::size_t>(k));
    if (k == j) continue;  // terminal: (i,j) is an EDU
    triples.push_back({i, k, j});
    if (j - k >= 2) stack.emplace_back(k, j);
    if (k - i >= 2) stack.emplace_back(i, k);
  }

  DiscourseTree structure = tree_from_triples(triples, doc.n());
  out.tree = assign_labels_encoded(tape, model, parser.labels, enc, structure);
  out.edu_ends = out.tree.edu_boundaries();
  return out;
}

namespace {

struct BeamItem {
  double logp = 0.0;
  DecoderState<float> state;
  std::vector<std::pair<int, int>> schedule;  // input span per step, EDU coords
  std::vector<Triple> tree;                   // decision triples per step
};

bool beam_item_less(const BeamItem& a, const BeamItem& b) {
  if (a.logp != b.logp) return a.logp > b.logp;  // higher probability first
  return a.tree < b.tree;                        // then lexicographic splits
}

// Valid splits of (i,j) ordered by (probability desc, k asc), truncated to B.
std::vector<std::pair<int, double>> top_valid_splits(const Tensor<float>& scores,
                                                     int i, int j, int B) {
  std::vector<std::pair<int, double>> ks;
  for (int k = i + 1; k < j; ++k)
    ks.emplace_back(k, log_pointing_prob(scores, static_cast<std::size_t>(k)));
  std::stable_sort(ks.begin(), ks.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (static_cast<int>(ks.size()) > B) ks.resize(static_cast<std::size_t>(B));
  return ks;
}

ParseResult finish_gold_edu(const ParserBundle& parser, Tape<float>& tape,
                            const Model<float>& model, const Encoded<float>& enc,
                            const Document& doc, const std::vector<Triple>& triples,
                            double logp, int steps) {
  const auto& ends = *doc.edu_ends;
  DiscourseTree structure = tree_from_triples(triples, static_cast<int>(ends.size()));
  DiscourseTree labeled = assign_labels_encoded(tape, model, parser.labels, enc, structure);
  ParseResult out;
  out.tree = edu_tree_to_token(labeled, ends);
  out.edu_ends = ends;
  out.logprob = logp;
  out.decoder_steps = steps;
  return out;
}

}  // namespace

namespace {

// One pass of plain width-b beam decoding (schedule form of the depth-first
// decision order). Returns the best item of the final beam.
BeamItem run_beam_pass(Tape<float>& tape, const Model<float>& model,
                       const Encoded<float>& enc, const DecoderState<float>& init_state,
                       int m, int b) {
  const int steps = m - 1;
  BeamItem init;
  init.state = init_state;
  init.schedule.assign(static_cast<std::size_t>(steps), {0, 0});
  init.schedule[0] = {0, m};
  init.tree.assign(static_cast<std::size_t>(steps), {0, 0, 0});
  std::vector<BeamItem> beam{std::move(init)};

  for (int t = 1; t <= steps; ++t) {
    std::vector<BeamItem> candidates;
    for (const BeamItem& item : beam) {
      auto [i, j] = item.schedule[static_cast<std::size_t>(t - 1)];
      auto [next, scores] = decoder_step(tape, model, enc, item.state, i, j);
      for (auto [k, logpk] : top_valid_splits(tape.value(scores), i, j, b)) {
        BeamItem cand = item;
        cand.state = next;
        cand.logp += logpk;
        cand.tree[static_cast<std::size_t>(t - 1)] = {i, k, j};
        // Depth-first schedule: the left child is consumed at the next step,
        // the right one after the left subtree's k-i-1 decisions.
        if (k - i >= 2) cand.schedule.at(static_cast<std::size_t>(t)) = {i, k};
        if (j - k >= 2)
          cand.schedule.at(static_cast<std::size_t>(t + k - i - 1)) = {k, j};
        candidates.push_back(std::move(cand));
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(), beam_item_less);
    if (static_cast<int>(candidates.size()) > b)
      candidates.resize(static_cast<std::size_t>(b));
    beam = std::move(candidates);
  }
  return beam.front();
}

}  // namespace

ParseResult beam_parse_gold_edu(const ParserBundle& parser, const Document& doc,
                                int beam_width) {
  if (!doc.edu_ends)
    throw DataError("document '" + doc.id + "' has no edu_ends for gold-EDU parsing");
  if (beam_width < 1) throw DataError("beam width must be >= 1");
  const Model<float>& model = parser.model;
  const int m = static_cast<int>(doc.edu_ends->size());
  Tape<float> tape(std::as_const(model.params));
  Encoded<float> enc = encode_for(parser, tape, doc, Mode::GoldEdu);

  if (m == 1) return finish_gold_edu(parser, tape, model, enc, doc, {}, 0.0, 0);

  DecoderState<float> init_state = init_decoder(tape, model, enc);
  // Plain top-B pruning is not monotone in B: a wider beam can crowd out a
  // prefix whose completion would have won. Running every width up to B over
  // the shared encoding and keeping the best result makes the returned score
  // non-decreasing in B while still containing the plain width-B search.
  std::size_t base = tape.mark();
  BeamItem best;
  bool have = false;
  for (int b = 1; b <= beam_width; ++b) {
    BeamItem item = run_beam_pass(tape, model, enc, init_state, m, b);
    if (!have || item.logp > best.logp ||
        (item.logp == best.logp && item.tree < best.tree)) {
      have = true;
      best = std::move(item);
    }
    tape.rewind(base);
  }
  return finish_gold_edu(parser, tape, model, enc, doc, best.tree, best.logp, m - 1);
}

ParseResult greedy_parse_gold_edu(const ParserBundle& parser, const Document& doc) {
  if (!doc.edu_ends)
    throw DataError("document '" + doc.id + "' has no edu_ends for gold-EDU parsing");
  const Model<float>& model = parser.model;
  const int m = static_cast<int>(doc.edu_ends->size());
  Tape<float> tape(std::as_const(model.params));
  Encoded<float> enc = encode_for(parser, tape, doc, Mode::GoldEdu);
  DecoderState<float> state = init_decoder(tape, model, enc);

  double logp = 0.0;
  int steps = 0;
  std::vector<Triple> triples;
  std::vector<std::pair<int, int>> stack;
  if (m > 1) stack.emplace_back(0, m);
  while (!stack.empty()) {
    auto [i, j] = stack.back();
    stack.pop_back();
    auto [next, scores] = decoder_step(tape, model, enc, state, i, j);
    state = std::move(next);
    ++steps;
    int k = restricted_argmax(tape.value(scores), i, j, Mode::GoldEdu);
    logp += log_pointing_prob(tape.value(scores), static_cast<std::size_t>(k));
    triples.push_back({i, k, j});
    if (j - k >= 2) stack.emplace_back(k, j);
    if (k - i >= 2) stack.emplace_back(i, k);
  }
  return finish_gold_edu(parser, tape, model, enc, doc, triples, logp, steps);
}

namespace {

struct BeamItemE2E {
  double logp = 0.0;
  DecoderState<float> state;
  std::vector<std::pair<int, int>> stack;
  std::vector<Triple> triples;
  int steps = 0;
  bool done() const { return stack.empty(); }
};

bool beam_e2e_less(const BeamItemE2E& a, const BeamItemE2E& b) {
  if (a.logp != b.logp) return a.logp > b.logp;
  return a.triples < b.triples;
}

}  // namespace

namespace {

BeamItemE2E run_beam_pass_e2e(Tape<float>& tape, const Model<float>& model,
                              const Encoded<float>& enc, const Document& doc,
                              const DecoderState<float>& init_state,
                              const InferOptions& opts, int beam_width) {
  BeamItemE2E init;
  init.state = init_state;
  init.stack.emplace_back(0, doc.n());
  std::vector<BeamItemE2E> beam{std::move(init)};

  while (std::any_of(beam.begin(), beam.end(),
                     [](const BeamItemE2E& x) { return !x.done(); })) {
    std::vector<BeamItemE2E> candidates;
    for (const BeamItemE2E& item : beam) {
      if (item.done()) {
        candidates.push_back(item);
        continue;
      }
      auto [i, j] = item.stack.back();
      auto [next, scores] = decoder_step(tape, model, enc, item.state, i, j);
      const Tensor<float>& sv = tape.value(scores);
      // Candidate split points mirror the greedy rule: guidance boundaries
      // when present, otherwise the full valid range including the terminal.
      std::vector<int> ks;
      if (opts.sentence_guidance) {
        for (int s : doc.sentence_ends)
          if (s > i && s < j) ks.push_back(s);
      }
      if (ks.empty())
        for (int k = i + 1; k <= j; ++k) ks.push_back(k);
      std::vector<std::pair<int, double>> scored;
      for (int k : ks)
        scored.emplace_back(k, log_pointing_prob(sv, static_cast<std::size_t>(k)));
      std::stable_sort(scored.begin(), scored.end(),
                       [](const auto& a, const auto& b) { return a.second > b.second; });
      if (static_cast<int>(scored.size()) > beam_width)
        scored.resize(static_cast<std::size_t>(beam_width));
      for (auto [k, logpk] : scored) {
        BeamItemE2E cand = item;
        cand.state = next;
        cand.logp += logpk;
        cand.steps += 1;
        cand.stack.pop_back();
        if (k < j) {
          cand.triples.push_back({i, k, j});
          if (j - k >= 2) cand.stack.emplace_back(k, j);
          if (k - i >= 2) cand.stack.emplace_back(i, k);
        }
        candidates.push_back(std::move(cand));
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(), beam_e2e_less);
    if (static_cast<int>(candidates.size()) > beam_width)
      candidates.resize(static_cast<std::size_t>(beam_width));
    beam = std::move(candidates);
  }
  return beam.front();
}

}  // namespace

ParseResult beam_parse_e2e(const ParserBundle& parser, const Document& doc,
                           int beam_width, const InferOptions& opts) {
  if (beam_width < 1) throw DataError("beam width must be >= 1");
  const Model<float>& model = parser.model;
  Tape<float> tape(std::as_const(model.params));
  Encoded<float> enc = encode_for(parser, tape, doc, Mode::EndToEnd);
  DecoderState<float> init_state = init_decoder(tape, model, enc);

  // Same widening scheme as the gold-EDU beam, for the same monotonicity
  // guarantee.
  std::size_t base = tape.mark();
  BeamItemE2E best;
  bool have = false;
  for (int b = 1; b <= beam_width; ++b) {
    BeamItemE2E item = run_beam_pass_e2e(tape, model, enc, doc, init_state, opts, b);
    item.state = DecoderState<float>{};  // ids die at the rewind below
    if (!have || item.logp > best.logp ||
        (item.logp == best.logp && item.triples < best.triples)) {
      have = true;
      best = std::move(item);
    }
    tape.rewind(base);
  }

  DiscourseTree structure = tree_from_triples(best.triples, doc.n());
  ParseResult out;
  out.tree = assign_labels_encoded(tape, model, parser.labels, enc, structure);
  out.edu_ends = out.tree.edu_boundaries();
  out.logprob = best.logp;
  out.decoder_steps = best.steps;
  return out;
}

namespace {

void enumerate_edu_shapes(int i, int j, std::vector<std::vector<Triple>>& out) {
  if (j - i == 1) {
    out.push_back({});
    return;
  }
  out.clear();
  for (int k = i + 1; k < j; ++k) {
    std::vector<std::vector<Triple>> left, right;
    enumerate_edu_shapes(i, k, left);
    enumerate_edu_shapes(k, j, right);
    for (const auto& l : left)
      for (const auto& r : right) {
        std::vector<Triple> seq;
        seq.push_back({i, k, j});
        seq.insert(seq.end(), l.begin(), l.end());
        seq.insert(seq.end(), r.begin(), r.end());
        out.push_back(std::move(seq));
      }
  }
}

// End-to-end shapes for span (i,j) as executed decision lists
// (span, k, terminal flag skipped for width-1 children).
struct E2EDecision {
  int i, j, k;
};

void enumerate_e2e_shapes(int i, int j, const std::vector<int>& sentence_ends,
                          bool guidance, std::vector<std::vector<E2EDecision>>& out) {
  out.clear();
  std::vector<int> ks;
  if (guidance) {
    for (int s : sentence_ends)
      if (s > i && s < j) ks.push_back(s);
  }
  bool guided = !ks.empty();
  if (!guided)
    for (int k = i + 1; k <= j; ++k) ks.push_back(k);
  for (int k : ks) {
    if (k == j) {  // terminal decision, (i,j) becomes an EDU
      out.push_back({{i, j, j}});
      continue;
    }
    std::vector<std::vector<E2EDecision>> left{{}}, right{{}};
    if (k - i >= 2) enumerate_e2e_shapes(i, k, sentence_ends, guidance, left);
    if (j - k >= 2) enumerate_e2e_shapes(k, j, sentence_ends, guidance, right);
    for (const auto& l : left)
      for (const auto& r : right) {
        std::vector<E2EDecision> seq;
        seq.push_back({i, j, k});
        seq.insert(seq.end(), l.begin(), l.end());
        seq.insert(seq.end(), r.begin(), r.end());
        out.push_back(std::move(seq));
      }
  }
}

}  // namespace

std::vector<DiscourseTree> enumerate_edu_trees(int m) {
  if (m < 1) throw DataError("enumerate_edu_trees: need m >= 1");
  if (m == 1) return {DiscourseTree::single_edu(1)};
  std::vector<std::vector<Triple>> shapes;
  enumerate_edu_shapes(0, m, shapes);
  std::vector<DiscourseTree> out;
  out.reserve(shapes.size());
  for (const auto& s : shapes) out.push_back(tree_from_triples(s, m));
  return out;
}

std::vector<DiscourseTree> enumerate_e2e_trees(const Document& doc, bool guidance) {
  std::vector<std::vector<E2EDecision>> shapes;
  enumerate_e2e_shapes(0, doc.n(), doc.sentence_ends, guidance, shapes);
  std::vector<DiscourseTree> out;
  out.reserve(shapes.size());
  for (const auto& s : shapes) {
    std::vector<Triple> triples;
    for (const auto& d : s)
      if (d.k < d.j) triples.push_back({d.i, d.k, d.j});
    out.push_back(tree_from_triples(triples, doc.n()));
  }
  return out;
}

ParseResult exhaustive_oracle(const ParserBundle& parser, const Document& doc,
                              Mode mode, const InferOptions& opts) {
  const Model<float>& model = parser.model;
  Tape<float> tape(std::as_const(model.params));

  if (mode == Mode::GoldEdu) {
    if (!doc.edu_ends)
      throw DataError("document '" + doc.id + "' has no edu_ends for the gold-EDU oracle");
    const int m = static_cast<int>(doc.edu_ends->size());
    if (m > 12)
      throw DataError("exhaustive oracle limited to m <= 12 EDUs, got " + std::to_string(m));
    Encoded<float> enc = encode_for(parser, tape, doc, Mode::GoldEdu);
    if (m == 1) return finish_gold_edu(parser, tape, model, enc, doc, {}, 0.0, 0);
    DecoderState<float> init = init_decoder(tape, model, enc);

    std::vector<std::vector<Triple>> shapes;
    enumerate_edu_shapes(0, m, shapes);
    std::size_t base = tape.mark();
    bool have_best = false;
    double best_logp = 0.0;
    std::vector<Triple> best_tree;
    for (const auto& shape : shapes) {
      double logp = 0.0;
      DecoderState<float> state = init;
      for (const Triple& d : shape) {
        auto [next, scores] = decoder_step(tape, model, enc, state, d[0], d[2]);
        state = std::move(next);
        logp += log_pointing_prob(tape.value(scores), static_cast<std::size_t>(d[1]));
      }
      if (!have_best || logp > best_logp ||
          (logp == best_logp && shape < best_tree)) {
        have_best = true;
        best_logp = logp;
        best_tree = shape;
      }
      tape.rewind(base);
    }
    return finish_gold_edu(parser, tape, model, enc, doc, best_tree, best_logp,
                           m - 1);
  }

  if (doc.n() > 10)
    throw DataError("exhaustive end-to-end oracle limited to n <= 10 tokens, got " +
                    std::to_string(doc.n()));
  Encoded<float> enc = encode_for(parser, tape, doc, Mode::EndToEnd);
  DecoderState<float> init = init_decoder(tape, model, enc);
  std::vector<std::vector<E2EDecision>> shapes;
  enumerate_e2e_shapes(0, doc.n(), doc.sentence_ends, opts.sentence_guidance, shapes);

  std::size_t base = tape.mark();
  bool have_best = false;
  double best_logp = 0.0;
  int best_steps = 0;
  std::vector<Triple> best_triples;
  std::vector<Triple> triples;
  for (const auto& shape : shapes) {
    double logp = 0.0;
    DecoderState<float> state = init;
    triples.clear();
    for (const auto& d : shape) {
      auto [next, scores] = decoder_step(tape, model, enc, state, d.i, d.j);
      state = std::move(next);
      logp += log_pointing_prob(tape.value(scores), static_cast<std::size_t>(d.k));
      if (d.k < d.j) triples.push_back({d.i, d.k, d.j});
    }
    if (!have_best || logp > best_logp ||
        (logp == best_logp && triples < best_triples)) {
      have_best = true;
      best_logp = logp;
      best_triples = triples;
      best_steps = static_cast<int>(shape.size());
    }
    tape.rewind(base);
  }

  DiscourseTree structure = tree_from_triples(best_triples, doc.n());
  ParseResult out;
  out.tree = assign_labels_encoded(tape, model, parser.labels, enc, structure);
  out.edu_ends = out.tree.edu_boundaries();
  out.logprob = best_logp;
  out.decoder_steps = best_steps;
  return out;
}

DiscourseTree assign_labels(const ParserBundle& parser, const Document& doc,
                            const DiscourseTree& structure, Mode mode) {
  const Model<float>& model = parser.model;
  Tape<float> tape(std::as_const(model.params));
  Encoded<float> enc = encode_for(parser, tape, doc, mode);
  if (mode == Mode::EndToEnd)
    return assign_labels_encoded(tape, model, parser.labels, enc, structure);

  // Gold-EDU: label the tree in EDU coordinates, then map back.
  const auto& ends = *doc.edu_ends;
  std::unordered_map<int, int> to_edu;
  to_edu[0] = 0;
  for (std::size_t e = 0; e < ends.size(); ++e) to_edu[ends[e]] = static_cast<int>(e) + 1;
  DiscourseTree edu_tree = remap_boundaries(
      structure,
      [&to_edu, &doc](int b) {
        auto it = to_edu.find(b);
        if (it == to_edu.end())
          throw DataError("document '" + doc.id + "': tree boundary " + std::to_string(b) +
                          " is not an EDU boundary");
        return it->second;
      },
      static_cast<int>(ends.size()));
  DiscourseTree labeled = assign_labels_encoded(tape, model, parser.labels, enc, edu_tree);
  return edu_tree_to_token(labeled, ends);
}

}  // namespace rst
