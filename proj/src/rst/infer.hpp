#pragma once

#include <vector>

#include "rst/model_io.hpp"

namespace rst {

// The boundary-LSTM ablation is a model-config switch
// (ParserBundle.model.cfg.use_boundary_lstm); options here only steer the
// decoding procedure itself.
struct InferOptions {
  bool sentence_guidance = true;  // end-to-end decoding only
};

struct ParseResult {
  DiscourseTree tree;          // labeled, token-boundary coordinates
  std::vector<int> edu_ends;   // predicted (e2e) or gold (gold-EDU) segmentation
  double logprob = 0.0;        // sum of log pointing probabilities, executed steps
  int decoder_steps = 0;
};

// Split point for span (i,j) under sentence guidance: if any sentence
// boundary lies strictly inside the span, the argmax is restricted to those
// boundaries; otherwise any k with i < k <= j is allowed. Ties break to the
// smallest k.
int apply_sentence_guidance(const Tensor<float>& scores, int i, int j,
                            const std::vector<int>& sentence_ends);

// Stack-based depth-first end-to-end decoding from (0, n); terminal
// decisions mark EDUs and width-1 child spans never enter the decoder.
ParseResult greedy_parse_e2e(const ParserBundle& parser, const Document& doc,
                             const InferOptions& opts = {});

// Beam-search decoding over the EDU-level boundary representations,
// m-1 steps, beam width B. B = 1 reproduces the greedy decode exactly.
ParseResult beam_parse_gold_edu(const ParserBundle& parser, const Document& doc,
                                int beam_width);

// Plain depth-first greedy decode with gold EDUs (reference for B = 1).
ParseResult greedy_parse_gold_edu(const ParserBundle& parser, const Document& doc);

// Beam search in end-to-end mode. Off the default path; items carry their
// own span stacks because the schedule length depends on segmentation.
ParseResult beam_parse_e2e(const ParserBundle& parser, const Document& doc,
                           int beam_width, const InferOptions& opts = {});

// Scores every valid tree exactly as the decoder would (teacher-forcing the
// executed decision sequence) and returns the best; ties go to the
// lexicographically smallest split sequence. Bounded to m <= 12 (gold-EDU)
// or n <= 10 (end-to-end).
ParseResult exhaustive_oracle(const ParserBundle& parser, const Document& doc,
                              Mode mode, const InferOptions& opts = {});

// Unlabeled tree shapes over EDU indices 0..m, in enumeration order.
std::vector<DiscourseTree> enumerate_edu_trees(int m);

// Every end-to-end tree over the document's token boundaries (optionally
// restricted to sentence-guidance-compatible shapes).
std::vector<DiscourseTree> enumerate_e2e_trees(const Document& doc, bool guidance);

// Post-hoc label assignment: every internal node gets the argmax of the
// label logits; the structure is unchanged. Indices are EDU-level in
// gold-EDU mode and token-boundary-level end-to-end.
DiscourseTree assign_labels(const ParserBundle& parser, const Document& doc,
                            const DiscourseTree& structure, Mode mode);

}  // namespace rst
