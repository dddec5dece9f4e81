#pragma once

#include <string>
#include <vector>

#include "rst/tree.hpp"

namespace rst {

struct FacetCounts {
  long long matched = 0;
  long long predicted = 0;
  long long gold = 0;

  // Dice form of micro F1, as a percentage. Empty-vs-empty scores 100.
  double f1() const {
    if (predicted + gold == 0) return 100.0;
    return 200.0 * static_cast<double>(matched) / static_cast<double>(predicted + gold);
  }
  void operator+=(const FacetCounts& o) {
    matched += o.matched;
    predicted += o.predicted;
    gold += o.gold;
  }
};

struct ScoreReport {
  FacetCounts span, nuc, rel, full;

  double span_f1() const { return span.f1(); }
  double nuc_f1() const { return nuc.f1(); }
  double rel_f1() const { return rel.f1(); }
  double full_f1() const { return full.f1(); }
  void operator+=(const ScoreReport& o) {
    span += o.span;
    nuc += o.nuc;
    rel += o.rel;
    full += o.full;
  }
};

// One scored item under the original Parseval convention: a labeled split.
// The root constituent is excluded (it is always correct by construction).
// The Span facet matches the (i,k,j) triple; Nuc and Rel add the nuclearity
// pattern and the relation name; Full matches the composite.
struct ParsevalItem {
  int i = 0, k = 0, j = 0;
  Nuclearity nuclearity = Nuclearity::NN;
  std::string relation;
};

std::vector<ParsevalItem> parseval_items(const DiscourseTree& tree);

// Per-document Parseval counts. Both trees must cover the same token count.
ScoreReport parseval(const DiscourseTree& pred, const DiscourseTree& gold);
ScoreReport corpus_parseval(const std::vector<ScoreReport>& docs);

// RST-Parseval items: every node span including leaves and the root. Each
// node carries its role under its parent (N or S; the root a fixed dummy
// matched by convention) and the parent's relation name.
struct RstParsevalItem {
  int i = 0, j = 0;
  char role = 'R';       // 'N', 'S', or 'R' for the root
  std::string relation;  // parent relation; "Root" for the root
};

std::vector<RstParsevalItem> rst_parseval_items(const DiscourseTree& tree);

ScoreReport rst_parseval(const DiscourseTree& pred, const DiscourseTree& gold);
ScoreReport corpus_rst_parseval(const std::vector<ScoreReport>& docs);

// EDU segmentation F1 over intra-sentence boundaries only: boundaries that
// coincide with sentence ends (including n) are excluded from both sides.
double segmentation_f1(const std::vector<int>& pred_ends,
                       const std::vector<int>& gold_ends,
                       const std::vector<int>& sentence_ends, int n);
FacetCounts segmentation_counts(const std::vector<int>& pred_ends,
                                const std::vector<int>& gold_ends,
                                const std::vector<int>& sentence_ends, int n);

}  // namespace rst
