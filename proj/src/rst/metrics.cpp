#include "rst/metrics.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace rst {

std::vector<ParsevalItem> parseval_items(const DiscourseTree& tree) {
  std::vector<ParsevalItem> out;
  for (const auto& c : constituents(tree)) {
    if (c.i == 0 && c.j == tree.n()) continue;  // root
    out.push_back(ParsevalItem{c.i, c.k, c.j, c.label.nuclearity, c.label.relation});
  }
  return out;
}

namespace {

template <typename Key>
FacetCounts match_multisets(const std::vector<Key>& pred, const std::vector<Key>& gold) {
  FacetCounts fc;
  fc.predicted = static_cast<long long>(pred.size());
  fc.gold = static_cast<long long>(gold.size());
  std::map<Key, int> bag;
  for (const auto& k : gold) ++bag[k];
  for (const auto& k : pred) {
    auto it = bag.find(k);
    if (it != bag.end() && it->second > 0) {
      --it->second;
      ++fc.matched;
    }
  }
  return fc;
}

using SpanKey = std::tuple<int, int, int>;
using NucKey = std::tuple<int, int, int, int>;
using RelKey = std::tuple<int, int, int, std::string>;
using FullKey = std::tuple<int, int, int, int, std::string>;

ScoreReport score_parseval_items(const std::vector<ParsevalItem>& pred,
                                 const std::vector<ParsevalItem>& gold) {
  auto keys = [](const std::vector<ParsevalItem>& items) {
    std::vector<SpanKey> span;
    std::vector<NucKey> nuc;
    std::vector<RelKey> rel;
    std::vector<FullKey> full;
    for (const auto& it : items) {
      span.emplace_back(it.i, it.k, it.j);
      nuc.emplace_back(it.i, it.k, it.j, static_cast<int>(it.nuclearity));
      rel.emplace_back(it.i, it.k, it.j, it.relation);
      full.emplace_back(it.i, it.k, it.j, static_cast<int>(it.nuclearity), it.relation);
    }
    return std::make_tuple(span, nuc, rel, full);
  };
  auto [ps, pn, pr, pf] = keys(pred);
  auto [gs, gn, gr, gf] = keys(gold);
  ScoreReport r;
  r.span = match_multisets(ps, gs);
  r.nuc = match_multisets(pn, gn);
  r.rel = match_multisets(pr, gr);
  r.full = match_multisets(pf, gf);
  return r;
}

}  // namespace

ScoreReport parseval(const DiscourseTree& pred, const DiscourseTree& gold) {
  if (pred.n() != gold.n())
    throw DataError("parseval: trees cover different token counts (" +
                    std::to_string(pred.n()) + " vs " + std::to_string(gold.n()) + ")");
  return score_parseval_items(parseval_items(pred), parseval_items(gold));
}

ScoreReport corpus_parseval(const std::vector<ScoreReport>& docs) {
  ScoreReport total;
  for (const auto& d : docs) total += d;
  return total;
}

namespace {

void collect_rst_items(const DiscourseTree& t, int idx, char role,
                       const std::string& relation, std::vector<RstParsevalItem>& out) {
  const auto& nd = t.node(idx);
  out.push_back(RstParsevalItem{nd.i, nd.j, role, relation});
  if (nd.leaf()) return;
  char left_role = nd.label.nuclearity == Nuclearity::SN ? 'S' : 'N';
  char right_role = nd.label.nuclearity == Nuclearity::NS ? 'S' : 'N';
  collect_rst_items(t, nd.left, left_role, nd.label.relation, out);
  collect_rst_items(t, nd.right, right_role, nd.label.relation, out);
}

}  // namespace

std::vector<RstParsevalItem> rst_parseval_items(const DiscourseTree& tree) {
  std::vector<RstParsevalItem> out;
  if (!tree.empty()) collect_rst_items(tree, tree.root(), 'R', "Root", out);
  return out;
}

ScoreReport rst_parseval(const DiscourseTree& pred, const DiscourseTree& gold) {
  if (pred.n() != gold.n())
    throw DataError("rst_parseval: trees cover different token counts (" +
                    std::to_string(pred.n()) + " vs " + std::to_string(gold.n()) + ")");
  auto keys = [](const std::vector<RstParsevalItem>& items) {
    std::vector<std::tuple<int, int>> span;
    std::vector<std::tuple<int, int, char>> nuc;
    std::vector<std::tuple<int, int, std::string>> rel;
    std::vector<std::tuple<int, int, char, std::string>> full;
    for (const auto& it : items) {
      span.emplace_back(it.i, it.j);
      nuc.emplace_back(it.i, it.j, it.role);
      rel.emplace_back(it.i, it.j, it.relation);
      full.emplace_back(it.i, it.j, it.role, it.relation);
    }
    return std::make_tuple(span, nuc, rel, full);
  };
  auto [ps, pn, pr, pf] = keys(rst_parseval_items(pred));
  auto [gs, gn, gr, gf] = keys(rst_parseval_items(gold));
  ScoreReport r;
  r.span = match_multisets(ps, gs);
  r.nuc = match_multisets(pn, gn);
  r.rel = match_multisets(pr, gr);
  r.full = match_multisets(pf, gf);
  return r;
}

ScoreReport corpus_rst_parseval(const std::vector<ScoreReport>& docs) {
  ScoreReport total;
  for (const auto& d : docs) total += d;
  return total;
}

FacetCounts segmentation_counts(const std::vector<int>& pred_ends,
                                const std::vector<int>& gold_ends,
                                const std::vector<int>& sentence_ends, int n) {
  auto check = [n](const std::vector<int>& ends, const char* what) {
    int prev = 0;
    for (int b : ends) {
      if (b <= prev || b > n)
        throw DataError(std::string(what) + " boundary set is invalid");
      prev = b;
    }
  };
  check(pred_ends, "predicted");
  check(gold_ends, "gold");
  auto intra = [&sentence_ends](const std::vector<int>& ends) {
    std::vector<int> out;
    for (int b : ends)
      if (!std::binary_search(sentence_ends.begin(), sentence_ends.end(), b))
        out.push_back(b);
    return out;
  };
  std::vector<int> p = intra(pred_ends), g = intra(gold_ends);
  FacetCounts fc;
  fc.predicted = static_cast<long long>(p.size());
  fc.gold = static_cast<long long>(g.size());
  for (int b : p)
    if (std::binary_search(g.begin(), g.end(), b)) ++fc.matched;
  return fc;
}

double segmentation_f1(const std::vector<int>& pred_ends,
                       const std::vector<int>& gold_ends,
                       const std::vector<int>& sentence_ends, int n) {
  return segmentation_counts(pred_ends, gold_ends, sentence_ends, n).f1();
}

}  // namespace rst
