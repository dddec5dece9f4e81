#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rst/label.hpp"

namespace rst {

class Rng;

// One splitting decision (i,j) -> k with i < k <= j, over token-boundary
// indices. k < j splits the span into (i,k) and (k,j) and carries the
// relation label between the two children; k == j marks (i,j) as a terminal
// EDU and carries no label.
struct SplitDecision {
  int i = 0, j = 0, k = 0;
  std::optional<RelationLabel> label;

  bool terminal() const { return k == j; }
  bool operator==(const SplitDecision& o) const {
    return i == o.i && j == o.j && k == o.k && label == o.label;
  }
};

// Depth-first, left-child-first pre-order list of splitting decisions.
// Two serialized forms exist for a tree with m EDUs:
//   - the gold-EDU form (no terminals), m-1 decisions;
//   - the end-to-end form (every EDU contributes its terminal), 2m-1.
using SplitSequence = std::vector<SplitDecision>;

std::string to_string(const SplitDecision& d);
std::string to_string(const SplitSequence& s);

// Strictly binary labeled tree over token-boundary spans. Leaves are EDU
// spans; internal nodes carry the split point and a relation label. Nodes
// are stored in an arena in pre-order.
class DiscourseTree {
 public:
  struct Node {
    int i = 0, j = 0;
    int split = -1;           // < 0 for leaves
    int left = -1, right = -1;  // arena indices, < 0 for leaves
    RelationLabel label;        // meaningful for internal nodes only
    bool leaf() const { return left < 0; }
  };

  DiscourseTree() = default;

  static DiscourseTree single_edu(int n);

  int n() const { return n_; }
  int root() const { return root_; }
  const Node& node(int idx) const { return nodes_.at(idx); }
  int node_count() const { return static_cast<int>(nodes_.size()); }
  bool empty() const { return root_ < 0; }

  int edu_count() const;
  // Right endpoints of the EDU leaves, ascending; last element is n.
  std::vector<int> edu_boundaries() const;

  bool operator==(const DiscourseTree& o) const;
  bool operator!=(const DiscourseTree& o) const { return !(*this == o); }

  // Builder used by the conversion routines and tests. Children must be
  // added before their parent.
  class Builder {
   public:
    int leaf(int i, int j);
    int internal(int left, int right, const RelationLabel& label);
    DiscourseTree finish(int root, int n);
    const Node& node(int idx) const { return nodes_.at(idx); }

   private:
    std::vector<Node> nodes_;
  };

 private:
  std::vector<Node> nodes_;
  int root_ = -1;
  int n_ = 0;

  friend DiscourseTree splits_to_tree(const SplitSequence&, int);
};

// Input form for binarize(): a possibly n-ary labeled tree. N-ary nodes
// arise from multi-nuclear relations in source treebanks.
struct NaryTree {
  RelationLabel label;           // internal nodes only
  std::vector<NaryTree> children;
  int i = -1, j = -1;            // leaf span (children empty)

  bool leaf() const { return children.empty(); }

  static NaryTree edu(int i, int j);
  static NaryTree rel(const std::string& label, std::vector<NaryTree> children);
};

// Right-branching binarization: a node with c > 2 children becomes a chain
// where each introduced node keeps the original relation with NN nuclearity.
// Binary input passes through unchanged.
DiscourseTree binarize(const NaryTree& tree);

// Tree -> decision sequence, gold-EDU form (terminals omitted). Length m-1.
SplitSequence tree_to_splits_edu(const DiscourseTree& tree);

// Tree -> decision sequence, end-to-end form (every EDU leaf contributes its
// terminal decision at its pre-order position). Length 2m-1.
SplitSequence tree_to_splits_e2e(const DiscourseTree& tree);

// Decision sequence -> tree, rooted at (0, n). Accepts both forms: if the
// sequence contains any terminal decision it is parsed strictly as the
// end-to-end form, otherwise leaves are implied by absent spans.
// Throws DataError on inconsistent sequences.
DiscourseTree splits_to_tree(const SplitSequence& seq, int n);

struct Constituent {
  int i = 0, k = 0, j = 0;
  RelationLabel label;
  bool operator==(const Constituent& o) const {
    return i == o.i && k == o.k && j == o.j && label == o.label;
  }
};

// The labeled internal nodes, in pre-order. Size m-1 for m EDUs.
std::vector<Constituent> constituents(const DiscourseTree& tree);

// Rebuilds the tree with every boundary index mapped through `map`
// (used to move between EDU-level and token-level coordinates).
DiscourseTree remap_boundaries(const DiscourseTree& tree,
                               const std::function<int(int)>& map, int new_n);

// Appends a uniformly random binary subtree whose leaves are the spans
// between consecutive elements of `bounds` (strictly ascending). Uniform
// over all Catalan(#leaves-1) shapes; introduced nodes are unlabeled.
int random_subtree(Rng& rng, const std::vector<int>& bounds,
                   DiscourseTree::Builder& b);

// Combines already-built adjacent subtrees (given by arena index, left to
// right) under a uniformly random binary shape.
int random_combine(Rng& rng, const std::vector<int>& roots,
                   DiscourseTree::Builder& b);

// Uniformly random binary tree over the given leaf bounds (bounds[0] == 0),
// labels drawn uniformly from `inventory`.
DiscourseTree random_tree(Rng& rng, const std::vector<int>& bounds,
                          const LabelInventory& inventory);

// Replaces every internal label with a uniform draw from `inventory`.
DiscourseTree randomize_labels(Rng& rng, const DiscourseTree& tree,
                               const LabelInventory& inventory);

}  // namespace rst
