#include "rst/tree.hpp"

#include <algorithm>
#include <sstream>

#include "rst/rng.hpp"

namespace rst {

std::string to_string(const SplitDecision& d) {
  std::ostringstream os;
  os << "(" << d.i << "," << d.j << ")->" << d.k;
  if (d.label) os << ":" << d.label->str();
  return os.str();
}

std::string to_string(const SplitSequence& s) {
  std::ostringstream os;
  os << "[";
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (t) os << ", ";
    os << to_string(s[t]);
  }
  os << "]";
  return os.str();
}

DiscourseTree DiscourseTree::single_edu(int n) {
  Builder b;
  int leaf = b.leaf(0, n);
  return b.finish(leaf, n);
}

int DiscourseTree::edu_count() const {
  int leaves = 0;
  for (const auto& nd : nodes_)
    if (nd.leaf()) ++leaves;
  return leaves;
}

std::vector<int> DiscourseTree::edu_boundaries() const {
  std::vector<int> out;
  for (const auto& nd : nodes_)
    if (nd.leaf()) out.push_back(nd.j);
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

bool nodes_equal(const DiscourseTree& a, int ia, const DiscourseTree& b, int ib) {
  const auto& na = a.node(ia);
  const auto& nb = b.node(ib);
  if (na.i != nb.i || na.j != nb.j || na.leaf() != nb.leaf()) return false;
  if (na.leaf()) return true;
  if (na.split != nb.split || na.label != nb.label) return false;
  return nodes_equal(a, na.left, b, nb.left) && nodes_equal(a, na.right, b, nb.right);
}

}  // namespace

bool DiscourseTree::operator==(const DiscourseTree& o) const {
  if (n_ != o.n_) return false;
  if ((root_ < 0) != (o.root_ < 0)) return false;
  if (root_ < 0) return true;
  return nodes_equal(*this, root_, o, o.root_);
}

int DiscourseTree::Builder::leaf(int i, int j) {
  if (!(0 <= i && i < j))
    throw DataError("invalid leaf span (" + std::to_string(i) + "," + std::to_string(j) + ")");
  nodes_.push_back(Node{i, j, -1, -1, -1, {}});
  return static_cast<int>(nodes_.size()) - 1;
}

int DiscourseTree::Builder::internal(int left, int right, const RelationLabel& label) {
  const Node& l = nodes_.at(left);
  const Node& r = nodes_.at(right);
  if (l.j != r.i)
    throw DataError("children spans are not adjacent: (" + std::to_string(l.i) + "," +
                    std::to_string(l.j) + ") and (" + std::to_string(r.i) + "," +
                    std::to_string(r.j) + ")");
  Node nd;
  nd.i = l.i;
  nd.j = r.j;
  nd.split = l.j;
  nd.left = left;
  nd.right = right;
  nd.label = label;
  nodes_.push_back(nd);
  return static_cast<int>(nodes_.size()) - 1;
}

DiscourseTree DiscourseTree::Builder::finish(int root, int n) {
  const Node& r = nodes_.at(root);
  if (r.i != 0 || r.j != n)
    throw DataError("root span (" + std::to_string(r.i) + "," + std::to_string(r.j) +
                    ") does not cover (0," + std::to_string(n) + ")");
  DiscourseTree t;
  t.nodes_ = std::move(nodes_);
  t.root_ = root;
  t.n_ = n;
  return t;
}

NaryTree NaryTree::edu(int i, int j) {
  NaryTree t;
  t.i = i;
  t.j = j;
  return t;
}

NaryTree NaryTree::rel(const std::string& label, std::vector<NaryTree> children) {
  NaryTree t;
  t.label = RelationLabel::parse(label);
  t.children = std::move(children);
  return t;
}

namespace {

// Builds the binarized subtree for nary node children [first, last), chained
// right-branching under `chain_label`, returning the arena index.
int binarize_range(const NaryTree& node, std::size_t first,
                   DiscourseTree::Builder& b);

int binarize_node(const NaryTree& node, DiscourseTree::Builder& b) {
  if (node.leaf()) return b.leaf(node.i, node.j);
  if (node.children.size() == 1)
    throw DataError("tree node with a single child cannot be binarized");
  if (node.children.size() == 2) {
    int l = binarize_node(node.children[0], b);
    int r = binarize_node(node.children[1], b);
    return b.internal(l, r, node.label);
  }
  return binarize_range(node, 0, b);
}

int binarize_range(const NaryTree& node, std::size_t first,
                   DiscourseTree::Builder& b) {
  if (first + 2 == node.children.size()) {
    int l = binarize_node(node.children[first], b);
    int r = binarize_node(node.children[first + 1], b);
    // Introduced nodes keep the multi-nuclear relation with NN nuclearity.
    RelationLabel lab{node.label.relation, Nuclearity::NN};
    if (first == 0) lab = node.label;
    return b.internal(l, r, lab);
  }
  int l = binarize_node(node.children[first], b);
  int r = binarize_range(node, first + 1, b);
  RelationLabel lab{node.label.relation, Nuclearity::NN};
  if (first == 0) lab = node.label;
  return b.internal(l, r, lab);
}

}  // namespace

DiscourseTree binarize(const NaryTree& tree) {
  DiscourseTree::Builder b;
  int root = binarize_node(tree, b);
  const NaryTree* p = &tree;
  while (!p->leaf()) p = &p->children.back();
  return b.finish(root, p->j);
}

namespace {

void splits_edu_walk(const DiscourseTree& t, int idx, SplitSequence& out) {
  const auto& nd = t.node(idx);
  if (nd.leaf()) return;
  out.push_back(SplitDecision{nd.i, nd.j, nd.split, nd.label});
  splits_edu_walk(t, nd.left, out);
  splits_edu_walk(t, nd.right, out);
}

void splits_e2e_walk(const DiscourseTree& t, int idx, SplitSequence& out) {
  const auto& nd = t.node(idx);
  if (nd.leaf()) {
    out.push_back(SplitDecision{nd.i, nd.j, nd.j, std::nullopt});
    return;
  }
  out.push_back(SplitDecision{nd.i, nd.j, nd.split, nd.label});
  splits_e2e_walk(t, nd.left, out);
  splits_e2e_walk(t, nd.right, out);
}

}  // namespace

SplitSequence tree_to_splits_edu(const DiscourseTree& tree) {
  SplitSequence out;
  if (!tree.empty()) splits_edu_walk(tree, tree.root(), out);
  return out;
}

SplitSequence tree_to_splits_e2e(const DiscourseTree& tree) {
  SplitSequence out;
  if (!tree.empty()) splits_e2e_walk(tree, tree.root(), out);
  return out;
}

namespace {

struct SplitParser {
  const SplitSequence& seq;
  std::size_t pos = 0;
  bool strict;  // end-to-end form: every span, including leaves, is spelled out
  DiscourseTree::Builder builder;

  int parse_span(int i, int j) {
    if (strict) {
      if (pos >= seq.size())
        throw DataError("split sequence ended before span (" + std::to_string(i) +
                        "," + std::to_string(j) + ") was produced");
      const SplitDecision& d = seq[pos];
      if (d.i != i || d.j != j)
        throw DataError("expected a decision for span (" + std::to_string(i) + "," +
                        std::to_string(j) + ") but found " + to_string(d));
      ++pos;
      check_decision(d);
      if (d.terminal()) return builder.leaf(i, j);
      int left = parse_span(i, d.k);
      int right = parse_span(d.k, j);
      return builder.internal(left, right, *d.label);
    }
    // Gold-EDU form: a span with no matching next decision is a leaf.
    if (pos < seq.size() && seq[pos].i == i && seq[pos].j == j) {
      const SplitDecision& d = seq[pos];
      ++pos;
      check_decision(d);
      if (d.terminal())
        throw DataError("terminal decision " + to_string(d) +
                        " in a gold-EDU sequence");
      int left = parse_span(i, d.k);
      int right = parse_span(d.k, j);
      return builder.internal(left, right, *d.label);
    }
    return builder.leaf(i, j);
  }

  static void check_decision(const SplitDecision& d) {
    if (!(d.i < d.k && d.k <= d.j))
      throw DataError("split point outside parent span: " + to_string(d));
    if (d.terminal() && d.label)
      throw DataError("terminal decision carries a label: " + to_string(d));
    if (!d.terminal() && !d.label)
      throw DataError("internal decision is missing its label: " + to_string(d));
  }
};

}  // namespace

DiscourseTree splits_to_tree(const SplitSequence& seq, int n) {
  if (n <= 0) throw DataError("splits_to_tree: document length must be positive");
  if (seq.empty()) return DiscourseTree::single_edu(n);
  bool strict = std::any_of(seq.begin(), seq.end(),
                            [](const SplitDecision& d) { return d.terminal(); });
  SplitParser p{seq, 0, strict, {}};
  int root = p.parse_span(0, n);
  if (p.pos != seq.size())
    throw DataError("split sequence has " + std::to_string(seq.size() - p.pos) +
                    " trailing decision(s) starting at " + to_string(seq[p.pos]));
  return p.builder.finish(root, n);
}

namespace {

void collect_constituents(const DiscourseTree& t, int idx, std::vector<Constituent>& out) {
  const auto& nd = t.node(idx);
  if (nd.leaf()) return;
  out.push_back(Constituent{nd.i, nd.split, nd.j, nd.label});
  collect_constituents(t, nd.left, out);
  collect_constituents(t, nd.right, out);
}

}  // namespace

std::vector<Constituent> constituents(const DiscourseTree& tree) {
  std::vector<Constituent> out;
  if (!tree.empty()) collect_constituents(tree, tree.root(), out);
  return out;
}

namespace {

int remap_walk(const DiscourseTree& t, int idx, const std::function<int(int)>& map,
               DiscourseTree::Builder& b) {
  const auto& nd = t.node(idx);
  if (nd.leaf()) return b.leaf(map(nd.i), map(nd.j));
  int l = remap_walk(t, nd.left, map, b);
  int r = remap_walk(t, nd.right, map, b);
  return b.internal(l, r, nd.label);
}

}  // namespace

DiscourseTree remap_boundaries(const DiscourseTree& tree,
                               const std::function<int(int)>& map, int new_n) {
  if (tree.empty()) return tree;
  DiscourseTree::Builder b;
  int root = remap_walk(tree, tree.root(), map, b);
  return b.finish(root, new_n);
}

namespace {

// catalan[q] for q leaves; large values saturate in double, which is fine
// for sampling ratios.
std::vector<double> catalan_upto(int leaves) {
  std::vector<double> c(static_cast<std::size_t>(leaves) + 1, 0.0);
  if (leaves >= 1) c[1] = 1.0;
  for (int q = 2; q <= leaves; ++q) {
    double s = 0.0;
    for (int l = 1; l < q; ++l) s += c[l] * c[q - l];
    c[q] = s;
  }
  return c;
}

// Chooses a left-subtree leaf count with Catalan weights so the sampled
// shape is uniform over all binary trees with q leaves.
int sample_left_count(Rng& rng, int q, const std::vector<double>& cat) {
  double r = rng.next_double() * cat[q];
  int left = 1;
  for (; left < q - 1; ++left) {
    double w = cat[left] * cat[q - left];
    if (r < w) break;
    r -= w;
  }
  return left;
}

int random_subtree_range(Rng& rng, const std::vector<int>& bounds, int first, int last,
                         const std::vector<double>& cat, DiscourseTree::Builder& b) {
  int q = last - first;
  if (q == 1) return b.leaf(bounds[first], bounds[first + 1]);
  int left_leaves = sample_left_count(rng, q, cat);
  int l = random_subtree_range(rng, bounds, first, first + left_leaves, cat, b);
  int r = random_subtree_range(rng, bounds, first + left_leaves, last, cat, b);
  return b.internal(l, r, {});
}

int random_combine_range(Rng& rng, const std::vector<int>& roots, int first, int last,
                         const std::vector<double>& cat, DiscourseTree::Builder& b) {
  int q = last - first;
  if (q == 1) return roots[first];
  int left_leaves = sample_left_count(rng, q, cat);
  int l = random_combine_range(rng, roots, first, first + left_leaves, cat, b);
  int r = random_combine_range(rng, roots, first + left_leaves, last, cat, b);
  return b.internal(l, r, {});
}

}  // namespace

int random_subtree(Rng& rng, const std::vector<int>& bounds,
                   DiscourseTree::Builder& b) {
  if (bounds.size() < 2) throw DataError("random_subtree: need at least one leaf span");
  auto cat = catalan_upto(static_cast<int>(bounds.size()) - 1);
  return random_subtree_range(rng, bounds, 0, static_cast<int>(bounds.size()) - 1, cat, b);
}

int random_combine(Rng& rng, const std::vector<int>& roots,
                   DiscourseTree::Builder& b) {
  if (roots.empty()) throw DataError("random_combine: no subtrees");
  auto cat = catalan_upto(static_cast<int>(roots.size()));
  return random_combine_range(rng, roots, 0, static_cast<int>(roots.size()), cat, b);
}

DiscourseTree random_tree(Rng& rng, const std::vector<int>& bounds,
                          const LabelInventory& inventory) {
  if (bounds.empty() || bounds.front() != 0)
    throw DataError("random_tree: bounds must start at 0");
  DiscourseTree::Builder b;
  int root = random_subtree(rng, bounds, b);
  return randomize_labels(rng, b.finish(root, bounds.back()), inventory);
}

DiscourseTree randomize_labels(Rng& rng, const DiscourseTree& tree,
                               const LabelInventory& inventory) {
  if (tree.empty() || tree.edu_count() == 1) return tree;
  SplitSequence seq = tree_to_splits_e2e(tree);
  for (auto& d : seq)
    if (!d.terminal())
      d.label = inventory.at(static_cast<int>(rng.next_below(inventory.size())));
  return splits_to_tree(seq, tree.n());
}

}  // namespace rst
