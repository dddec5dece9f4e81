#include "rst/textform.hpp"

#include <cctype>
#include <sstream>

namespace rst {

namespace {

void write_node(const DiscourseTree& t, int idx, std::ostringstream& os) {
  const auto& nd = t.node(idx);
  if (nd.leaf()) {
    os << "(edu " << nd.i << " " << nd.j << ")";
    return;
  }
  os << "(" << nd.label.str() << " ";
  write_node(t, nd.left, os);
  os << " ";
  write_node(t, nd.right, os);
  os << ")";
}

struct BracketParser {
  const std::string& s;
  std::size_t pos = 0;
  DiscourseTree::Builder builder;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  std::string atom() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) &&
           s[pos] != '(' && s[pos] != ')')
      ++pos;
    if (start == pos) fail("expected an atom");
    return s.substr(start, pos - start);
  }

  void expect(char c) {
    skip_ws();
    if (pos >= s.size() || s[pos] != c) fail(std::string("expected '") + c + "'");
    ++pos;
  }

  [[noreturn]] void fail(const std::string& msg) {
    throw DataError("bracketed tree, column " + std::to_string(pos + 1) + ": " + msg);
  }

  int parse_int_atom() {
    std::string a = atom();
    try {
      std::size_t used = 0;
      int v = std::stoi(a, &used);
      if (used != a.size()) throw std::invalid_argument(a);
      return v;
    } catch (const std::exception&) {
      fail("expected an integer, found '" + a + "'");
    }
  }

  int parse_node() {
    expect('(');
    std::string head = atom();
    if (head == "edu") {
      int i = parse_int_atom();
      int j = parse_int_atom();
      expect(')');
      return builder.leaf(i, j);
    }
    RelationLabel label = RelationLabel::parse(head);
    int left = parse_node();
    int right = parse_node();
    expect(')');
    return builder.internal(left, right, label);
  }
};

}  // namespace

std::string bracketed(const DiscourseTree& tree) {
  if (tree.empty()) return "()";
  std::ostringstream os;
  write_node(tree, tree.root(), os);
  return os.str();
}

DiscourseTree parse_bracketed(const std::string& text) {
  BracketParser p{text, 0, {}};
  int root = p.parse_node();
  p.skip_ws();
  if (p.pos != text.size()) p.fail("trailing text after tree");
  // The root's right edge fixes n; finish() validates the (0, n) cover.
  return p.builder.finish(root, p.builder.node(root).j);
}

}  // namespace rst
