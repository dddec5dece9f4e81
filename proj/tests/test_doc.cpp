#include <doctest.h>

#include <set>
#include <sstream>

#include "rst/doc.hpp"
#include "test_support.hpp"

using namespace rst;

namespace {

Document make_doc(int n, std::vector<int> sentence_ends,
                  std::optional<std::vector<int>> edu_ends = std::nullopt) {
  Document d;
  d.id = "t";
  d.tokens.assign(static_cast<std::size_t>(n), "w");
  d.sentence_ends = std::move(sentence_ends);
  d.edu_ends = std::move(edu_ends);
  return d;
}

}  // namespace

TEST_CASE("validate_document accepts well-formed documents") {
  CHECK_NOTHROW(validate_document(
      make_doc(44, {25, 44}, std::vector<int>{4, 17, 25, 33, 37, 44})));
  CHECK_NOTHROW(validate_document(make_doc(1, {1}, std::vector<int>{1})));
  CHECK_NOTHROW(validate_document(rsttest::example_document()));
}

TEST_CASE("validate_document reports the violated invariant") {
  CHECK_THROWS_WITH_AS(
      validate_document(make_doc(10, {10}, std::vector<int>{4, 3, 10})),
      doctest::Contains("not strictly increasing"), DataError);
  CHECK_THROWS_WITH_AS(validate_document(make_doc(10, {4})),
                       doctest::Contains("terminal boundary"), DataError);
  CHECK_THROWS_WITH_AS(validate_document(make_doc(10, {12})),
                       doctest::Contains("out of range"), DataError);
  // EDU spanning the sentence end at 5.
  CHECK_THROWS_WITH_AS(
      validate_document(make_doc(10, {5, 10}, std::vector<int>{4, 7, 10})),
      doctest::Contains("crosses the sentence boundary"), DataError);
  Document empty = make_doc(0, {});
  CHECK_THROWS_AS(validate_document(empty), DataError);
}

TEST_CASE("corpus records parse, serialize and reject malformed input") {
  Document doc = rsttest::example_document();
  std::string line = document_record(doc);
  Document back = parse_document_record(line, 1);
  CHECK(back.id == doc.id);
  CHECK(back.tokens == doc.tokens);
  CHECK(back.sentence_ends == doc.sentence_ends);
  CHECK(back.edu_ends == doc.edu_ends);
  REQUIRE(back.gold_tree.has_value());
  CHECK(back.gold() == doc.gold());
  CHECK(document_record(back) == line);

  CHECK_THROWS_WITH_AS(
      parse_document_record(R"({"id":"x","sentence_ends":[1]})", 7),
      doctest::Contains("line 7"), DataError);
  CHECK_THROWS_WITH_AS(parse_document_record("{not json", 3),
                       doctest::Contains("line 3"), DataError);
}

TEST_CASE("load_corpus returns documents in file order with line diagnostics") {
  Document a = rsttest::example_document();
  a.id = "a";
  Document b = make_doc(3, {3}, std::vector<int>{1, 3});
  b.id = "b";
  std::stringstream file;
  file << document_record(a) << "\n" << document_record(b) << "\n";
  auto docs = parse_corpus(file, "mem");
  REQUIRE(docs.size() == 2);
  CHECK(docs[0].id == "a");
  CHECK(docs[1].id == "b");
  CHECK(docs[0].n() == 44);
  CHECK(docs[0].edu_ends->size() == 6);

  std::stringstream bad;
  bad << document_record(a) << "\n" << R"({"id":"c","tokens":["x"]})" << "\n";
  CHECK_THROWS_WITH_AS(parse_corpus(bad, "mem"), doctest::Contains("line 2"),
                       DataError);
}

TEST_CASE("synthetic corpus is valid, deterministic and round-trips") {
  SynthConfig one{1, 10, 5, 0};
  auto docs = generate_synthetic_corpus(one);
  REQUIRE(docs.size() == 1);
  CHECK_NOTHROW(validate_document(docs[0]));

  auto again = generate_synthetic_corpus(one);
  CHECK(document_record(docs[0]) == document_record(again[0]));

  SynthConfig big{100, 200, 30, 7};
  auto corpus = generate_synthetic_corpus(big);
  REQUIRE(corpus.size() == 100);
  long long edus = 0;
  for (const auto& d : corpus) {
    CHECK_NOTHROW(validate_document(d));
    DiscourseTree t = d.gold();
    CHECK(t.edu_boundaries() == *d.edu_ends);
    CHECK(splits_to_tree(tree_to_splits_e2e(t), d.n()) == t);
    // Boundary arithmetic: spans cover j - i tokens.
    const auto& root = t.node(t.root());
    CHECK(root.j - root.i == d.n());
    edus += t.edu_count();
    // Sentences always form constituents in generated trees.
    std::set<std::pair<int, int>> spans;
    for (int v = 0; v < t.node_count(); ++v)
      spans.insert({t.node(v).i, t.node(v).j});
    int prev = 0;
    for (int s : d.sentence_ends) {
      CHECK(spans.count({prev, s}) == 1);
      prev = s;
    }
  }
  // Sanity on the EDU-count distribution (about n/3 boundaries per doc).
  CHECK(edus / 100 >= 5);
  CHECK(edus / 100 <= 20);
}

TEST_CASE("trees whose leaves contradict edu_ends are rejected") {
  Document d = make_doc(4, {4}, std::vector<int>{2, 4});
  // Gold-EDU-form tree splitting at 3 instead of the declared EDU end 2.
  d.gold_tree = SplitSequence{SplitDecision{0, 4, 3, RelationLabel::parse("Joint-NN")}};
  CHECK_THROWS_WITH_AS(validate_document(d), doctest::Contains("disagrees"), DataError);
  // End-to-end form with the same defect.
  d.gold_tree = SplitSequence{SplitDecision{0, 4, 3, RelationLabel::parse("Joint-NN")},
                              SplitDecision{0, 3, 3, std::nullopt},
                              SplitDecision{3, 4, 4, std::nullopt}};
  CHECK_THROWS_WITH_AS(validate_document(d), doctest::Contains("disagrees"), DataError);
}

TEST_CASE("synthetic generator rejects bad arguments") {
  CHECK_THROWS_AS(generate_synthetic_corpus({0, 10, 5, 0}), DataError);
  CHECK_THROWS_AS(generate_synthetic_corpus({1, 1, 5, 0}), DataError);
  CHECK_THROWS_AS(generate_synthetic_corpus({1, 10, 1, 0}), DataError);
}
