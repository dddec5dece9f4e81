#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rst/tree.hpp"

namespace rst {

// A tokenized document. Boundary index k in [0, n] sits between tokens k and
// k+1 (1-based); span (i, j) covers tokens i+1 .. j. The <sod>/<eod> sentinel
// markers are NOT stored here; the encoder adds them internally.
struct Document {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<int> sentence_ends;               // ascending, last element == n
  std::optional<std::vector<int>> edu_ends;     // ascending, last element == n
  std::optional<SplitSequence> gold_tree;

  int n() const { return static_cast<int>(tokens.size()); }
  bool has_gold_tree() const { return gold_tree.has_value(); }
  DiscourseTree gold() const;  // throws DataError when absent/inconsistent
};

// Checks every Document invariant and throws DataError describing the first
// violated one: non-monotone boundaries, out-of-range index, EDU crossing a
// sentence boundary, missing terminal boundary n, inconsistent gold tree.
void validate_document(const Document& doc);

// Line-delimited corpus format. One JSON object per line:
//   {"id": ..., "tokens": [...], "sentence_ends": [...],
//    "edu_ends": [...]?, "tree": [{"span":[i,j],"k":k,"label":"Rel-Nuc"}...]?}
// Terminal decisions (k == j) omit "label". "tree" may also hold the
// bracketed text form produced by the converter.
std::vector<Document> load_corpus(const std::string& path);
std::vector<Document> parse_corpus(std::istream& in, const std::string& what);

Document parse_document_record(const std::string& line, int line_no);
std::string document_record(const Document& doc);
void save_corpus(const std::vector<Document>& docs, const std::string& path);

struct SynthConfig {
  int num_docs = 1;
  int vocab_size = 100;
  int mean_tokens = 20;
  std::uint64_t seed = 0;
};

// Random corpus standing in for a licensed treebank: random tokens, random
// sentence segmentation, random EDU boundaries nested inside sentences, and
// a gold tree sampled uniformly over the binary trees in which every
// sentence forms a constituent. Labels drawn uniformly from the full 18x3
// inventory. Deterministic given the seed.
std::vector<Document> generate_synthetic_corpus(const SynthConfig& cfg);

}  // namespace rst
