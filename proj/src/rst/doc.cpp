#include "rst/doc.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "rst/rng.hpp"
#include "rst/textform.hpp"

namespace rst {

using nlohmann::json;

DiscourseTree Document::gold() const {
  if (!gold_tree)
    throw DataError("document '" + id + "' has no gold tree");
  DiscourseTree t = splits_to_tree(*gold_tree, n());
  if (edu_ends && t.edu_boundaries() != *edu_ends)
    throw DataError("document '" + id + "': gold tree EDUs disagree with edu_ends");
  return t;
}

namespace {

void check_boundary_list(const std::string& doc_id, const char* what,
                         const std::vector<int>& ends, int n) {
  if (ends.empty())
    throw DataError("document '" + doc_id + "': " + what + " is empty");
  int prev = 0;
  for (int b : ends) {
    if (b <= prev)
      throw DataError("document '" + doc_id + "': " + what +
                      " is not strictly increasing at " + std::to_string(b));
    if (b > n)
      throw DataError("document '" + doc_id + "': " + what + " index " +
                      std::to_string(b) + " is out of range (n=" + std::to_string(n) + ")");
    prev = b;
  }
  if (ends.back() != n)
    throw DataError("document '" + doc_id + "': " + what +
                    " is missing the terminal boundary " + std::to_string(n));
}

}  // namespace

void validate_document(const Document& doc) {
  int n = doc.n();
  if (n < 1) throw DataError("document '" + doc.id + "' has no tokens");
  check_boundary_list(doc.id, "sentence_ends", doc.sentence_ends, n);
  if (doc.edu_ends) {
    check_boundary_list(doc.id, "edu_ends", *doc.edu_ends, n);
    // EDUs never cross sentence boundaries: every sentence end must also be
    // an EDU end.
    for (int s : doc.sentence_ends) {
      if (!std::binary_search(doc.edu_ends->begin(), doc.edu_ends->end(), s))
        throw DataError("document '" + doc.id + "': an EDU crosses the sentence boundary at " +
                        std::to_string(s));
    }
  }
  if (doc.gold_tree) {
    DiscourseTree t = splits_to_tree(*doc.gold_tree, n);
    // Either serialized form pins the leaf spans; they must agree with the
    // declared segmentation.
    if (doc.edu_ends && t.edu_boundaries() != *doc.edu_ends)
      throw DataError("document '" + doc.id +
                      "': gold tree segmentation disagrees with edu_ends");
  }
}

namespace {

SplitSequence tree_field_to_splits(const json& field, int line_no) {
  SplitSequence seq;
  for (const auto& rec : field) {
    if (!rec.is_object() || !rec.contains("span") || !rec.contains("k"))
      throw DataError("line " + std::to_string(line_no) +
                      ": tree record must have \"span\" and \"k\"");
    const auto& span = rec.at("span");
    if (!span.is_array() || span.size() != 2)
      throw DataError("line " + std::to_string(line_no) + ": \"span\" must be [i, j]");
    SplitDecision d;
    d.i = span.at(0).get<int>();
    d.j = span.at(1).get<int>();
    d.k = rec.at("k").get<int>();
    if (rec.contains("label") && !rec.at("label").is_null())
      d.label = RelationLabel::parse(rec.at("label").get<std::string>());
    if (d.k == d.j && d.label)
      throw DataError("line " + std::to_string(line_no) + ": terminal decision " +
                      to_string(d) + " must not carry a label");
    if (d.k != d.j && !d.label)
      throw DataError("line " + std::to_string(line_no) + ": decision " + to_string(d) +
                      " is missing \"label\"");
    seq.push_back(std::move(d));
  }
  return seq;
}

json splits_to_tree_field(const SplitSequence& seq) {
  json arr = json::array();
  for (const auto& d : seq) {
    json rec;
    rec["span"] = {d.i, d.j};
    rec["k"] = d.k;
    if (d.label) rec["label"] = d.label->str();
    arr.push_back(std::move(rec));
  }
  return arr;
}

}  // namespace

Document parse_document_record(const std::string& line, int line_no) {
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::exception& e) {
    throw DataError("line " + std::to_string(line_no) + ": invalid JSON: " + e.what());
  }
  if (!rec.is_object())
    throw DataError("line " + std::to_string(line_no) + ": record is not an object");
  for (const char* field : {"id", "tokens", "sentence_ends"})
    if (!rec.contains(field))
      throw DataError("line " + std::to_string(line_no) + ": missing \"" +
                      std::string(field) + "\" field");
  Document doc;
  try {
    doc.id = rec.at("id").get<std::string>();
    doc.tokens = rec.at("tokens").get<std::vector<std::string>>();
    doc.sentence_ends = rec.at("sentence_ends").get<std::vector<int>>();
    if (rec.contains("edu_ends") && !rec.at("edu_ends").is_null())
      doc.edu_ends = rec.at("edu_ends").get<std::vector<int>>();
    if (rec.contains("tree") && !rec.at("tree").is_null()) {
      const auto& tf = rec.at("tree");
      if (tf.is_string())
        doc.gold_tree = tree_to_splits_e2e(parse_bracketed(tf.get<std::string>()));
      else
        doc.gold_tree = tree_field_to_splits(tf, line_no);
    }
  } catch (const json::exception& e) {
    throw DataError("line " + std::to_string(line_no) + ": " + e.what());
  }
  try {
    validate_document(doc);
  } catch (const DataError& e) {
    throw DataError("line " + std::to_string(line_no) + ": " + e.what());
  }
  return doc;
}

std::string document_record(const Document& doc) {
  json rec;
  rec["id"] = doc.id;
  rec["tokens"] = doc.tokens;
  rec["sentence_ends"] = doc.sentence_ends;
  if (doc.edu_ends) rec["edu_ends"] = *doc.edu_ends;
  if (doc.gold_tree) rec["tree"] = splits_to_tree_field(*doc.gold_tree);
  return rec.dump();
}

std::vector<Document> parse_corpus(std::istream& in, const std::string& what) {
  std::vector<Document> docs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      docs.push_back(parse_document_record(line, line_no));
    } catch (const DataError& e) {
      throw DataError(what + ": " + e.what());
    }
  }
  return docs;
}

std::vector<Document> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open corpus file '" + path + "'");
  return parse_corpus(in, path);
}

void save_corpus(const std::vector<Document>& docs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write corpus file '" + path + "'");
  for (const auto& d : docs) out << document_record(d) << "\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

std::vector<Document> generate_synthetic_corpus(const SynthConfig& cfg) {
  if (cfg.num_docs < 1 || cfg.vocab_size < 2 || cfg.mean_tokens < 2)
    throw DataError("generate_synthetic_corpus: need num_docs >= 1, vocab_size >= 2, "
                    "mean_tokens >= 2");
  LabelInventory inventory = LabelInventory::full();
  std::vector<Document> docs;
  docs.reserve(cfg.num_docs);
  for (int d = 0; d < cfg.num_docs; ++d) {
    Rng rng(Rng::mix(cfg.seed, static_cast<std::uint64_t>(d)));
    Document doc;
    {
      std::ostringstream os;
      os << "synth-" << cfg.seed << "-" << d;
      doc.id = os.str();
    }
    int n = rng.next_int(std::max(2, cfg.mean_tokens / 2),
                         std::max(2, cfg.mean_tokens + cfg.mean_tokens / 2));
    doc.tokens.reserve(n);
    for (int t = 0; t < n; ++t) {
      std::ostringstream os;
      os << "w" << rng.next_below(static_cast<std::uint64_t>(cfg.vocab_size));
      doc.tokens.push_back(os.str());
    }
    // Sentences average roughly ten tokens; EDUs roughly three.
    std::vector<int> sentence_ends, edu_ends;
    for (int b = 1; b < n; ++b) {
      bool sent = rng.next_bernoulli(0.1);
      bool edu = sent || rng.next_bernoulli(0.3);
      if (sent) sentence_ends.push_back(b);
      if (edu) edu_ends.push_back(b);
    }
    sentence_ends.push_back(n);
    edu_ends.push_back(n);
    doc.sentence_ends = sentence_ends;
    doc.edu_ends = edu_ends;

    // Gold tree: random shape over the sentences, each sentence a random
    // shape over its EDUs, so sentences always form constituents.
    DiscourseTree::Builder b;
    std::vector<int> sentence_roots;
    int prev_sent = 0;
    std::size_t e = 0;
    for (int s : sentence_ends) {
      std::vector<int> bounds{prev_sent};
      while (e < edu_ends.size() && edu_ends[e] <= s) bounds.push_back(edu_ends[e++]);
      sentence_roots.push_back(random_subtree(rng, bounds, b));
      prev_sent = s;
    }
    int root = random_combine(rng, sentence_roots, b);
    DiscourseTree tree = randomize_labels(rng, b.finish(root, n), inventory);
    doc.gold_tree = tree_to_splits_e2e(tree);
    validate_document(doc);
    docs.push_back(std::move(doc));
  }
  return docs;
}

}  // namespace rst
