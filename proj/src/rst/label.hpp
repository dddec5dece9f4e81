#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace rst {

// Raised for malformed input data (corpus records, label strings, documents
// that violate their invariants). The CLI maps it to exit code 2.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Nuclearity { NN, NS, SN };

const char* to_string(Nuclearity n);
Nuclearity nuclearity_from_string(const std::string& s);

// The 18 coarse-grained relation names used for discourse trees.
inline constexpr std::array<const char*, 18> kRelationNames = {
    "Elaboration",  "Attribution", "Joint",       "Same-Unit",
    "Contrast",     "Background",  "Explanation", "Cause",
    "Temporal",     "Condition",   "Comparison",  "Manner-Means",
    "Enablement",   "Evaluation",  "Summary",     "Topic-Comment",
    "Topic-Change", "TextualOrganization"};

bool is_known_relation(const std::string& name);

// A coherence relation with the nuclearity of the two children attached,
// e.g. "Elaboration-NS". Relation names may themselves contain dashes
// (Same-Unit, Topic-Comment, ...); the nuclearity suffix is always the part
// after the last dash.
struct RelationLabel {
  std::string relation = "Elaboration";
  Nuclearity nuclearity = Nuclearity::NN;

  std::string str() const { return relation + "-" + to_string(nuclearity); }
  static RelationLabel parse(const std::string& s);

  bool operator==(const RelationLabel& o) const {
    return relation == o.relation && nuclearity == o.nuclearity;
  }
  bool operator!=(const RelationLabel& o) const { return !(*this == o); }
  bool operator<(const RelationLabel& o) const {
    return relation != o.relation ? relation < o.relation
                                  : nuclearity < o.nuclearity;
  }
};

// Maps between RelationLabel values and the dense ids [0, L) used by the
// label classifier. L is whatever inventory the parser was trained with:
// either the full 18x3 grid or the set observed in a training corpus.
class LabelInventory {
 public:
  LabelInventory() = default;

  static LabelInventory full();
  static LabelInventory from_strings(const std::vector<std::string>& labels);

  // Sorted, deduplicated inventory from observed labels.
  static LabelInventory from_observed(std::vector<RelationLabel> labels);

  int add(const RelationLabel& l);
  std::optional<int> id_of(const RelationLabel& l) const;
  int require_id(const RelationLabel& l) const;
  const RelationLabel& at(int id) const { return labels_.at(id); }
  int size() const { return static_cast<int>(labels_.size()); }
  bool empty() const { return labels_.empty(); }

  std::vector<std::string> to_strings() const;

 private:
  std::vector<RelationLabel> labels_;
  std::unordered_map<std::string, int> index_;
};

}  // namespace rst
