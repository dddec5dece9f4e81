#include "rst/label.hpp"

#include <algorithm>

namespace rst {

const char* to_string(Nuclearity n) {
  switch (n) {
    case Nuclearity::NN: return "NN";
    case Nuclearity::NS: return "NS";
    case Nuclearity::SN: return "SN";
  }
  return "NN";
}

Nuclearity nuclearity_from_string(const std::string& s) {
  if (s == "NN") return Nuclearity::NN;
  if (s == "NS") return Nuclearity::NS;
  if (s == "SN") return Nuclearity::SN;
  throw DataError("unknown nuclearity '" + s + "' (expected NN, NS or SN)");
}

bool is_known_relation(const std::string& name) {
  for (const char* r : kRelationNames)
    if (name == r) return true;
  return false;
}

RelationLabel RelationLabel::parse(const std::string& s) {
  auto dash = s.rfind('-');
  if (dash == std::string::npos || dash == 0 || dash + 1 >= s.size())
    throw DataError("malformed relation label '" + s + "' (expected Relation-Nuc)");
  RelationLabel l;
  l.relation = s.substr(0, dash);
  l.nuclearity = nuclearity_from_string(s.substr(dash + 1));
  if (!is_known_relation(l.relation))
    throw DataError("unknown relation '" + l.relation + "'");
  return l;
}

LabelInventory LabelInventory::full() {
  LabelInventory inv;
  for (const char* r : kRelationNames)
    for (Nuclearity n : {Nuclearity::NN, Nuclearity::NS, Nuclearity::SN})
      inv.add(RelationLabel{r, n});
  return inv;
}

LabelInventory LabelInventory::from_strings(const std::vector<std::string>& labels) {
  LabelInventory inv;
  for (const auto& s : labels) inv.add(RelationLabel::parse(s));
  return inv;
}

LabelInventory LabelInventory::from_observed(std::vector<RelationLabel> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  LabelInventory inv;
  for (const auto& l : labels) inv.add(l);
  return inv;
}

int LabelInventory::add(const RelationLabel& l) {
  auto key = l.str();
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  int id = static_cast<int>(labels_.size());
  labels_.push_back(l);
  index_.emplace(std::move(key), id);
  return id;
}

std::optional<int> LabelInventory::id_of(const RelationLabel& l) const {
  auto it = index_.find(l.str());
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int LabelInventory::require_id(const RelationLabel& l) const {
  auto id = id_of(l);
  if (!id)
    throw DataError("label '" + l.str() + "' is not in the model's label inventory");
  return *id;
}

std::vector<std::string> LabelInventory::to_strings() const {
  std::vector<std::string> out;
  out.reserve(labels_.size());
  for (const auto& l : labels_) out.push_back(l.str());
  return out;
}

}  // namespace rst
