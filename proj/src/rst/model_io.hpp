#pragma once

#include <string>

#include "rst/model.hpp"

namespace rst {

// Everything needed to run the parser: parameters plus the vocabularies and
// label inventory they were trained with.
struct ParserBundle {
  Model<float> model;
  Vocab vocab;
  CharVocab chars;
  LabelInventory labels;
};

// Checkpoint container: "RSTSPLIT" magic, a format version and an entry
// count, then per entry the parameter name, rank, dims and row-major float32
// data, all little-endian. The vocabulary is stored alongside as
// <path>.vocab.txt (one token per line, row index = line index); the model
// configuration, label inventory and character set go to <path>.meta.json.
void save_checkpoint(const ParserBundle& bundle, const std::string& path);
ParserBundle load_checkpoint(const std::string& path);

// Raw parameter-store serialization (header + entries, no sidecars).
void write_params(const ParamStore<float>& params, const std::string& path);
void read_params_into(ParamStore<float>& params, const std::string& path);

}  // namespace rst
