#include "rst/model_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

namespace rst {

using nlohmann::json;

std::string to_string(Mode m) {
  return m == Mode::EndToEnd ? "end-to-end" : "gold-edu";
}

Mode mode_from_string(const std::string& s) {
  if (s == "end-to-end" || s == "e2e") return Mode::EndToEnd;
  if (s == "gold-edu" || s == "gold") return Mode::GoldEdu;
  throw DataError("unknown mode '" + s + "' (expected end-to-end or gold-edu)");
}

// ---------------------------------------------------------------------------
// Vocabularies

void Vocab::rebuild_index() {
  index_.clear();
  for (std::size_t i = 0; i < tokens.size(); ++i) index_[tokens[i]] = static_cast<int>(i);
}

Vocab Vocab::build(const std::vector<Document>& corpus) {
  std::set<std::string> seen;
  for (const auto& d : corpus)
    for (const auto& t : d.tokens) seen.insert(t);
  Vocab v;
  v.tokens = {"<unk>", "<sod>", "<eod>"};
  for (const auto& t : seen)
    if (t != "<unk>" && t != "<sod>" && t != "<eod>") v.tokens.push_back(t);
  v.rebuild_index();
  return v;
}

Vocab Vocab::from_tokens(std::vector<std::string> tokens) {
  Vocab v;
  v.tokens = std::move(tokens);
  if (v.tokens.size() < 3)
    throw DataError("vocabulary file is missing the reserved <unk>/<sod>/<eod> rows");
  v.rebuild_index();
  return v;
}

int Vocab::id(const std::string& tok) const {
  auto it = index_.find(tok);
  return it == index_.end() ? kUnk : it->second;
}

void CharVocab::rebuild_index() {
  index_.clear();
  for (std::size_t i = 3; i < chars.size(); ++i) index_[chars[i][0]] = static_cast<int>(i);
}

CharVocab CharVocab::build(const std::vector<Document>& corpus) {
  std::set<char> seen;
  for (const auto& d : corpus)
    for (const auto& t : d.tokens)
      for (char c : t) seen.insert(c);
  CharVocab v;
  v.chars = {"<unk>", "<sod>", "<eod>"};
  for (char c : seen) v.chars.emplace_back(1, c);
  v.rebuild_index();
  return v;
}

CharVocab CharVocab::from_chars(std::vector<std::string> chars) {
  CharVocab v;
  v.chars = std::move(chars);
  v.rebuild_index();
  return v;
}

int CharVocab::id(char c) const {
  auto it = index_.find(c);
  return it == index_.end() ? kUnk : it->second;
}

// ---------------------------------------------------------------------------
// Teacher sequences and coordinate mapping

SplitSequence teacher_sequence(const Document& doc, Mode mode) {
  DiscourseTree tree = doc.gold();
  if (mode == Mode::EndToEnd) return tree_to_splits_e2e(tree);
  if (!doc.edu_ends)
    throw DataError("document '" + doc.id + "' lacks edu_ends required by gold-EDU mode");
  const auto& ends = *doc.edu_ends;
  std::unordered_map<int, int> to_edu;
  to_edu[0] = 0;
  for (std::size_t e = 0; e < ends.size(); ++e) to_edu[ends[e]] = static_cast<int>(e) + 1;
  SplitSequence seq = tree_to_splits_edu(tree);
  for (auto& d : seq) {
    auto it_i = to_edu.find(d.i), it_j = to_edu.find(d.j), it_k = to_edu.find(d.k);
    if (it_i == to_edu.end() || it_j == to_edu.end() || it_k == to_edu.end())
      throw DataError("document '" + doc.id + "': gold split " + to_string(d) +
                      " is not aligned with edu_ends");
    d.i = it_i->second;
    d.j = it_j->second;
    d.k = it_k->second;
  }
  return seq;
}

DiscourseTree edu_tree_to_token(const DiscourseTree& tree, const std::vector<int>& edu_ends) {
  return remap_boundaries(
      tree,
      [&edu_ends](int b) { return b == 0 ? 0 : edu_ends.at(static_cast<std::size_t>(b) - 1); },
      edu_ends.back());
}

// ---------------------------------------------------------------------------
// Checkpoint container

namespace {

constexpr char kMagic[8] = {'R', 'S', 'T', 'S', 'P', 'L', 'I', 'T'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t x) {
  unsigned char b[4] = {static_cast<unsigned char>(x), static_cast<unsigned char>(x >> 8),
                        static_cast<unsigned char>(x >> 16),
                        static_cast<unsigned char>(x >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ostream& os, std::uint64_t x) {
  put_u32(os, static_cast<std::uint32_t>(x));
  put_u32(os, static_cast<std::uint32_t>(x >> 32));
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t lo = get_u32(is);
  std::uint64_t hi = get_u32(is);
  return lo | (hi << 32);
}

}  // namespace

void write_params(const ParamStore<float>& params, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write checkpoint '" + path + "'");
  os.write(kMagic, sizeof(kMagic));
  put_u32(os, kVersion);
  put_u64(os, params.count());
  for (std::size_t p = 0; p < params.count(); ++p) {
    const auto& prm = params.at(static_cast<int>(p));
    put_u32(os, static_cast<std::uint32_t>(prm.name.size()));
    os.write(prm.name.data(), static_cast<std::streamsize>(prm.name.size()));
    put_u32(os, static_cast<std::uint32_t>(prm.value.rank()));
    for (std::size_t d : prm.value.dims) put_u64(os, d);
    for (float x : prm.value.v) put_u32(os, std::bit_cast<std::uint32_t>(x));
  }
  if (!os) throw std::runtime_error("write failed for checkpoint '" + path + "'");
}

void read_params_into(ParamStore<float>& params, const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open checkpoint '" + path + "'");
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("'" + path + "' is not a parser checkpoint (bad magic)");
  std::uint32_t version = get_u32(is);
  if (version != kVersion)
    throw DataError("checkpoint '" + path + "' has unsupported format version " +
                    std::to_string(version));
  std::uint64_t entries = get_u64(is);
  for (std::uint64_t e = 0; e < entries; ++e) {
    std::uint32_t name_len = get_u32(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    std::uint32_t rank = get_u32(is);
    std::vector<std::size_t> dims(rank);
    std::size_t total = 1;
    for (auto& d : dims) {
      d = static_cast<std::size_t>(get_u64(is));
      total *= d;
    }
    int pid = params.find(name);
    if (pid < 0)
      throw DataError("checkpoint '" + path + "' has unexpected parameter '" + name + "'");
    auto& prm = params.at(pid);
    if (prm.value.dims != dims)
      throw DataError("checkpoint '" + path + "': shape mismatch for '" + name + "'");
    for (std::size_t k = 0; k < total; ++k)
      prm.value.v[k] = std::bit_cast<float>(get_u32(is));
    if (!is) throw DataError("checkpoint '" + path + "' is truncated");
  }
}

void save_checkpoint(const ParserBundle& bundle, const std::string& path) {
  write_params(bundle.model.params, path);

  std::ofstream vs(path + ".vocab.txt");
  if (!vs) throw std::runtime_error("cannot write '" + path + ".vocab.txt'");
  for (const auto& t : bundle.vocab.tokens) vs << t << "\n";

  const ModelConfig& c = bundle.model.cfg;
  json meta;
  meta["format_version"] = kVersion;
  meta["config"] = {{"word_dim", c.word_dim},
                    {"use_char_lstm", c.use_char_lstm},
                    {"char_dim", c.char_dim},
                    {"char_hidden", c.char_hidden},
                    {"hidden", c.hidden},
                    {"enc_layers", c.enc_layers},
                    {"dec_layers", c.dec_layers},
                    {"dec_hidden", c.dec_hidden},
                    {"span_dim", c.span_dim},
                    {"mlp_dim", c.mlp_dim},
                    {"leaky_slope", c.leaky_slope},
                    {"use_boundary_lstm", c.use_boundary_lstm},
                    {"decoder_zero_init", c.decoder_zero_init},
                    {"dropout", c.dropout},
                    {"word_vocab", c.word_vocab},
                    {"char_vocab", c.char_vocab},
                    {"label_count", c.label_count}};
  meta["labels"] = bundle.labels.to_strings();
  meta["chars"] = bundle.chars.chars;
  std::ofstream ms(path + ".meta.json");
  if (!ms) throw std::runtime_error("cannot write '" + path + ".meta.json'");
  ms << meta.dump(2) << "\n";
}

ParserBundle load_checkpoint(const std::string& path) {
  std::ifstream ms(path + ".meta.json");
  if (!ms) throw DataError("cannot open '" + path + ".meta.json'");
  json meta;
  try {
    ms >> meta;
  } catch (const json::exception& e) {
    throw DataError("invalid metadata in '" + path + ".meta.json': " + e.what());
  }

  ModelConfig c;
  const json& jc = meta.at("config");
  c.word_dim = jc.at("word_dim").get<int>();
  c.use_char_lstm = jc.at("use_char_lstm").get<bool>();
  c.char_dim = jc.at("char_dim").get<int>();
  c.char_hidden = jc.at("char_hidden").get<int>();
  c.hidden = jc.at("hidden").get<int>();
  c.enc_layers = jc.at("enc_layers").get<int>();
  c.dec_layers = jc.at("dec_layers").get<int>();
  c.dec_hidden = jc.at("dec_hidden").get<int>();
  c.span_dim = jc.at("span_dim").get<int>();
  c.mlp_dim = jc.at("mlp_dim").get<int>();
  c.leaky_slope = jc.at("leaky_slope").get<double>();
  c.use_boundary_lstm = jc.at("use_boundary_lstm").get<bool>();
  c.decoder_zero_init = jc.at("decoder_zero_init").get<bool>();
  c.dropout = jc.at("dropout").get<double>();
  c.word_vocab = jc.at("word_vocab").get<int>();
  c.char_vocab = jc.at("char_vocab").get<int>();
  c.label_count = jc.at("label_count").get<int>();

  ParserBundle bundle;
  Rng rng(0);  // values are overwritten by the checkpoint read below
  bundle.model = build_model<float>(c, rng);
  read_params_into(bundle.model.params, path);
  bind_param_ids(bundle.model);

  std::ifstream vs(path + ".vocab.txt");
  if (!vs) throw DataError("cannot open '" + path + ".vocab.txt'");
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(vs, line)) tokens.push_back(line);
  bundle.vocab = Vocab::from_tokens(std::move(tokens));
  if (bundle.vocab.size() != c.word_vocab)
    throw DataError("vocabulary size disagrees with checkpoint config");

  bundle.labels = LabelInventory::from_strings(meta.at("labels").get<std::vector<std::string>>());
  if (bundle.labels.size() != c.label_count)
    throw DataError("label inventory size disagrees with checkpoint config");
  bundle.chars = CharVocab::from_chars(meta.at("chars").get<std::vector<std::string>>());
  return bundle;
}

}  // namespace rst
