#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

// Subprocess checks of the command-line tool. RSTPARSE_BIN is injected by
// the build; every test works inside its own scratch directory.

namespace {

const char* kBin = RSTPARSE_BIN;

struct Scratch {
  std::string dir;
  explicit Scratch(const std::string& name) : dir("cli_scratch_" + name) {
    if (std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str()) != 0)
      throw std::runtime_error("cannot prepare scratch dir " + dir);
  }
  std::string path(const std::string& f) const { return dir + "/" + f; }
};

int run(const std::string& cmd, const std::string& capture = "/dev/null") {
  int rc = std::system((cmd + " > " + capture + " 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::string q(const std::string& s) { return "'" + s + "'"; }

// Tiny but non-degenerate training setup shared by the pipeline tests.
std::string small_dims() {
  return " --hidden 8 --word-dim 8 --enc-layers 1 --dec-layers 1 --mlp-dim 8"
         " --char-dim 4 --char-hidden 4 --epochs 2 --batch-tokens 60 --beam 3";
}

}  // namespace

TEST_CASE("gen is deterministic and its output validates") {
  Scratch s("gen");
  std::string a = s.path("a.jsonl"), b = s.path("b.jsonl");
  CHECK(run(std::string(kBin) + " gen --docs 6 --vocab 25 --mean-tokens 10 --seed 7 -o " + q(a)) == 0);
  CHECK(run(std::string(kBin) + " gen --docs 6 --vocab 25 --mean-tokens 10 --seed 7 -o " + q(b)) == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(!slurp(a).empty());
  CHECK(run(std::string(kBin) + " validate " + q(a)) == 0);
}

TEST_CASE("validate reports corrupt records with their line number, exit 2") {
  Scratch s("val");
  std::string good = s.path("good.jsonl"), bad = s.path("bad.jsonl");
  REQUIRE(run(std::string(kBin) + " gen --docs 2 --vocab 10 --mean-tokens 8 --seed 1 -o " + q(good)) == 0);
  {
    std::ofstream out(bad);
    out << slurp(good);
    out << "{\"id\":\"broken\",\"sentence_ends\":[2]}\n";
  }
  std::string log = s.path("out.txt");
  CHECK(run(std::string(kBin) + " validate " + q(bad), log) == 2);
  std::string text = slurp(log);
  CHECK(text.find("line 3") != std::string::npos);
  CHECK(text.find("tokens") != std::string::npos);
}

TEST_CASE("usage errors exit with code 1") {
  Scratch s("usage");
  CHECK(run(std::string(kBin) + " parse --beam nonsense") == 1);
  CHECK(run(std::string(kBin)) == 1);
  CHECK(run(std::string(kBin) + " --help") == 0);
}

TEST_CASE("convert round-trips between split lists and brackets") {
  Scratch s("conv");
  std::string orig = s.path("orig.jsonl"), br = s.path("brackets.jsonl"),
              back = s.path("back.jsonl");
  REQUIRE(run(std::string(kBin) + " gen --docs 5 --vocab 20 --mean-tokens 12 --seed 9 -o " + q(orig)) == 0);
  CHECK(run(std::string(kBin) + " convert " + q(orig) + " --to brackets -o " + q(br)) == 0);
  CHECK(slurp(br).find("(edu ") != std::string::npos);
  CHECK(run(std::string(kBin) + " convert " + q(br) + " --to splits -o " + q(back)) == 0);
  CHECK(slurp(back) == slurp(orig));
  // Converting to the same form is the identity.
  std::string same = s.path("same.jsonl");
  CHECK(run(std::string(kBin) + " convert " + q(br) + " --to brackets -o " + q(same)) == 0);
  CHECK(slurp(same) == slurp(br));
}

TEST_CASE("train, parse and eval run end to end; gold-vs-gold scores 100") {
  Scratch s("pipe");
  std::string corpus = s.path("train.jsonl"), ckpt = s.path("m.ckpt"),
              pred = s.path("pred.jsonl"), report = s.path("report.json");
  REQUIRE(run(std::string(kBin) + " gen --docs 8 --vocab 25 --mean-tokens 10 --seed 3 -o " + q(corpus)) == 0);
  {
    // A hand-written single-EDU document rides along.
    std::ofstream out(corpus, std::ios::app);
    out << R"({"id":"one-edu","tokens":["w1","w2","w3"],"sentence_ends":[3],)"
        << R"("edu_ends":[3],"tree":[{"span":[0,3],"k":3}]})" << "\n";
  }
  REQUIRE(run(std::string(kBin) + " train --train " + q(corpus) + " --dev " + q(corpus) +
              " --mode gold-edu --checkpoint " + q(ckpt) + small_dims()) == 0);
  CHECK(run(std::string(kBin) + " parse --checkpoint " + q(ckpt) + " " + q(corpus) +
            " --mode gold-edu --beam 3 -o " + q(pred)) == 0);
  CHECK(run(std::string(kBin) + " eval --gold " + q(corpus) + " --pred " + q(pred) +
            " -o " + q(report)) == 0);
  std::string rep = slurp(report);
  CHECK(rep.find("parseval") != std::string::npos);

  std::string table = s.path("table.txt");
  CHECK(run(std::string(kBin) + " eval --gold " + q(corpus) + " --pred " + q(corpus),
            table) == 0);
  std::string text = slurp(table);
  CHECK(text.find("100.00") != std::string::npos);
  CHECK(text.find("segmentation F1: 100.00") != std::string::npos);

  // Gold-EDU predictions keep the gold segmentation: single-EDU documents
  // come back with an empty split list but identical edu_ends.
  CHECK(run(std::string(kBin) + " validate " + q(pred)) == 0);
  std::istringstream pred_lines(slurp(pred));
  std::string line;
  bool saw_single = false;
  while (std::getline(pred_lines, line)) {
    if (line.find("\"one-edu\"") == std::string::npos) continue;
    saw_single = true;
    CHECK(line.find("\"tree\":[]") != std::string::npos);
    CHECK(line.find("\"edu_ends\":[3]") != std::string::npos);
  }
  CHECK(saw_single);
}

TEST_CASE("RSTPARSE_CONFIG supplies defaults and flags win over it") {
  Scratch s("cfg");
  std::string cfg = s.path("defaults.toml"), a = s.path("a.jsonl"), b = s.path("b.jsonl");
  {
    std::ofstream out(cfg);
    out << "[gen]\ndocs=4\nvocab=15\nmean-tokens=8\nseed=2\n";
  }
  std::string env = "RSTPARSE_CONFIG=" + cfg + " ";
  CHECK(run(env + kBin + " gen -o " + q(a)) == 0);
  std::ifstream count_a(a);
  std::string line;
  int lines_a = 0;
  while (std::getline(count_a, line)) ++lines_a;
  CHECK(lines_a == 4);
  CHECK(run(env + kBin + " gen --docs 2 -o " + q(b)) == 0);
  std::ifstream count_b(b);
  int lines_b = 0;
  while (std::getline(count_b, line)) ++lines_b;
  CHECK(lines_b == 2);
}

TEST_CASE("parse then eval reproduces the training-time dev metrics") {
  Scratch s("repro");
  std::string corpus = s.path("c.jsonl"), ckpt = s.path("m.ckpt"),
              pred = s.path("pred.jsonl"), train_out = s.path("train.txt"),
              eval_out = s.path("eval.txt");
  REQUIRE(run(std::string(kBin) + " gen --docs 10 --vocab 30 --mean-tokens 10 --seed 6 -o " + q(corpus)) == 0);
  REQUIRE(run(std::string(kBin) + " train --train " + q(corpus) + " --dev " + q(corpus) +
              " --mode gold-edu --checkpoint " + q(ckpt) + small_dims(), train_out) == 0);
  REQUIRE(run(std::string(kBin) + " parse --checkpoint " + q(ckpt) + " " + q(corpus) +
              " --mode gold-edu --beam 3 -o " + q(pred)) == 0);
  REQUIRE(run(std::string(kBin) + " eval --gold " + q(corpus) + " --pred " + q(pred),
              eval_out) == 0);
  // "best dev Full F1 <x>" from training must reappear as parseval Full.
  std::string t = slurp(train_out);
  auto pos = t.find("best dev Full F1 ");
  REQUIRE(pos != std::string::npos);
  std::string best = t.substr(pos + 17, t.find(' ', pos + 17) - pos - 17);
  std::string e = slurp(eval_out);
  auto line_pos = e.find("parseval");
  REQUIRE(line_pos != std::string::npos);
  std::string parseval_line = e.substr(line_pos, e.find('\n', line_pos) - line_pos);
  std::string full = parseval_line.substr(parseval_line.rfind(' ') + 1);
  CHECK(full == best);
}

TEST_CASE("eval names the missing document id, exit 2") {
  Scratch s("missing");
  std::string corpus = s.path("c.jsonl"), partial = s.path("p.jsonl");
  REQUIRE(run(std::string(kBin) + " gen --docs 3 --vocab 10 --mean-tokens 8 --seed 4 -o " + q(corpus)) == 0);
  {
    std::ifstream in(corpus);
    std::ofstream out(partial);
    std::string line;
    std::getline(in, line);
    out << line << "\n";  // keep only the first document
  }
  std::string log = s.path("log.txt");
  CHECK(run(std::string(kBin) + " eval --gold " + q(corpus) + " --pred " + q(partial),
            log) == 2);
  CHECK(slurp(log).find("synth-4-1") != std::string::npos);
}

TEST_CASE("end-to-end beam width 1 matches greedy output byte for byte") {
  Scratch s("beam1");
  std::string corpus = s.path("c.jsonl"), ckpt = s.path("m.ckpt"),
              greedy = s.path("greedy.jsonl"), beam = s.path("beam.jsonl");
  REQUIRE(run(std::string(kBin) + " gen --docs 6 --vocab 20 --mean-tokens 10 --seed 5 -o " + q(corpus)) == 0);
  REQUIRE(run(std::string(kBin) + " train --train " + q(corpus) + " --dev " + q(corpus) +
              " --mode end-to-end --checkpoint " + q(ckpt) + small_dims()) == 0);
  CHECK(run(std::string(kBin) + " parse --checkpoint " + q(ckpt) + " " + q(corpus) +
            " --mode end-to-end -o " + q(greedy)) == 0);
  CHECK(run(std::string(kBin) + " parse --checkpoint " + q(ckpt) + " " + q(corpus) +
            " --mode end-to-end --e2e-beam --beam 1 -o " + q(beam)) == 0);
  CHECK(slurp(greedy) == slurp(beam));
  // Predictions are valid documents (EDU invariants hold).
  CHECK(run(std::string(kBin) + " validate " + q(greedy)) == 0);

  // Worker parallelism preserves both results and output order.
  std::string par = s.path("par.jsonl");
  CHECK(run(std::string(kBin) + " parse --checkpoint " + q(ckpt) + " " + q(corpus) +
            " --mode end-to-end --workers 2 -o " + q(par)) == 0);
  CHECK(slurp(par) == slurp(greedy));
}
