// Copyright 2026 The lmtag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "lmtag/langmodel.h"
#include "lmtag/persist.h"

using namespace lmtag;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

Outcome run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && '" + std::string(LMTAG_CLI_PATH) + "' " +
                          args + " > '" + out.string() + "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = read_file(out.string());
  o.err = read_file(err.string());
  return o;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("lmtag_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kTinyExperiment =
    "[data]\n"
    "train = train.conll\n"
    "dev = dev.conll\n"
    "test = test.conll\n"
    "[tagger]\n"
    "char_dim = 3\n"
    "char_filters = 4\n"
    "word_dim = 4\n"
    "h1 = 4\n"
    "h2 = 3\n"
    "[train]\n"
    "alpha = 0.01\n"
    "batch_size = 8\n"
    "patience = 0\n"
    "anneal_epochs = 1\n"
    "max_epochs = 2\n"
    "[run]\n"
    "seeds = 1 2\n";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("exit codes follow the error kind") {
  const fs::path dir = scratch("codes");
  CHECK(run("", dir).code == 1);
  CHECK(run("--help", dir).code == 0);
  CHECK(run("lm-eval", dir).code == 1);
  CHECK(run("synth --kind nothing", dir).code == 1);
  CHECK(run("lm-eval --model missing.lmtc --corpus missing.txt", dir).code == 2);
  write_file((dir / "junk.lmtc").string(), "not a container");
  const Outcome bad = run("lm-eval --model junk.lmtc --corpus junk.lmtc", dir);
  CHECK(bad.code == 2);
  CHECK(bad.err.find("data error") != std::string::npos);
  write_file((dir / "bad.ini").string(), "[tagger]\nh1 = -3\n[data]\ntrain = x\n");
  CHECK(run("tag-train --config bad.ini", dir).code == 1);
  write_file((dir / "nan.ini").string(), "[data]\ntrain = t.conll\n[train]\nalpha = nan\n");
  write_file((dir / "t.conll").string(), "a S-PER\nb O\n\n");
  CHECK(run("tag-train --config nan.ini --out o", dir).code == 3);
  fs::remove_all(dir);
}

TEST_CASE("lm-eval of a zero-weight model prints the vocabulary size") {
  const fs::path dir = scratch("lmeval");
  LmConfig c;
  c.embed_dim = 3;
  c.hidden = 4;
  LanguageModel m(c, Vocabulary(std::vector<std::string>{"a", "b", "c", "d", "e", "f"}),
                  Vocabulary(), 1);
  for (Parameter* p : m.params().all()) p->value.fill(0.0);
  m.save((dir / "zero.lmtc").string());
  write_file((dir / "corpus.txt").string(), "a b c\nf e\nunseen words here\n");
  const Outcome o = run("lm-eval --model zero.lmtc --corpus corpus.txt", dir);
  CHECK(o.code == 0);
  CHECK(o.out == "10.0000\n");
  fs::remove_all(dir);
}

TEST_CASE("synth, tag-train, tag-eval and tag") {
  const fs::path dir = scratch("pipeline");
  REQUIRE(run("synth --out . --train 30 --dev 10 --test 10 --unlabeled 5 --seed 3", dir).code == 0);
  for (const char* f : {"train.conll", "dev.conll", "test.conll", "unlabeled.txt"}) {
    CHECK(fs::exists(dir / f));
  }
  write_file((dir / "exp.ini").string(), kTinyExperiment);
  const Outcome a = run("tag-train --config exp.ini --out a", dir);
  REQUIRE(a.code == 0);
  const Outcome b = run("tag-train --config exp.ini --out b", dir);
  REQUIRE(b.code == 0);
  CHECK(a.out == b.out);
  for (const char* f : {"model_seed1.lmtc", "model_seed2.lmtc", "run_log.jsonl", "results.jsonl"}) {
    CHECK(read_file((dir / "a" / f).string()) == read_file((dir / "b" / f).string()));
  }
  CHECK(a.out.find("none") != std::string::npos);

  const Outcome ev = run("tag-eval --model a/model_seed1.lmtc --data test.conll --output pred.txt", dir);
  CHECK(ev.code == 0);
  std::istringstream pred(read_file((dir / "pred.txt").string()));
  std::string line;
  int rows = 0;
  while (std::getline(pred, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::string w;
    int n = 0;
    while (fields >> w) ++n;
    CHECK(n == 3);
    ++rows;
  }
  CHECK(rows > 0);

  write_file((dir / "text.txt").string(), "Jordan saw the sea .\n\nthe a\n");
  const Outcome t1 = run("tag --model a/model_seed1.lmtc --input text.txt", dir);
  const Outcome t2 = run("tag --model a/model_seed1.lmtc --input text.txt", dir);
  REQUIRE(t1.code == 0);
  CHECK(t1.out == t2.out);
  std::istringstream tagged(t1.out);
  int tokens = 0;
  while (std::getline(tagged, line)) {
    if (line.empty()) continue;
    const auto tabs = std::count(line.begin(), line.end(), '\t');
    CHECK(tabs == 3);
    ++tokens;
  }
  CHECK(tokens == 7);
  CHECK(t1.out.rfind("1\tJordan\tjordan\t", 0) == 0);

  const Outcome lmless = run("tag --model a/model_seed1.lmtc --input missing.txt", dir);
  CHECK(lmless.code == 2);
  fs::remove_all(dir);
}

}  // TEST_SUITE
