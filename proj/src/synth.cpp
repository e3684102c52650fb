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

#include "lmtag/synth.h"

#include <algorithm>
#include <cmath>
#include <set>
#include <span>

#include "lmtag/errors.h"

namespace lmtag {
namespace {

int draw(std::span<const double> probs, RngStream& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

double entropy(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

// wa, wb, ..., wz, wba, ...
std::string symbol_name(int i) {
  std::string s;
  do {
    s.insert(s.begin(), static_cast<char>('a' + i % 26));
    i /= 26;
  } while (i > 0);
  return "w" + s;
}

}  // namespace

MarkovChain make_markov_chain(int vocab, int fanout, double end_prob, RngStream& rng) {
  if (vocab < 2 || fanout < 1 || fanout > vocab || !(end_prob > 0.0 && end_prob < 1.0)) {
    throw UsageError("invalid Markov chain shape");
  }
  MarkovChain c;
  for (int i = 0; i < vocab; ++i) c.symbols.push_back(symbol_name(i));
  c.start.assign(vocab, 1.0 / vocab);
  for (int i = 0; i < vocab; ++i) {
    std::vector<double> row(vocab + 1, 0.0);
    std::vector<int> all(vocab);
    for (int j = 0; j < vocab; ++j) all[j] = j;
    double total = 0.0;
    for (int k = 0; k < fanout; ++k) {
      const auto pick = k + static_cast<int>(rng.below(vocab - k));
      std::swap(all[k], all[pick]);
      const double w = rng.uniform(0.5, 1.5);
      row[all[k]] = w;
      total += w;
    }
    for (int j = 0; j < vocab; ++j) row[j] *= (1.0 - end_prob) / total;
    row[vocab] = end_prob;
    c.next.push_back(std::move(row));
  }
  return c;
}

std::vector<std::vector<std::string>> sample_markov(const MarkovChain& chain, int count,
                                                    RngStream& rng) {
  std::vector<std::vector<std::string>> out;
  out.reserve(count);
  for (int s = 0; s < count; ++s) {
    std::vector<std::string> sentence;
    int state = draw(chain.start, rng);
    while (state < chain.size()) {
      sentence.push_back(chain.symbols[state]);
      state = draw(chain.next[state], rng);
    }
    out.push_back(std::move(sentence));
  }
  return out;
}

double ChainEntropy::perplexity() const { return std::exp(rate); }

ChainEntropy chain_entropy(const MarkovChain& chain) {
  const int n = chain.size();
  // v = start + v Q, iterated to its fixed point.
  std::vector<double> v = chain.start;
  for (int iter = 0; iter < 100000; ++iter) {
    std::vector<double> nv = chain.start;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) nv[j] += v[i] * chain.next[i][j];
    }
    double delta = 0.0;
    for (int j = 0; j < n; ++j) delta = std::max(delta, std::fabs(nv[j] - v[j]));
    v = std::move(nv);
    if (delta < 1e-15) break;
  }
  ChainEntropy e;
  e.nats_per_sentence = entropy(chain.start);
  e.predictions_per_sentence = 1.0;
  for (int i = 0; i < n; ++i) {
    e.nats_per_sentence += v[i] * entropy(chain.next[i]);
    e.predictions_per_sentence += v[i];
  }
  e.rate = e.nats_per_sentence / e.predictions_per_sentence;
  return e;
}

namespace {

const std::vector<std::string>& function_words() {
  static const std::vector<std::string> words{
      "the", "a", "of", "and", "to", "in", "on", "for", "with", "by",
      "at", "from", "as", "is", "was", "that", "it", "this", "or", "but"};
  return words;
}

const std::vector<std::string>& names() {
  static const std::vector<std::string> words{
      "Jordan", "Morgan", "Taylor", "Casey", "Riley", "Avery",
      "Quinn", "Parker", "Sydney", "Florence", "Victoria", "Austin"};
  return words;
}

std::string random_word(RngStream& rng) {
  static const std::string consonants = "bcdfghjklmnprstvwz";
  static const std::string vowels = "aeiou";
  const int syllables = 2 + static_cast<int>(rng.below(2));
  std::string w;
  for (int s = 0; s < syllables; ++s) {
    w += consonants[rng.below(consonants.size())];
    w += vowels[rng.below(vowels.size())];
  }
  if (rng.below(2)) w += consonants[rng.below(consonants.size())];
  return w;
}

std::string capitalize(std::string w) {
  if (!w.empty() && w[0] >= 'a' && w[0] <= 'z') w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

struct Lexicon {
  std::vector<std::string> content[2];
};

Lexicon make_lexicon(const SynthTaskConfig& config, RngStream& rng) {
  std::set<std::string> used(function_words().begin(), function_words().end());
  for (const auto& n : names()) used.insert(normalize(n));
  Lexicon lex;
  for (auto& list : lex.content) {
    while (static_cast<int>(list.size()) < config.content_words) {
      std::string w = random_word(rng);
      if (used.insert(w).second) list.push_back(w);
    }
  }
  return lex;
}

Sentence make_sentence_from(const SynthTaskConfig& config, const Lexicon& lex, RngStream& rng) {
  const int grammar = static_cast<int>(rng.below(2));
  const int n_content =
      config.min_content + static_cast<int>(rng.below(config.max_content - config.min_content + 1));
  const int n_function = config.min_function + static_cast<int>(rng.below(
                                                   config.max_function - config.min_function + 1));
  // Slots: 'c' content, 'f' function; the entity goes in afterwards.
  std::vector<char> slots(n_content, 'c');
  slots.insert(slots.end(), n_function, 'f');
  for (std::size_t i = slots.size(); i > 1; --i) std::swap(slots[i - 1], slots[rng.below(i)]);

  std::vector<std::string> tokens;
  std::vector<std::string> tags;
  for (char s : slots) {
    if (s == 'f') {
      tokens.push_back(function_words()[rng.below(function_words().size())]);
      tags.push_back("O");
    } else {
      const auto& list = lex.content[grammar];
      std::string w = list[rng.below(list.size())];
      if (rng.uniform() < config.misc_prob) {
        tokens.push_back(capitalize(w));
        tags.push_back("S-MISC");
      } else {
        tokens.push_back(w);
        tags.push_back("O");
      }
    }
  }
  const std::string type = grammar == 0 ? "PER" : "LOC";
  std::vector<std::string> entity{names()[rng.below(names().size())]};
  if (rng.uniform() < config.two_token_entity) {
    entity.push_back(names()[rng.below(names().size())]);
  }
  const auto at = static_cast<std::ptrdiff_t>(rng.below(tokens.size() + 1));
  std::vector<std::string> entity_tags;
  if (entity.size() == 1) {
    entity_tags = {"S-" + type};
  } else {
    entity_tags = {"B-" + type, "E-" + type};
  }
  tokens.insert(tokens.begin() + at, entity.begin(), entity.end());
  tags.insert(tags.begin() + at, entity_tags.begin(), entity_tags.end());
  tokens.push_back(".");
  tags.push_back("O");
  return make_sentence(tokens, tags);
}

}  // namespace

SynthTask make_synth_task(const SynthTaskConfig& config, int train, int dev, int test,
                          int unlabeled, std::uint64_t seed) {
  if (config.min_content < 0 || config.max_content < config.min_content ||
      config.min_function < 0 || config.max_function < config.min_function ||
      config.content_words < 1) {
    throw UsageError("invalid synthetic task configuration");
  }
  RngStream root(seed);
  RngStream lex_rng = root.split(1);
  const Lexicon lex = make_lexicon(config, lex_rng);
  SynthTask task;
  auto fill = [&](std::vector<Sentence>& out, int count, std::uint64_t stream) {
    RngStream rng = root.split(stream);
    for (int i = 0; i < count; ++i) out.push_back(make_sentence_from(config, lex, rng));
  };
  fill(task.train, train, 2);
  fill(task.dev, dev, 3);
  fill(task.test, test, 4);
  RngStream rng = root.split(5);
  for (int i = 0; i < unlabeled; ++i) {
    const Sentence s = make_sentence_from(config, lex, rng);
    std::vector<std::string> words;
    for (const auto& t : s.tokens) words.push_back(t.raw);
    task.unlabeled.push_back(std::move(words));
  }
  return task;
}

}  // namespace lmtag
