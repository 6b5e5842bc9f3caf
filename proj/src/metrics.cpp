// Copyright 2026 The ReasonDrive Authors.
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

#include "reasondrive/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "reasondrive/tag_codec.hpp"

namespace reasondrive {

using json = nlohmann::json;

namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::unordered_map<std::string, int>;

void RequireNonEmpty(std::span<const EvalPair> pairs) {
  if (pairs.empty()) throw Error(ErrorCode::kEmptyEvalSet, "no pairs to score");
}

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)); }

std::string NgramKey(const Tokens& tokens, std::size_t start, int n) {
  std::string key = tokens[start];
  for (int k = 1; k < n; ++k) {
    key += '\x1f';
    key += tokens[start + k];
  }
  return key;
}

NgramCounts CountNgrams(const Tokens& tokens, int n) {
  NgramCounts counts;
  if (tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[NgramKey(tokens, i, n)];
  }
  return counts;
}

const std::unordered_set<std::string>& Stopwords() {
  static const std::unordered_set<std::string> kWords = {
      "a",    "an",   "the",   "of",    "to",   "in",   "on",   "at",
      "for",  "with", "by",    "from",  "and",  "or",   "is",   "are",
      "was",  "were", "be",    "been",  "being", "it",  "its",  "this",
      "that", "these", "those", "there", "as",  "into", "than", "then",
      "which", "who", "what",  "will",  "would", "can", "could", "should",
      "has",  "have", "had",   "do",    "does", "did"};
  return kWords;
}

std::unordered_set<std::string> ContentWords(const Tokens& tokens) {
  std::unordered_set<std::string> words;
  for (const std::string& t : tokens) {
    if (!Stopwords().count(t)) words.insert(t);
  }
  return words;
}

std::size_t Lcs(const Tokens& a, const Tokens& b) {
  if (a.empty() || b.empty()) return 0;
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1
                                    : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double Mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) /
         static_cast<double>(values.size());
}

}  // namespace

EvalPair MakeEvalPair(const QaRecord& record, std::string candidate) {
  EvalPair pair;
  pair.qa_id = record.qa_id();
  pair.category = record.category();
  pair.cand_tags = extract_tags(candidate);
  pair.candidate = std::move(candidate);
  pair.references = {record.gt_answer()};
  pair.gt_tags = record.gt_tags();
  return pair;
}

std::vector<std::string> normalize(std::string_view text) {
  Tokens tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    if (IsSpace(text[i])) {
      ++i;
      continue;
    }
    if (const std::size_t len = match_tag_at(text.substr(i)); len > 0) {
      std::string tag;
      for (char c : text.substr(i, len)) {
        if (c != ' ') tag.push_back(c);
      }
      tokens.push_back(std::move(tag));
      i += len;
      continue;
    }
    std::string word;
    while (i < text.size() && !IsSpace(text[i]) &&
           !(text[i] == '<' && match_tag_at(text.substr(i)) > 0)) {
      word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
      ++i;
    }
    while (!word.empty() && (word.back() == '.' || word.back() == ',' ||
                             word.back() == '!' || word.back() == '?')) {
      word.pop_back();
    }
    if (!word.empty()) tokens.push_back(std::move(word));
  }
  return tokens;
}

// ---------------------------------------------------------------------------

double accuracy(std::span<const EvalPair> pairs) {
  RequireNonEmpty(pairs);
  std::size_t hits = 0;
  for (const EvalPair& p : pairs) {
    const Tokens cand = normalize(p.candidate);
    if (cand.empty()) continue;
    for (const std::string& ref : p.references) {
      if (normalize(ref) == cand) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(pairs.size());
}

double match_pair(const EvalPair& pair) {
  if (normalize(pair.candidate).empty()) return 0.0;
  if (!pair.gt_tags.empty()) {
    std::unordered_set<std::string> cand_ids;
    for (const ObjectTag& t : pair.cand_tags) cand_ids.insert(t.id);
    std::unordered_set<std::string> gt_ids;
    std::size_t hits = 0;
    for (const ObjectTag& t : pair.gt_tags) {
      if (gt_ids.insert(t.id).second && cand_ids.count(t.id)) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(gt_ids.size());
  }
  const Tokens cand_tokens = normalize(pair.candidate);
  const auto cand_content = ContentWords(cand_tokens);
  const std::unordered_set<std::string> cand_all(cand_tokens.begin(), cand_tokens.end());
  double best = 0.0;
  for (const std::string& ref : pair.references) {
    const Tokens ref_tokens = normalize(ref);
    auto gt = ContentWords(ref_tokens);
    const auto* cand = &cand_content;
    // A reference made only of stopwords is compared on all words.
    if (gt.empty()) {
      gt.insert(ref_tokens.begin(), ref_tokens.end());
      cand = &cand_all;
    }
    if (gt.empty()) continue;
    std::size_t hits = 0;
    for (const std::string& w : gt) {
      if (cand->count(w)) ++hits;
    }
    best = std::max(best, static_cast<double>(hits) / static_cast<double>(gt.size()));
  }
  return best;
}

double match(std::span<const EvalPair> pairs) {
  RequireNonEmpty(pairs);
  double total = 0.0;
  for (const EvalPair& p : pairs) total += match_pair(p);
  return total / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------

std::vector<double> bleu_all(std::span<const EvalPair> pairs, int max_order,
                             double epsilon) {
  RequireNonEmpty(pairs);
  if (max_order < 1) {
    throw Error(ErrorCode::kPreconditionViolated, "BLEU order must be >= 1");
  }
  std::vector<double> clipped(max_order, 0.0), total(max_order, 0.0);
  double cand_len = 0.0, ref_len = 0.0;

  for (const EvalPair& p : pairs) {
    const Tokens cand = normalize(p.candidate);
    std::vector<Tokens> refs;
    for (const std::string& r : p.references) refs.push_back(normalize(r));

    // Closest reference length; ties go to the shorter reference.
    std::size_t best = refs.front().size();
    for (const Tokens& r : refs) {
      const auto d = [&](std::size_t len) {
        return len > cand.size() ? len - cand.size() : cand.size() - len;
      };
      if (d(r.size()) < d(best) || (d(r.size()) == d(best) && r.size() < best)) {
        best = r.size();
      }
    }
    cand_len += static_cast<double>(cand.size());
    ref_len += static_cast<double>(best);

    for (int n = 1; n <= max_order; ++n) {
      const NgramCounts cand_counts = CountNgrams(cand, n);
      NgramCounts max_ref;
      for (const Tokens& r : refs) {
        for (const auto& [gram, count] : CountNgrams(r, n)) {
          max_ref[gram] = std::max(max_ref[gram], count);
        }
      }
      for (const auto& [gram, count] : cand_counts) {
        auto it = max_ref.find(gram);
        if (it != max_ref.end()) clipped[n - 1] += std::min(count, it->second);
        total[n - 1] += count;
      }
    }
  }

  std::vector<double> scores(max_order, 0.0);
  if (cand_len == 0.0) return scores;
  const double bp = cand_len < ref_len ? std::exp(1.0 - ref_len / cand_len) : 1.0;
  double log_sum = 0.0;
  bool zero = false;
  for (int n = 1; n <= max_order; ++n) {
    double c = clipped[n - 1];
    if (c == 0.0 && epsilon > 0.0 && total[n - 1] > 0.0) c = epsilon;
    if (c == 0.0 || total[n - 1] == 0.0) zero = true;
    if (!zero) log_sum += std::log(c / total[n - 1]);
    scores[n - 1] = zero ? 0.0 : bp * std::exp(log_sum / n);
  }
  return scores;
}

double bleu(std::span<const EvalPair> pairs, int n, double epsilon) {
  if (n < 1) throw Error(ErrorCode::kPreconditionViolated, "BLEU order must be >= 1");
  return bleu_all(pairs, n, epsilon).back();
}

// ---------------------------------------------------------------------------

double rouge_l(std::span<const EvalPair> pairs, double beta) {
  RequireNonEmpty(pairs);
  if (!(beta > 0.0)) throw Error(ErrorCode::kInvalidConfig, "beta must be > 0");
  const double b2 = beta * beta;
  double total = 0.0;
  for (const EvalPair& p : pairs) {
    const Tokens cand = normalize(p.candidate);
    double best = 0.0;
    if (!cand.empty()) {
      for (const std::string& r : p.references) {
        const Tokens ref = normalize(r);
        const double lcs = static_cast<double>(Lcs(cand, ref));
        if (lcs == 0.0) continue;
        const double prec = lcs / static_cast<double>(cand.size());
        const double rec = lcs / static_cast<double>(ref.size());
        best = std::max(best, (1.0 + b2) * prec * rec / (rec + b2 * prec));
      }
    }
    total += best;
  }
  return total / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------

namespace {

struct CiderDoc {
  std::vector<NgramCounts> counts;  // per order
  std::vector<double> totals;       // n-grams per order
  double length = 0.0;              // tokens
};

CiderDoc Cook(const Tokens& tokens, int max_order) {
  CiderDoc doc;
  doc.length = static_cast<double>(tokens.size());
  for (int n = 1; n <= max_order; ++n) {
    doc.counts.push_back(CountNgrams(tokens, n));
    doc.totals.push_back(tokens.size() >= static_cast<std::size_t>(n)
                             ? static_cast<double>(tokens.size() - n + 1)
                             : 0.0);
  }
  return doc;
}

using WeightVec = std::unordered_map<std::string, double>;

struct Weighted {
  std::vector<WeightVec> vec;
  std::vector<double> norm;
  double length = 0.0;
};

}  // namespace

std::vector<double> cider_per_pair(std::span<const EvalPair> pairs,
                                   const MetricConfig& config) {
  RequireNonEmpty(pairs);
  config.Validate();
  const int max_order = config.cider_max_order;

  std::vector<CiderDoc> cands;
  std::vector<std::vector<CiderDoc>> refs;
  std::unordered_map<std::string, int> df;
  for (const EvalPair& p : pairs) {
    cands.push_back(Cook(normalize(p.candidate), max_order));
    std::vector<CiderDoc> docs;
    std::unordered_set<std::string> seen;
    for (const std::string& r : p.references) {
      docs.push_back(Cook(normalize(r), max_order));
      for (const NgramCounts& order : docs.back().counts) {
        for (const auto& entry : order) seen.insert(entry.first);
      }
    }
    for (const std::string& gram : seen) ++df[gram];
    refs.push_back(std::move(docs));
  }

  const double log_n = std::log(static_cast<double>(pairs.size()));
  auto weigh = [&](const CiderDoc& doc) {
    Weighted w;
    w.length = doc.length;
    w.vec.resize(max_order);
    w.norm.assign(max_order, 0.0);
    for (int n = 0; n < max_order; ++n) {
      for (const auto& [gram, count] : doc.counts[n]) {
        auto it = df.find(gram);
        const double d = it == df.end() ? 1.0 : std::max(1, it->second);
        const double value = (count / doc.totals[n]) * (log_n - std::log(d));
        w.vec[n][gram] = value;
        w.norm[n] += value * value;
      }
      w.norm[n] = std::sqrt(w.norm[n]);
    }
    return w;
  };

  const double two_sigma2 = 2.0 * config.cider_sigma * config.cider_sigma;
  std::vector<double> scores;
  scores.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const Weighted cand = weigh(cands[i]);
    std::vector<double> per_order(max_order, 0.0);
    for (const CiderDoc& ref_doc : refs[i]) {
      const Weighted ref = weigh(ref_doc);
      const double delta = cand.length - ref.length;
      const double penalty = std::exp(-(delta * delta) / two_sigma2);
      for (int n = 0; n < max_order; ++n) {
        if (cand.norm[n] == 0.0 || ref.norm[n] == 0.0) continue;
        double dot = 0.0;
        for (const auto& [gram, value] : cand.vec[n]) {
          auto it = ref.vec[n].find(gram);
          if (it != ref.vec[n].end()) dot += std::min(value, it->second) * it->second;
        }
        per_order[n] += penalty * dot / (cand.norm[n] * ref.norm[n]);
      }
    }
    const double n_refs = static_cast<double>(refs[i].size());
    for (double& v : per_order) v = config.cider_scale * v / n_refs;
    scores.push_back(cands[i].length == 0.0 ? 0.0 : Mean(per_order));
  }
  return scores;
}

double cider(std::span<const EvalPair> pairs, const MetricConfig& config) {
  const std::vector<double> per_pair = cider_per_pair(pairs, config);
  return Mean(per_pair);
}

// ---------------------------------------------------------------------------

bool is_closed_form(std::string_view reference) {
  const Tokens tokens = normalize(reference);
  if (tokens.size() != 1) return false;
  const std::string& t = tokens.front();
  return t == "yes" || t == "no" ||
         (t.size() == 1 && std::isalpha(static_cast<unsigned char>(t[0])));
}

double language_score(std::span<const double> bleu, double rouge_l, double cider,
                      double cider_scale) {
  return (Mean(bleu) + rouge_l + cider / cider_scale) / 3.0;
}

double final_score(const FinalComponents& c, const FinalWeights& w) {
  ValidateWeights(w);
  if (!c.judge && w.judge > 0.0) {
    throw Error(ErrorCode::kWeightsInvalid,
                "judge score missing while its weight is non-zero");
  }
  const double judge = c.judge ? *c.judge / 100.0 : 0.0;
  return w.judge * judge + w.language * c.language + w.match * c.match +
         w.accuracy * c.accuracy;
}

FinalWeights redistribute_without_judge(const FinalWeights& w) {
  ValidateWeights(w);
  const double rest = w.language + w.match + w.accuracy;
  if (rest <= 0.0) {
    throw Error(ErrorCode::kWeightsInvalid,
                "all weight is on the judge; cannot score without it");
  }
  return FinalWeights{0.0, w.language / rest, w.match / rest, w.accuracy / rest};
}

CorpusScores score_corpus(std::span<const EvalPair> pairs,
                          const MetricConfig& config,
                          const std::optional<std::vector<double>>& judge_scores) {
  RequireNonEmpty(pairs);
  config.Validate();
  CorpusScores s;
  s.pairs = pairs.size();
  s.accuracy = accuracy(pairs);
  s.match = match(pairs);
  s.bleu = bleu_all(pairs, config.bleu_max_order, config.bleu_smoothing_epsilon);
  s.rouge_l = rouge_l(pairs, config.rouge_beta);
  s.cider = cider(pairs, config);
  s.language = language_score(s.bleu, s.rouge_l, s.cider, config.cider_scale);

  if (judge_scores) {
    if (judge_scores->size() != pairs.size()) {
      throw Error(ErrorCode::kPreconditionViolated,
                  "judge scores do not align with pairs");
    }
    s.judge = Mean(*judge_scores);
    s.judged = true;
    s.weights_used = config.final_weights;
  } else {
    s.weights_used = redistribute_without_judge(config.final_weights);
  }
  s.final = final_score({s.judge, s.language, s.match, s.accuracy}, s.weights_used);

  std::vector<EvalPair> closed;
  for (const EvalPair& p : pairs) {
    if (is_closed_form(p.references.front())) closed.push_back(p);
  }
  s.closed_form_pairs = closed.size();
  if (!closed.empty()) s.closed_form_accuracy = accuracy(closed);
  return s;
}

json ToJson(const CorpusScores& s) {
  json j{{"pairs", s.pairs},
         {"accuracy", s.accuracy},
         {"match", s.match},
         {"bleu", s.bleu},
         {"rouge_l", s.rouge_l},
         {"cider", s.cider},
         {"judge", s.judge ? json(*s.judge) : json(nullptr)},
         {"chatgpt", s.judge ? json(*s.judge / 100.0) : json(nullptr)},
         {"language", s.language},
         {"final", s.final},
         {"final_mode", s.judged ? "full" : "no-judge"},
         {"weights_used", ToJson(s.weights_used)},
         {"closed_form_pairs", s.closed_form_pairs},
         {"closed_form_accuracy", s.closed_form_accuracy
                                      ? json(*s.closed_form_accuracy)
                                      : json(nullptr)}};
  return j;
}

CorpusScores CorpusScoresFromJson(const json& j) {
  CorpusScores s;
  s.pairs = j.at("pairs").get<std::size_t>();
  s.accuracy = j.at("accuracy").get<double>();
  s.match = j.at("match").get<double>();
  s.bleu = j.at("bleu").get<std::vector<double>>();
  s.rouge_l = j.at("rouge_l").get<double>();
  s.cider = j.at("cider").get<double>();
  if (!j.at("judge").is_null()) s.judge = j.at("judge").get<double>();
  s.language = j.at("language").get<double>();
  s.final = j.at("final").get<double>();
  s.judged = j.at("final_mode").get<std::string>() == "full";
  s.weights_used = FinalWeightsFromJson(j.at("weights_used"));
  s.closed_form_pairs = j.value("closed_form_pairs", std::size_t{0});
  if (j.contains("closed_form_accuracy") && !j.at("closed_form_accuracy").is_null()) {
    s.closed_form_accuracy = j.at("closed_form_accuracy").get<double>();
  }
  return s;
}

}  // namespace reasondrive
