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

// Text-generation metrics over (candidate, references) pairs.
//
// All metrics share one tokenizer (normalize). Corpus-level definitions:
//
//   accuracy   fraction of pairs whose normalized candidate equals some
//              normalized reference.
//   match      mean per-pair overlap: object-tag recall when the ground truth
//              carries tags, else content-word recall.
//   BLEU-n     clipped n-gram precisions p_1..p_n summed over the corpus,
//              BP * exp(sum log(p_k) / n), BP = exp(1 - r/c) when c < r.
//              No smoothing unless an epsilon is configured.
//   ROUGE-L    mean over pairs of the best per-reference LCS F-measure
//              F = (1 + b^2) P R / (R + b^2 P).
//   CIDEr-D    per order n: TF-IDF vectors (TF = count / #n-grams,
//              IDF = log(N / max(1, df)) over the reference sets),
//              candidate weights clipped to the reference, cosine times a
//              Gaussian length penalty exp(-(|c| - |r|)^2 / (2 sigma^2)),
//              averaged over references; scale * mean over orders, then
//              mean over pairs.
//
// An empty candidate scores 0 on every metric.

#ifndef REASONDRIVE_METRICS_HPP_
#define REASONDRIVE_METRICS_HPP_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reasondrive/core.hpp"

namespace reasondrive {

struct EvalPair {
  std::string qa_id;
  TaskCategory category = TaskCategory::kPerception;
  std::string candidate;
  std::vector<std::string> references;  // non-empty
  std::vector<ObjectTag> gt_tags;
  std::vector<ObjectTag> cand_tags;
};

// Pair for a QA record with a single ground-truth reference; candidate tags
// are extracted from the candidate text.
EvalPair MakeEvalPair(const QaRecord& record, std::string candidate);

// Lowercases, splits on whitespace, strips trailing . , ! ? from each word,
// and keeps object tags such as <c1> as single tokens.
std::vector<std::string> normalize(std::string_view text);

// Throw kEmptyEvalSet on an empty corpus.
double accuracy(std::span<const EvalPair> pairs);
double match(std::span<const EvalPair> pairs);
double match_pair(const EvalPair& pair);
double bleu(std::span<const EvalPair> pairs, int n, double epsilon = 0.0);
// BLEU-1..max_order in one pass over the corpus.
std::vector<double> bleu_all(std::span<const EvalPair> pairs, int max_order,
                             double epsilon = 0.0);
double rouge_l(std::span<const EvalPair> pairs, double beta = 1.2);
double cider(std::span<const EvalPair> pairs, const MetricConfig& config = {});
// Per-pair CIDEr-D values (IDF still computed over the whole corpus).
std::vector<double> cider_per_pair(std::span<const EvalPair> pairs,
                                   const MetricConfig& config = {});

// Reference is closed-form when it normalizes to one token that is "yes",
// "no" or a single letter option.
bool is_closed_form(std::string_view reference);

// (mean(bleu) + rouge_l + cider / cider_scale) / 3
double language_score(std::span<const double> bleu, double rouge_l,
                      double cider, double cider_scale);

struct FinalComponents {
  std::optional<double> judge;  // 0..100
  double language = 0.0;
  double match = 0.0;
  double accuracy = 0.0;
};

// w_judge * judge/100 + w_language * language + w_match * match
//   + w_accuracy * accuracy.
// Throws kWeightsInvalid for invalid weights, or when the judge is absent
// but still weighted.
double final_score(const FinalComponents& components, const FinalWeights& weights);

// Moves the judge weight onto the other components in proportion to their
// weights. Throws kWeightsInvalid when nothing is left to carry it.
FinalWeights redistribute_without_judge(const FinalWeights& weights);

struct CorpusScores {
  std::size_t pairs = 0;
  double accuracy = 0.0;
  double match = 0.0;
  std::vector<double> bleu;  // BLEU-1..max_order
  double rouge_l = 0.0;
  double cider = 0.0;
  std::optional<double> judge;  // mean judge score, 0..100
  double language = 0.0;
  double final = 0.0;
  bool judged = false;          // false: final uses redistributed weights
  FinalWeights weights_used;
  std::size_t closed_form_pairs = 0;
  std::optional<double> closed_form_accuracy;
};

// judge_scores, when given, aligns with pairs (0..100 each).
CorpusScores score_corpus(std::span<const EvalPair> pairs,
                          const MetricConfig& config,
                          const std::optional<std::vector<double>>& judge_scores);

nlohmann::json ToJson(const CorpusScores& scores);
CorpusScores CorpusScoresFromJson(const nlohmann::json& j);

}  // namespace reasondrive

#endif  // REASONDRIVE_METRICS_HPP_
