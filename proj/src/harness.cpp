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

#include "reasondrive/harness.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "reasondrive/hashing.hpp"

namespace reasondrive {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::vector<PredictionEntry> parse_predictions(std::string_view jsonl) {
  std::vector<PredictionEntry> entries;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < jsonl.size()) {
    std::size_t end = jsonl.find('\n', pos);
    if (end == std::string_view::npos) end = jsonl.size();
    const std::string_view line = Trim(jsonl.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const json& id = j.at("id");
      const json& output = j.at("output");
      if (!output.is_string()) throw std::invalid_argument("output is not a string");
      entries.push_back({id.is_string() ? id.get<std::string>() : id.dump(),
                         output.get<std::string>()});
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kMalformedPredictions,
                  "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return entries;
}

std::vector<PredictionEntry> read_predictions(const fs::path& path) {
  std::string bytes;
  try {
    bytes = ReadFileBytes(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedPredictions, e.detail());
  }
  return parse_predictions(bytes);
}

LoadedPredictions match_predictions(const std::vector<PredictionEntry>& entries,
                                    const Dataset& dataset) {
  LoadedPredictions out;
  std::unordered_map<std::string, const PredictionEntry*> by_id;
  for (const PredictionEntry& e : entries) {
    if (!dataset.FindRecord(e.qa_id)) {
      out.unknown_ids.push_back(e.qa_id);
      out.findings.push_back({Severity::kWarning, ErrorCode::kUnknownQaId, e.qa_id,
                              "prediction for an id not in the dataset"});
      continue;
    }
    if (!by_id.emplace(e.qa_id, &e).second) {
      out.duplicate_ids.push_back(e.qa_id);
      out.findings.push_back({Severity::kWarning, ErrorCode::kDuplicateQaId, e.qa_id,
                              "repeated prediction ignored"});
    }
  }

  for (const QaRecord& record : dataset.records) {
    auto it = by_id.find(record.qa_id());
    if (it == by_id.end()) {
      out.missing_ids.push_back(record.qa_id());
      continue;
    }
    std::string answer;
    if (Trim(it->second->output).empty()) {
      ++out.parse_modes[ParseMode::kFallbackWhole];
    } else {
      const ParsedOutput parsed = parse_structured(it->second->output);
      ++out.parse_modes[parsed.parse_mode];
      for (const Finding& w : parsed.warnings) {
        Finding f = w;
        f.subject = record.qa_id();
        out.findings.push_back(std::move(f));
      }
      answer = parsed.answer;
    }
    out.pairs.push_back(MakeEvalPair(record, std::move(answer)));
  }
  if (!out.missing_ids.empty()) {
    out.findings.push_back(
        {Severity::kWarning, ErrorCode::kMissingPrediction, "",
         std::to_string(out.missing_ids.size()) + " records have no prediction"});
  }
  return out;
}

std::optional<int> parse_judge_score(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size()) {
    if (!std::isdigit(static_cast<unsigned char>(reply[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j]))) ++j;
    const bool negative = i > 0 && reply[i - 1] == '-';
    // Digits after a decimal point belong to the number before them.
    const bool fraction = i > 1 && reply[i - 1] == '.' &&
                          std::isdigit(static_cast<unsigned char>(reply[i - 2]));
    if (!negative && !fraction && j - i <= 3) {
      const int value = std::stoi(std::string(reply.substr(i, j - i)));
      if (value <= 100) return value;
    }
    i = j;
  }
  return std::nullopt;
}

std::vector<JudgeVerdict> judge_pairs(const std::vector<EvalPair>& pairs,
                                      const Dataset& dataset, Gateway& gateway,
                                      const PromptLibrary& prompts,
                                      const JudgeOptions& options) {
  std::vector<JudgeVerdict> verdicts(pairs.size());
  std::vector<CompletionRequest> requests(pairs.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const EvalPair& p = pairs[i];
    verdicts[i].qa_id = p.qa_id;
    const QaRecord* record = dataset.FindRecord(p.qa_id);
    if (!record) throw Error(ErrorCode::kUnknownQaId, p.qa_id);
    requests[i] = CompletionRequest{
        options.model,
        prompts.build_judge_prompt(record->question(), p.references.front(), p.candidate),
        options.temperature, options.max_tokens};
    pending.push_back(i);
  }

  for (int round = 0; round <= options.max_reparses && !pending.empty(); ++round) {
    std::vector<CompletionRequest> batch;
    for (std::size_t i : pending) batch.push_back(requests[i]);
    const auto items = gateway.complete_batch(batch, options.max_in_flight,
                                              CallOptions{.refresh = round > 0});
    std::vector<std::size_t> retry;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      JudgeVerdict& v = verdicts[pending[k]];
      ++v.requests;
      if (!items[k].ok()) {
        const Error& e = *items[k].error;
        if (e.code() == ErrorCode::kAuthFailed ||
            e.code() == ErrorCode::kBudgetExceeded) {
          throw e;
        }
        v.findings.push_back({Severity::kError, e.code(), v.qa_id, e.detail()});
        continue;
      }
      v.reply = items[k].result->text;
      if (auto score = parse_judge_score(v.reply)) {
        v.score = *score;
      } else {
        retry.push_back(pending[k]);
      }
    }
    pending = std::move(retry);
  }
  for (std::size_t i : pending) {
    verdicts[i].score = 0;
    verdicts[i].findings.push_back(
        {Severity::kWarning, ErrorCode::kJudgeUnparseable, verdicts[i].qa_id,
         "no score in reply after " + std::to_string(verdicts[i].requests) +
             " requests"});
  }
  return verdicts;
}

json ToJson(const JudgeVerdict& v) {
  json findings = json::array();
  for (const Finding& f : v.findings) findings.push_back(ToJson(f));
  return json{{"qa_id", v.qa_id},
              {"score", v.score},
              {"reply", v.reply},
              {"requests", v.requests},
              {"findings", findings}};
}

// ---------------------------------------------------------------------------

std::string dataset_digest(const Dataset& dataset) {
  json records = json::array();
  for (const QaRecord& r : dataset.records) records.push_back(ToJson(r));
  return Sha256Hex(records.dump());
}

MetricReport evaluate(const Dataset& dataset, const LoadedPredictions& predictions,
                      const MetricConfig& config,
                      const std::vector<JudgeVerdict>* verdicts) {
  config.Validate();
  if (predictions.pairs.empty()) {
    throw Error(ErrorCode::kEmptyEvalSet, "no predictions match the dataset");
  }
  if (verdicts && verdicts->size() != predictions.pairs.size()) {
    throw Error(ErrorCode::kPreconditionViolated,
                "judge verdicts do not align with the scored pairs");
  }

  MetricReport report;
  report.config = config;
  report.parse_modes = predictions.parse_modes;
  report.unknown_ids = predictions.unknown_ids;
  report.missing_ids = predictions.missing_ids;
  report.findings = predictions.findings;
  report.dataset_digest = dataset_digest(dataset);

  std::optional<std::vector<double>> judge;
  if (verdicts) {
    judge.emplace();
    for (const JudgeVerdict& v : *verdicts) {
      judge->push_back(v.score);
      report.findings.insert(report.findings.end(), v.findings.begin(),
                             v.findings.end());
    }
  }
  report.overall = score_corpus(predictions.pairs, config, judge);

  for (TaskCategory c : kAllCategories) {
    std::vector<EvalPair> subset;
    std::optional<std::vector<double>> subset_judge;
    if (judge) subset_judge.emplace();
    for (std::size_t i = 0; i < predictions.pairs.size(); ++i) {
      if (predictions.pairs[i].category != c) continue;
      subset.push_back(predictions.pairs[i]);
      if (judge) subset_judge->push_back((*judge)[i]);
    }
    if (!subset.empty()) report.by_category[c] = score_corpus(subset, config, subset_judge);
  }
  return report;
}

json ToJson(const MetricReport& r) {
  json by_category = json::object();
  for (const auto& [c, s] : r.by_category) by_category[std::string(ToString(c))] = ToJson(s);
  json parse_modes = json::object();
  for (const auto& [mode, n] : r.parse_modes) parse_modes[std::string(ToString(mode))] = n;
  json findings = json::array();
  for (const Finding& f : r.findings) findings.push_back(ToJson(f));
  return json{{"model_name", r.model_name},
              {"overall", ToJson(r.overall)},
              {"by_category", by_category},
              {"config", ToJson(r.config)},
              {"parse_modes", parse_modes},
              {"unknown_qa_ids", r.unknown_ids},
              {"missing_predictions", r.missing_ids},
              {"findings", findings},
              {"inputs",
               {{"dataset_digest", r.dataset_digest},
                {"predictions_digest", r.predictions_digest}}}};
}

MetricReport MetricReportFromJson(const json& j) {
  MetricReport r;
  try {
    r.model_name = j.value("model_name", std::string());
    r.overall = CorpusScoresFromJson(j.at("overall"));
    const json by_category = j.value("by_category", json::object());
    for (const auto& [name, s] : by_category.items()) {
      const auto category = ParseTaskCategory(name);
      if (!category) throw Error(ErrorCode::kIoError, "unknown category " + name);
      r.by_category[*category] = CorpusScoresFromJson(s);
    }
    r.config = MetricConfigFromJson(j.value("config", json::object()));
    const json parse_modes = j.value("parse_modes", json::object());
    for (const auto& [name, n] : parse_modes.items()) {
      const auto mode = ParseParseMode(name);
      if (!mode) throw Error(ErrorCode::kIoError, "unknown parse mode " + name);
      r.parse_modes[*mode] = n.get<std::size_t>();
    }
    r.unknown_ids = j.value("unknown_qa_ids", std::vector<std::string>{});
    r.missing_ids = j.value("missing_predictions", std::vector<std::string>{});
    const json findings = j.value("findings", json::array());
    for (const json& f : findings) {
      r.findings.push_back(FindingFromJson(f));
    }
    const json inputs = j.value("inputs", json::object());
    r.dataset_digest = inputs.value("dataset_digest", std::string());
    r.predictions_digest = inputs.value("predictions_digest", std::string());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIoError, std::string("unreadable scores: ") + e.what());
  }
  return r;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> columns = {
      "Accuracy", "ChatGPT", "Match",   "Bleu_1", "Bleu_2",
      "Bleu_3",   "Bleu_4",  "ROUGE_L", "CIDEr",  "Final Score"};
  return columns;
}

namespace {

std::string Fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string Row(const std::string& label, const CorpusScores& s) {
  std::string row = "| " + label;
  auto cell = [&row](const std::string& v) { row += " | " + v; };
  cell(Fixed(s.accuracy));
  cell(s.judge ? Fixed(*s.judge / 100.0) : "n/a");
  cell(Fixed(s.match));
  for (int n = 0; n < 4; ++n) {
    cell(n < static_cast<int>(s.bleu.size()) ? Fixed(s.bleu[n]) : "n/a");
  }
  cell(Fixed(s.rouge_l));
  cell(Fixed(s.cider));
  cell(Fixed(s.final) + (s.judged ? "" : "*"));
  return row + " |\n";
}

}  // namespace

std::string render_markdown(const MetricReport& r) {
  std::ostringstream out;
  const std::string name = r.model_name.empty() ? "model" : r.model_name;
  out << "# Evaluation: " << name << "\n\n";
  out << "| Subset";
  for (const std::string& c : report_columns()) out << " | " << c;
  out << " |\n|---";
  for (std::size_t i = 0; i < report_columns().size(); ++i) out << "|---:";
  out << "|\n";
  out << Row("Overall", r.overall);
  for (const auto& [c, s] : r.by_category) out << Row(std::string(DisplayName(c)), s);

  const FinalWeights& w = r.overall.weights_used;
  out << "\nScored pairs: " << r.overall.pairs << ".";
  if (r.overall.closed_form_accuracy) {
    out << " Closed-form accuracy: " << Fixed(*r.overall.closed_form_accuracy) << " over "
        << r.overall.closed_form_pairs << " pairs.";
  }
  out << "\n\nFinal score weights: judge " << Fixed(w.judge, 3) << ", language "
      << Fixed(w.language, 3) << ", match " << Fixed(w.match, 3) << ", accuracy "
      << Fixed(w.accuracy, 3) << ".\n";
  if (!r.overall.judged) {
    out << "\n\\* no-judge: the judge was not run and its weight was redistributed "
           "over the other components.\n";
  }
  if (!r.parse_modes.empty()) {
    out << "\nParse modes:";
    for (const auto& [mode, n] : r.parse_modes) out << " " << ToString(mode) << "=" << n;
    out << "\n";
  }
  if (!r.missing_ids.empty()) {
    out << "\nRecords without a prediction: " << r.missing_ids.size() << "\n";
  }
  if (!r.unknown_ids.empty()) {
    out << "\nPredictions for unknown ids (ignored): " << r.unknown_ids.size() << "\n";
  }
  return out.str();
}

void write_run(const fs::path& dir, const MetricReport& report,
               const std::vector<JudgeVerdict>* verdicts) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string());
  WriteFileAtomic(dir / "scores.json", ToJson(report).dump(2) + "\n");
  WriteFileAtomic(dir / "report.md", render_markdown(report));
  if (verdicts) {
    json all = json::array();
    for (const JudgeVerdict& v : *verdicts) all.push_back(ToJson(v));
    WriteFileAtomic(dir / "verdicts.json", all.dump(2) + "\n");
  }
}

MetricReport read_run(const fs::path& dir) {
  const std::string bytes = ReadFileBytes(dir / "scores.json");
  json j;
  try {
    j = json::parse(bytes);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kIoError, std::string("unreadable scores: ") + e.what());
  }
  return MetricReportFromJson(j);
}

}  // namespace reasondrive
