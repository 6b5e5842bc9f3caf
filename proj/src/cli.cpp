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

#include "reasondrive/cli.hpp"

#include <set>
#include <unordered_map>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "reasondrive/chain_assembler.hpp"
#include "reasondrive/config.hpp"
#include "reasondrive/harness.hpp"
#include "reasondrive/hashing.hpp"
#include "reasondrive/ingest.hpp"

namespace reasondrive::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::string format = "text";
  bool verbose = false;
};

struct Selection {
  std::string dataset;
  std::string split;
  std::string side = "train";
};

void AddCommon(CLI::App* app, Common& common) {
  app->add_option("--config", common.config, "JSON configuration file");
  app->add_option("--format", common.format, "Output format")
      ->check(CLI::IsMember({"text", "json"}));
  app->add_flag("-v,--verbose", common.verbose, "Debug logging");
}

void AddSelection(CLI::App* app, Selection& sel) {
  app->add_option("--dataset", sel.dataset, "Dataset directory or index file")
      ->required();
  app->add_option("--split", sel.split, "Split file written by `split`");
  app->add_option("--side", sel.side, "Split side to use")
      ->check(CLI::IsMember({"train", "eval"}));
}

json ReadJsonFile(const fs::path& path, ErrorCode code) {
  const std::string bytes = ReadFileBytes(path);
  try {
    return json::parse(bytes);
  } catch (const json::exception& e) {
    throw Error(code, path.string() + ": " + e.what());
  }
}

// Dataset restricted to one side of a split when a split file is given.
Dataset LoadSelection(const Selection& sel) {
  Dataset dataset = load_dataset(sel.dataset);
  if (sel.split.empty()) return dataset;
  const json split = ReadJsonFile(sel.split, ErrorCode::kInvalidConfig);
  std::unordered_set<std::string> keep;
  try {
    for (const json& id : split.at(sel.side)) keep.insert(id.get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidConfig, sel.split + ": " + e.what());
  }
  std::vector<QaRecord> records;
  for (const QaRecord& r : dataset.records) {
    if (keep.count(r.qa_id())) records.push_back(r);
  }
  dataset.records = std::move(records);
  return dataset;
}

std::vector<GenerationOutcome> ReadOutcomes(const fs::path& path) {
  std::vector<GenerationOutcome> outcomes;
  const std::string bytes = ReadFileBytes(path);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < bytes.size()) {
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string::npos) end = bytes.size();
    const std::string_view line = Trim(std::string_view(bytes).substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    try {
      outcomes.push_back(GenerationOutcomeFromJson(json::parse(line)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidRecord, path.string() + ":" +
                                                 std::to_string(line_no) + ": " +
                                                 e.what());
    }
  }
  return outcomes;
}

void ApplyOverrides(ToolkitConfig& config, const std::string& transport,
                    const std::string& cache_dir) {
  if (!transport.empty()) config.transport = transport;
  if (!cache_dir.empty()) config.gateway.cache_dir = cache_dir;
}

void Emit(std::ostream& out, const Common& common, const json& machine,
          const std::string& text) {
  if (common.format == "json") {
    out << machine.dump(2) << "\n";
  } else {
    out << text;
    if (!text.empty() && text.back() != '\n') out << "\n";
  }
}

// ---------------------------------------------------------------------------

int RunIngest(const Common& common, const std::string& dataset_path,
              const std::string& out_path, std::ostream& out) {
  const Dataset dataset = load_dataset(dataset_path);
  const std::vector<Finding> findings = validate_dataset(dataset);
  const DatasetReport report = dataset_report(dataset.manifest, findings);
  if (!out_path.empty()) WriteFileAtomic(out_path, report.machine.dump(2) + "\n");
  Emit(out, common, report.machine, report.text);
  return report.machine.value("error_count", 0) > 0 ? kExitValidation : kExitOk;
}

int RunSplit(const Common& common, const std::string& dataset_path, double fraction,
             std::uint64_t seed, const std::string& out_path, std::ostream& out) {
  const Dataset dataset = load_dataset(dataset_path);
  const DatasetSplit split = split_dataset(dataset.records, fraction, seed);
  auto ids = [](const std::vector<QaRecord>& records) {
    std::vector<std::string> v;
    for (const QaRecord& r : records) v.push_back(r.qa_id());
    return v;
  };
  const json doc{{"train_fraction", fraction},
                 {"seed", seed},
                 {"train", ids(split.train)},
                 {"eval", ids(split.eval)}};
  if (!out_path.empty()) WriteFileAtomic(out_path, doc.dump(2) + "\n");
  Emit(out, common, doc,
       "train: " + std::to_string(split.train.size()) + " records\neval: " +
           std::to_string(split.eval.size()) + " records\n");
  return kExitOk;
}

int RunGenReason(const Common& common, const Selection& sel, const fs::path& out_dir,
                 bool fresh, const std::string& transport,
                 const std::string& cache_dir, std::ostream& out) {
  ToolkitConfig config = LoadConfig(common.config);
  ApplyOverrides(config, transport, cache_dir);
  const Dataset dataset = LoadSelection(sel);
  const fs::path chains_path = out_dir / "chains.jsonl";

  std::unordered_map<std::string, GenerationOutcome> done;
  std::vector<std::string> order;
  if (!fresh && fs::exists(chains_path)) {
    for (GenerationOutcome& o : ReadOutcomes(chains_path)) {
      if (!o.chain) continue;
      if (!done.count(o.qa_id)) order.push_back(o.qa_id);
      done[o.qa_id] = std::move(o);
    }
  }
  std::vector<QaRecord> todo;
  for (const QaRecord& r : dataset.records) {
    if (!done.count(r.qa_id())) todo.push_back(r);
  }
  spdlog::info("{} records to generate, {} resumed", todo.size(),
               dataset.records.size() - todo.size());

  Gateway gateway(MakeTransport(config), config.gateway);
  const PromptLibrary prompts = MakePromptLibrary(config);
  ChainGenerator generator(gateway, prompts, config.generation);
  for (GenerationOutcome& o : generator.generate(todo, dataset.frames,
                                                 dataset.manifest.root)) {
    if (!done.count(o.qa_id)) order.push_back(o.qa_id);
    done[o.qa_id] = std::move(o);
  }

  // Dataset order first, then anything resumed from other selections.
  std::vector<GenerationOutcome> all;
  std::set<std::string> written;
  for (const QaRecord& r : dataset.records) {
    all.push_back(done.at(r.qa_id()));
    written.insert(r.qa_id());
  }
  for (const std::string& id : order) {
    if (!written.count(id)) all.push_back(done.at(id));
  }

  std::string lines;
  for (const GenerationOutcome& o : all) lines += ToJson(o).dump() + "\n";
  fs::create_directories(out_dir);
  WriteFileAtomic(chains_path, lines);

  std::vector<GenerationOutcome> selected(all.begin(),
                                          all.begin() + dataset.records.size());
  const json summary = ToJson(summarize(selected, dataset.records));
  WriteFileAtomic(out_dir / "generation_summary.json", summary.dump(2) + "\n");

  const json& counts = summary.at("counts");
  Emit(out, common, summary,
       "ok: " + counts.at("ok").dump() + "\nretried: " + counts.at("retried").dump() +
           "\nfailed: " + counts.at("failed").dump() + "\nbudget warnings: " +
           summary.at("budget_warnings").dump() + "\nchains: " +
           chains_path.string() + "\n");
  return kExitOk;
}

int RunExport(const Common& common, const Selection& sel, const std::string& variant_name,
              const fs::path& chains_path, const fs::path& out_path,
              std::ostream& out) {
  ToolkitConfig config = LoadConfig(common.config);
  const Variant variant = ParseVariant(variant_name).value_or(Variant::kReason);
  const Dataset dataset = LoadSelection(sel);

  std::vector<GenerationOutcome> outcomes;
  if (fs::exists(chains_path)) {
    outcomes = ReadOutcomes(chains_path);
  } else if (variant == Variant::kReason) {
    std::string ids;
    for (const QaRecord& r : dataset.records) ids += (ids.empty() ? "" : ", ") + r.qa_id();
    throw Error(ErrorCode::kMissingChain,
                "no chains at " + chains_path.string() + "; run gen-reason first: " + ids);
  }

  // Failed generations are left out of both variants so they stay comparable.
  std::unordered_set<std::string> failed;
  for (const GenerationOutcome& o : outcomes) {
    if (o.status == GenerationStatus::kFailed) failed.insert(o.qa_id);
  }
  std::vector<QaRecord> records;
  std::vector<std::string> excluded;
  for (const QaRecord& r : dataset.records) {
    if (failed.count(r.qa_id())) {
      excluded.push_back(r.qa_id());
    } else {
      records.push_back(r);
    }
  }

  const PromptLibrary prompts = MakePromptLibrary(config);
  const auto examples = assemble_examples(records, dataset.frames, outcomes, variant,
                                          prompts.system_prompt());
  ExportSummary summary = export_training_file(examples, variant, out_path);
  summary.excluded_ids = excluded;
  const json doc = ToJson(summary);
  Emit(out, common, doc,
       std::string(ToString(variant)) + ": " + std::to_string(summary.lines) +
           " lines -> " + out_path.string() + "\nsha256: " + summary.digest +
           "\nexcluded: " + std::to_string(excluded.size()) + "\n");
  return kExitOk;
}

int RunEval(const Common& common, const Selection& sel, const fs::path& predictions,
            const std::string& judge, const std::string& weights,
            const fs::path& out_dir, const std::string& name,
            const std::string& transport, const std::string& cache_dir,
            std::ostream& out) {
  ToolkitConfig config = LoadConfig(common.config);
  ApplyOverrides(config, transport, cache_dir);
  if (!weights.empty()) config.metrics.final_weights = ParseWeights(weights);
  config.metrics.Validate();

  const Dataset dataset = LoadSelection(sel);
  const std::string bytes = [&] {
    try {
      return ReadFileBytes(predictions);
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedPredictions, e.detail());
    }
  }();
  const LoadedPredictions loaded =
      match_predictions(parse_predictions(bytes), dataset);

  std::optional<std::vector<JudgeVerdict>> verdicts;
  if (judge == "on" && !loaded.pairs.empty()) {
    Gateway gateway(MakeTransport(config), config.gateway);
    const PromptLibrary prompts = MakePromptLibrary(config);
    verdicts = judge_pairs(loaded.pairs, dataset, gateway, prompts, config.judge);
  }
  MetricReport report =
      evaluate(dataset, loaded, config.metrics, verdicts ? &*verdicts : nullptr);
  report.model_name = name;
  report.predictions_digest = Sha256Hex(bytes);

  write_run(out_dir, report, verdicts ? &*verdicts : nullptr);
  WriteFileAtomic(out_dir / "config.json", ToJson(config).dump(2) + "\n");
  Emit(out, common, ToJson(report), render_markdown(report));
  return kExitOk;
}

int RunReport(const Common& common, const fs::path& run_dir, std::ostream& out) {
  const MetricReport report = read_run(run_dir);
  const std::string markdown = render_markdown(report);
  WriteFileAtomic(run_dir / "report.md", markdown);
  Emit(out, common, ToJson(report), markdown);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reasoning-chain data generation and evaluation for driving VQA",
               "reasondrive"};
  app.require_subcommand(1);
  Common common;
  AddCommon(&app, common);
  app.fallthrough();

  Selection sel;
  std::string out_path;

  CLI::App* ingest = app.add_subcommand("ingest", "Validate a dataset and print its manifest");
  AddCommon(ingest, common);
  ingest->add_option("--dataset", sel.dataset, "Dataset directory or index file")->required();
  ingest->add_option("--out", out_path, "Also write the JSON report here");

  double fraction = 0.8;
  std::uint64_t seed = 0;
  CLI::App* split = app.add_subcommand("split", "Split records into train and eval by frame");
  AddCommon(split, common);
  split->add_option("--dataset", sel.dataset, "Dataset directory or index file")->required();
  split->add_option("--train-fraction", fraction, "Share of frames for training")
      ->check(CLI::Range(0.0, 1.0));
  split->add_option("--seed", seed, "Shuffle seed");
  split->add_option("--out", out_path, "Split file to write");

  std::string gen_out = "reasoning";
  bool fresh = false;
  std::string transport;
  std::string cache_dir;
  CLI::App* gen = app.add_subcommand("gen-reason", "Generate reasoning chains");
  AddCommon(gen, common);
  AddSelection(gen, sel);
  gen->add_option("--out", gen_out, "Output directory for chains.jsonl");
  gen->add_flag("--fresh", fresh, "Ignore chains from an earlier run");
  gen->add_option("--transport", transport, "Override endpoint.transport")
      ->check(CLI::IsMember({"http", "mock", "record", "replay"}));
  gen->add_option("--cache-dir", cache_dir, "Override endpoint.cache_dir");

  std::string variant;
  std::string chains = "reasoning/chains.jsonl";
  CLI::App* exp = app.add_subcommand("export", "Write a training JSONL file");
  AddCommon(exp, common);
  AddSelection(exp, sel);
  exp->add_option("--variant", variant, "reason or simple")
      ->required()
      ->check(CLI::IsMember({"reason", "simple"}));
  exp->add_option("--chains", chains, "chains.jsonl from gen-reason");
  exp->add_option("--out", out_path, "Output JSONL file")->required();

  std::string predictions;
  std::string judge = "on";
  std::string weights;
  std::string eval_out = "eval_run";
  std::string name = "model";
  CLI::App* eval = app.add_subcommand("eval", "Score predictions");
  AddCommon(eval, common);
  AddSelection(eval, sel);
  eval->add_option("--predictions", predictions, "JSONL of {id, output}")->required();
  eval->add_option("--judge", judge, "Run the LLM judge")
      ->check(CLI::IsMember({"on", "off"}));
  eval->add_option("--weights", weights, "judge,language,match,accuracy");
  eval->add_option("--out", eval_out, "Run directory");
  eval->add_option("--name", name, "Model label for the report");
  eval->add_option("--transport", transport, "Override endpoint.transport")
      ->check(CLI::IsMember({"http", "mock", "record", "replay"}));
  eval->add_option("--cache-dir", cache_dir, "Override endpoint.cache_dir");

  std::string run_dir;
  CLI::App* report = app.add_subcommand("report", "Re-render a saved evaluation run");
  AddCommon(report, common);
  report->add_option("--run", run_dir, "Run directory written by eval")->required();

  std::vector<const char*> argv{"reasondrive"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  const auto previous_level = spdlog::get_level();
  if (common.verbose) spdlog::set_level(spdlog::level::debug);
  int code = kExitOk;
  try {
    if (ingest->parsed()) {
      code = RunIngest(common, sel.dataset, out_path, out);
    } else if (split->parsed()) {
      code = RunSplit(common, sel.dataset, fraction, seed, out_path, out);
    } else if (gen->parsed()) {
      code = RunGenReason(common, sel, gen_out, fresh, transport, cache_dir, out);
    } else if (exp->parsed()) {
      code = RunExport(common, sel, variant, chains, out_path, out);
    } else if (eval->parsed()) {
      code = RunEval(common, sel, predictions, judge, weights, eval_out, name,
                     transport, cache_dir, out);
    } else if (report->parsed()) {
      code = RunReport(common, run_dir, out);
    }
  } catch (const Error& e) {
    err << "error: " << ToString(e.code()) << ": " << e.detail() << "\n";
    if (common.format == "json") {
      out << json{{"error", {{"code", ToString(e.code())}, {"message", e.detail()}}}}.dump(2)
          << "\n";
    }
    code = kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    code = kExitValidation;
  }
  spdlog::set_level(previous_level);
  return code;
}

}  // namespace reasondrive::cli
