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

#include "reasondrive/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

namespace reasondrive {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

const ordered_json& RequireObject(const ordered_json& j, const std::string& where) {
  if (!j.is_object()) {
    throw Error(ErrorCode::kMalformedIndex, where + " is not a JSON object");
  }
  return j;
}

std::string RequireString(const ordered_json& j, const char* key,
                          const std::string& where) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorCode::kInvalidRecord,
                where + " lacks the required string field '" + key + "'");
  }
  return it->get<std::string>();
}

}  // namespace

const Frame* Dataset::FindFrame(const std::string& scene_id,
                                const std::string& frame_id) const {
  for (const Frame& frame : frames) {
    if (frame.scene_id == scene_id && frame.frame_id == frame_id) return &frame;
  }
  return nullptr;
}

const QaRecord* Dataset::FindRecord(const std::string& qa_id) const {
  for (const QaRecord& record : records) {
    if (record.qa_id() == qa_id) return &record;
  }
  return nullptr;
}

Dataset load_dataset(const fs::path& root) {
  fs::path index_path = root;
  fs::path dataset_root = root;
  std::error_code ec;
  if (fs::is_directory(root, ec)) {
    index_path = root / kDefaultIndexName;
  } else {
    dataset_root = root.parent_path();
  }
  std::ifstream in(index_path);
  if (!in) {
    throw Error(ErrorCode::kMalformedIndex,
                "cannot open dataset index " + index_path.string());
  }
  ordered_json index;
  try {
    index = ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kMalformedIndex,
                index_path.string() + ": " + e.what());
  }
  return load_dataset_from_json(index, dataset_root);
}

Dataset load_dataset_from_json(const ordered_json& index, const fs::path& root) {
  RequireObject(index, "index root");
  Dataset ds;
  ds.manifest.root = root;
  for (TaskCategory c : kAllCategories) ds.manifest.qa_by_category[c] = 0;

  std::set<std::pair<std::string, std::string>> seen_frames;
  for (const auto& [scene_id, scene] : index.items()) {
    RequireObject(scene, "scene " + scene_id);
    auto kf = scene.find("key_frames");
    if (kf == scene.end()) {
      throw Error(ErrorCode::kMalformedIndex,
                  "scene " + scene_id + " has no key_frames");
    }
    RequireObject(*kf, "key_frames of " + scene_id);
    ++ds.manifest.scenes;
    ds.manifest.frames_by_scene[scene_id] = 0;

    for (const auto& [frame_id, frame_json] : kf->items()) {
      const std::string where = scene_id + "/" + frame_id;
      RequireObject(frame_json, "frame " + where);
      if (!seen_frames.emplace(scene_id, frame_id).second) {
        throw Error(ErrorCode::kDuplicateFrame, where);
      }
      Frame frame{scene_id, frame_id, {}};
      if (auto paths = frame_json.find("image_paths"); paths != frame_json.end()) {
        RequireObject(*paths, "image_paths of " + where);
        for (const auto& [view_name, path] : paths->items()) {
          auto view = ParseCameraView(view_name);
          if (!view) {
            throw Error(ErrorCode::kMalformedIndex,
                        where + " has unknown camera view " + view_name);
          }
          if (!path.is_string()) {
            throw Error(ErrorCode::kMalformedIndex,
                        where + " image path for " + view_name +
                            " is not a string");
          }
          frame.views[*view] = path.get<std::string>();
        }
      }

      if (auto qa = frame_json.find("QA"); qa != frame_json.end()) {
        RequireObject(*qa, "QA of " + where);
        for (const auto& [category_key, entries] : qa->items()) {
          auto category = ParseTaskCategory(category_key);
          if (!category) {
            throw Error(ErrorCode::kUnknownCategory,
                        where + ": '" + category_key + "'");
          }
          if (!entries.is_array()) {
            throw Error(ErrorCode::kMalformedIndex,
                        where + " QA." + category_key + " is not a list");
          }
          std::size_t ordinal = 0;
          for (const auto& entry : entries) {
            const std::string entry_where =
                where + "/" + std::string(ToString(*category)) + "/" +
                std::to_string(ordinal);
            if (!entry.is_object()) {
              throw Error(ErrorCode::kMalformedIndex,
                          entry_where + " is not an object");
            }
            std::string qa_id = entry_where;
            if (auto id = entry.find("id"); id != entry.end() && id->is_string()) {
              qa_id = id->get<std::string>();
            }
            ds.records.push_back(QaRecord::Create(
                std::move(qa_id), scene_id, frame_id, *category,
                RequireString(entry, "Q", entry_where),
                RequireString(entry, "A", entry_where)));
            ++ds.manifest.qa_by_category[*category];
            ++ds.manifest.qa_total;
            ++ordinal;
          }
        }
      }
      ds.frames.push_back(std::move(frame));
      ++ds.manifest.frames;
      ++ds.manifest.frames_by_scene[scene_id];
    }
  }
  return ds;
}

std::vector<Finding> validate_dataset(const Dataset& dataset) {
  std::vector<Finding> findings;
  for (const Frame& frame : dataset.frames) {
    auto f = validate_frame(frame, dataset.manifest.root);
    findings.insert(findings.end(), f.begin(), f.end());
  }
  std::set<std::string> ids;
  for (const QaRecord& record : dataset.records) {
    if (!ids.insert(record.qa_id()).second) {
      findings.push_back({Severity::kError, ErrorCode::kDuplicateQaId,
                          record.qa_id(), "qa_id appears more than once"});
    }
  }
  if (dataset.manifest.frames == 0) {
    findings.push_back({Severity::kWarning, ErrorCode::kEmptyDataset,
                        dataset.manifest.root.string(), "dataset has no frames"});
  }
  return findings;
}

DatasetSplit split_dataset(const std::vector<QaRecord>& records,
                           double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error(ErrorCode::kPreconditionViolated,
                "train_fraction must lie in (0, 1)");
  }
  if (records.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "no records to split");
  }
  // Frames in first-appearance order, then shuffled.
  std::vector<std::string> frames;
  std::set<std::string> seen;
  for (const QaRecord& r : records) {
    if (seen.insert(r.frame_key()).second) frames.push_back(r.frame_key());
  }
  std::mt19937_64 rng(seed);
  std::shuffle(frames.begin(), frames.end(), rng);

  std::size_t n_train = static_cast<std::size_t>(
      std::llround(train_fraction * static_cast<double>(frames.size())));
  if (frames.size() >= 2) {
    n_train = std::clamp<std::size_t>(n_train, 1, frames.size() - 1);
  }
  const std::set<std::string> train_frames(frames.begin(),
                                           frames.begin() + n_train);
  DatasetSplit split;
  for (const QaRecord& r : records) {
    (train_frames.count(r.frame_key()) ? split.train : split.eval).push_back(r);
  }
  return split;
}

json ToJson(const DatasetManifest& m) {
  json by_category = json::object();
  for (TaskCategory c : kAllCategories) {
    auto it = m.qa_by_category.find(c);
    by_category[std::string(ToString(c))] =
        it == m.qa_by_category.end() ? 0 : it->second;
  }
  json by_scene = json::object();
  for (const auto& [scene, n] : m.frames_by_scene) by_scene[scene] = n;
  return json{{"root", m.root.string()},
              {"scenes", m.scenes},
              {"frames", m.frames},
              {"qa_total", m.qa_total},
              {"qa_by_category", by_category},
              {"frames_by_scene", by_scene}};
}

DatasetManifest ManifestFromJson(const json& j) {
  DatasetManifest m;
  m.root = j.at("root").get<std::string>();
  m.scenes = j.at("scenes").get<std::size_t>();
  m.frames = j.at("frames").get<std::size_t>();
  m.qa_total = j.at("qa_total").get<std::size_t>();
  for (const auto& [name, n] : j.at("qa_by_category").items()) {
    auto c = ParseTaskCategory(name);
    if (!c) throw Error(ErrorCode::kUnknownCategory, name);
    m.qa_by_category[*c] = n.get<std::size_t>();
  }
  for (const auto& [scene, n] : j.at("frames_by_scene").items()) {
    m.frames_by_scene[scene] = n.get<std::size_t>();
  }
  return m;
}

DatasetReport dataset_report(const DatasetManifest& manifest,
                             const std::vector<Finding>& findings) {
  std::vector<Finding> all = findings;
  const bool has_empty_warning =
      std::any_of(all.begin(), all.end(), [](const Finding& f) {
        return f.code == ErrorCode::kEmptyDataset;
      });
  if (manifest.frames == 0 && !has_empty_warning) {
    all.push_back({Severity::kWarning, ErrorCode::kEmptyDataset,
                   manifest.root.string(), "dataset has no frames"});
  }

  DatasetReport report;
  report.machine = json{{"manifest", ToJson(manifest)},
                        {"findings", json::array()}};
  std::size_t errors = 0;
  for (const Finding& f : all) {
    report.machine["findings"].push_back(ToJson(f));
    if (f.severity == Severity::kError) ++errors;
  }
  report.machine["error_count"] = errors;
  report.machine["warning_count"] = all.size() - errors;

  std::ostringstream out;
  out << "Dataset: " << manifest.root.string() << "\n"
      << "Scenes: " << manifest.scenes << "  Frames: " << manifest.frames
      << "  QA pairs: " << manifest.qa_total << "\n\n";
  out << std::left << std::setw(14) << "Category" << std::right
      << std::setw(8) << "QA" << "\n";
  for (TaskCategory c : kAllCategories) {
    auto it = manifest.qa_by_category.find(c);
    out << std::left << std::setw(14) << DisplayName(c) << std::right
        << std::setw(8) << (it == manifest.qa_by_category.end() ? 0 : it->second)
        << "\n";
  }
  out << std::left << std::setw(14) << "Total" << std::right << std::setw(8)
      << manifest.qa_total << "\n";

  if (!manifest.frames_by_scene.empty()) {
    std::size_t width = 5;
    for (const auto& [scene, n] : manifest.frames_by_scene) {
      width = std::max(width, scene.size());
    }
    out << "\n" << std::left << std::setw(static_cast<int>(width + 2))
        << "Scene" << std::right << std::setw(8) << "Frames" << "\n";
    for (const auto& [scene, n] : manifest.frames_by_scene) {
      out << std::left << std::setw(static_cast<int>(width + 2)) << scene
          << std::right << std::setw(8) << n << "\n";
    }
  }

  out << "\nFindings: " << errors << " error(s), " << all.size() - errors
      << " warning(s)\n";
  for (const Finding& f : all) {
    out << "  [" << ToString(f.severity) << "] " << ToString(f.code) << " "
        << f.subject << ": " << f.message << "\n";
  }
  report.text = out.str();
  return report;
}

}  // namespace reasondrive
