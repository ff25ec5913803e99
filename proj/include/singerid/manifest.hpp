// singerid/manifest.hpp

// Copyright 2026  The singerid authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SINGERID_MANIFEST_HPP_
#define SINGERID_MANIFEST_HPP_

#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "singerid/errors.hpp"

namespace singerid {

// One dataset entry. singer_id may be empty for unlabeled training data.
struct ManifestEntry {
  std::string path;
  std::string singer_id;
  std::string split;  // train | val | test
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> split(const std::string& which) const {
    std::vector<ManifestEntry> out;
    for (const auto& e : entries)
      if (e.split == which) out.push_back(e);
    return out;
  }

  void validate() const {
    std::set<std::string> seen;
    for (const auto& e : entries) {
      SINGERID_CHECK(!e.path.empty(), DataError, "manifest: empty path");
      SINGERID_CHECK(seen.insert(e.path).second, DataError,
                     "manifest: duplicate path " + e.path);
      SINGERID_CHECK(e.split == "train" || e.split == "val" || e.split == "test", DataError,
                     "manifest: bad split '" + e.split + "' for " + e.path);
    }
  }

  // JSON-lines, one object per entry with keys path, singer_id (optional), split.
  static DatasetManifest load(const std::string& path) {
    std::ifstream in(path);
    SINGERID_CHECK(in.good(), DataError, "manifest: cannot open " + path);
    DatasetManifest m;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        throw DataError("manifest: parse error at " + path + ":" + std::to_string(lineno) +
                        ": " + e.what());
      }
      ManifestEntry entry;
      SINGERID_CHECK(j.contains("path"), DataError,
                     "manifest: missing 'path' at line " + std::to_string(lineno));
      entry.path = j.at("path").get<std::string>();
      entry.singer_id = j.value("singer_id", std::string());
      entry.split = j.value("split", std::string("train"));
      m.entries.push_back(std::move(entry));
    }
    m.validate();
    return m;
  }

  void save(const std::string& path) const {
    std::ofstream out(path);
    SINGERID_CHECK(out.good(), DataError, "manifest: cannot write " + path);
    for (const auto& e : entries) {
      nlohmann::json j;
      j["path"] = e.path;
      if (!e.singer_id.empty()) j["singer_id"] = e.singer_id;
      j["split"] = e.split;
      out << j.dump() << "\n";
    }
    SINGERID_CHECK(out.good(), DataError, "manifest: write failed for " + path);
  }
};

}  // namespace singerid

#endif  // SINGERID_MANIFEST_HPP_
