// Copyright 2026 The PoliFed Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Per-user tabular datasets with tagged columns, and the local data
// commands that reshape them.

#ifndef POLIFED_DATA_DATASET_H_
#define POLIFED_DATA_DATASET_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "polifed/fl/task.h"

namespace polifed::data {

struct ColumnSpec {
  std::string name;
  // Sensitive-source tags such as "mic" or "loc".
  std::vector<std::string> tags;

  bool HasTag(const std::string& tag) const;
  bool operator==(const ColumnSpec&) const = default;
};

struct LocationColumns {
  std::string lat;
  std::string lon;
  bool operator==(const LocationColumns&) const = default;
};

// Column-major numeric table. Labels are stored as whole numbers.
struct UserDataset {
  std::string user_id;
  std::vector<ColumnSpec> schema;
  std::vector<std::vector<double>> columns;
  std::string label_column = "label";
  std::optional<LocationColumns> location;

  std::size_t num_rows() const;
  // -1 when absent.
  int ColumnIndex(const std::string& name) const;
  const std::vector<double>& column(const std::string& name) const;
  // Throws InvalidArgument on ragged columns, duplicate names, a missing
  // label column, or dangling location columns.
  void Validate() const;

  bool operator==(const UserDataset&) const = default;
};

struct Geofence {
  double lat = 0;
  double lon = 0;
  double radius_m = 0;

  void Validate() const;
};

inline constexpr double kEarthRadiusM = 6371008.8;

// Great-circle distance in meters.
double HaversineMeters(double lat1, double lon1, double lat2, double lon2);

// Drops every column carrying any of `tags`. The label column is never
// dropped. Location metadata is cleared when its columns go.
UserDataset FilterColumns(const UserDataset& d, const std::vector<std::string>& tags);

// Keeps rows within gf.radius_m of gf's center. Throws InvalidArgument when
// the dataset has no location columns.
UserDataset InGeofence(const UserDataset& d, const Geofence& gf);

// Rows restricted to `features` (absent columns read as 0) and the label.
fl::Examples ToExamples(const UserDataset& d, const std::vector<std::string>& features);

// Writes `<path>` (CSV with a header row) and `<path>.schema.json`.
void WriteCsv(const UserDataset& d, const std::string& path);
UserDataset ReadCsv(const std::string& path);

}  // namespace polifed::data

#endif  // POLIFED_DATA_DATASET_H_
