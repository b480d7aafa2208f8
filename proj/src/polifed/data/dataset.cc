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

#include "polifed/data/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "polifed/common/error.h"

namespace polifed::data {
namespace {

std::string FormatDouble(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double ParseDouble(std::string_view s, const std::string& where) {
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    Fail(ErrorCode::kIo, "bad number '" + std::string(s) + "' in " + where);
  }
  return v;
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

bool ColumnSpec::HasTag(const std::string& tag) const {
  return std::find(tags.begin(), tags.end(), tag) != tags.end();
}

std::size_t UserDataset::num_rows() const {
  return columns.empty() ? 0 : columns.front().size();
}

int UserDataset::ColumnIndex(const std::string& name) const {
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (schema[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const std::vector<double>& UserDataset::column(const std::string& name) const {
  int i = ColumnIndex(name);
  if (i < 0) Fail(ErrorCode::kInvalidArgument, "no column '" + name + "'");
  return columns[i];
}

void UserDataset::Validate() const {
  if (schema.size() != columns.size()) {
    Fail(ErrorCode::kInvalidArgument, "schema and column count differ");
  }
  std::set<std::string> names;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    if (!names.insert(schema[i].name).second) {
      Fail(ErrorCode::kInvalidArgument, "duplicate column '" + schema[i].name + "'");
    }
    if (columns[i].size() != num_rows()) {
      Fail(ErrorCode::kInvalidArgument, "ragged column '" + schema[i].name + "'");
    }
  }
  if (ColumnIndex(label_column) < 0) {
    Fail(ErrorCode::kInvalidArgument, "label column '" + label_column + "' missing");
  }
  if (location && (ColumnIndex(location->lat) < 0 || ColumnIndex(location->lon) < 0)) {
    Fail(ErrorCode::kInvalidArgument, "location columns missing");
  }
}

void Geofence::Validate() const {
  if (!(radius_m >= 0) || !std::isfinite(radius_m)) {
    Fail(ErrorCode::kInvalidArgument, "geofence radius must be finite and non-negative");
  }
  if (!(std::abs(lat) <= 90) || !(std::abs(lon) <= 180)) {
    Fail(ErrorCode::kInvalidArgument, "geofence center out of range");
  }
}

double HaversineMeters(double lat1, double lon1, double lat2, double lon2) {
  constexpr double kRad = std::numbers::pi / 180;
  double dlat = (lat2 - lat1) * kRad;
  double dlon = (lon2 - lon1) * kRad;
  double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
             std::cos(lat1 * kRad) * std::cos(lat2 * kRad) * std::sin(dlon / 2) *
                 std::sin(dlon / 2);
  return 2 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(a)));
}

UserDataset FilterColumns(const UserDataset& d, const std::vector<std::string>& tags) {
  UserDataset out;
  out.user_id = d.user_id;
  out.label_column = d.label_column;
  for (std::size_t i = 0; i < d.schema.size(); ++i) {
    const ColumnSpec& c = d.schema[i];
    bool drop = c.name != d.label_column &&
                std::any_of(tags.begin(), tags.end(),
                            [&](const std::string& t) { return c.HasTag(t); });
    if (drop) continue;
    out.schema.push_back(c);
    out.columns.push_back(d.columns[i]);
  }
  if (d.location && out.ColumnIndex(d.location->lat) >= 0 &&
      out.ColumnIndex(d.location->lon) >= 0) {
    out.location = d.location;
  }
  return out;
}

UserDataset InGeofence(const UserDataset& d, const Geofence& gf) {
  gf.Validate();
  if (!d.location) {
    Fail(ErrorCode::kInvalidArgument, "dataset of user '" + d.user_id +
                                          "' has no location columns");
  }
  const auto& lat = d.column(d.location->lat);
  const auto& lon = d.column(d.location->lon);
  UserDataset out = d;
  for (auto& c : out.columns) c.clear();
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    if (HaversineMeters(gf.lat, gf.lon, lat[r], lon[r]) > gf.radius_m) continue;
    for (std::size_t c = 0; c < d.columns.size(); ++c) out.columns[c].push_back(d.columns[c][r]);
  }
  return out;
}

fl::Examples ToExamples(const UserDataset& d, const std::vector<std::string>& features) {
  d.Validate();
  fl::Examples ex;
  ex.dim = features.size();
  std::size_t n = d.num_rows();
  std::vector<const std::vector<double>*> cols;
  for (const auto& f : features) {
    int i = d.ColumnIndex(f);
    cols.push_back(i < 0 ? nullptr : &d.columns[i]);
  }
  ex.features.reserve(n * ex.dim);
  for (std::size_t r = 0; r < n; ++r) {
    for (const auto* c : cols) ex.features.push_back(c ? (*c)[r] : 0.0);
  }
  for (double y : d.column(d.label_column)) {
    if (y != std::floor(y) || y < 0) Fail(ErrorCode::kInvalidArgument, "labels must be whole numbers");
    ex.labels.push_back(static_cast<int>(y));
  }
  return ex;
}

void WriteCsv(const UserDataset& d, const std::string& path) {
  d.Validate();
  for (const auto& c : d.schema) {
    if (c.name.find_first_of(",\n\r") != std::string::npos) {
      Fail(ErrorCode::kInvalidArgument, "column name not CSV-safe: " + c.name);
    }
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot write " + path);
  for (std::size_t i = 0; i < d.schema.size(); ++i) {
    out << (i ? "," : "") << d.schema[i].name;
  }
  out << '\n';
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    for (std::size_t c = 0; c < d.columns.size(); ++c) {
      out << (c ? "," : "") << FormatDouble(d.columns[c][r]);
    }
    out << '\n';
  }
  nlohmann::json schema = nlohmann::json::object();
  schema["user_id"] = d.user_id;
  schema["label"] = d.label_column;
  schema["columns"] = nlohmann::json::array();
  for (const auto& c : d.schema) {
    schema["columns"].push_back({{"name", c.name}, {"tags", c.tags}});
  }
  if (d.location) schema["location"] = {{"lat", d.location->lat}, {"lon", d.location->lon}};
  std::ofstream side(path + ".schema.json", std::ios::binary);
  if (!side) Fail(ErrorCode::kIo, "cannot write " + path + ".schema.json");
  side << schema.dump(2) << '\n';
  if (!out || !side) Fail(ErrorCode::kIo, "write failed for " + path);
}

UserDataset ReadCsv(const std::string& path) {
  std::ifstream side(path + ".schema.json", std::ios::binary);
  if (!side) Fail(ErrorCode::kIo, "cannot read " + path + ".schema.json");
  UserDataset d;
  try {
    auto schema = nlohmann::json::parse(side);
    d.user_id = schema.at("user_id").get<std::string>();
    d.label_column = schema.at("label").get<std::string>();
    for (const auto& c : schema.at("columns")) {
      d.schema.push_back({c.at("name").get<std::string>(),
                          c.value("tags", std::vector<std::string>{})});
    }
    if (schema.contains("location")) {
      d.location = LocationColumns{schema["location"].at("lat").get<std::string>(),
                                   schema["location"].at("lon").get<std::string>()};
    }
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorCode::kIo, "bad schema sidecar for " + path + ": " + e.what());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot read " + path);
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorCode::kIo, "empty CSV " + path);
  auto header = SplitCsv(line);
  if (header.size() != d.schema.size()) Fail(ErrorCode::kIo, "CSV header does not match schema");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != d.schema[i].name) Fail(ErrorCode::kIo, "CSV header does not match schema");
  }
  d.columns.assign(header.size(), {});
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = SplitCsv(line);
    std::string where = path + ":" + std::to_string(lineno);
    if (cells.size() != header.size()) Fail(ErrorCode::kIo, "wrong cell count at " + where);
    for (std::size_t i = 0; i < cells.size(); ++i) d.columns[i].push_back(ParseDouble(cells[i], where));
  }
  d.Validate();
  return d;
}

}  // namespace polifed::data
