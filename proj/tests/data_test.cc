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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <numeric>

#include "gtest/gtest.h"
#include "polifed/common/error.h"
#include "polifed/data/dataset.h"
#include "polifed/data/generate.h"
#include "polifed/fl/task.h"
#include "polifed/fl/training.h"

namespace polifed::data {
namespace {

TaskSpec Spec(TaskKind kind, int users, int rows, std::uint64_t seed) {
  TaskSpec s;
  s.kind = kind;
  s.n_users = users;
  s.rows_per_user = rows;
  s.seed = seed;
  return s;
}

fl::Examples Pool(const std::vector<UserDataset>& users, const std::vector<std::string>& f) {
  fl::Examples all;
  all.dim = f.size();
  for (const auto& u : users) {
    fl::Examples ex = ToExamples(u, f);
    all.features.insert(all.features.end(), ex.features.begin(), ex.features.end());
    all.labels.insert(all.labels.end(), ex.labels.begin(), ex.labels.end());
  }
  return all;
}

TEST(GenerateTaskTest, DeterministicForEveryKind) {
  for (auto kind : {TaskKind::kClassification2, TaskKind::kMulticlass10,
                    TaskKind::kSequenceNextToken}) {
    auto a = GenerateTask(Spec(kind, 5, 30, 77));
    auto b = GenerateTask(Spec(kind, 5, 30, 77));
    EXPECT_EQ(a, b) << TaskKindName(kind);
    auto c = GenerateTask(Spec(kind, 5, 30, 78));
    EXPECT_NE(a, c) << TaskKindName(kind);
    for (const auto& d : a) {
      EXPECT_NO_THROW(d.Validate());
      EXPECT_EQ(d.num_rows(), 30u);
      for (const auto& f : DescribeTask(kind).features) EXPECT_GE(d.ColumnIndex(f), 0) << f;
    }
  }
}

TEST(GenerateTaskTest, PopulationSizeAndSchema) {
  auto users = GenerateTask(Spec(TaskKind::kClassification2, 237, 4, 1));
  ASSERT_EQ(users.size(), 237u);
  EXPECT_EQ(users[0].user_id, "u0000");
  EXPECT_EQ(users[236].user_id, "u0236");
  const auto& d = users[0];
  EXPECT_TRUE(d.schema[d.ColumnIndex("mic")].HasTag("mic"));
  EXPECT_TRUE(d.schema[d.ColumnIndex("lat")].HasTag("loc"));
  EXPECT_TRUE(d.schema[d.ColumnIndex("place")].HasTag("loc"));
  ASSERT_TRUE(d.location.has_value());
  EXPECT_THROW(GenerateTask(Spec(TaskKind::kClassification2, 0, 4, 1)), Error);
  EXPECT_THROW(GenerateTask(Spec(TaskKind::kClassification2, 3, 0, 1)), Error);
  EXPECT_THROW(ParseTaskKind("cifar"), Error);
  EXPECT_EQ(ParseTaskKind("multiclass-10"), TaskKind::kMulticlass10);
}

TEST(GenerateTaskTest, SeparatedClassesAreLearnableCentrally) {
  auto users = GenerateTask(Spec(TaskKind::kClassification2, 20, 50, 3));
  auto info = DescribeTask(TaskKind::kClassification2);
  fl::Examples all = Pool(users, info.features);
  auto task = fl::MakeTask("logistic", all.dim, 2);
  fl::ModelParams m = fl::TrainLocal(task->Init(0), all, fl::TrainConfig{20, 0.2, 32, 5}, *task);
  EXPECT_GE(fl::Accuracy(*task, m, all), 0.99);
}

TEST(GenerateTaskTest, SequenceRowsAreOneHotContexts) {
  auto users = GenerateTask(Spec(TaskKind::kSequenceNextToken, 2, 40, 9));
  auto info = DescribeTask(TaskKind::kSequenceNextToken);
  fl::Examples ex = ToExamples(users[0], info.features);
  for (std::size_t r = 0; r < ex.size(); ++r) {
    auto row = ex.row(r);
    EXPECT_EQ(std::accumulate(row.begin(), row.end(), 0.0), 2.0);
    EXPECT_LT(ex.labels[r], info.num_classes);
    // The next row's most recent token is this row's label.
    if (r + 1 < ex.size()) EXPECT_EQ(ex.row(r + 1)[ex.labels[r]], 1.0);
  }
}

TEST(GenerateTaskTest, DirichletMulticlassKeepsEveryUserNonEmpty) {
  TaskSpec s = Spec(TaskKind::kMulticlass10, 100, 20, 4);
  s.dirichlet_alpha = 0.9;
  auto users = GenerateTask(s);
  ASSERT_EQ(users.size(), 100u);
  std::size_t total = 0;
  for (const auto& u : users) {
    EXPECT_GE(u.num_rows(), 1u);
    total += u.num_rows();
  }
  EXPECT_EQ(total, 2000u);
}

void ExpectPartition(const std::vector<std::vector<std::size_t>>& parts, std::size_t n) {
  std::vector<std::size_t> all;
  for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), n);
  for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(all[i], i);
}

std::vector<int> BalancedLabels(std::size_t n, int classes) {
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % classes);
  return labels;
}

TEST(DirichletPartitionTest, CompleteAndDisjointForManySeeds) {
  auto labels = BalancedLabels(997, 7);
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto parts = DirichletPartition(labels, 1 + seed % 13, 0.05 + seed * 0.1, seed);
    ExpectPartition(parts, labels.size());
  }
  EXPECT_EQ(DirichletPartition(labels, 5, 0.9, 1), DirichletPartition(labels, 5, 0.9, 1));
  EXPECT_THROW(DirichletPartition(labels, 0, 0.9, 1), Error);
  EXPECT_THROW(DirichletPartition(labels, 3, 0.0, 1), Error);
}

TEST(DirichletPartitionTest, LargeAlphaMatchesGlobalProportions) {
  auto labels = BalancedLabels(100000, 10);
  auto parts = DirichletPartition(labels, 10, 1e6, 5);
  for (const auto& p : parts) {
    std::vector<double> counts(10, 0);
    for (auto i : p) counts[labels[i]] += 1;
    for (double c : counts) EXPECT_NEAR(c / p.size(), 0.1, 0.02);
  }
}

TEST(DirichletPartitionTest, SmallAlphaSkewsClients) {
  auto labels = BalancedLabels(10000, 10);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto parts = DirichletPartition(labels, 100, 0.9, seed);
    int skewed = 0;
    for (const auto& p : parts) {
      if (p.empty()) continue;
      std::vector<double> counts(10, 0);
      for (auto i : p) counts[labels[i]] += 1;
      double max_share = *std::max_element(counts.begin(), counts.end()) / p.size();
      if (max_share > 2 * 0.1) ++skewed;
    }
    EXPECT_GE(skewed, 10) << "seed " << seed;
  }
}

TEST(FilterColumnsTest, DropsTaggedColumnsOnly) {
  UserDataset d = GenerateTask(Spec(TaskKind::kClassification2, 1, 10, 2))[0];
  UserDataset f = FilterColumns(d, {"mic", "loc"});
  for (const auto& c : f.schema) {
    EXPECT_FALSE(c.HasTag("mic"));
    EXPECT_FALSE(c.HasTag("loc"));
  }
  EXPECT_EQ(f.ColumnIndex("lat"), -1);
  EXPECT_FALSE(f.location.has_value());
  EXPECT_EQ(f.column("f2"), d.column("f2"));
  EXPECT_EQ(f.column("label"), d.column("label"));
  EXPECT_EQ(FilterColumns(d, {}), d);
  EXPECT_EQ(FilterColumns(d, {"nonexistent"}), d);
  EXPECT_EQ(FilterColumns(f, {"mic", "loc"}), f);
  UserDataset m = FilterColumns(d, {"mic"});
  EXPECT_EQ(m.ColumnIndex("mic"), -1);
  EXPECT_TRUE(m.location.has_value());
}

TEST(ToExamplesTest, MissingColumnsReadAsZero) {
  UserDataset d = GenerateTask(Spec(TaskKind::kClassification2, 1, 6, 2))[0];
  UserDataset f = FilterColumns(d, {"mic", "loc"});
  auto info = DescribeTask(TaskKind::kClassification2);
  fl::Examples ex = ToExamples(f, info.features);
  ASSERT_EQ(ex.dim, 6u);
  for (std::size_t r = 0; r < ex.size(); ++r) {
    EXPECT_EQ(ex.row(r)[0], d.column("f0")[r]);
    EXPECT_EQ(ex.row(r)[4], 0.0);
    EXPECT_EQ(ex.row(r)[5], 0.0);
  }
}

// Chord length between unit vectors, converted to arc length.
double ChordDistance(double lat1, double lon1, double lat2, double lon2) {
  constexpr double k = std::numbers::pi / 180;
  double x1 = std::cos(lat1 * k) * std::cos(lon1 * k), y1 = std::cos(lat1 * k) * std::sin(lon1 * k),
         z1 = std::sin(lat1 * k);
  double x2 = std::cos(lat2 * k) * std::cos(lon2 * k), y2 = std::cos(lat2 * k) * std::sin(lon2 * k),
         z2 = std::sin(lat2 * k);
  double chord = std::sqrt((x1 - x2) * (x1 - x2) + (y1 - y2) * (y1 - y2) + (z1 - z2) * (z1 - z2));
  return 2 * 6371008.8 * std::asin(chord / 2);
}

UserDataset Grid(double lat0, double lon0, int n, double step_deg) {
  UserDataset d;
  d.user_id = "grid";
  d.schema = {{"lat", {"loc"}}, {"lon", {"loc"}}, {"label", {}}};
  d.columns.resize(3);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      d.columns[0].push_back(lat0 + i * step_deg);
      d.columns[1].push_back(lon0 + j * step_deg);
      d.columns[2].push_back((i + j) % 2);
    }
  }
  d.location = LocationColumns{"lat", "lon"};
  return d;
}

TEST(InGeofenceTest, Examples) {
  UserDataset d = Grid(40.0, -80.0, 20, 0.001);
  Geofence zero{40.00055, -79.99955, 0.0};
  EXPECT_EQ(InGeofence(d, zero).num_rows(), 0u);
  Geofence all{40.01, -79.99, 100000.0};
  EXPECT_EQ(InGeofence(d, all), d);
  UserDataset no_loc = FilterColumns(d, {"loc"});
  EXPECT_THROW(InGeofence(no_loc, all), Error);
  EXPECT_THROW(InGeofence(d, Geofence{40, -80, -1}), Error);
}

TEST(InGeofenceTest, MatchesBruteForceDistance) {
  UserDataset d = Grid(51.4, -0.2, 30, 0.002);
  // A huge fence whose center is far east, so its edge cuts the grid
  // nearly along a meridian.
  Geofence gf{51.43, 10.0, 0};
  double west = ChordDistance(51.43, 10.0, 51.43, -0.2);
  gf.radius_m = west - 1000;
  std::size_t expect = 0;
  for (std::size_t r = 0; r < d.num_rows(); ++r) {
    if (ChordDistance(gf.lat, gf.lon, d.columns[0][r], d.columns[1][r]) <= gf.radius_m) ++expect;
  }
  UserDataset out = InGeofence(d, gf);
  EXPECT_EQ(out.num_rows(), expect);
  EXPECT_GT(expect, 0u);
  EXPECT_LT(expect, d.num_rows());
  EXPECT_NEAR(HaversineMeters(0, 0, 0, 1), 6371008.8 * std::numbers::pi / 180, 1e-6);
}

TEST(InGeofenceTest, LargerRadiusNeverRemovesRows) {
  UserDataset d = GenerateTask(Spec(TaskKind::kClassification2, 1, 500, 8))[0];
  std::size_t prev = 0;
  for (double r = 0; r <= 20000; r += 250) {
    std::size_t n = InGeofence(d, Geofence{40.4432, -79.9428, r}).num_rows();
    EXPECT_GE(n, prev);
    prev = n;
  }
  EXPECT_EQ(prev, d.num_rows());
}

TEST(CsvTest, RoundTripsExactly) {
  auto dir = std::filesystem::temp_directory_path() / "polifed_data_test";
  std::filesystem::create_directories(dir);
  UserDataset d = GenerateTask(Spec(TaskKind::kClassification2, 1, 25, 6))[0];
  std::string path = (dir / "u.csv").string();
  WriteCsv(d, path);
  EXPECT_EQ(ReadCsv(path), d);
  EXPECT_THROW(ReadCsv((dir / "missing.csv").string()), Error);
  std::filesystem::remove_all(dir);
}

TEST(DatasetTest, ValidateRejectsBadTables) {
  UserDataset d;
  d.schema = {{"a", {}}, {"label", {}}};
  d.columns = {{1, 2}, {0}};
  EXPECT_THROW(d.Validate(), Error);
  d.columns = {{1, 2}, {0, 1}};
  EXPECT_NO_THROW(d.Validate());
  d.label_column = "y";
  EXPECT_THROW(d.Validate(), Error);
}

}  // namespace
}  // namespace polifed::data
