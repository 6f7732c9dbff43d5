/**
 * Copyright 2026 The fedchoice Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef FEDCHOICE_DATASET_H_
#define FEDCHOICE_DATASET_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fedchoice/choice_model.h"

namespace fedchoice {

inline constexpr char kCsvHeader[] = "choice,cost_auto,cost_train,time_auto,time_train";

class DatasetError : public std::runtime_error {
 public:
  explicit DatasetError(const std::string &what) : std::runtime_error(what) {}
};

class SizeMismatch : public DatasetError {
 public:
  SizeMismatch(std::size_t total, std::size_t rows)
      : DatasetError("partition sizes sum to " + std::to_string(total) + " but the dataset has " +
                     std::to_string(rows) + " rows") {}
};

// Synthetic attribute ranges (money units, minutes). Not taken from any
// real survey.
struct AttributeRanges {
  double cost_min = 20.0;
  double cost_max = 300.0;
  double time_min = 60.0;
  double time_max = 600.0;
  // Moves the auto cost range only, for sensitivity experiments.
  double auto_cost_shift = 0.0;

  void Validate() const;
};

struct SurveyDataset {
  std::vector<Observation> rows;
  std::string provenance;
};

// Attributes are uniform on the ranges (costs rounded to cents, times to
// tenths of a minute); each choice is a Bernoulli draw with the logit
// probability under true_beta. Five draws per row.
SurveyDataset GenerateSynthetic(std::size_t n, const BetaVector &true_beta, const AttributeRanges &ranges,
                                std::uint64_t seed);

std::string ToCsv(std::span<const Observation> rows);
SurveyDataset ParseCsv(std::string_view text, std::string provenance = "external");
SurveyDataset ReadCsv(const std::filesystem::path &path);
void WriteCsv(const std::filesystem::path &path, std::span<const Observation> rows);

// Seeded Fisher-Yates permutation split into consecutive blocks.
std::vector<std::vector<Observation>> Partition(std::span<const Observation> rows, std::span<const std::size_t> sizes,
                                                std::uint64_t seed);

// Process-wide count of observation rows ever serialized. Only the CSV
// writer serializes observations.
std::uint64_t ObservationSerializations();

}  // namespace fedchoice

#endif  // FEDCHOICE_DATASET_H_
