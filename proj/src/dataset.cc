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

#include "fedchoice/dataset.h"

#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fedchoice/annealer.h"

namespace fedchoice {
namespace {

std::atomic<std::uint64_t> g_serializations{0};

void AppendNumber(std::string &out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

double ParseNumber(std::string_view field, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
    throw DatasetError("line " + std::to_string(line) + ": '" + std::string(field) + "' is not a finite decimal");
  }
  return v;
}

double Draw(Rng &rng, double lo, double hi) { return lo + (hi - lo) * rng.Uniform(); }

}  // namespace

void AttributeRanges::Validate() const {
  const bool ok = std::isfinite(auto_cost_shift) && cost_min + auto_cost_shift >= 0.0 && std::isfinite(cost_min) && std::isfinite(cost_max) && std::isfinite(time_min) &&
                  std::isfinite(time_max) && cost_min >= 0.0 && time_min >= 0.0 && cost_min <= cost_max &&
                  time_min <= time_max;
  if (!ok) throw std::invalid_argument("attribute ranges must be finite, non-negative and ordered");
}

SurveyDataset GenerateSynthetic(std::size_t n, const BetaVector &true_beta, const AttributeRanges &ranges,
                                std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("synthetic dataset needs n >= 1");
  ranges.Validate();
  Rng rng(seed);
  SurveyDataset ds;
  ds.rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Observation obs;
    obs.cost_auto = std::round(Draw(rng, ranges.cost_min + ranges.auto_cost_shift, ranges.cost_max + ranges.auto_cost_shift) * 100.0) / 100.0;
    obs.cost_train = std::round(Draw(rng, ranges.cost_min, ranges.cost_max) * 100.0) / 100.0;
    obs.time_auto = std::round(Draw(rng, ranges.time_min, ranges.time_max) * 10.0) / 10.0;
    obs.time_train = std::round(Draw(rng, ranges.time_min, ranges.time_max) * 10.0) / 10.0;
    const double p = choice_model::ProbAuto(true_beta, obs);
    obs.choice = rng.Uniform() < p ? Mode::kAuto : Mode::kTrain;
    ds.rows.push_back(obs);
  }
  std::ostringstream prov;
  prov.precision(17);
  prov << "synthetic seed=" << seed << " beta=(" << true_beta.asc << "," << true_beta.cost << "," << true_beta.time
       << ")";
  ds.provenance = prov.str();
  return ds;
}

std::string ToCsv(std::span<const Observation> rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto &obs : rows) {
    out += obs.choice == Mode::kAuto ? "auto" : "train";
    for (double v : {obs.cost_auto, obs.cost_train, obs.time_auto, obs.time_train}) {
      out += ',';
      AppendNumber(out, v);
    }
    out += '\n';
  }
  g_serializations.fetch_add(rows.size(), std::memory_order_relaxed);
  return out;
}

SurveyDataset ParseCsv(std::string_view text, std::string provenance) {
  SurveyDataset ds;
  ds.provenance = std::move(provenance);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!header_seen) {
      if (line != kCsvHeader) throw DatasetError(std::string("header must be exactly '") + kCsvHeader + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    std::string_view fields[5];
    std::size_t start = 0;
    for (int f = 0; f < 5; ++f) {
      const std::size_t comma = f < 4 ? line.find(',', start) : line.size();
      if (comma == std::string_view::npos) throw DatasetError("line " + std::to_string(line_no) + ": too few fields");
      fields[f] = line.substr(start, comma - start);
      start = comma + 1;
    }
    if (fields[4].find(',') != std::string_view::npos) {
      throw DatasetError("line " + std::to_string(line_no) + ": too many fields");
    }
    Observation obs;
    if (fields[0] == "auto") {
      obs.choice = Mode::kAuto;
    } else if (fields[0] == "train") {
      obs.choice = Mode::kTrain;
    } else {
      throw DatasetError("line " + std::to_string(line_no) + ": choice must be 'auto' or 'train'");
    }
    obs.cost_auto = ParseNumber(fields[1], line_no);
    obs.cost_train = ParseNumber(fields[2], line_no);
    obs.time_auto = ParseNumber(fields[3], line_no);
    obs.time_train = ParseNumber(fields[4], line_no);
    try {
      ValidateObservation(obs);
    } catch (const std::invalid_argument &e) {
      throw DatasetError("line " + std::to_string(line_no) + ": " + e.what());
    }
    ds.rows.push_back(obs);
  }
  if (!header_seen) throw DatasetError("empty dataset file");
  return ds;
}

SurveyDataset ReadCsv(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseCsv(buf.str(), "file " + path.string());
}

void WriteCsv(const std::filesystem::path &path, std::span<const Observation> rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DatasetError("cannot write " + path.string());
  const std::string text = ToCsv(rows);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw DatasetError("write failed on " + path.string());
}

std::vector<std::vector<Observation>> Partition(std::span<const Observation> rows, std::span<const std::size_t> sizes,
                                                std::uint64_t seed) {
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  if (total != rows.size()) throw SizeMismatch(total, rows.size());
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = rng.Index(i);
    std::swap(order[i - 1], order[j]);
  }
  std::vector<std::vector<Observation>> parts;
  parts.reserve(sizes.size());
  std::size_t next = 0;
  for (std::size_t size : sizes) {
    std::vector<Observation> part;
    part.reserve(size);
    for (std::size_t k = 0; k < size; ++k) part.push_back(rows[order[next++]]);
    parts.push_back(std::move(part));
  }
  return parts;
}

std::uint64_t ObservationSerializations() { return g_serializations.load(std::memory_order_relaxed); }

}  // namespace fedchoice
