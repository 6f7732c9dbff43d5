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

#ifndef FEDCHOICE_METRICS_H_
#define FEDCHOICE_METRICS_H_

#include <cmath>
#include <cstdint>
#include <string>

namespace fedchoice {

// Running mean and population standard deviation (Welford).
class LatencyStats {
 public:
  void Add(double seconds) {
    ++count_;
    const double delta = seconds - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (seconds - mean_);
    if (seconds < min_ || count_ == 1) min_ = seconds;
    if (seconds > max_ || count_ == 1) max_ = seconds;
  }
  std::uint64_t count() const { return count_; }
  double mean() const { return mean_; }
  double sigma() const { return count_ == 0 ? 0.0 : std::sqrt(m2_ / static_cast<double>(count_)); }
  double min() const { return min_; }
  double max() const { return max_; }

 private:
  std::uint64_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  double min_ = 0.0;
  double max_ = 0.0;
};

// Per-node latency of data messages. Send runs from serialization start to
// transport accept (for the chief, across the whole broadcast); get runs from
// transport delivery to the end of deserialization.
struct LatencyRecord {
  std::string node_id;
  LatencyStats send;
  LatencyStats get;
};

struct TrafficCounters {
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_received = 0;
  std::uint64_t data_messages_sent = 0;
  std::uint64_t data_messages_received = 0;
  std::uint64_t bytes_sent = 0;
  std::uint64_t bytes_received = 0;
  std::uint64_t max_data_frame_bytes = 0;

  std::uint64_t data_messages() const { return data_messages_sent + data_messages_received; }
  std::uint64_t bytes() const { return bytes_sent + bytes_received; }
};

}  // namespace fedchoice

#endif  // FEDCHOICE_METRICS_H_
