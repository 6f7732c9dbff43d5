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

// Test-only oracles. Everything here is computed independently of the
// library's numerical paths (own sigmoid in long double, own linear algebra).

#ifndef FEDCHOICE_TESTS_ORACLES_H_
#define FEDCHOICE_TESTS_ORACLES_H_

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "fedchoice/choice_model.h"

namespace fedchoice::testing {

// Random dataset with attributes in the default synthetic ranges.
inline std::vector<Observation> RandomData(std::mt19937_64 &gen, std::size_t n, double cost_max = 300.0,
                                           double time_max = 600.0) {
  std::uniform_real_distribution<double> cost(20.0, cost_max);
  std::uniform_real_distribution<double> time(60.0, time_max);
  std::bernoulli_distribution coin(0.5);
  std::vector<Observation> out(n);
  for (auto &o : out) {
    o.cost_auto = cost(gen);
    o.cost_train = cost(gen);
    o.time_auto = time(gen);
    o.time_train = time(gen);
    o.choice = coin(gen) ? Mode::kAuto : Mode::kTrain;
  }
  return out;
}

inline BetaVector RandomBeta(std::mt19937_64 &gen) {
  std::uniform_real_distribution<double> a(-1.0, 1.0), c(-0.01, 0.01), t(-0.005, 0.005);
  return {a(gen), c(gen), t(gen)};
}

inline long double OracleProbAuto(const BetaVector &b, const Observation &o) {
  const long double v = static_cast<long double>(b.asc) +
                        static_cast<long double>(b.cost) * (static_cast<long double>(o.cost_auto) - o.cost_train) +
                        static_cast<long double>(b.time) * (static_cast<long double>(o.time_auto) - o.time_train);
  return 1.0L / (1.0L + std::exp(-v));
}

inline std::array<double, 3> CentralDifferenceGradient(const BetaVector &b, std::span<const Observation> data,
                                                       double h) {
  std::array<double, 3> g{};
  for (int k = 0; k < 3; ++k) {
    auto plus = b.ToArray();
    auto minus = b.ToArray();
    plus[k] += h;
    minus[k] -= h;
    g[k] = (choice_model::LogLikelihood(BetaVector::FromArray(plus), data) -
            choice_model::LogLikelihood(BetaVector::FromArray(minus), data)) /
           (2.0 * h);
  }
  return g;
}

// 3x3 solve by Cramer's rule in long double.
inline std::array<long double, 3> Solve3(const std::array<long double, 9> &m, const std::array<long double, 3> &r) {
  auto det = [](const std::array<long double, 9> &a) {
    return a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6]) +
           a[2] * (a[3] * a[7] - a[4] * a[6]);
  };
  const long double d = det(m);
  if (d == 0.0L) throw std::runtime_error("singular system");
  std::array<long double, 3> x{};
  for (int c = 0; c < 3; ++c) {
    auto mc = m;
    for (int r2 = 0; r2 < 3; ++r2) mc[r2 * 3 + c] = r[r2];
    x[c] = det(mc) / d;
  }
  return x;
}

// Newton-Raphson maximum likelihood in long double.
inline BetaVector NewtonMle(std::span<const Observation> data, int max_iter = 100) {
  std::array<long double, 3> b{0, 0, 0};
  for (int it = 0; it < max_iter; ++it) {
    std::array<long double, 3> g{};
    std::array<long double, 9> h{};
    for (const auto &o : data) {
      const long double x[3] = {1.0L, static_cast<long double>(o.cost_auto) - o.cost_train,
                                static_cast<long double>(o.time_auto) - o.time_train};
      const long double v = b[0] + b[1] * x[1] + b[2] * x[2];
      const long double p = 1.0L / (1.0L + std::exp(-v));
      const long double y = o.choice == Mode::kAuto ? 1.0L : 0.0L;
      for (int r = 0; r < 3; ++r) {
        g[r] += (y - p) * x[r];
        for (int c = 0; c < 3; ++c) h[r * 3 + c] += p * (1 - p) * x[r] * x[c];
      }
    }
    const auto step = Solve3(h, g);
    long double norm = 0;
    for (int k = 0; k < 3; ++k) {
      b[k] += step[k];
      norm += std::fabs(step[k]);
    }
    if (norm < 1e-15L) break;
  }
  return {static_cast<double>(b[0]), static_cast<double>(b[1]), static_cast<double>(b[2])};
}

// Nonparametric bootstrap of the MLE: per-parameter standard deviation.
inline std::array<double, 3> BootstrapStdErrors(std::span<const Observation> data, int resamples, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  std::vector<std::array<double, 3>> est;
  std::vector<Observation> sample(data.size());
  for (int r = 0; r < resamples; ++r) {
    for (auto &s : sample) s = data[pick(gen)];
    est.push_back(NewtonMle(sample).ToArray());
  }
  std::array<double, 3> sd{};
  for (int k = 0; k < 3; ++k) {
    double mean = 0;
    for (const auto &e : est) mean += e[k];
    mean /= est.size();
    double ss = 0;
    for (const auto &e : est) ss += (e[k] - mean) * (e[k] - mean);
    sd[k] = std::sqrt(ss / (est.size() - 1));
  }
  return sd;
}

}  // namespace fedchoice::testing

#endif  // FEDCHOICE_TESTS_ORACLES_H_
