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

#ifndef FEDCHOICE_ANNEALER_H_
#define FEDCHOICE_ANNEALER_H_

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fedchoice/choice_model.h"

namespace fedchoice {

// Seeded generator owned by the chief (or the centralized driver). Uniform
// draws use the top 53 bits of a 64-bit Mersenne twister, so sequences are
// reproducible across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform on [0, 1).
  double Uniform() {
    ++draws_;
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  // Uniform integer on [0, n).
  std::uint64_t Index(std::uint64_t n);
  std::uint64_t draws() const { return draws_; }

 private:
  std::mt19937_64 engine_;
  std::uint64_t draws_ = 0;

};

struct AnnealingSchedule {
  double temp_initial = 1.0;
  double temp_min = 1e-5;
  double alpha = 0.9;
  std::uint64_t inner_iterations = 1000;
  double step_half_width = 0.01;

  // Throws std::invalid_argument on a violated invariant.
  void Validate() const;

  static AnnealingSchedule Defaults() { return {}; }
  // CI profile: 100 inner iterations, cooling stops at 1e-3.
  static AnnealingSchedule Fast() { return {1.0, 1e-3, 0.9, 100, 0.01}; }
};

struct AnnealState {
  BetaVector beta;
  double ll = 0.0;
  double temp = 1.0;
  std::uint64_t round = 0;
};

// One accepted state. Round 0 is the initial evaluation; `ap` and `draw` are
// the acceptance test that admitted the state (zero for round 0).
struct TrajectoryPoint {
  std::uint64_t round = 0;
  BetaVector beta;
  double ll = 0.0;
  double temp = 0.0;
  double ap = 0.0;
  double draw = 0.0;
};

struct AnnealResult {
  BetaVector beta;
  double ll = 0.0;
  std::vector<TrajectoryPoint> trajectory;
  std::uint64_t evaluator_calls = 0;
  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  std::uint64_t outer_levels = 0;
  double final_temp = 0.0;
};

// Summed log-likelihood oracle. Must be deterministic for the lifetime of a run.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual double Evaluate(const BetaVector &beta) = 0;
};

// Local evaluator over an in-memory dataset.
class LocalEvaluator : public Evaluator {
 public:
  explicit LocalEvaluator(std::span<const Observation> data) : data_(data) {}
  double Evaluate(const BetaVector &beta) override { return choice_model::LogLikelihood(beta, data_); }

 private:
  std::span<const Observation> data_;
};

class EvaluatorFailure : public std::runtime_error {
 public:
  EvaluatorFailure(std::uint64_t round, const std::string &what)
      : std::runtime_error("evaluator failed at round " + std::to_string(round) + ": " + what), round_(round) {}
  std::uint64_t round() const { return round_; }

 private:
  std::uint64_t round_;
};

namespace annealer {

// Number of temperature levels k >= 0 with temp_initial * alpha^k > temp_min.
std::uint64_t OuterLevelCount(const AnnealingSchedule &schedule);

// beta + eps, eps_i uniform on [-h, h); consumes exactly three draws.
BetaVector Propose(const BetaVector &beta, const AnnealingSchedule &schedule, Rng &rng);

// exp((ll_new - ll_old) / temp), exponent clamped at +709. Not capped at 1.
double AcceptanceProbability(double ll_new, double ll_old, double temp);

struct RunOptions {
  bool record_trajectory = true;
};

// Simulated annealing over `evaluator`. One evaluation at beta_initial, then
// OuterLevelCount * inner_iterations proposals, each consuming three draws
// for the step and one for the acceptance test. Evaluator exceptions are
// rethrown as a nested EvaluatorFailure carrying the round.
AnnealResult Run(const AnnealingSchedule &schedule, const BetaVector &beta_initial, Evaluator &evaluator, Rng &rng,
                 const RunOptions &options = {});

}  // namespace annealer
}  // namespace fedchoice

#endif  // FEDCHOICE_ANNEALER_H_
