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

#include "fedchoice/annealer.h"

#include <algorithm>
#include <cmath>
#include <exception>

namespace fedchoice {

std::uint64_t Rng::Index(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::Index requires n >= 1");
  const auto i = static_cast<std::uint64_t>(Uniform() * static_cast<double>(n));
  return std::min(i, n - 1);
}

void AnnealingSchedule::Validate() const {
  if (!(temp_min > 0.0 && temp_min < temp_initial)) {
    throw std::invalid_argument("schedule requires 0 < temp_min < temp_initial");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("schedule requires 0 < alpha < 1");
  if (inner_iterations < 1) throw std::invalid_argument("schedule requires inner_iterations >= 1");
  // Zero is accepted as the degenerate no-move step.
  if (!(step_half_width >= 0.0) || !std::isfinite(step_half_width)) {
    throw std::invalid_argument("schedule requires a finite non-negative step_half_width");
  }
}

namespace annealer {

std::uint64_t OuterLevelCount(const AnnealingSchedule &schedule) {
  schedule.Validate();
  std::uint64_t levels = 0;
  for (double temp = schedule.temp_initial; temp > schedule.temp_min; temp *= schedule.alpha) ++levels;
  return levels;
}

BetaVector Propose(const BetaVector &beta, const AnnealingSchedule &schedule, Rng &rng) {
  const double h = schedule.step_half_width;
  // h * (2u - 1) stays strictly below h for u < 1.
  const double e_asc = h * (2.0 * rng.Uniform() - 1.0);
  const double e_cost = h * (2.0 * rng.Uniform() - 1.0);
  const double e_time = h * (2.0 * rng.Uniform() - 1.0);
  return beta + BetaVector{e_asc, e_cost, e_time};
}

double AcceptanceProbability(double ll_new, double ll_old, double temp) {
  if (!(temp > 0.0)) throw std::invalid_argument("acceptance probability requires temp > 0");
  return std::exp(std::min((ll_new - ll_old) / temp, 709.0));
}

namespace {

double EvaluateAt(Evaluator &evaluator, const BetaVector &beta, std::uint64_t round) {
  try {
    return evaluator.Evaluate(beta);
  } catch (const std::exception &e) {
    std::throw_with_nested(EvaluatorFailure(round, e.what()));
  }
}

}  // namespace

AnnealResult Run(const AnnealingSchedule &schedule, const BetaVector &beta_initial, Evaluator &evaluator, Rng &rng,
                 const RunOptions &options) {
  schedule.Validate();
  AnnealResult result;
  AnnealState state{beta_initial, 0.0, schedule.temp_initial, 0};

  state.ll = EvaluateAt(evaluator, state.beta, 0);
  ++result.evaluator_calls;
  if (options.record_trajectory) result.trajectory.push_back({0, state.beta, state.ll, state.temp, 0.0, 0.0});

  while (state.temp > schedule.temp_min) {
    ++result.outer_levels;
    for (std::uint64_t i = 0; i < schedule.inner_iterations; ++i) {
      ++state.round;
      const BetaVector candidate = Propose(state.beta, schedule, rng);
      const double ll_new = EvaluateAt(evaluator, candidate, state.round);
      ++result.evaluator_calls;
      ++result.proposals;
      const double ap = AcceptanceProbability(ll_new, state.ll, state.temp);
      const double draw = rng.Uniform();
      if (ap > draw) {
        state.beta = candidate;
        state.ll = ll_new;
        ++result.accepted;
        if (options.record_trajectory) {
          result.trajectory.push_back({state.round, state.beta, state.ll, state.temp, ap, draw});
        }
      }
    }
    result.final_temp = state.temp;
    state.temp *= schedule.alpha;
  }

  result.beta = state.beta;
  result.ll = state.ll;
  return result;
}

}  // namespace annealer
}  // namespace fedchoice
