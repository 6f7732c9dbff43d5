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

#include "fedchoice/choice_model.h"

#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace fedchoice {

void ValidateObservation(const Observation &obs) {
  for (double v : {obs.cost_auto, obs.cost_train, obs.time_auto, obs.time_train}) {
    if (!std::isfinite(v)) throw std::invalid_argument("observation attribute is not finite");
    if (v < 0.0) throw std::invalid_argument("observation attribute is negative");
  }
}

bool BetaVector::IsFinite() const { return std::isfinite(asc) && std::isfinite(cost) && std::isfinite(time); }

namespace choice_model {
namespace {

// ln(1 / (1 + e^-v)) without overflow in either tail.
double LogSigmoid(double v) {
  if (v >= 0.0) return -std::log1p(std::exp(-v));
  return v - std::log1p(std::exp(v));
}

}  // namespace

double Utility(const BetaVector &beta, const Observation &obs) {
  return beta.asc + beta.cost * (obs.cost_auto - obs.cost_train) + beta.time * (obs.time_auto - obs.time_train);
}

double SigmoidOpen(double v) {
  double p;
  if (v >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-v));
  } else {
    const double e = std::exp(v);
    p = e / (1.0 + e);
  }
  // Saturated tails are pinned to the nearest representable interior value.
  constexpr double kBelowOne = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  if (p > kBelowOne) p = kBelowOne;
  if (p <= 0.0) p = std::numeric_limits<double>::denorm_min();
  return p;
}

double ProbAuto(const BetaVector &beta, const Observation &obs) { return SigmoidOpen(Utility(beta, obs)); }

double ProbTrain(const BetaVector &beta, const Observation &obs) { return 1.0 - ProbAuto(beta, obs); }

double LogProbChosen(const BetaVector &beta, const Observation &obs) {
  const double v = Utility(beta, obs);
  return obs.choice == Mode::kAuto ? LogSigmoid(v) : LogSigmoid(-v);
}

double LogLikelihood(const BetaVector &beta, std::span<const Observation> data) {
  if (data.empty()) throw EmptyDatasetError();
  double ll = 0.0;
  for (const auto &obs : data) ll += LogProbChosen(beta, obs);
  return ll;
}

double NullLogLikelihood(std::size_t n) {
  if (n == 0) throw std::invalid_argument("null log-likelihood requires n >= 1");
  return -static_cast<double>(n) * std::log(2.0);
}

double RhoSquare(double null_ll, double final_ll) {
  if (!(null_ll < 0.0)) throw std::invalid_argument("rho square requires a negative null log-likelihood");
  if (!(final_ll < 0.0)) throw std::invalid_argument("rho square requires a negative final log-likelihood");
  return 1.0 - final_ll / null_ll;
}

Vector3 Regressors(const Observation &obs) {
  return {1.0, obs.cost_auto - obs.cost_train, obs.time_auto - obs.time_train};
}

Vector3 Gradient(const BetaVector &beta, std::span<const Observation> data) {
  if (data.empty()) throw EmptyDatasetError();
  Vector3 g{0.0, 0.0, 0.0};
  for (const auto &obs : data) {
    const double y = obs.choice == Mode::kAuto ? 1.0 : 0.0;
    const double resid = y - ProbAuto(beta, obs);
    const Vector3 x = Regressors(obs);
    for (int k = 0; k < 3; ++k) g[k] += resid * x[k];
  }
  return g;
}

std::array<double, 9> Information(const BetaVector &beta, std::span<const Observation> data) {
  if (data.empty()) throw EmptyDatasetError();
  std::array<double, 9> info{};
  for (const auto &obs : data) {
    const double p = ProbAuto(beta, obs);
    const double w = p * (1.0 - p);
    const Vector3 x = Regressors(obs);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) info[r * 3 + c] += w * x[r] * x[c];
    }
  }
  return info;
}

Vector3 StdErrors(const BetaVector &beta, std::span<const Observation> data) {
  const auto info = Information(beta, data);
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) m(r, c) = info[r * 3 + c];
  }
  // Scale to unit diagonal so the rank test is independent of attribute units.
  Eigen::Vector3d d = m.diagonal();
  if ((d.array() <= 0.0).any()) throw SingularInformationError("information matrix has a non-positive diagonal");
  const Eigen::Vector3d s = d.cwiseSqrt().cwiseInverse();
  const Eigen::Matrix3d scaled = s.asDiagonal() * m * s.asDiagonal();
  Eigen::FullPivLU<Eigen::Matrix3d> lu(scaled);
  lu.setThreshold(1e-10);
  if (lu.rank() < 3) throw SingularInformationError("information matrix is rank deficient");
  const Eigen::Matrix3d inv = s.asDiagonal() * lu.inverse() * s.asDiagonal();
  Vector3 se{};
  for (int k = 0; k < 3; ++k) {
    if (!(inv(k, k) > 0.0)) throw SingularInformationError("inverse information has a non-positive diagonal");
    se[k] = std::sqrt(inv(k, k));
  }
  return se;
}

}  // namespace choice_model
}  // namespace fedchoice
