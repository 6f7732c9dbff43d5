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

#ifndef FEDCHOICE_CHOICE_MODEL_H_
#define FEDCHOICE_CHOICE_MODEL_H_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

namespace fedchoice {

enum class Mode { kAuto, kTrain };

// One respondent's stated choice between automobile and train. Costs are in
// money units, times in minutes.
struct Observation {
  Mode choice = Mode::kAuto;
  double cost_auto = 0.0;
  double cost_train = 0.0;
  double time_auto = 0.0;
  double time_train = 0.0;

  bool operator==(const Observation &) const = default;
};

// Throws std::invalid_argument if an attribute is non-finite or negative.
void ValidateObservation(const Observation &obs);

// Parameters of the auto-vs-train utility difference. The train constant is
// the fixed reference (zero) and is not stored.
struct BetaVector {
  double asc = 0.0;   // automobile preference constant
  double cost = 0.0;  // per money unit
  double time = 0.0;  // per minute

  BetaVector operator+(const BetaVector &step) const { return {asc + step.asc, cost + step.cost, time + step.time}; }
  bool operator==(const BetaVector &) const = default;

  std::array<double, 3> ToArray() const { return {asc, cost, time}; }
  static BetaVector FromArray(const std::array<double, 3> &v) { return {v[0], v[1], v[2]}; }
  bool IsFinite() const;
};

using Vector3 = std::array<double, 3>;

struct FitStatistics {
  double null_ll = 0.0;
  double final_ll = 0.0;
  double rho_square = 0.0;
  // Only available where the observations are (the chief never has them).
  std::optional<Vector3> std_errors;
};

class EmptyDatasetError : public std::invalid_argument {
 public:
  EmptyDatasetError() : std::invalid_argument("log-likelihood requires at least one observation") {}
};

class SingularInformationError : public std::runtime_error {
 public:
  explicit SingularInformationError(const std::string &what) : std::runtime_error(what) {}
};

namespace choice_model {

// V = asc + cost * (c_a - c_tr) + time * (t_a - t_tr)
double Utility(const BetaVector &beta, const Observation &obs);

// Binary logit probability of choosing the automobile. Evaluated in the
// overflow-safe branch form and kept inside the open interval (0, 1).
double ProbAuto(const BetaVector &beta, const Observation &obs);
double ProbTrain(const BetaVector &beta, const Observation &obs);
double SigmoidOpen(double v);

// ln P(chosen alternative), computed without forming the probability.
double LogProbChosen(const BetaVector &beta, const Observation &obs);

// Sum over observations of ln P(chosen). Throws EmptyDatasetError.
double LogLikelihood(const BetaVector &beta, std::span<const Observation> data);

// Equal-shares null: -n ln 2. Throws std::invalid_argument for n == 0.
double NullLogLikelihood(std::size_t n);

// 1 - final/null. Throws std::invalid_argument unless null_ll < 0.
double RhoSquare(double null_ll, double final_ll);

// Regressor row x_n = (1, c_a - c_tr, t_a - t_tr).
Vector3 Regressors(const Observation &obs);

// Score vector sum_n (y_auto - P(auto)) x_n.
Vector3 Gradient(const BetaVector &beta, std::span<const Observation> data);

// Observed information sum_n P(1-P) x_n x_n^T, row-major.
std::array<double, 9> Information(const BetaVector &beta, std::span<const Observation> data);

// Square roots of the diagonal of the inverse observed information.
// Throws SingularInformationError when the information is rank deficient.
Vector3 StdErrors(const BetaVector &beta, std::span<const Observation> data);

}  // namespace choice_model
}  // namespace fedchoice

#endif  // FEDCHOICE_CHOICE_MODEL_H_
