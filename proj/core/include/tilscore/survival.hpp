// Copyright 2026 The tilscore Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// @file survival.hpp
/// @brief Harrell's concordance index and a single-covariate Cox model
/// (Breslow ties).

#pragma once

#include <span>

namespace tilscore {

struct SurvivalRecord {
  double risk_score = 0.0;
  double time = 1.0;
  bool event = false;
};

void validate(std::span<const SurvivalRecord> records);

/// Pairs (i, j) with time_i < time_j and event_i are comparable; concordant
/// when risk_i > risk_j, half credit for tied risks. O(n log n).
/// Throws UndefinedMetricError without comparable pairs.
double concordance_index(std::span<const SurvivalRecord> records);

/// Breslow partial log-likelihood of beta with risk_score as covariate.
double cox_partial_loglik(std::span<const SurvivalRecord> records, double beta);

/// First derivative of cox_partial_loglik.
double cox_score(std::span<const SurvivalRecord> records, double beta);

struct CoxFit {
  double beta = 0.0;
  double log_partial_likelihood = 0.0;
  int iterations = 0;
};

/// Newton's method from beta = 0 with step halving. Stops when |dbeta| <
/// 1e-8 or after 50 iterations. Throws DivergingBetaError once |beta| > 50
/// or when the iteration budget runs out on a monotone likelihood.
CoxFit cox_fit_single(std::span<const SurvivalRecord> records);

}  // namespace tilscore
