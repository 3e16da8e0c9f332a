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

#include "tilscore/survival.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "tilscore/error.hpp"

namespace tilscore {

void validate(std::span<const SurvivalRecord> records) {
  for (const auto& r : records) {
    if (!(r.time > 0.0) || !std::isfinite(r.time)) throw ValidationError("survival time must be positive and finite");
    if (!std::isfinite(r.risk_score)) throw ValidationError("risk score must be finite");
  }
}

namespace {

class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0) {}
  void add(std::size_t i) {
    for (++i; i < tree_.size(); i += i & (~i + 1)) ++tree_[i];
  }
  /// Count of entries with index < i.
  std::int64_t prefix(std::size_t i) const {
    std::int64_t s = 0;
    for (; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

 private:
  std::vector<std::int64_t> tree_;
};

}  // namespace

double concordance_index(std::span<const SurvivalRecord> records) {
  validate(records);
  const std::size_t n = records.size();
  std::vector<double> risks(n);
  for (std::size_t i = 0; i < n; ++i) risks[i] = records[i].risk_score;
  std::sort(risks.begin(), risks.end());
  risks.erase(std::unique(risks.begin(), risks.end()), risks.end());
  auto rank = [&](double r) { return static_cast<std::size_t>(std::lower_bound(risks.begin(), risks.end(), r) - risks.begin()); };

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return records[a].time > records[b].time; });

  // Walk time groups from the latest; the tree holds subjects strictly later.
  Fenwick later(risks.size());
  std::int64_t in_tree = 0;
  std::int64_t concordant = 0;
  std::int64_t tied = 0;
  std::int64_t comparable = 0;
  for (std::size_t g = 0; g < n;) {
    std::size_t end = g;
    while (end < n && records[order[end]].time == records[order[g]].time) ++end;
    for (std::size_t k = g; k < end; ++k) {
      const auto& r = records[order[k]];
      if (!r.event) continue;
      const std::size_t rk = rank(r.risk_score);
      const std::int64_t below = later.prefix(rk);
      const std::int64_t at_or_below = later.prefix(rk + 1);
      concordant += below;
      tied += at_or_below - below;
      comparable += in_tree;
    }
    for (std::size_t k = g; k < end; ++k) later.add(rank(records[order[k]].risk_score));
    in_tree += static_cast<std::int64_t>(end - g);
    g = end;
  }
  if (comparable == 0) throw UndefinedMetricError("concordance_index: no comparable pairs");
  return (static_cast<double>(concordant) + 0.5 * static_cast<double>(tied)) / static_cast<double>(comparable);
}

namespace {

struct CoxEval {
  double loglik = 0.0;
  double score = 0.0;
  double information = 0.0;
};

/// Risk sets are accumulated from the latest time with a running max so the
/// exponentials never overflow.
class CoxModel {
 public:
  explicit CoxModel(std::span<const SurvivalRecord> records) {
    validate(records);
    double mean = 0.0;
    for (const auto& r : records) mean += r.risk_score;
    mean /= static_cast<double>(std::max<std::size_t>(records.size(), 1));
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return records[a].time > records[b].time; });
    for (const auto i : order) {
      // Centering leaves the partial likelihood unchanged.
      x_.push_back(records[i].risk_score - mean);
      time_.push_back(records[i].time);
      event_.push_back(records[i].event);
      events_ += records[i].event;
    }
  }

  std::size_t events() const { return events_; }

  bool constant_covariate() const {
    return std::all_of(x_.begin(), x_.end(), [&](double v) { return v == x_.front(); });
  }

  CoxEval eval(double beta) const {
    CoxEval out;
    double m = -std::numeric_limits<double>::infinity();
    double s0 = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    const std::size_t n = x_.size();
    for (std::size_t g = 0; g < n;) {
      std::size_t end = g;
      while (end < n && time_[end] == time_[g]) ++end;
      for (std::size_t k = g; k < end; ++k) {
        const double eta = beta * x_[k];
        if (eta > m) {
          const double scale = std::exp(m - eta);
          s0 *= scale;
          s1 *= scale;
          s2 *= scale;
          m = eta;
        }
        const double w = std::exp(eta - m);
        s0 += w;
        s1 += w * x_[k];
        s2 += w * x_[k] * x_[k];
      }
      const double log_s0 = m + std::log(s0);
      const double xbar = s1 / s0;
      const double x2bar = s2 / s0;
      for (std::size_t k = g; k < end; ++k) {
        if (!event_[k]) continue;
        out.loglik += beta * x_[k] - log_s0;
        out.score += x_[k] - xbar;
        out.information += std::max(0.0, x2bar - xbar * xbar);
      }
      g = end;
    }
    return out;
  }

 private:
  std::vector<double> x_;
  std::vector<double> time_;
  std::vector<char> event_;
  std::size_t events_ = 0;
};

constexpr double kBetaTolerance = 1e-8;
constexpr int kMaxIterations = 50;
constexpr double kMaxAbsBeta = 50.0;

}  // namespace

double cox_partial_loglik(std::span<const SurvivalRecord> records, double beta) {
  return CoxModel(records).eval(beta).loglik;
}

double cox_score(std::span<const SurvivalRecord> records, double beta) { return CoxModel(records).eval(beta).score; }

CoxFit cox_fit_single(std::span<const SurvivalRecord> records) {
  const CoxModel model(records);
  if (model.events() == 0) throw UndefinedMetricError("cox_fit_single: no events");
  CoxFit fit;
  CoxEval cur = model.eval(0.0);
  if (model.constant_covariate()) {
    fit.log_partial_likelihood = cur.loglik;
    return fit;
  }
  double beta = 0.0;
  for (int it = 1; it <= kMaxIterations; ++it) {
    fit.iterations = it;
    if (!(cur.information > 0.0)) {
      // Flat from the start: no risk set varies in the covariate.
      if (beta == 0.0 && cur.score == 0.0) break;
      // Otherwise the curvature underflowed while climbing a monotone likelihood.
      throw DivergingBetaError("cox_fit_single: information vanished at beta = " + std::to_string(beta));
    }
    double step = cur.score / cur.information;
    double next = beta + step;
    CoxEval cand = model.eval(next);
    // Near the optimum the gain drops below rounding noise in the sum, so a
    // candidate within that noise counts as no worse.
    const double noise = 1e-12 * (1.0 + std::abs(cur.loglik));
    for (int h = 0; h < 40 && !(cand.loglik >= cur.loglik - noise); ++h) {
      step *= 0.5;
      next = beta + step;
      cand = model.eval(next);
    }
    beta = next;
    cur = cand;
    if (std::abs(beta) > kMaxAbsBeta) throw DivergingBetaError("cox_fit_single: |beta| exceeded 50");
    if (std::abs(step) < kBetaTolerance) {
      fit.beta = beta;
      fit.log_partial_likelihood = cur.loglik;
      return fit;
    }
  }
  if (fit.iterations == kMaxIterations) throw DivergingBetaError("cox_fit_single: no convergence within 50 iterations");
  fit.beta = beta;
  fit.log_partial_likelihood = cur.loglik;
  return fit;
}

}  // namespace tilscore
