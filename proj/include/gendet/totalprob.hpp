#pragma once

#include <span>

#include "gendet/excerpt.hpp"

namespace gendet {

// Nearest-class-mean classifier over per-excerpt log-likelihood.
struct ThresholdModel {
  double mu_machine = 0.0;
  double mu_human = 0.0;
  // Total log-likelihood when every training excerpt had the same scored
  // length; per-token mean otherwise.
  bool per_token_mean = false;
};

ThresholdModel fit_totalprob(std::span<const double> logliks, std::span<const Label> labels);

// Machine iff |x - mu_machine| <= |x - mu_human| (the exact midpoint is machine).
Label classify_totalprob(const ThresholdModel& m, double loglik);

// sigmoid of the signed distance past the midpoint, oriented toward the
// machine mean; >= 0.5 exactly when classify_totalprob says machine.
double totalprob_machine_probability(const ThresholdModel& m, double loglik);

}  // namespace gendet
