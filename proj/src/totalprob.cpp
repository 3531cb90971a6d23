#include "gendet/totalprob.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "gendet/logreg.hpp"

namespace gendet {

ThresholdModel fit_totalprob(std::span<const double> logliks, std::span<const Label> labels) {
  if (logliks.size() != labels.size()) throw std::invalid_argument("fit_totalprob: size mismatch");
  double sm = 0.0, sh = 0.0;
  std::size_t nm = 0, nh = 0;
  for (std::size_t i = 0; i < logliks.size(); ++i) {
    if (!std::isfinite(logliks[i])) throw std::invalid_argument("fit_totalprob: non-finite log-likelihood");
    if (labels[i] == Label::machine) {
      sm += logliks[i];
      ++nm;
    } else {
      sh += logliks[i];
      ++nh;
    }
  }
  if (nm == 0 || nh == 0) throw std::invalid_argument("fit_totalprob: need at least one example per class");
  return {sm / static_cast<double>(nm), sh / static_cast<double>(nh), false};
}

Label classify_totalprob(const ThresholdModel& m, double loglik) {
  return std::abs(loglik - m.mu_machine) <= std::abs(loglik - m.mu_human) ? Label::machine : Label::human;
}

double totalprob_machine_probability(const ThresholdModel& m, double loglik) {
  if (classify_totalprob(m, loglik) == Label::machine && m.mu_machine == m.mu_human) return 0.5;
  const double mid = 0.5 * (m.mu_machine + m.mu_human);
  const double dir = m.mu_machine >= m.mu_human ? 1.0 : -1.0;
  const double p = sigmoid((loglik - mid) * dir);
  // Keep the probability on the same side of 0.5 as the distance rule.
  if (classify_totalprob(m, loglik) == Label::machine) return std::max(p, 0.5);
  return std::min(p, std::nextafter(0.5, 0.0));
}

}  // namespace gendet
