#pragma once

// Reference computations used only by the tests. Each is written from the
// definition and shares no code path with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

/// Fraction of (positive, negative) pairs ranked correctly; ties count 1/2.
inline double pair_count_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / pairs;
}

/// Softmax in long double without the max shift.
inline std::vector<double> direct_softmax(const std::vector<double>& raws) {
  long double total = 0.0L;
  for (const double r : raws) total += std::exp(static_cast<long double>(r));
  std::vector<double> out;
  for (const double r : raws) out.push_back(static_cast<double>(std::exp(static_cast<long double>(r)) / total));
  return out;
}

struct NucleusAnswer {
  std::vector<std::size_t> members;  // positions into probs, ascending
  std::size_t size = 0;
};

/// Enumerates every subset of `probs` (n <= 20) and returns the smallest size
/// reaching cumulative probability p together with the unique highest-mass set
/// of that size. The slack matches the library's comparison.
inline NucleusAnswer brute_force_nucleus(const std::vector<double>& probs, double p, double slack) {
  const std::size_t n = probs.size();
  std::size_t best_size = n + 1;
  double best_mass = -1.0;
  std::uint32_t best_mask = 0;
  for (std::uint32_t mask = 1; mask < (1U << n); ++mask) {
    double mass = 0.0;
    std::size_t size = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1U << i)) {
        mass += probs[i];
        ++size;
      }
    }
    if (mass + slack < p) continue;
    if (size < best_size || (size == best_size && mass > best_mass)) {
      best_size = size;
      best_mass = mass;
      best_mask = mask;
    }
  }
  NucleusAnswer answer;
  answer.size = best_size;
  for (std::size_t i = 0; i < n; ++i) {
    if (best_mask & (1U << i)) answer.members.push_back(i);
  }
  return answer;
}

/// Random probability vector of length n (Dirichlet(1) via exponentials).
inline std::vector<double> random_distribution(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> draw(1.0);
  std::vector<double> probs(n);
  double total = 0.0;
  for (auto& p : probs) total += (p = draw(rng));
  for (auto& p : probs) p /= total;
  return probs;
}

/// Scores with duplicated values injected and labels covering both classes.
inline void random_labeled_scores(std::mt19937_64& rng, std::size_t n, std::vector<double>& scores,
                                  std::vector<int>& labels) {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::uniform_int_distribution<int> grid(0, 9);
  scores.assign(n, 0.0);
  labels.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    // A third of the scores come from a 10-point grid so ties are common.
    scores[i] = (i % 3 == 0) ? grid(rng) / 10.0 : uniform(rng);
    labels[i] = coin(rng) ? 1 : 0;
  }
  labels[0] = 0;
  labels[n - 1] = 1;
}

}  // namespace oracle
