#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "metades/linear.hpp"

namespace metades {

struct VoteResult {
  int label = 0;
  std::vector<double> votes;  // per-class tally
};

// Argmax of `votes`. When several classes share the top tally the winner is
// the tied class with the highest tie score (computed on demand), then the
// lowest index.
template <typename TieScores>
int resolve_vote(std::span<const double> votes, TieScores&& tie_scores) {
  std::size_t best = 0;
  std::size_t tied = 1;
  for (std::size_t l = 1; l < votes.size(); ++l) {
    if (votes[l] > votes[best]) {
      best = l;
      tied = 1;
    } else if (votes[l] == votes[best]) {
      ++tied;
    }
  }
  if (tied == 1) return static_cast<int>(best);
  const std::vector<double> scores = tie_scores();
  const double top = votes[best];
  std::size_t winner = best;
  for (std::size_t l = best + 1; l < votes.size(); ++l)
    if (votes[l] == top && scores[l] > scores[winner]) winner = l;
  return static_cast<int>(winner);
}

// Unweighted majority vote of the selected members. `decisions` holds the
// prediction of every pool member for x. Ties are broken by the summed class
// posteriors of the selected members.
inline VoteResult majority_vote(const Pool& pool, std::span<const std::size_t> selected,
                                std::span<const int> decisions, FeatureView x) {
  VoteResult r;
  r.votes.assign(static_cast<std::size_t>(pool.num_classes()), 0.0);
  for (std::size_t i : selected) r.votes[static_cast<std::size_t>(decisions[i])] += 1.0;
  r.label = resolve_vote(r.votes, [&] {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(pool.num_classes());
    for (std::size_t i : selected) sum += pool[i].posterior(x);
    return std::vector<double>(sum.begin(), sum.end());
  });
  return r;
}

// Majority vote of the whole pool.
inline VoteResult pool_vote(const Pool& pool, std::span<const int> decisions, FeatureView x) {
  std::vector<std::size_t> all(pool.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return majority_vote(pool, all, decisions, x);
}

}  // namespace metades
