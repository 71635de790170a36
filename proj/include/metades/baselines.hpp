#pragma once

// Literature dynamic-selection techniques and static baselines. All of them
// share the pool, the DSEL reference tables and the voting rule used by
// META-DES, so every comparison is paired.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "metades/competence.hpp"
#include "metades/dataset.hpp"
#include "metades/error.hpp"
#include "metades/linear.hpp"
#include "metades/meta_features.hpp"
#include "metades/voting.hpp"

namespace metades::baselines {

struct Options {
  std::size_t k = 7;              // region of competence size
  std::size_t kp = 7;             // KNOP output-profile neighbourhood size
  double mcb_similarity = 0.7;    // minimum profile agreement for MCB neighbours
  double mcb_threshold = 0.6;     // MCB accuracy cut (strict)
  double mla_epsilon = 1e-9;
};

// Shared, immutable per-replication state.
struct Context {
  const Pool& pool;
  const Dataset& dsel;
  const ReferenceTables& tables;  // built over dsel
  Options opts;
};

// Per-query data reused by every technique.
struct Query {
  FeatureView x;
  std::vector<int> decisions;  // prediction of each pool member
  RegionOfCompetence region;   // K nearest DSEL samples
};

inline Query make_query(const Context& ctx, FeatureView x) {
  return {x, ctx.pool.predict_all(x), knn_region(x, ctx.dsel, ctx.opts.k)};
}

struct Selection {
  int label = 0;
  std::vector<std::size_t> selected;
  std::size_t final_size = 0;  // neighbourhood size used after any relaxation; 0 = fell back
  std::vector<double> votes;
};

namespace detail {

inline Selection vote(const Context& ctx, const Query& q, std::vector<std::size_t> members, std::size_t final_size) {
  Selection s;
  VoteResult vr = majority_vote(ctx.pool, members, q.decisions, q.x);
  s.label = vr.label;
  s.votes = std::move(vr.votes);
  s.selected = std::move(members);
  s.final_size = final_size;
  return s;
}

inline std::vector<std::size_t> all_members(const Pool& pool) {
  std::vector<std::size_t> all(pool.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

inline Selection single(const Query& q, std::size_t winner) {
  Selection s;
  s.label = q.decisions[winner];
  s.selected = {winner};
  s.final_size = 1;
  return s;
}

// Lowest index among the maxima.
inline std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

// Members correct on every listed DSEL row.
inline std::vector<std::size_t> perfect_on(const Context& ctx, std::span<const std::size_t> rows) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < ctx.pool.size(); ++i) {
    bool ok = true;
    for (std::size_t j : rows)
      if (!ctx.tables.profiles.correct(j, i)) {
        ok = false;
        break;
      }
    if (ok) out.push_back(i);
  }
  return out;
}

}  // namespace detail

// Local accuracy (f3) of every member over the region.
inline std::vector<double> local_accuracy(const Context& ctx, const RegionOfCompetence& region) {
  std::vector<double> acc(ctx.pool.size(), 0.0);
  for (std::size_t i = 0; i < ctx.pool.size(); ++i) {
    std::size_t hits = 0;
    for (std::size_t j : region.indices) hits += ctx.tables.profiles.correct(j, i);
    acc[i] = static_cast<double>(hits) / static_cast<double>(region.size());
  }
  return acc;
}

// KNORA-Eliminate: members perfect on the region; shrink the region until
// someone qualifies, else the whole pool votes.
inline Selection knora_e(const Context& ctx, const Query& q) {
  for (std::size_t k = q.region.size(); k >= 1; --k) {
    auto members = detail::perfect_on(ctx, std::span(q.region.indices).first(k));
    if (!members.empty()) return detail::vote(ctx, q, std::move(members), k);
  }
  return detail::vote(ctx, q, detail::all_members(ctx.pool), 0);
}

// KNORA-Union: each member casts as many votes as neighbours it gets right.
inline Selection knora_u(const Context& ctx, const Query& q) {
  Selection s;
  s.votes.assign(static_cast<std::size_t>(ctx.pool.num_classes()), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < ctx.pool.size(); ++i) {
    std::size_t hits = 0;
    for (std::size_t j : q.region.indices) hits += ctx.tables.profiles.correct(j, i);
    if (hits == 0) continue;
    s.selected.push_back(i);
    s.votes[static_cast<std::size_t>(q.decisions[i])] += static_cast<double>(hits);
    total += static_cast<double>(hits);
  }
  if (total == 0.0) return detail::vote(ctx, q, detail::all_members(ctx.pool), 0);
  s.label = resolve_vote(s.votes, [&] {
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(ctx.pool.num_classes());
    for (std::size_t i : s.selected) sum += ctx.pool[i].posterior(q.x);
    return std::vector<double>(sum.begin(), sum.end());
  });
  s.final_size = q.region.size();
  return s;
}

// Overall Local Accuracy: the single member most accurate on the region.
inline Selection ola(const Context& ctx, const Query& q) {
  return detail::single(q, detail::argmax(local_accuracy(ctx, q.region)));
}

namespace detail {

// Class-conditional local accuracy: among neighbours whose true class is the
// member's prediction for x, the weighted share the member labels correctly.
inline std::vector<double> class_local_accuracy(const Context& ctx, const Query& q,
                                                std::span<const double> neighbour_weights) {
  std::vector<double> comp(ctx.pool.size(), 0.0);
  for (std::size_t i = 0; i < ctx.pool.size(); ++i) {
    const int w = q.decisions[i];
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < q.region.size(); ++k) {
      const std::size_t j = q.region.indices[k];
      if (ctx.tables.profiles.true_label(j) != w) continue;
      den += neighbour_weights[k];
      if (ctx.tables.profiles.decision(j, i) == w) num += neighbour_weights[k];
    }
    comp[i] = den > 0.0 ? num / den : 0.0;
  }
  return comp;
}

}  // namespace detail

inline std::vector<double> lca_competence(const Context& ctx, const Query& q) {
  const std::vector<double> ones(q.region.size(), 1.0);
  return detail::class_local_accuracy(ctx, q, ones);
}

inline std::vector<double> mla_competence(const Context& ctx, const Query& q) {
  std::vector<double> w(q.region.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = 1.0 / (q.region.distances[k] + ctx.opts.mla_epsilon);
  return detail::class_local_accuracy(ctx, q, w);
}

inline Selection lca(const Context& ctx, const Query& q) {
  return detail::single(q, detail::argmax(lca_competence(ctx, q)));
}

// Modified Local Accuracy: LCA with inverse-distance neighbour weights.
inline Selection mla(const Context& ctx, const Query& q) {
  return detail::single(q, detail::argmax(mla_competence(ctx, q)));
}

// Neighbours of the region whose output profile agrees with x's on at least
// the similarity share of pool members. Falls back to the whole region when
// none qualifies.
inline std::vector<std::size_t> mcb_neighbours(const Context& ctx, const Query& q) {
  std::vector<std::size_t> kept;
  const double m = static_cast<double>(ctx.pool.size());
  for (std::size_t j : q.region.indices) {
    const auto prof = ctx.tables.profiles.profile(j);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < prof.size(); ++i) agree += prof[i] == q.decisions[i];
    if (static_cast<double>(agree) / m >= ctx.opts.mcb_similarity) kept.push_back(j);
  }
  if (kept.empty()) kept = q.region.indices;
  return kept;
}

// Multiple Classifier Behaviour.
inline Selection mcb(const Context& ctx, const Query& q) {
  const auto rows = mcb_neighbours(ctx, q);
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < ctx.pool.size(); ++i) {
    std::size_t hits = 0;
    for (std::size_t j : rows) hits += ctx.tables.profiles.correct(j, i);
    if (static_cast<double>(hits) / static_cast<double>(rows.size()) > ctx.opts.mcb_threshold) members.push_back(i);
  }
  if (members.empty()) return ola(ctx, q);
  return detail::vote(ctx, q, std::move(members), rows.size());
}

// K-Nearest Output Profiles: KNORA-E in decision space.
inline Selection knop(const Context& ctx, const Query& q) {
  const ProfileNeighborhood nbrs = profile_neighbors(q.decisions, ctx.tables.profiles, ctx.opts.kp);
  for (std::size_t k = nbrs.size(); k >= 1; --k) {
    auto members = detail::perfect_on(ctx, std::span(nbrs.indices).first(k));
    if (!members.empty()) return detail::vote(ctx, q, std::move(members), k);
  }
  return detail::vote(ctx, q, detail::all_members(ctx.pool), 0);
}

// ---------------------------------------------------------------------------
// Static baselines, fitted once on a validation set.

struct StaticEnsembles {
  std::size_t single_best = 0;
  std::vector<std::size_t> static_selection;
};

// Single best by validation accuracy, and greedy forward selection of
// `fraction` of the pool minimising the majority-vote error on validation.
inline StaticEnsembles fit_static(const Pool& pool, const Dataset& validation, double fraction = 0.5) {
  pool.validate();
  const std::size_t n = validation.size();
  const std::size_t m = pool.size();
  const auto num_classes = static_cast<std::size_t>(pool.num_classes());
  const ProfileTable table = build_profiles(validation, pool);

  StaticEnsembles out;
  std::vector<double> acc(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t ok = 0;
    for (std::size_t j = 0; j < n; ++j) ok += table.correct(j, i);
    acc[i] = static_cast<double>(ok);
  }
  out.single_best = detail::argmax(acc);

  // Full posteriors for the vote tie rule.
  std::vector<double> post(n * m * num_classes);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < m; ++i) {
      const Eigen::VectorXd p = pool[i].posterior(validation.row(j));
      for (std::size_t l = 0; l < num_classes; ++l) post[(j * m + i) * num_classes + l] = p[static_cast<Eigen::Index>(l)];
    }

  const auto target = std::max<std::size_t>(1, static_cast<std::size_t>(fraction * static_cast<double>(m)));
  std::vector<double> votes(n * num_classes, 0.0), psum(n * num_classes, 0.0);
  std::vector<char> used(m, 0);
  std::vector<double> cand_votes(num_classes), cand_post(num_classes);
  while (out.static_selection.size() < target) {
    std::size_t best = m;
    std::size_t best_err = n + 1;
    for (std::size_t i = 0; i < m; ++i) {
      if (used[i]) continue;
      std::size_t err = 0;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t l = 0; l < num_classes; ++l) {
          cand_votes[l] = votes[j * num_classes + l];
          cand_post[l] = psum[j * num_classes + l] + post[(j * m + i) * num_classes + l];
        }
        cand_votes[static_cast<std::size_t>(table.decision(j, i))] += 1.0;
        const int y = resolve_vote(cand_votes, [&] { return cand_post; });
        err += y != validation.labels[j];
      }
      if (err < best_err) {
        best_err = err;
        best = i;
      }
    }
    used[best] = 1;
    out.static_selection.push_back(best);
    for (std::size_t j = 0; j < n; ++j) {
      votes[j * num_classes + static_cast<std::size_t>(table.decision(j, best))] += 1.0;
      for (std::size_t l = 0; l < num_classes; ++l)
        psum[j * num_classes + l] += post[(j * m + best) * num_classes + l];
    }
  }
  return out;
}

// Share of samples for which at least one pool member is correct.
inline double oracle_accuracy(const Pool& pool, const Dataset& test) {
  if (test.empty()) return 0.0;
  std::size_t covered = 0;
  for (std::size_t j = 0; j < test.size(); ++j) {
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (pool[i].predict(test.row(j)) == test.labels[j]) {
        ++covered;
        break;
      }
  }
  return static_cast<double>(covered) / static_cast<double>(test.size());
}

// ---------------------------------------------------------------------------
// Name lookup for the dynamic techniques.

enum class Technique { knora_e, knora_u, ola, lca, mla, mcb, knop };

inline std::optional<Technique> technique_from_name(std::string_view name) {
  if (name == "knora-e") return Technique::knora_e;
  if (name == "knora-u") return Technique::knora_u;
  if (name == "ola") return Technique::ola;
  if (name == "lca") return Technique::lca;
  if (name == "mla") return Technique::mla;
  if (name == "mcb") return Technique::mcb;
  if (name == "knop") return Technique::knop;
  return std::nullopt;
}

inline Selection run(Technique t, const Context& ctx, const Query& q) {
  switch (t) {
    case Technique::knora_e: return knora_e(ctx, q);
    case Technique::knora_u: return knora_u(ctx, q);
    case Technique::ola: return ola(ctx, q);
    case Technique::lca: return lca(ctx, q);
    case Technique::mla: return mla(ctx, q);
    case Technique::mcb: return mcb(ctx, q);
    case Technique::knop: return knop(ctx, q);
  }
  throw invalid_argument("unknown technique");
}

}  // namespace metades::baselines
