#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "metades/baselines.hpp"
#include "metades/synthetic.hpp"

using namespace metades;
using namespace metades::baselines;

namespace {

// 1-D classifier predicting class 1 iff x > t (class 0 on the boundary).
LinearClassifier threshold(double t) {
  Matrix w(2, 2);
  w << -0.5, 0.5 * t, 0.5, -0.5 * t;
  return LinearClassifier(w);
}

Dataset grid(const std::vector<int>& labels) {
  Dataset ds;
  ds.features.resize(static_cast<Eigen::Index>(labels.size()), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) ds.features(static_cast<Eigen::Index>(i), 0) = 0.1 * static_cast<double>(i + 1);
  ds.labels = labels;
  ds.class_names = {"0", "1"};
  return ds;
}

// Owns everything a Context refers to.
struct World {
  Pool pool;
  Dataset dsel;
  ReferenceTables tables;
  Options opts;

  World(Pool p, Dataset d, Options o = {}) : pool(std::move(p)), dsel(std::move(d)), opts(o) {
    tables = build_reference_tables(dsel, pool);
  }
  Context ctx() const { return {pool, dsel, tables, opts}; }
};

World random_world(std::uint64_t seed, std::size_t m = 15) {
  SplitSpec spec;
  spec.seed = seed;
  const Split s = stratified_split(synthetic::banana(400, seed), spec);
  return World(bagging_generate(s.train, m, seed), s.dsel);
}

bool correct(const World& w, std::size_t i, std::size_t row) {
  return w.pool[i].predict(w.dsel.row(row)) == w.dsel.labels[row];
}

std::vector<std::size_t> perfect_members(const World& w, std::span<const std::size_t> rows) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < w.pool.size(); ++i)
    if (std::all_of(rows.begin(), rows.end(), [&](std::size_t r) { return correct(w, i, r); })) out.push_back(i);
  return out;
}

const std::vector<int> kLabels{0, 0, 1, 0, 1, 1, 1};  // at x = 0.1 .. 0.7

}  // namespace

TEST(Ola, HandCountsAndTieRule) {
  // Local accuracy over all seven rows: t=.35 -> 5/7, t=.25 -> 6/7, constant 0 -> 3/7.
  World w(Pool{{threshold(0.35), threshold(0.25), threshold(100), threshold(0.25)}}, grid(kLabels));
  const Context ctx = w.ctx();
  const Query q = make_query(ctx, std::vector<double>{0.42});
  const auto acc = local_accuracy(ctx, q.region);
  EXPECT_NEAR(acc[0], 5.0 / 7, 1e-12);
  EXPECT_NEAR(acc[1], 6.0 / 7, 1e-12);
  EXPECT_NEAR(acc[2], 3.0 / 7, 1e-12);
  const Selection s = ola(ctx, q);
  EXPECT_EQ(s.selected, (std::vector<std::size_t>{1}));  // index 3 ties, lower wins
  EXPECT_EQ(s.label, 1);
}

TEST(Lca, HandCounts) {
  World w(Pool{{threshold(0.35), threshold(0.25), threshold(100)}}, grid(kLabels));
  const Context ctx = w.ctx();
  const Query q = make_query(ctx, std::vector<double>{0.42});
  const auto c = lca_competence(ctx, q);
  EXPECT_NEAR(c[0], 3.0 / 4, 1e-12);  // class-1 rows .3 .5 .6 .7; misses .3
  EXPECT_NEAR(c[1], 1.0, 1e-12);
  EXPECT_NEAR(c[2], 1.0, 1e-12);  // predicts 0; class-0 rows .1 .2 .4 all right
  EXPECT_EQ(lca(ctx, q).selected, (std::vector<std::size_t>{1}));

  // No neighbour shares the predicted class -> competence 0.
  Options k3;
  k3.k = 3;
  World none(Pool{{threshold(100), threshold(0.05)}}, grid({1, 1, 1, 1, 1, 1, 0}), k3);
  const Query qn = make_query(none.ctx(), std::vector<double>{0.3});
  const auto cn = lca_competence(none.ctx(), qn);
  EXPECT_EQ(cn[0], 0.0);
  EXPECT_EQ(cn[1], 1.0);
}

TEST(Mla, InverseDistanceArithmetic) {
  Options o;
  o.k = 3;
  World w(Pool{{threshold(0.35), threshold(0.25)}}, grid(kLabels), o);
  const Context ctx = w.ctx();
  const Query q = make_query(ctx, std::vector<double>{0.42});
  // Region: .4 (d .02), .5 (d .08), .3 (d .12). t=.35 predicts 1; class-1 rows .5 (right) and .3 (wrong).
  const double a = 1.0 / (0.08 + 1e-9), b = 1.0 / (0.12 + 1e-9);
  EXPECT_NEAR(mla_competence(ctx, q)[0], a / (a + b), 1e-9);
  EXPECT_NEAR(lca_competence(ctx, q)[0], 0.5, 1e-12);

  // Zero-distance neighbour dominates: t=.45 predicts 1 at x=.5 and is wrong on
  // class-1 row .3 (LCA 3/4), but the coincident row .5 swamps the weights.
  World all(Pool{{threshold(0.45), threshold(100)}}, grid(kLabels));
  const std::vector<double> x5{all.dsel.features(4, 0)};
  const Query on = make_query(all.ctx(), x5);
  EXPECT_NEAR(lca_competence(all.ctx(), on)[0], 0.75, 1e-12);
  EXPECT_GT(mla_competence(all.ctx(), on)[0], 0.999);
}

TEST(Mla, EquidistantMatchesLca) {
  // Query halfway between two rows, K=2: identical weights.
  Options o;
  o.k = 2;
  World w(Pool{{threshold(0.35), threshold(0.25), threshold(100)}}, grid(kLabels), o);
  const Query q = make_query(w.ctx(), std::vector<double>{0.45});
  const auto l = lca_competence(w.ctx(), q), m = mla_competence(w.ctx(), q);
  for (std::size_t i = 0; i < l.size(); ++i) EXPECT_NEAR(l[i], m[i], 1e-9);
}

TEST(KnoraE, RelaxesAndFallsBack) {
  // Constant-0 pool; every row in the K=3 region is class 1, so nobody is right at any K.
  Options k3;
  k3.k = 3;
  k3.kp = 3;
  World w(Pool{{threshold(100), threshold(101)}}, grid({1, 1, 1, 1, 1, 1, 0}), k3);
  const Context ctx = w.ctx();
  const Query q = make_query(ctx, std::vector<double>{0.12});
  const Selection e = knora_e(ctx, q);
  EXPECT_EQ(e.final_size, 0u);
  EXPECT_EQ(e.selected.size(), 2u);
  EXPECT_EQ(e.label, 0);
  const Selection p = knop(ctx, q);
  EXPECT_EQ(p.final_size, 0u);
  EXPECT_EQ(p.selected.size(), 2u);
  const Selection u = knora_u(ctx, q);
  EXPECT_EQ(u.final_size, 0u);
  EXPECT_EQ(u.label, 0);

  World one(Pool{{threshold(100), threshold(0.35)}}, grid({0, 0, 0, 1, 1, 1, 1}));
  const Selection s = knora_e(one.ctx(), make_query(one.ctx(), std::vector<double>{0.4}));
  EXPECT_EQ(s.selected, (std::vector<std::size_t>{1}));
  EXPECT_EQ(s.final_size, 7u);
}

TEST(KnoraE, AuditAgainstPredictions) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const World w = random_world(seed);
    const Context ctx = w.ctx();
    const Dataset probe = synthetic::banana(60, 100 + seed);
    for (std::size_t j = 0; j < probe.size(); ++j) {
      const Query q = make_query(ctx, probe.row(j));
      const Selection s = knora_e(ctx, q);
      if (s.final_size == 0) {
        EXPECT_TRUE(perfect_members(w, std::span(q.region.indices).first(1)).empty());
        continue;
      }
      const auto rows = std::span(q.region.indices).first(s.final_size);
      EXPECT_EQ(s.selected, perfect_members(w, rows));
      if (s.final_size < q.region.size())
        EXPECT_TRUE(perfect_members(w, std::span(q.region.indices).first(s.final_size + 1)).empty());
    }
  }
}

TEST(KnoraU, TallyMatchesBruteForce) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const World w = random_world(seed);
    const Context ctx = w.ctx();
    const Dataset probe = synthetic::banana(60, 200 + seed);
    for (std::size_t j = 0; j < probe.size(); ++j) {
      const Query q = make_query(ctx, probe.row(j));
      const Selection s = knora_u(ctx, q);
      std::vector<double> tally(2, 0.0);
      for (std::size_t i = 0; i < w.pool.size(); ++i)
        for (std::size_t r : q.region.indices)
          if (correct(w, i, r)) tally[static_cast<std::size_t>(w.pool[i].predict(probe.row(j)))] += 1.0;
      if (s.final_size > 0) {
        EXPECT_EQ(s.votes, tally);
        if (tally[0] != tally[1]) EXPECT_EQ(s.label, tally[1] > tally[0] ? 1 : 0);
      }
    }
  }
}

TEST(Mcb, ThresholdPathsAndRecount) {
  // All members perfect everywhere -> full-pool vote.
  World all(Pool{{threshold(0.35), threshold(0.36), threshold(0.34)}}, grid({0, 0, 0, 1, 1, 1, 1}));
  const Selection s = mcb(all.ctx(), make_query(all.ctx(), std::vector<double>{0.42}));
  EXPECT_EQ(s.selected.size(), 3u);
  // Nobody above threshold -> OLA winner.
  World none(Pool{{threshold(100), threshold(101)}}, grid({1, 1, 1, 1, 1, 1, 0}));
  const Query qn = make_query(none.ctx(), std::vector<double>{0.3});
  EXPECT_EQ(mcb(none.ctx(), qn).selected, ola(none.ctx(), qn).selected);

  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const World w = random_world(seed);
    const Context ctx = w.ctx();
    const Dataset probe = synthetic::banana(50, 300 + seed);
    for (std::size_t j = 0; j < probe.size(); ++j) {
      const Query q = make_query(ctx, probe.row(j));
      std::vector<std::size_t> rows;
      for (std::size_t r : q.region.indices) {
        std::size_t agree = 0;
        for (std::size_t i = 0; i < w.pool.size(); ++i)
          agree += w.pool[i].predict(w.dsel.row(r)) == w.pool[i].predict(probe.row(j));
        if (static_cast<double>(agree) >= 0.7 * static_cast<double>(w.pool.size())) rows.push_back(r);
      }
      if (rows.empty()) rows = q.region.indices;
      EXPECT_EQ(mcb_neighbours(ctx, q), rows);
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < w.pool.size(); ++i) {
        std::size_t hits = 0;
        for (std::size_t r : rows) hits += correct(w, i, r);
        if (static_cast<double>(hits) > 0.6 * static_cast<double>(rows.size())) members.push_back(i);
      }
      const Selection sel = mcb(ctx, q);
      if (!members.empty()) EXPECT_EQ(sel.selected, members);
      else EXPECT_EQ(sel.selected, ola(ctx, q).selected);
    }
  }
}

TEST(Knop, SelectionMatchesBruteForceFilter) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const World w = random_world(seed);
    const Context ctx = w.ctx();
    const Dataset probe = synthetic::banana(60, 400 + seed);
    for (std::size_t j = 0; j < probe.size(); ++j) {
      const Query q = make_query(ctx, probe.row(j));
      // Profile neighbours by Hamming distance (one-hot distance is twice it), stable by index.
      std::vector<std::size_t> idx(w.dsel.size());
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      auto ham = [&](std::size_t r) {
        std::size_t d = 0;
        for (std::size_t i = 0; i < w.pool.size(); ++i) d += w.pool[i].predict(w.dsel.row(r)) != q.decisions[i];
        return d;
      };
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return ham(a) < ham(b); });
      std::vector<std::size_t> expected;
      std::size_t used = 0;
      for (std::size_t k = ctx.opts.kp; k >= 1; --k) {
        expected = perfect_members(w, std::span(idx).first(k));
        if (!expected.empty()) {
          used = k;
          break;
        }
      }
      const Selection s = knop(ctx, q);
      EXPECT_EQ(s.final_size, used);
      if (used > 0) EXPECT_EQ(s.selected, expected);
      else EXPECT_EQ(s.selected.size(), w.pool.size());
    }
  }
}

TEST(Static, SizesAndSingleBest) {
  const World w = random_world(7, 20);
  const StaticEnsembles st = fit_static(w.pool, w.dsel);
  EXPECT_EQ(st.static_selection.size(), 10u);
  std::vector<std::size_t> sorted = st.static_selection;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
  double best = -1;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < w.pool.size(); ++i) {
    const double a = accuracy(w.pool[i], w.dsel);
    if (a > best) best = a, arg = i;
  }
  EXPECT_EQ(st.single_best, arg);
  // First greedy pick is the single best (a one-member vote is that member).
  EXPECT_EQ(st.static_selection.front(), arg);
}

TEST(Static, HundredMemberPoolKeepsFifty) {
  SplitSpec spec;
  spec.seed = 2;
  const Split s = stratified_split(synthetic::lithuanian(240, 2), spec);
  const Pool pool = bagging_generate(s.train, 100, 2);
  EXPECT_EQ(fit_static(pool, s.dsel).static_selection.size(), 50u);
}

TEST(Static, OlaWithWholeDselIsSingleBest) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const World base = random_world(seed);
    Options o;
    o.k = base.dsel.size();
    const World w(base.pool, base.dsel, o);
    const StaticEnsembles st = fit_static(w.pool, w.dsel);
    const Query q = make_query(w.ctx(), std::vector<double>{0.0, 0.0});
    EXPECT_EQ(ola(w.ctx(), q).selected.front(), st.single_best);
  }
}

TEST(Static, IdenticalPoolAllAgree) {
  const LinearClassifier c = threshold(0.35);
  World w(Pool{{c, c, c, c}}, grid(kLabels));
  const Context ctx = w.ctx();
  const StaticEnsembles st = fit_static(w.pool, w.dsel);
  for (double x : {0.05, 0.3, 0.42, 0.9}) {
    const std::vector<double> v{x};
    const Query q = make_query(ctx, v);
    const int expected = c.predict(v);
    for (auto t : {Technique::knora_e, Technique::knora_u, Technique::ola, Technique::lca, Technique::mla,
                   Technique::mcb, Technique::knop})
      EXPECT_EQ(run(t, ctx, q).label, expected);
    EXPECT_EQ(w.pool[st.single_best].predict(v), expected);
    EXPECT_EQ(majority_vote(w.pool, st.static_selection, q.decisions, v).label, expected);
  }
}

TEST(Oracle, BruteForceAndDominance) {
  World cover(Pool{{threshold(100), threshold(-100)}}, grid(kLabels));
  EXPECT_EQ(oracle_accuracy(cover.pool, cover.dsel), 1.0);
  World miss(Pool{{threshold(100), threshold(101)}}, grid(kLabels));
  EXPECT_NEAR(oracle_accuracy(miss.pool, miss.dsel), 3.0 / 7, 1e-12);

  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const World w = random_world(seed);
    const Dataset test = synthetic::banana(200, 500 + seed);
    std::size_t covered = 0;
    for (std::size_t j = 0; j < test.size(); ++j) {
      bool any = false;
      for (std::size_t i = 0; i < w.pool.size(); ++i) any = any || w.pool[i].predict(test.row(j)) == test.labels[j];
      covered += any;
    }
    const double oracle = oracle_accuracy(w.pool, test);
    EXPECT_DOUBLE_EQ(oracle, static_cast<double>(covered) / 200.0);
    const StaticEnsembles st = fit_static(w.pool, w.dsel);
    EXPECT_LE(accuracy(w.pool[st.single_best], test), oracle);
    const Context ctx = w.ctx();
    for (auto t : {Technique::knora_e, Technique::knora_u, Technique::ola, Technique::lca, Technique::mla,
                   Technique::mcb, Technique::knop}) {
      std::size_t ok = 0;
      for (std::size_t j = 0; j < test.size(); ++j) ok += run(t, ctx, make_query(ctx, test.row(j))).label == test.labels[j];
      EXPECT_LE(static_cast<double>(ok) / 200.0, oracle);
    }
  }
}

TEST(Names, Lookup) {
  EXPECT_EQ(technique_from_name("knora-e"), Technique::knora_e);
  EXPECT_EQ(technique_from_name("knop"), Technique::knop);
  EXPECT_FALSE(technique_from_name("meta-des").has_value());
}
