#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "frozenperc/beta.hpp"
#include "frozenperc/sim.hpp"
#include "oracles.hpp"

using namespace frozenperc;
using namespace frozenperc::sim;

namespace {

SimConfig config(std::size_t N, SizeKind kind, double t, unsigned depth, std::size_t trials, std::uint64_t seed = 1) {
  return {.N = N, .size_kind = kind, .t_obs = t, .depth = depth, .trials = trials, .seed = seed, .threads = 1};
}

// Straightforward re-implementation: sort all clocks, and before each
// opening rebuild both endpoint clusters by flood fill over the open set.
std::set<Vertex> naive_open_set(const SimConfig& c, std::uint64_t trial) {
  const ClockStream stream(c.seed, trial);
  std::vector<std::pair<double, Vertex>> clocks;
  for (Vertex e = 1; e <= c.edge_count(); ++e) clocks.emplace_back(stream.clock(e), e);
  std::sort(clocks.begin(), clocks.end());
  std::set<Vertex> open;
  auto cluster_of = [&](Vertex start) {
    oracle::VertexSet seen{start};
    std::vector<Vertex> stack{start};
    while (!stack.empty()) {
      const Vertex v = stack.back();
      stack.pop_back();
      std::vector<Vertex> nbrs;
      if (v != 0 && open.count(v)) nbrs.push_back(v == 1 ? 0 : v / 2);
      if (v == 0 && open.count(1)) nbrs.push_back(1);
      if (v != 0)
        for (const Vertex ch : {2 * v, 2 * v + 1})
          if (open.count(ch)) nbrs.push_back(ch);
      for (const Vertex w : nbrs)
        if (seen.insert(w).second) stack.push_back(w);
    }
    return seen;
  };
  auto size_of = [&](const oracle::VertexSet& s) {
    switch (c.size_kind) {
      case SizeKind::Volume: return oracle::volume(s);
      case SizeKind::Depth: return oracle::depth(s);
      default: return oracle::diameter(s);
    }
  };
  for (const auto& [clock, e] : clocks) {
    if (!(clock < c.t_obs)) break;
    const Vertex upper = e == 1 ? 0 : e / 2;
    if (size_of(cluster_of(upper)) < c.N && size_of(cluster_of(e)) < c.N) open.insert(e);
  }
  return open;
}

}  // namespace

TEST(Config, Validation) {
  EXPECT_THROW(config(0, SizeKind::Volume, 0.5, 5, 10).validate(), DomainError);
  EXPECT_THROW(config(2, SizeKind::Volume, 1.5, 5, 10).validate(), DomainError);
  EXPECT_THROW(config(2, SizeKind::Volume, 0.5, 0, 10).validate(), DomainError);
  EXPECT_THROW(config(2, SizeKind::Volume, 0.5, 25, 10).validate(), DomainError);
  EXPECT_THROW(config(2, SizeKind::Volume, 0.5, 5, 0).validate(), DomainError);
  EXPECT_THROW(config(2, SizeKind::Custom, 0.5, 5, 10).validate(), DomainError);
  EXPECT_EQ(config(2, SizeKind::Volume, 0.5, 3, 10).edge_count(), 15u);
}

TEST(Clocks, UniformAndIndependentOfDepth) {
  const ClockStream a(5, 17), b(5, 18), c(6, 17);
  double sum = 0.0;
  for (Vertex e = 1; e <= 100'000; ++e) {
    const double x = a.clock(e);
    ASSERT_GE(x, 0.0);
    ASSERT_LT(x, 1.0);
    sum += x;
  }
  EXPECT_NEAR(sum / 100'000, 0.5, 0.005);
  EXPECT_NE(a.clock(1), b.clock(1));
  EXPECT_NE(a.clock(1), c.clock(1));
  EXPECT_EQ(a.clock(123), ClockStream(5, 17).clock(123));
}

TEST(RunTrial, NothingRingsAtTimeZero) {
  const auto r = run_trial(config(3, SizeKind::Volume, 0.0, 8, 1), 0);
  EXPECT_FALSE(r.root_edge_open);
  EXPECT_TRUE(r.root_cluster.is_empty());
  EXPECT_EQ(r.root_cluster_size, 0u);
}

TEST(RunTrial, Deterministic) {
  const auto c = config(4, SizeKind::Diameter, 0.9, 10, 1, 99);
  for (std::uint64_t i = 0; i < 50; ++i) {
    const auto a = run_trial(c, i), b = run_trial(c, i);
    EXPECT_EQ(a.root_edge_open, b.root_edge_open);
    EXPECT_EQ(a.root_cluster, b.root_cluster);
    EXPECT_EQ(a.root_cluster_size, b.root_cluster_size);
  }
}

TEST(RunTrial, NoFreezingOpensEverything) {
  const auto c = config(1'000'000, SizeKind::Volume, 1.0, 5, 1);
  TrialTrace trace;
  const auto r = run_trial(c, 3, &trace);
  EXPECT_TRUE(r.root_edge_open);
  EXPECT_EQ(trace.open_edges.size(), c.edge_count());
  EXPECT_EQ(r.root_cluster.volume(), c.edge_count());
  EXPECT_EQ(r.root_cluster_size, c.edge_count());
  EXPECT_FALSE(r.cluster_overflow);
}

TEST(RunTrial, RootClusterClippedAtReportCap) {
  const auto r = run_trial(config(1'000'000, SizeKind::Volume, 1.0, 8, 1), 0);
  EXPECT_TRUE(r.cluster_overflow);
  EXPECT_EQ(r.root_cluster.volume(), kReportCap);
  EXPECT_EQ(r.root_cluster_size, 511u);
}

TEST(RunTrial, MatchesNaiveSimulator) {
  for (const auto kind : {SizeKind::Volume, SizeKind::Depth, SizeKind::Diameter})
    for (const std::size_t N : {1, 2, 3, 5})
      for (const double t : {0.4, 0.8, 1.0}) {
        const auto c = config(N, kind, t, 4, 1, 42);
        TrialEngine engine(c);
        for (std::uint64_t trial = 0; trial < 40; ++trial) {
          TrialTrace trace;
          const auto r = engine.run(trial, &trace);
          const auto expected = naive_open_set(c, trial);
          ASSERT_EQ(std::set<Vertex>(trace.open_edges.begin(), trace.open_edges.end()), expected)
              << to_string(kind) << " N = " << N << " t = " << t << " trial " << trial;
          EXPECT_EQ(r.root_edge_open, expected.count(1) == 1);
          // Same trial without a trace only follows the root's active component.
          const auto lean = engine.run(trial);
          EXPECT_EQ(lean.root_cluster, r.root_cluster);
          EXPECT_EQ(lean.root_cluster_size, r.root_cluster_size);
          EXPECT_EQ(engine.root_edge_open(trial), r.root_edge_open);
        }
      }
}

TEST(RunTrial, RootClusterIsConnectedOpenSet) {
  const auto c = config(6, SizeKind::Volume, 0.9, 9, 1, 5);
  TrialEngine engine(c);
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    TrialTrace trace;
    const auto r = engine.run(trial, &trace);
    const std::set<Vertex> open(trace.open_edges.begin(), trace.open_edges.end());
    oracle::VertexSet expected{0};
    if (open.count(1)) {
      std::vector<Vertex> stack{1};
      while (!stack.empty()) {
        const Vertex v = stack.back();
        stack.pop_back();
        expected.insert(v);
        for (const Vertex ch : {2 * v, 2 * v + 1})
          if (open.count(ch)) stack.push_back(ch);
      }
    }
    EXPECT_EQ(oracle::VertexSet(r.root_cluster.vertices().begin(), r.root_cluster.vertices().end()), expected);
    EXPECT_EQ(r.root_cluster_size, expected.size() - 1);
  }
}

TEST(RunTrial, TraceInvariants) {
  for (const auto kind : {SizeKind::Volume, SizeKind::Depth, SizeKind::Diameter})
    for (const std::size_t N : {2, 5, 9}) {
      const auto c = config(N, kind, 1.0, 9, 1, 8);
      TrialEngine engine(c);
      for (std::uint64_t trial = 0; trial < 30; ++trial) {
        TrialTrace trace;
        engine.run(trial, &trace);
        // Openings happen in time order, both sides below N, and nothing reopens.
        std::set<Vertex> opened;
        double last = -1.0;
        for (const auto& o : trace.openings) {
          EXPECT_GT(o.clock, last);
          last = o.clock;
          EXPECT_LT(o.size_upper, N);
          EXPECT_LT(o.size_lower, N);
          EXPECT_TRUE(opened.insert(o.edge).second);
        }
        EXPECT_EQ(opened, std::set<Vertex>(trace.open_edges.begin(), trace.open_edges.end()));
        if (kind == SizeKind::Volume) {
          for (std::size_t i = 0; i < trace.component_sizes.size(); ++i) {
            const std::size_t vol = trace.component_volumes[i];
            EXPECT_EQ(trace.component_sizes[i], vol);
            EXPECT_LE(vol, 2 * N - 1);
          }
        }
        for (std::size_t i = 0; i < trace.component_sizes.size(); ++i)
          EXPECT_LE(trace.component_sizes[i], trace.component_volumes[i]);
      }
    }
}

TEST(RunTrial, FrozenVolumesBetweenNAndTwoNMinusOneAtTimeOne) {
  // Far from the truncation boundary every maximal component is frozen, and a
  // frozen one merged two clusters of at most N - 1 edges plus one edge.
  const std::size_t N = 4;
  const auto c = config(N, SizeKind::Volume, 1.0, 10, 1, 3);
  TrialEngine engine(c);
  std::size_t frozen = 0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    TrialTrace trace;
    engine.run(trial, &trace);
    for (const std::size_t vol : trace.component_volumes) {
      EXPECT_LE(vol, 2 * N - 1);
      if (vol >= N) ++frozen;
    }
  }
  EXPECT_GT(frozen, 0u);
}

TEST(Estimate, BernoulliStandardError) {
  const auto c = config(2, SizeKind::Volume, 0.5, 4, 400);
  const auto e = bernoulli_estimate(100, c);
  EXPECT_DOUBLE_EQ(e.mean, 0.25);
  EXPECT_DOUBLE_EQ(e.standard_error, std::sqrt(0.25 * 0.75 / 400));
  EXPECT_EQ(e.trials, 400u);
}

TEST(EstimateBetaMc, TimeZeroIsExact) {
  const auto e = estimate_beta_mc(config(3, SizeKind::Volume, 0.0, 10, 1000));
  EXPECT_EQ(e.mean, 1.0);
  EXPECT_EQ(e.standard_error, 0.0);
}

TEST(EstimateBetaMc, NEqualsOneAtHalf) {
  const auto e = estimate_beta_mc(config(1, SizeKind::Volume, 0.5, 12, 100'000, 2024));
  EXPECT_NEAR(e.mean, 2.0 / 3.0, 3 * e.standard_error);
}

TEST(EstimateBetaMc, AgreesWithRunTrials) {
  const auto c = config(5, SizeKind::Depth, 0.85, 10, 3000, 77);
  EXPECT_EQ(estimate_beta_mc(c).mean, bernoulli_estimate(run_trials(c).root_closed, c).mean);
}

TEST(EstimateBetaMc, IndependentOfThreadCount) {
  auto c = config(5, SizeKind::Volume, 0.9, 10, 5000, 9);
  const auto one = run_trials(c);
  c.threads = 3;
  const auto three = run_trials(c);
  EXPECT_EQ(one.root_closed, three.root_closed);
  EXPECT_EQ(one.size_histogram, three.size_histogram);
  EXPECT_EQ(estimate_beta_mc(c).mean, bernoulli_estimate(one.root_closed, c).mean);
}

TEST(EstimateClusterDistMc, EmptyShapeIsClosedRootEdge) {
  const auto c = config(5, SizeKind::Volume, 0.75, 10, 20'000, 4);
  const std::vector<ClusterShape> shapes{ClusterShape::empty(Anchor::Root)};
  EXPECT_EQ(estimate_cluster_dist_mc(c, shapes)[0].mean, estimate_beta_mc(c).mean);
}

TEST(EstimateClusterDistMc, SingleEdgeMatchesAnalytic) {
  const auto c = config(5, SizeKind::Volume, 0.75, 12, 50'000, 6);
  const auto e0 = ClusterShape::from_vertices(Anchor::Root, {0, 1});
  const std::vector<ClusterShape> shapes{e0};
  const auto est = estimate_cluster_dist_mc(c, shapes)[0];
  EXPECT_NEAR(est.mean, cluster_prob(5, 0.75, e0), 3 * est.standard_error);
}

TEST(EstimateClusterDistMc, SmallShapeFrequenciesSumBelowOne) {
  const auto c = config(5, SizeKind::Volume, 0.9, 10, 20'000, 12);
  std::vector<ClusterShape> shapes;
  for (std::size_t k = 0; k <= 2; ++k)
    for (auto& s : enumerate_clusters(Anchor::Root, k)) shapes.push_back(s);
  double total = 0.0;
  for (const auto& e : estimate_cluster_dist_mc(c, shapes)) total += e.mean;
  EXPECT_LE(total, 1.0);
}

TEST(EstimateClusterDistMc, RejectsShapesAtOrAboveN) {
  const auto c = config(2, SizeKind::Volume, 0.5, 6, 10);
  const std::vector<ClusterShape> shapes{ClusterShape::from_vertices(Anchor::Root, {0, 1, 2})};
  EXPECT_THROW(estimate_cluster_dist_mc(c, shapes), DomainError);
  const std::vector<ClusterShape> child{ClusterShape::empty(Anchor::Child)};
  EXPECT_THROW(estimate_cluster_dist_mc(c, child), DomainError);
}

TEST(DepthStability, ZeroDeltaIsIdentical) {
  const std::vector<unsigned> deltas{0};
  const auto r = depth_stability(config(5, SizeKind::Volume, 0.75, 10, 2000, 1), deltas);
  EXPECT_EQ(r[0].difference, 0.0);
  EXPECT_TRUE(r[0].within_3_sigma);
}

TEST(DepthStability, NEqualsTwoAtHalf) {
  const std::vector<unsigned> deltas{4};
  const auto r = depth_stability(config(2, SizeKind::Volume, 0.5, 10, 100'000, 31), deltas);
  EXPECT_TRUE(r[0].within_3_sigma) << r[0].difference << " vs " << r[0].combined_sigma;
  EXPECT_EQ(r[0].deep.config.depth, 14u);
}
