#pragma once

// Event-driven Monte Carlo of N-parameter frozen percolation on the planted
// binary tree truncated at depth D (edges exist for heap indices < 2^{D+1}).
//
// Every edge carries a uniform clock drawn from a counter-based stream keyed
// by (seed, trial, edge). Edges with clock below t_obs are processed in clock
// order; an edge opens iff the clusters at both of its endpoints currently
// have size < N. Clusters are tracked by union-find. Volume is read from the
// union-find sizes; depth and diameter are recomputed by a traversal of the
// merged component.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "frozenperc/error.hpp"
#include "frozenperc/sizefn.hpp"
#include "frozenperc/treecomb.hpp"

namespace frozenperc::sim {

inline constexpr unsigned kMaxDepth = 24;
inline constexpr std::size_t kReportCap = 64;  // root cluster edges kept in a TrialResult

struct SimConfig {
  std::size_t N = 1;
  SizeKind size_kind = SizeKind::Volume;
  double t_obs = 1.0;
  unsigned depth = 10;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  unsigned threads = 0;  // 0: one per hardware thread

  std::size_t edge_count() const { return (std::size_t{2} << depth) - 1; }

  void validate() const {
    if (N < 1) throw DomainError("N must be >= 1");
    if (size_kind == SizeKind::Custom) throw DomainError("simulation supports built-in size functions only");
    if (!(t_obs >= 0.0 && t_obs <= 1.0)) throw DomainError("t must lie in [0, 1]");
    if (depth < 1 || depth > kMaxDepth) throw DomainError("depth must be in [1, 24]");
    if (trials < 1) throw DomainError("trials must be >= 1");
  }
};

struct TrialResult {
  bool root_edge_open = false;
  ClusterShape root_cluster = ClusterShape::empty(Anchor::Root);  // clipped to kReportCap edges
  bool cluster_overflow = false;
  std::size_t root_cluster_size = 0;  // by the configured size function, never clipped
};

// Optional per-trial record for invariant checks.
struct TrialTrace {
  struct Opening {
    Vertex edge;
    double clock;
    std::size_t size_upper;  // cluster sizes at both endpoints just before opening
    std::size_t size_lower;
  };
  std::vector<Opening> openings;
  std::vector<Vertex> open_edges;  // open set at t_obs, ascending
  // Size and volume of every component with at least one edge at t_obs.
  std::vector<std::size_t> component_sizes;
  std::vector<std::size_t> component_volumes;
};

struct Estimate {
  double mean = 0.0;
  double standard_error = 0.0;
  std::size_t trials = 0;
  SimConfig config;
};

// sqrt(p (1 - p) / n) for a Bernoulli mean.
inline Estimate bernoulli_estimate(std::size_t hits, const SimConfig& config) {
  const double n = static_cast<double>(config.trials);
  const double p = static_cast<double>(hits) / n;
  return {p, std::sqrt(p * (1.0 - p) / n), config.trials, config};
}

// SplitMix64 finaliser.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Clock of edge e in trial i: the e-th output of a SplitMix64 stream whose
// state is derived from (seed, i). Independent of the truncation depth, so a
// deeper tree shares the clocks of the shallower one.
class ClockStream {
 public:
  static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

  ClockStream(std::uint64_t seed, std::uint64_t trial)
      : state_(mix64(seed + kGamma) ^ mix64(trial * kGamma + 0x632be59bd9b4e019ULL)) {}

  double clock(Vertex edge) const {
    const std::uint64_t bits = mix64(state_ + (static_cast<std::uint64_t>(edge) + 1) * kGamma);
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

// Reusable per-thread workspace; run() is deterministic in (config, trial).
class TrialEngine {
 public:
  explicit TrialEngine(const SimConfig& config) : config_(config), edges_(config.edge_count()) {
    config_.validate();
    const std::size_t vertices = edges_ + 1;
    parent_.resize(vertices);
    count_.resize(vertices);
    open_.resize(vertices);
    if (config_.size_kind != SizeKind::Volume) {
      size_.resize(vertices);
      top_.resize(vertices);
      members_.resize(vertices);
      mark_.assign(vertices, 0);
      height_.resize(vertices);
    }
    for (std::size_t v = 0; v < vertices; ++v) touched_.push_back(static_cast<Vertex>(v));
    reset();
  }

  TrialResult run(std::uint64_t trial, TrialTrace* trace = nullptr) {
    reset();
    schedule(trial, trace ? Scope::WholeTree : Scope::RootComponent);
    process(trace);
    if (trace) fill_trace(*trace);
    return root_result();
  }

  // Only decides whether e0 is open at t_obs. That is settled at e0's own
  // clock tau, by the edges with clock < tau connected to e0 through such
  // edges, which is a smaller set than the active component at t_obs.
  bool root_edge_open(std::uint64_t trial) {
    reset();
    schedule(trial, Scope::RootEdge);
    process(nullptr);
    return open_[kChildVertex] != 0;
  }

 private:
  struct Event {
    double clock;
    Vertex edge;
  };

  enum class Scope { WholeTree, RootComponent, RootEdge };

  void process(TrialTrace* trace) {
    const std::size_t n = config_.N;
    for (const auto& [clock, edge] : events_) {
      const Vertex upper = find(parent_of(edge));
      const Vertex lower = find(edge);
      const std::size_t su = component_size(upper), sl = component_size(lower);
      if (su >= n || sl >= n) continue;
      open_[edge] = 1;
      merge(upper, lower);
      if (trace) trace->openings.push_back({edge, clock, su, sl});
    }
  }

  // Undo the previous trial on the vertices it touched.
  void reset() {
    for (const Vertex v : touched_) {
      parent_[v] = v;
      count_[v] = 1;
      open_[v] = 0;
      if (config_.size_kind != SizeKind::Volume) {
        size_[v] = 0;
        top_[v] = v;
        members_[v].clear();
      }
    }
    touched_.clear();
  }

  // Edges with clock < t_obs in increasing clock order: bucket by clock, then
  // an insertion pass that only has to fix order inside buckets.
  //
  // Open edges are always active (clock < t_obs), and the dynamics on one
  // connected component of active edges never looks outside it, so
  // RootComponent schedules only the active component of the root.
  void schedule(std::uint64_t trial, Scope scope) {
    const ClockStream stream(config_.seed, trial);
    const double t = config_.t_obs;
    active_.clear();
    touched_.assign({kRootVertex, kChildVertex});
    if (scope == Scope::WholeTree) {
      for (std::size_t e = 1; e <= edges_; ++e) {
        const double c = stream.clock(static_cast<Vertex>(e));
        if (c < t) active_.push_back({c, static_cast<Vertex>(e)});
      }
      for (std::size_t v = 2; v <= edges_; ++v) touched_.push_back(static_cast<Vertex>(v));
    } else {
      const double c = stream.clock(kChildVertex);
      if (c < t) {
        const double limit = scope == Scope::RootEdge ? c : t;
        active_.push_back({c, kChildVertex});
        for (std::size_t i = 0; i < active_.size(); ++i) {
          const std::size_t v = active_[i].edge;
          if (2 * v > edges_) continue;
          for (const std::size_t child : {2 * v, 2 * v + 1}) {
            const double cc = stream.clock(static_cast<Vertex>(child));
            if (cc < limit) {
              active_.push_back({cc, static_cast<Vertex>(child)});
              touched_.push_back(static_cast<Vertex>(child));
            }
          }
        }
      }
    }
    const std::size_t m = active_.size();
    events_.resize(m);
    if (m == 0) return;
    bucket_start_.assign(m + 1, 0);
    const double scale = static_cast<double>(m) / t;
    auto bucket = [&](double c) { return std::min(m - 1, static_cast<std::size_t>(c * scale)); };
    for (const auto& ev : active_) ++bucket_start_[bucket(ev.clock) + 1];
    for (std::size_t b = 0; b < m; ++b) bucket_start_[b + 1] += bucket_start_[b];
    for (const auto& ev : active_) events_[bucket_start_[bucket(ev.clock)]++] = ev;
    for (std::size_t i = 1; i < m; ++i) {
      const Event ev = events_[i];
      std::size_t j = i;
      while (j > 0 && events_[j - 1].clock > ev.clock) {
        events_[j] = events_[j - 1];
        --j;
      }
      events_[j] = ev;
    }
  }

  Vertex find(Vertex v) {
    while (parent_[v] != v) {
      parent_[v] = parent_[parent_[v]];
      v = parent_[v];
    }
    return v;
  }

  std::size_t component_size(Vertex root) const {
    return config_.size_kind == SizeKind::Volume ? count_[root] - 1 : size_[root];
  }

  void merge(Vertex a, Vertex b) {
    if (count_[a] < count_[b]) std::swap(a, b);
    parent_[b] = a;
    count_[a] += count_[b];
    if (config_.size_kind == SizeKind::Volume) return;

    auto& into = members_[a];
    if (into.empty()) into.push_back(a);
    if (members_[b].empty()) into.push_back(b);
    else into.insert(into.end(), members_[b].begin(), members_[b].end());
    members_[b].clear();
    top_[a] = std::min(top_[a], top_[b]);
    size_[a] = traverse(top_[a], into);
  }

  std::span<const Vertex> children(Vertex v, std::array<Vertex, 2>& buf) const {
    if (v == kRootVertex) {
      buf[0] = kChildVertex;
      return {buf.data(), 1};
    }
    if (2 * static_cast<std::size_t>(v) > edges_) return {};
    buf = {2 * v, 2 * v + 1};
    return {buf.data(), 2};
  }

  // Depth or diameter of the component with the given top vertex and members.
  std::size_t traverse(Vertex top, const std::vector<Vertex>& members) {
    ++stamp_;
    for (const Vertex v : members) mark_[v] = stamp_;
    order_.clear();
    stack_.assign(1, top);
    std::array<Vertex, 2> buf{};
    while (!stack_.empty()) {
      const Vertex v = stack_.back();
      stack_.pop_back();
      order_.push_back(v);
      for (const Vertex c : children(v, buf))
        if (mark_[c] == stamp_ && open_[c]) stack_.push_back(c);
    }
    std::size_t diameter = 0;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      const Vertex v = *it;
      std::size_t best = 0, second = 0;
      bool any = false;
      for (const Vertex c : children(v, buf)) {
        if (mark_[c] != stamp_ || !open_[c]) continue;
        any = true;
        const std::size_t h = height_[c] + 1;
        if (h > best) {
          second = best;
          best = h;
        } else if (h > second) {
          second = h;
        }
      }
      height_[v] = any ? static_cast<std::uint32_t>(best) : 0;
      diameter = std::max(diameter, best + second);
    }
    return config_.size_kind == SizeKind::Depth ? height_[top] : diameter;
  }

  TrialResult root_result() {
    TrialResult result;
    result.root_edge_open = open_[kChildVertex] != 0;
    result.root_cluster_size = component_size(find(kRootVertex));
    if (!result.root_edge_open) return result;

    std::vector<Vertex> cluster{kRootVertex};
    stack_.assign(1, kChildVertex);
    std::array<Vertex, 2> buf{};
    while (!stack_.empty()) {
      const Vertex v = stack_.back();
      stack_.pop_back();
      if (cluster.size() > kReportCap) {
        result.cluster_overflow = true;
        break;
      }
      cluster.push_back(v);
      for (const Vertex c : children(v, buf))
        if (open_[c]) stack_.push_back(c);
    }
    // Depth-first collection keeps the clipped prefix connected.
    result.root_cluster = ClusterShape::from_vertices(Anchor::Root, std::move(cluster));
    return result;
  }

  void fill_trace(TrialTrace& trace) {
    for (std::size_t e = 1; e <= edges_; ++e)
      if (open_[e]) trace.open_edges.push_back(static_cast<Vertex>(e));
    for (std::size_t v = 0; v <= edges_; ++v) {
      if (find(static_cast<Vertex>(v)) != v || count_[v] < 2) continue;
      trace.component_sizes.push_back(component_size(static_cast<Vertex>(v)));
      trace.component_volumes.push_back(count_[v] - 1);
    }
  }

  SimConfig config_;
  std::size_t edges_;
  std::vector<Vertex> parent_;
  std::vector<std::uint32_t> count_;  // vertices per component
  std::vector<std::uint8_t> open_;    // open_[v]: edge entering v is open
  std::vector<Event> active_, events_;
  std::vector<std::size_t> bucket_start_;
  // Non-volume sizes only.
  std::vector<std::size_t> size_;
  std::vector<Vertex> top_;
  std::vector<std::vector<Vertex>> members_;  // empty means the singleton {v}
  std::vector<std::uint32_t> mark_;
  std::vector<std::uint32_t> height_;
  std::uint32_t stamp_ = 0;
  std::vector<Vertex> order_, stack_;
  std::vector<Vertex> touched_;  // vertices whose state the current trial may change
};

inline TrialResult run_trial(const SimConfig& config, std::uint64_t trial_index, TrialTrace* trace = nullptr) {
  TrialEngine engine(config);
  return engine.run(trial_index, trace);
}

// Integer tallies of a batch of trials; summing them is order-independent.
struct RunCounts {
  std::size_t trials = 0;
  std::size_t root_closed = 0;
  std::vector<std::size_t> shape_hits;
  std::vector<std::size_t> size_histogram;  // bins 0..N-1 (capped at kReportCap), last bin: size >= N

  void add(const RunCounts& other) {
    trials += other.trials;
    root_closed += other.root_closed;
    for (std::size_t i = 0; i < shape_hits.size(); ++i) shape_hits[i] += other.shape_hits[i];
    for (std::size_t i = 0; i < size_histogram.size(); ++i) size_histogram[i] += other.size_histogram[i];
  }
};

inline unsigned worker_count(const SimConfig& config) {
  const unsigned wanted = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(wanted, config.trials));
}

inline std::size_t histogram_bins(const SimConfig& config) { return std::min(config.N, kReportCap) + 1; }

inline RunCounts run_trials(const SimConfig& config, std::span<const ClusterShape> shapes = {}) {
  config.validate();
  const unsigned threads = worker_count(config);
  const std::size_t bins = histogram_bins(config);

  auto worker = [&](unsigned id, RunCounts& counts) {
    counts.shape_hits.assign(shapes.size(), 0);
    counts.size_histogram.assign(bins, 0);
    TrialEngine engine(config);
    for (std::size_t i = id; i < config.trials; i += threads) {
      const TrialResult r = engine.run(i);
      ++counts.trials;
      if (!r.root_edge_open) ++counts.root_closed;
      const std::size_t bin = r.root_cluster_size >= config.N ? bins - 1 : std::min(r.root_cluster_size, bins - 2);
      ++counts.size_histogram[bin];
      if (r.cluster_overflow) continue;
      for (std::size_t s = 0; s < shapes.size(); ++s)
        if (r.root_cluster == shapes[s]) ++counts.shape_hits[s];
    }
  };

  std::vector<RunCounts> partial(threads);
  if (threads == 1) {
    worker(0, partial[0]);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned id = 0; id < threads; ++id) pool.emplace_back(worker, id, std::ref(partial[id]));
  }
  RunCounts total = partial[0];
  for (unsigned id = 1; id < threads; ++id) total.add(partial[id]);
  return total;
}

// Fraction of trials in which the root edge is closed at t_obs.
inline Estimate estimate_beta_mc(const SimConfig& config) {
  config.validate();
  const unsigned threads = worker_count(config);
  std::vector<std::size_t> closed(threads, 0);
  auto worker = [&](unsigned id) {
    TrialEngine engine(config);
    for (std::size_t i = id; i < config.trials; i += threads)
      if (!engine.root_edge_open(i)) ++closed[id];
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned id = 0; id < threads; ++id) pool.emplace_back(worker, id);
  }
  std::size_t total = 0;
  for (const std::size_t c : closed) total += c;
  return bernoulli_estimate(total, config);
}

inline void require_reportable(const SimConfig& config, std::span<const ClusterShape> shapes) {
  const auto size = SizeFunction::builtin(config.size_kind);
  for (const auto& s : shapes) {
    if (s.anchor() != Anchor::Root) throw DomainError("cluster shapes must be anchored at the root vertex");
    if (eval_size(size, s) >= config.N) throw DomainError("cluster shape size must be < N");
  }
}

// Empirical frequency of {C_t = shape} for each shape.
inline std::vector<Estimate> estimate_cluster_dist_mc(const SimConfig& config, std::span<const ClusterShape> shapes) {
  require_reportable(config, shapes);
  const RunCounts counts = run_trials(config, shapes);
  std::vector<Estimate> out;
  for (const std::size_t hits : counts.shape_hits) out.push_back(bernoulli_estimate(hits, config));
  return out;
}

struct DepthComparison {
  unsigned delta = 0;
  Estimate shallow;
  Estimate deep;
  double difference = 0.0;      // deep - shallow
  double combined_sigma = 0.0;  // sqrt(se_shallow^2 + se_deep^2)
  bool within_3_sigma = false;
};

// Root-edge estimates at depth D and D + delta with the same seed and trials.
inline std::vector<DepthComparison> depth_stability(const SimConfig& config, std::span<const unsigned> deltas) {
  const Estimate base = estimate_beta_mc(config);
  std::vector<DepthComparison> out;
  for (const unsigned delta : deltas) {
    SimConfig deeper = config;
    deeper.depth = config.depth + delta;
    DepthComparison cmp{.delta = delta, .shallow = base, .deep = delta == 0 ? base : estimate_beta_mc(deeper)};
    cmp.difference = cmp.deep.mean - cmp.shallow.mean;
    cmp.combined_sigma = std::hypot(cmp.shallow.standard_error, cmp.deep.standard_error);
    cmp.within_3_sigma = std::abs(cmp.difference) <= 3.0 * cmp.combined_sigma;
    out.push_back(cmp);
  }
  return out;
}

}  // namespace frozenperc::sim
