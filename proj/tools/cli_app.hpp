#pragma once

// Command-line front end. run_command() is the whole program minus main(),
// so tests can drive it with an argument vector and string streams.
//
// Exit codes: 0 success, 1 numerical failure, 2 usage error.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "frozenperc/beta.hpp"
#include "frozenperc/critical.hpp"
#include "frozenperc/error.hpp"
#include "frozenperc/io.hpp"
#include "frozenperc/sim.hpp"
#include "frozenperc/sizefn.hpp"
#include "frozenperc/version.hpp"

namespace frozenperc::cli {

// Usage problem discovered after parsing; message names the flag.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Cell = std::variant<std::string, double, std::int64_t>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline std::string cell_text(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
  return format_number(std::get<double>(c));
}

inline nlohmann::json cell_json(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return *s;
  if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
  const double d = std::get<double>(c);
  if (!std::isfinite(d)) return format_number(d);
  return std::stod(format_number(d));
}

inline void write_csv(std::ostream& os, const Table& table) {
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
    os << '\n';
  }
}

inline nlohmann::json table_json(const Table& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : table.rows) {
    nlohmann::json r = nlohmann::json::object();
    for (std::size_t i = 0; i < row.size(); ++i) r[table.columns[i]] = cell_json(row[i]);
    rows.push_back(std::move(r));
  }
  return {{"columns", table.columns}, {"rows", rows}};
}

struct RunManifest {
  std::string subcommand;
  nlohmann::json parameters = nlohmann::json::object();
  std::optional<std::uint64_t> seed;
  double wall_seconds = 0.0;
  std::string timestamp;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"subcommand", subcommand},
                        {"parameters", parameters},
                        {"version", std::string(kVersion)},
                        {"wall_seconds", wall_seconds},
                        {"timestamp", timestamp}};
    j["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
    return j;
  }
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// --out is either a format name (csv, json) for stdout or a file path; a
// path ending in .json selects JSON. --format overrides the inferred format.
struct OutputSpec {
  std::string out;
  std::string format;

  bool to_file() const { return !out.empty() && out != "csv" && out != "json"; }
  bool json() const {
    if (!format.empty()) return format == "json";
    if (out == "json") return true;
    return to_file() && std::filesystem::path(out).extension() == ".json";
  }
};

inline void emit(const Table& table, const RunManifest& manifest, const OutputSpec& spec, std::ostream& out) {
  auto write = [&](std::ostream& os) {
    if (spec.json()) {
      nlohmann::json doc = table_json(table);
      doc["manifest"] = manifest.to_json();
      os << doc.dump(2) << '\n';
    } else {
      write_csv(os, table);
    }
  };
  if (!spec.to_file()) {
    write(out);
    return;
  }
  std::ofstream file(spec.out);
  if (!file) throw UsageError("--out: cannot open '" + spec.out + "' for writing");
  write(file);
  if (!spec.json()) {
    std::ofstream side(spec.out + ".manifest.json");
    side << manifest.to_json().dump(2) << '\n';
  }
}

inline void check_N_cap(std::size_t N, SizeKind kind) {
  const std::size_t cap = kind == SizeKind::Volume  ? kVolumeGCap
                          : kind == SizeKind::Depth ? kDepthGCap
                                                    : kDiameterGCap;
  if (N < 1 || N > cap)
    throw UsageError("--N: must be in [1, " + std::to_string(cap) + "] for size " + to_string(kind));
}

inline std::string shape_label(const ClusterShape& c) {
  std::string s = "cluster[";
  for (std::size_t i = 0; i < c.vertices().size(); ++i) s += (i ? ";" : "") + std::to_string(c.vertices()[i]);
  return s + "]";
}

// Root clusters with at most two edges (and fewer than N).
inline std::vector<ClusterShape> small_root_shapes(std::size_t N) {
  std::vector<ClusterShape> shapes;
  for (std::size_t k = 0; k <= 2 && k < N; ++k)
    for (auto& c : enumerate_clusters(Anchor::Root, k)) shapes.push_back(std::move(c));
  return shapes;
}

inline int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Frozen percolation on the planted binary tree: analytic curves and Monte Carlo", "frozenperc"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  OutputSpec output;
  unsigned threads = 0;
  const CLI::Validator at_least_one(
      [](std::string& v) -> std::string {
        const bool digits = !v.empty() && v.find_first_not_of("0123456789") == std::string::npos;
        if (digits && v.find_first_not_of('0') != std::string::npos) return {};
        return "must be an integer >= 1, got " + v;
      },
      "INT>=1");
  auto add_output = [&](CLI::App* sub) {
    sub->add_option("--out", output.out, "csv | json (stdout) or an output file path");
    sub->add_option("--format", output.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  };

  // beta
  std::size_t beta_N = 1, grid_points = 101;
  std::string size_name = "volume", method_name = "implicit";
  auto* beta_cmd = app.add_subcommand("beta", "beta_N(t) on a uniform grid of [0, 1]");
  beta_cmd->add_option("--N", beta_N, "freezing parameter")->check(at_least_one);
  beta_cmd->add_option("--size", size_name)->check(CLI::IsMember({"volume", "depth", "diameter"}));
  beta_cmd->add_option("--grid", grid_points, "number of grid points")->check(CLI::Range(2, 100001));
  beta_cmd->add_option("--method", method_name)->check(CLI::IsMember({"implicit", "ode", "closed"}));
  add_output(beta_cmd);

  // dist
  std::size_t dist_N = 1;
  double dist_t = 1.0;
  auto* dist_cmd = app.add_subcommand("dist", "law of the root cluster volume at time t");
  dist_cmd->add_option("--N", dist_N)->check(CLI::Range(std::size_t{1}, kVolumeGCap));
  dist_cmd->add_option("--t", dist_t)->check(CLI::Range(0.0, 1.0));
  add_output(dist_cmd);

  // xn
  std::vector<std::size_t> xn_Ns{1};
  auto* xn_cmd = app.add_subcommand("xn", "critical roots x_N");
  xn_cmd->add_option("--N", xn_Ns, "one or more N")->check(at_least_one);
  xn_cmd->add_option("--size", size_name)->check(CLI::IsMember({"volume", "depth", "diameter"}));
  add_output(xn_cmd);

  // flimit
  std::vector<double> f_xs{0.0};
  auto* f_cmd = app.add_subcommand("flimit", "scaling limit F(x)");
  f_cmd->add_option("--x", f_xs, "one or more x >= 0")->check(CLI::NonNegativeNumber);
  add_output(f_cmd);

  // simulate / compare
  sim::SimConfig sim_config{.N = 5, .size_kind = SizeKind::Volume, .t_obs = 0.75, .depth = 12, .trials = 10000, .seed = 1};
  std::string sim_size = "volume";
  auto add_sim_options = [&](CLI::App* sub) {
    sub->add_option("--N", sim_config.N)->check(at_least_one);
    sub->add_option("--size", sim_size)->check(CLI::IsMember({"volume", "depth", "diameter"}));
    sub->add_option("--t", sim_config.t_obs)->check(CLI::Range(0.0, 1.0));
    sub->add_option("--depth", sim_config.depth)->check(CLI::Range(1u, sim::kMaxDepth));
    sub->add_option("--trials", sim_config.trials)->check(at_least_one);
    sub->add_option("--seed", sim_config.seed);
    sub->add_option("--threads", threads, "worker threads (0: all hardware threads)");
    add_output(sub);
  };
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo estimates of the root edge and root cluster");
  add_sim_options(sim_cmd);
  auto* cmp_cmd = app.add_subcommand("compare", "Monte Carlo against the analytic values");
  add_sim_options(cmp_cmd);

  // check-sizes
  std::size_t k_cap = kGoodnessCap;
  std::vector<std::string> check_names{"volume", "depth", "diameter"};
  auto* check_cmd = app.add_subcommand("check-sizes", "exhaustive goodness checks of the built-in size functions");
  check_cmd->add_option("--k-cap", k_cap)->check(CLI::Range(std::size_t{0}, kGoodnessCap));
  check_cmd->add_option("--size", check_names)->check(CLI::IsMember({"volume", "depth", "diameter"}));
  add_output(check_cmd);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  const auto started = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.timestamp = utc_timestamp();
  Table table;
  try {
    if (*beta_cmd) {
      manifest.subcommand = "beta";
      const auto grid = uniform_grid(grid_points);
      const SizeKind kind = parse_size_kind(size_name);
      BetaCurve curve;
      if (method_name == "closed") {
        curve = beta_inf_curve(grid);
      } else {
        check_N_cap(beta_N, kind);
        const auto s = SizeFunction::builtin(kind);
        curve = method_name == "ode" ? beta_ode(s, beta_N, grid) : beta_implicit_curve(s, beta_N, grid);
      }
      manifest.parameters = {{"N", beta_N}, {"size", size_name}, {"grid", grid_points}, {"method", method_name}};
      table.columns = {"t", "beta", "method", "N", "size"};
      const std::string n_text = curve.N ? std::to_string(*curve.N) : "inf";
      for (std::size_t i = 0; i < grid.size(); ++i)
        table.rows.push_back({curve.t_grid[i], curve.values[i], to_string(curve.method), n_text, size_name});
    } else if (*dist_cmd) {
      manifest.subcommand = "dist";
      manifest.parameters = {{"N", dist_N}, {"t", dist_t}};
      const auto dist = size_distribution(dist_N, dist_t);
      table.columns = {"n", "prob"};
      for (std::size_t n = 0; n < dist.N(); ++n)
        table.rows.push_back({static_cast<std::int64_t>(n), dist.prob(n)});
      table.rows.push_back({std::string("frozen"), dist.frozen_prob()});
    } else if (*xn_cmd) {
      manifest.subcommand = "xn";
      manifest.parameters = {{"N", xn_Ns}, {"size", size_name}};
      const SizeKind kind = parse_size_kind(size_name);
      table.columns = {"N", "x_N", "gap", "N_times_gap"};
      for (const std::size_t N : xn_Ns) {
        check_N_cap(N, kind);
        const auto root = kind == SizeKind::Volume ? find_xN(N) : find_xN_s(SizeFunction::builtin(kind), N);
        const double gap = root.value - 0.25;
        table.rows.push_back({static_cast<std::int64_t>(N), root.value, gap, static_cast<double>(N) * gap});
      }
    } else if (*f_cmd) {
      manifest.subcommand = "flimit";
      manifest.parameters = {{"x", f_xs}};
      table.columns = {"x", "F"};
      for (const double x : f_xs) table.rows.push_back({x, eval_F(x)});
    } else if (*sim_cmd || *cmp_cmd) {
      const bool comparing = cmp_cmd->parsed();
      manifest.subcommand = comparing ? "compare" : "simulate";
      sim_config.size_kind = parse_size_kind(sim_size);
      sim_config.threads = threads;
      manifest.seed = sim_config.seed;
      manifest.parameters = {{"N", sim_config.N},         {"size", sim_size},
                             {"t", sim_config.t_obs},     {"depth", sim_config.depth},
                             {"trials", sim_config.trials}, {"seed", sim_config.seed}};
      const auto shapes = sim_config.size_kind == SizeKind::Volume ? small_root_shapes(sim_config.N)
                                                                   : std::vector<ClusterShape>{};
      const auto counts = sim::run_trials(sim_config, shapes);
      const auto estimate = [&](std::size_t hits) { return sim::bernoulli_estimate(hits, sim_config); };
      const std::size_t bins = counts.size_histogram.size();

      if (!comparing) {
        table.columns = {"quantity", "mean", "stderr", "trials"};
        auto row = [&](std::string name, const sim::Estimate& e) {
          table.rows.push_back({std::move(name), e.mean, e.standard_error, static_cast<std::int64_t>(e.trials)});
        };
        row("beta", estimate(counts.root_closed));
        for (std::size_t b = 0; b + 1 < bins; ++b)
          row((b + 2 == bins && bins - 1 < sim_config.N ? "size>=" : "size=") + std::to_string(b),
              estimate(counts.size_histogram[b]));
        row("frozen", estimate(counts.size_histogram[bins - 1]));
        for (std::size_t i = 0; i < shapes.size(); ++i) row(shape_label(shapes[i]), estimate(counts.shape_hits[i]));
      } else {
        table.columns = {"quantity", "analytic", "mc_mean", "mc_stderr", "z_score"};
        const auto s = SizeFunction::builtin(sim_config.size_kind);
        check_N_cap(sim_config.N, sim_config.size_kind);
        const double beta = beta_implicit(s, sim_config.N, sim_config.t_obs);
        auto row = [&](std::string name, double analytic, const sim::Estimate& e) {
          const double diff = e.mean - analytic;
          const double z = e.standard_error > 0.0 ? diff / e.standard_error : (diff == 0.0 ? 0.0 : INFINITY);
          table.rows.push_back({std::move(name), analytic, e.mean, e.standard_error, z});
        };
        row("beta", beta, estimate(counts.root_closed));
        if (sim_config.size_kind == SizeKind::Volume) {
          const SizeDistribution dist(sim_config.N, sim_config.t_obs, beta);
          for (std::size_t i = 0; i < shapes.size(); ++i)
            row(shape_label(shapes[i]), cluster_prob_given_beta(beta, sim_config.N, sim_config.t_obs, shapes[i]),
                estimate(counts.shape_hits[i]));
          const bool all_bins = bins - 1 == sim_config.N;
          for (std::size_t n = 0; n + 1 < bins && (all_bins || n + 2 < bins); ++n)
            row("size=" + std::to_string(n), dist.prob(n), estimate(counts.size_histogram[n]));
          row("frozen", dist.frozen_prob(), estimate(counts.size_histogram[bins - 1]));
        }
      }
    } else if (*check_cmd) {
      manifest.subcommand = "check-sizes";
      manifest.parameters = {{"k_cap", k_cap}, {"size", check_names}};
      table.columns = {"size", "condition", "verdict", "cases", "detail"};
      static const char* const kConditions[] = {"homomorphism", "finiteness", "monotonicity", "volume_bound"};
      for (const auto& name : check_names) {
        const auto report = check_good_size(SizeFunction::builtin(parse_size_kind(name)), k_cap);
        for (std::size_t c = 0; c < 4; ++c)
          table.rows.push_back({name, std::string(kConditions[c]), to_string(report.conditions[c].verdict),
                                static_cast<std::int64_t>(report.conditions[c].cases_checked),
                                report.conditions[c].detail});
      }
    }
    manifest.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    emit(table, manifest, output, out);
    return 0;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const CapExceeded& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << " (best estimate " << format_number(e.best_estimate())
        << ", error bound " << format_number(e.error_bound()) << ")\n";
    return 1;
  }
}

}  // namespace frozenperc::cli
