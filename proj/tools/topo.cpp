// topo: command-line front end.
//
// Machine output (JSON, CSV) goes to stdout, human output to stderr.
// Exit codes: 0 success / clean, 3 violations found (check), 1 error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "topo/bench.hpp"
#include "topo/constraints.hpp"
#include "topo/detect.hpp"
#include "topo/io.hpp"
#include "topo/loss.hpp"
#include "topo/metrics.hpp"
#include "topo/synth.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitViolations = 3;

unsigned resolve_threads(std::optional<unsigned> flag) {
  if (flag) return std::max(1u, *flag);
  if (const char* env = std::getenv("TOPO_THREADS")) {
    try {
      return std::max(1, std::stoi(env));
    } catch (const std::exception&) {
      throw topo::Error(std::string("TOPO_THREADS is not an integer: ") + env);
    }
  }
  return 1;
}

template <class T>
std::vector<T> split_list(const std::string& text, T (*parse)(const std::string&)) {
  std::vector<T> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(parse(item));
  return out;
}

std::size_t parse_size(const std::string& s) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || s.empty()) throw topo::Error("expected a non-negative integer, got '" + s + "'");
  return static_cast<std::size_t>(v);
}

topo::Algorithm parse_algo(const std::string& s) { return topo::parse_algorithm(s); }

ordered_json ids_json(const topo::ClassSet& s) {
  ordered_json a = ordered_json::array();
  for (unsigned id : topo::class_ids(s)) a.push_back(id);
  return a;
}

ordered_json detection_json(const topo::DetectionResult& r) {
  ordered_json j;
  j["violations"] = r.violation_count;
  j["foreground"] = r.foreground_count;
  j["violations_percent"] = r.violations_percent();
  ordered_json tasks = ordered_json::array();
  for (const auto& t : r.per_task) {
    ordered_json tj;
    tj["ids_a"] = ids_json(t.task.ids_a);
    tj["ids_c"] = ids_json(t.task.ids_c);
    tj["width"] = t.task.width;
    tj["kernel_extent"] = t.task.kernel.extent();
    tj["critical_a"] = t.v_a.popcount();
    tj["critical_c"] = t.v_c.popcount();
    tasks.push_back(std::move(tj));
  }
  j["per_task"] = std::move(tasks);
  return j;
}

struct CheckArgs {
  std::string labels, constraints, algo = "auto", out;
  bool json = false;
  std::optional<unsigned> threads;
};

int cmd_check(const CheckArgs& a) {
  const auto g = topo::read_label_grid(a.labels);
  const auto cfg = topo::read_constraint_config(a.constraints);
  const auto algo = topo::parse_algorithm(a.algo);
  const auto r = topo::detect(g, cfg.constraints, cfg.conn, algo, resolve_threads(a.threads));
  if (!a.out.empty()) topo::write_mask(r.v, a.out);
  std::cerr << "checked " << g.shape().to_string() << " grid: " << r.violation_count << " critical sites of "
            << r.foreground_count << " foreground (" << r.violations_percent() << "%)\n";
  if (a.json) std::cout << detection_json(r).dump(2) << '\n';
  return r.violation_count == 0 ? kExitOk : kExitViolations;
}

struct LossArgs {
  std::string likelihood, gt, constraints, surrogate = "ce", grad, algo = "auto";
  std::optional<double> lambda_dice, lambda_ti, epsilon;
};

int cmd_loss(const LossArgs& a) {
  const auto f = topo::read_likelihood_grid(a.likelihood);
  const auto g = topo::read_label_grid(a.gt);
  const auto cfg = topo::read_constraint_config(a.constraints);
  auto lc = topo::LossConfig::defaults_for(f.shape().ndim());
  lc.surrogate = topo::parse_surrogate(a.surrogate);
  if (a.lambda_dice) lc.lambda_dice = *a.lambda_dice;
  if (a.lambda_ti) lc.lambda_ti = *a.lambda_ti;
  if (a.epsilon) lc.epsilon = *a.epsilon;
  const auto r = topo::total_loss(f, g, cfg.constraints, cfg.conn, lc, !a.grad.empty(), topo::parse_algorithm(a.algo));
  if (!a.grad.empty()) topo::write_likelihood_grid(topo::LikelihoodGrid(f.shape(), f.num_classes(), *r.gradient), a.grad);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  ordered_json j;
  j["l_ce"] = r.l_ce;
  j["l_dice"] = r.l_dice;
  j["l_ti"] = r.l_ti;
  j["l_total"] = r.l_total;
  j["surrogate"] = topo::to_string(lc.surrogate);
  j["lambda_dice"] = lc.lambda_dice;
  j["lambda_ti"] = lc.lambda_ti;
  j["critical_sites"] = r.critical.popcount();
  j["warnings"] = r.warnings;
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

struct MetricsArgs {
  std::string pred, gt, constraints;
  bool json = false;
};

int cmd_metrics(const MetricsArgs& a) {
  const auto pred = topo::read_label_grid(a.pred);
  const auto gt = topo::read_label_grid(a.gt);
  const auto cfg = topo::read_constraint_config(a.constraints);
  const auto report = topo::evaluate(pred, gt, cfg.constraints, cfg.conn);
  for (const auto& [id, m] : report.per_class) {
    std::cerr << "class " << id << ": dice " << m.dice;
    if (m.hd) std::cerr << "  hd " << *m.hd << "  assd " << *m.assd;
    else std::cerr << "  hd/assd: " << m.error;
    std::cerr << '\n';
  }
  std::cerr << "violations: " << report.violations_percent << "%\n";
  if (a.json) std::cout << report.to_json(2) << '\n';
  return kExitOk;
}

struct GenArgs {
  std::string scenario = "nested_rings", dims = "64,64", out, cfg_out, conn = "box";
  unsigned classes = 3, wall = 1;
  std::size_t violations = 0;
  std::uint64_t seed = 0;
};

int cmd_gen(const GenArgs& a) {
  topo::SynthSpec spec;
  spec.scenario = topo::parse_scenario(a.scenario);
  spec.dims = split_list<std::size_t>(a.dims, parse_size);
  spec.num_classes = a.classes;
  spec.wall_thickness = a.wall;
  spec.violation_count = a.violations;
  spec.seed = a.seed;
  const auto result = topo::generate(spec);
  const auto conn = topo::parse_connectivity(a.conn);
  topo::write_label_grid(result.grid, a.out);
  if (!a.cfg_out.empty()) {
    std::ofstream cfg(a.cfg_out);
    if (!cfg) throw topo::Error("cannot open " + a.cfg_out + " for writing");
    cfg << topo::format_constraint_config({result.constraints, conn});
  }
  ordered_json planted = ordered_json::array();
  const std::size_t ndim = result.grid.shape().ndim();
  for (const auto& p : result.planted) {
    ordered_json c = ordered_json::array();
    for (std::size_t ax = 3 - ndim; ax < 3; ++ax) c.push_back(p[ax]);
    planted.push_back(std::move(c));
  }
  ordered_json j;
  j["dims"] = result.grid.shape().dims();
  j["planted"] = std::move(planted);
  std::cout << j.dump(2) << '\n';
  std::cerr << "wrote " << a.out << " (" << result.grid.shape().to_string() << ", " << result.planted.size()
            << " planted violations)\n";
  return kExitOk;
}

struct LossMaskArgs {
  std::string likelihood, constraints, out, algo = "auto";
  std::optional<unsigned> threads;
};

int cmd_lossmask(const LossMaskArgs& a) {
  const auto f = topo::read_likelihood_grid(a.likelihood);
  const auto cfg = topo::read_constraint_config(a.constraints);
  const auto r = topo::detect(topo::argmax_labels(f), cfg.constraints, cfg.conn, topo::parse_algorithm(a.algo),
                              resolve_threads(a.threads));
  topo::write_mask(r.v, a.out);
  ordered_json j;
  j["violations"] = r.violation_count;
  j["foreground"] = r.foreground_count;
  j["violations_percent"] = r.violations_percent();
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

struct BenchArgs {
  std::string algos = "naive,shifted,conv_direct,conv_fft", sizes = "256", ks = "3,5,9,17", out;
  std::size_t repeats = 3, ndim = 2;
  std::uint64_t seed = 1;
  bool csv = false;
  std::optional<unsigned> threads;
};

int cmd_bench(const BenchArgs& a) {
  topo::BenchOptions opts;
  opts.algorithms = split_list<topo::Algorithm>(a.algos, parse_algo);
  opts.sizes = split_list<std::size_t>(a.sizes, parse_size);
  opts.kernel_extents = split_list<std::size_t>(a.ks, parse_size);
  opts.repeats = a.repeats;
  opts.ndim = a.ndim;
  opts.seed = a.seed;
  opts.threads = resolve_threads(a.threads);
  const auto report = topo::bench(opts);
  std::cerr << report.to_table();
  if (a.csv) std::cout << report.to_csv();
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    if (!out) throw topo::Error("cannot open " + a.out + " for writing");
    out << report.to_csv();
  }
  if (!report.consistent) {
    std::cerr << "error: algorithms disagree on violation counts\n";
    return kExitError;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topological interaction checks for multi-class label grids"};
  app.require_subcommand(1);

  CheckArgs check;
  auto* c = app.add_subcommand("check", "Find sites violating the constraints");
  c->add_option("labels", check.labels, "Label grid (SEGV or P5 PGM)")->required();
  c->add_option("constraints", check.constraints, "Constraint config")->required();
  c->add_option("--algo", check.algo, "auto, naive, shifted, conv_direct or conv_fft");
  c->add_option("--out", check.out, "Write the critical-site mask as SEGV");
  c->add_flag("--json", check.json, "Print a JSON summary to stdout");
  c->add_option("--threads", check.threads, "Worker threads (falls back to TOPO_THREADS)");

  LossArgs loss;
  auto* l = app.add_subcommand("loss", "Evaluate L_total = L_ce + lambda_dice L_dice + lambda_ti L_ti");
  l->add_option("likelihood", loss.likelihood, "Likelihood grid (SEGV)")->required();
  l->add_option("gt", loss.gt, "Ground-truth labels (SEGV)")->required();
  l->add_option("constraints", loss.constraints, "Constraint config")->required();
  l->add_option("--surrogate", loss.surrogate, "ce, mse or dice");
  l->add_option("--lambda-dice", loss.lambda_dice, "Dice weight (default 1)");
  l->add_option("--lambda-ti", loss.lambda_ti, "Interaction weight (default 1e-4 in 2D, 1e-6 in 3D)");
  l->add_option("--epsilon", loss.epsilon, "Dice smoothing (default 1e-5)");
  l->add_option("--grad", loss.grad, "Write dL_total/df as a SEGV likelihood grid");
  l->add_option("--algo", loss.algo, "Detection algorithm");

  MetricsArgs metrics;
  auto* m = app.add_subcommand("metrics", "Dice, Hausdorff, ASSD and % violations");
  m->add_option("pred", metrics.pred, "Predicted labels")->required();
  m->add_option("gt", metrics.gt, "Ground-truth labels")->required();
  m->add_option("constraints", metrics.constraints, "Constraint config")->required();
  m->add_flag("--json", metrics.json, "Print the JSON report to stdout");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Generate a synthetic label grid and its constraints");
  g->add_option("--scenario", gen.scenario, "nested_rings or exclusion_blobs");
  g->add_option("--dims", gen.dims, "Comma-separated extents, e.g. 64,64 or 32,32,32");
  g->add_option("--classes", gen.classes, "Number of classes (>= 3)");
  g->add_option("--violations", gen.violations, "Planted violations");
  g->add_option("--wall", gen.wall, "Wall thickness / gap width, also the constraint width");
  g->add_option("--seed", gen.seed, "Random seed");
  g->add_option("--conn", gen.conn, "Connectivity written to the config");
  g->add_option("--out", gen.out, "Output label grid (SEGV)")->required();
  g->add_option("--cfg", gen.cfg_out, "Output constraint config");

  LossMaskArgs lossmask;
  auto* lm = app.add_subcommand("lossmask", "Critical-site mask of argmax(likelihood)");
  lm->add_option("likelihood", lossmask.likelihood, "Likelihood grid (SEGV)")->required();
  lm->add_option("constraints", lossmask.constraints, "Constraint config")->required();
  lm->add_option("--out", lossmask.out, "Output mask (SEGV)")->required();
  lm->add_option("--algo", lossmask.algo, "Detection algorithm");
  lm->add_option("--threads", lossmask.threads, "Worker threads (falls back to TOPO_THREADS)");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Time the detection algorithms against N and k");
  b->add_option("--algos", bench.algos, "Comma-separated algorithms");
  b->add_option("--N", bench.sizes, "Comma-separated per-axis sizes");
  b->add_option("--k", bench.ks, "Comma-separated kernel extents (odd, >= 3)");
  b->add_option("--repeats", bench.repeats, "Timed repeats per cell");
  b->add_option("--ndim", bench.ndim, "2 or 3");
  b->add_option("--seed", bench.seed, "Generator seed");
  b->add_flag("--csv", bench.csv, "Print CSV rows to stdout");
  b->add_option("--out", bench.out, "Also write CSV to this file");
  b->add_option("--threads", bench.threads, "Worker threads (falls back to TOPO_THREADS)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*c) return cmd_check(check);
    if (*l) return cmd_loss(loss);
    if (*m) return cmd_metrics(metrics);
    if (*g) return cmd_gen(gen);
    if (*lm) return cmd_lossmask(lossmask);
    if (*b) return cmd_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
