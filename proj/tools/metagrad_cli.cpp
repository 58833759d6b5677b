// metagrad: run, compare and audit MAML / FO-MAML / HF-MAML on synthetic task families.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "CLI11.hpp"
#include "metagrad/closed_form.hpp"
#include "metagrad/error.hpp"
#include "metagrad/experiment.hpp"
#include "metagrad/family_io.hpp"
#include "metagrad/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace metagrad;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string algorithms;
  std::optional<int> max_iters;
  bool quiet = false;
  bool gnuplot = false;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", f.config, "Experiment config (JSON)");
  if (needs_config) opt->required();
  cmd->add_option("--seed", f.seed, "Override the seed (single replicate)");
  cmd->add_option("--out", f.out, "Output directory");
  cmd->add_option("--algorithms", f.algorithms, "Comma-separated subset of maml,fomaml,hfmaml");
  cmd->add_option("--max-iters", f.max_iters, "Override max_iters");
  cmd->add_flag("--quiet", f.quiet, "Suppress progress output");
}

struct Loaded {
  ExperimentConfig config;
  TaskFamily family;
};

Loaded load(const CommonFlags& f) {
  ExperimentConfig c = load_experiment(f.config);
  if (f.seed) {
    c.seeds = {*f.seed};
    c.optimizer.seed = *f.seed;
  }
  if (f.max_iters) c.optimizer.max_iters = *f.max_iters;
  if (!f.algorithms.empty()) {
    c.algorithms.clear();
    std::stringstream ss(f.algorithms);
    std::string item;
    while (std::getline(ss, item, ',')) c.algorithms.push_back(algorithm_from_string(item));
    if (c.algorithms.empty()) throw ConfigError("--algorithms is empty");
    c.optimizer.algorithm = c.algorithms.front();
  }
  TaskFamily family = build_family(c, fs::path(f.config).parent_path());
  c.optimizer.w0 = resolve_w0(c, family);
  return {std::move(c), std::move(family)};
}

fs::path prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

void write_gnuplot(const fs::path& dir, const std::vector<Algorithm>& algorithms) {
  std::ofstream gp(dir / "plot.gp", std::ios::binary);
  gp << "set datafile separator ','\nset logscale y\nset xlabel 'iteration'\nset ylabel '||grad F||'\n";
  gp << "set terminal pngcairo size 900,600\nset output 'grad_norm.png'\nplot ";
  for (std::size_t i = 0; i < algorithms.size(); ++i) {
    if (i) gp << ", ";
    gp << "'" << to_string(algorithms[i]) << ".csv' using 1:2 skip 1 with lines title '" << to_string(algorithms[i])
       << "'";
  }
  gp << '\n';
}

void log_line(const CommonFlags& f, const std::string& line) {
  static std::mutex m;
  if (f.quiet) return;
  std::lock_guard lock(m);
  std::cerr << line << '\n';
}

std::string short_summary(const RunRecord& r) {
  std::ostringstream os;
  os << to_string(r.algorithm) << ": iters=" << (r.rows.empty() ? 0 : r.rows.back().iter)
     << " best ||grad F||=" << format_double(r.summary.best_grad_norm)
     << " last ||grad F||=" << format_double(r.summary.last_grad_norm);
  return os.str();
}

int cmd_run(const CommonFlags& f) {
  auto [config, family] = load(f);
  const fs::path dir = prepare_dir(f.out);
  const RunRecord record = run(family, config.optimizer);
  for (const auto& w : record.warnings) log_line(f, "warning: " + w);
  const fs::path csv = dir / ("run_" + to_string(record.algorithm) + ".csv");
  emit_csv(record, csv);
  ExperimentConfig echo = config;
  echo.algorithms = {record.algorithm};
  write_sidecar(csv, resolved_json(echo, family));
  log_line(f, short_summary(record));
  return 0;
}

// One replicate of `compare` into `dir`.
void compare_into(const ExperimentConfig& config, const TaskFamily& family, const fs::path& dir, const CommonFlags& f) {
  prepare_dir(dir);
  const auto records = run_comparison(family, config.optimizer, config.algorithms);
  const json resolved = resolved_json(config, family);
  json summary;
  summary["seed"] = config.optimizer.seed;
  summary["runs"] = json::array();
  for (const RunRecord& r : records) {
    const fs::path csv = dir / (to_string(r.algorithm) + ".csv");
    emit_csv(r, csv);
    write_sidecar(csv, resolved);
    summary["runs"].push_back(summary_to_json(r));
    for (const auto& w : r.warnings) log_line(f, "warning: " + w);
    log_line(f, "seed " + std::to_string(config.optimizer.seed) + " " + short_summary(r));
  }
  const fs::path summary_path = dir / "summary.json";
  write_json(summary, summary_path);
  write_sidecar(summary_path, resolved);
  if (f.gnuplot) write_gnuplot(dir, config.algorithms);
}

int cmd_compare(const CommonFlags& f) {
  auto [config, family] = load(f);
  const fs::path dir = prepare_dir(f.out);
  if (config.seeds.size() == 1) {
    compare_into(config, family, dir, f);
    return 0;
  }
  parallel_for(config.seeds.size(), worker_count_from_env(), [&](std::size_t i) {
    ExperimentConfig replicate = config;
    replicate.optimizer.seed = config.seeds[i];
    replicate.seeds = {config.seeds[i]};
    compare_into(replicate, family, dir / ("seed_" + std::to_string(config.seeds[i])), f);
  });
  return 0;
}

int cmd_audit(const CommonFlags& f) {
  auto [config, family] = load(f);
  if (config.audits.empty()) throw ConfigError("config has no 'audits'");
  const fs::path dir = prepare_dir(f.out);
  json extra = json::object();
  const auto audits = run_audits(config, family, &extra);
  json list = json::array();
  bool all_passed = true;
  for (const BoundAudit& a : audits) {
    list.push_back(to_json(a));
    all_passed = all_passed && a.passed;
    log_line(f, std::string(a.passed ? "PASS " : "FAIL ") + a.name + " measured=" + format_double(a.measured) +
                    " bound=" + format_double(a.bound) + " margin=" + format_double(a.mc_margin));
  }
  const fs::path path = dir / "audits.json";
  write_json(list, path);
  write_sidecar(path, resolved_json(config, family));
  if (extra.contains("kshot")) write_json(extra, dir / "kshot.json");
  return all_passed ? 0 : 1;
}

int cmd_quadratic_oracle(const CommonFlags& f, std::optional<double> alpha_flag) {
  auto [config, family] = load(f);
  const double alpha = alpha_flag.value_or(config.optimizer.alpha);
  const QuadraticAnalysis q = analyze_quadratic(family, alpha);
  json doc;
  doc["alpha"] = alpha;
  doc["w_star"] = q.w_star.values();
  doc["w_fo"] = q.w_fo.values();
  doc["fo_gap"] = q.grad_F_at_wfo_norm;
  std::cout << doc.dump(2) << '\n';
  return 0;
}

struct GenFlags {
  std::string kind = "rank1mf";
  std::size_t n_tasks = 20;
  std::size_t dim = 5;
  double similarity = 1.0;
  std::uint64_t seed = 0;
  double eig_min = 0.5;
  double eig_max = 1.0;
  std::string out = "family.json";
};

int cmd_gen_family(const GenFlags& g) {
  json knobs = {{"kind", g.kind}, {"n_tasks", g.n_tasks}, {"dim", g.dim}, {"similarity", g.similarity}, {"seed", g.seed}};
  if (g.kind == "quadratic") {
    knobs["eig_min"] = g.eig_min;
    knobs["eig_max"] = g.eig_max;
  }
  const TaskFamily family = generate_family(knobs);
  const fs::path out = g.out;
  if (out.has_parent_path()) prepare_dir(out.parent_path());
  save_family(family, out);
  write_sidecar(out, {{"generate", knobs}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MAML, FO-MAML and HF-MAML experiments on synthetic task families"};
  app.require_subcommand(1);

  CommonFlags run_flags, compare_flags, audit_flags, oracle_flags;
  auto* run_cmd = app.add_subcommand("run", "Run one algorithm and write its CSV trace");
  add_common(run_cmd, run_flags);
  auto* compare_cmd = app.add_subcommand("compare", "Run every configured algorithm with shared seeds");
  add_common(compare_cmd, compare_flags);
  compare_cmd->add_flag("--gnuplot", compare_flags.gnuplot, "Also write a gnuplot script");
  auto* audit_cmd = app.add_subcommand("audit", "Run the configured bound audits and write audits.json");
  add_common(audit_cmd, audit_flags);
  auto* oracle_cmd = app.add_subcommand("quadratic-oracle", "Print w*, w_FO and the FO-MAML gap of a quadratic family");
  add_common(oracle_cmd, oracle_flags);
  std::optional<double> oracle_alpha;
  oracle_cmd->add_option("--alpha", oracle_alpha, "Inner stepsize (defaults to the config's alpha)");

  GenFlags gen;
  auto* gen_cmd = app.add_subcommand("gen-family", "Write a random task family JSON");
  gen_cmd->add_option("--kind", gen.kind, "quadratic or rank1mf")->check(CLI::IsMember({"quadratic", "rank1mf"}));
  gen_cmd->add_option("--n-tasks", gen.n_tasks, "Number of tasks");
  gen_cmd->add_option("--dim", gen.dim, "Dimension");
  gen_cmd->add_option("--similarity", gen.similarity, "Generator spread s (rank1mf) or b_i scale (quadratic)");
  gen_cmd->add_option("--seed", gen.seed, "Seed");
  gen_cmd->add_option("--eig-min", gen.eig_min, "Quadratic: smallest eigenvalue of A_i");
  gen_cmd->add_option("--eig-max", gen.eig_max, "Quadratic: largest eigenvalue of A_i");
  gen_cmd->add_option("--out", gen.out, "Output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run_cmd) return cmd_run(run_flags);
    if (*compare_cmd) return cmd_compare(compare_flags);
    if (*audit_cmd) return cmd_audit(audit_flags);
    if (*oracle_cmd) return cmd_quadratic_oracle(oracle_flags, oracle_alpha);
    if (*gen_cmd) return cmd_gen_family(gen);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
