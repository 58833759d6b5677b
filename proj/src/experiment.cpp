#include "metagrad/experiment.hpp"

#include <fstream>
#include <set>

#include "metagrad/error.hpp"
#include "metagrad/family_io.hpp"
#include "metagrad/stepsize.hpp"

namespace metagrad {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

BatchSpec parse_batches(const json& node) {
  reject_unknown(node, {"B", "B_prime", "D_in", "D_o", "D_h", "D_beta", "D_test", "full_task_sweep"}, "batches");
  BatchSpec b;
  b.B = get_or(node, "B", b.B);
  b.B_prime = get_or(node, "B_prime", b.B_prime);
  b.D_in = get_or(node, "D_in", b.D_in);
  b.D_o = get_or(node, "D_o", b.D_o);
  b.D_h = get_or(node, "D_h", b.D_h);
  b.D_beta = get_or(node, "D_beta", b.D_beta);
  b.D_test = get_or(node, "D_test", b.D_test);
  b.full_task_sweep = get_or(node, "full_task_sweep", b.full_task_sweep);
  validate(b);
  return b;
}

json batches_to_json(const BatchSpec& b) {
  return {{"B", b.B},         {"B_prime", b.B_prime}, {"D_in", b.D_in},     {"D_o", b.D_o},
          {"D_h", b.D_h},     {"D_beta", b.D_beta},   {"D_test", b.D_test}, {"full_task_sweep", b.full_task_sweep}};
}

StepsizeRule parse_stepsize(const json& node) {
  reject_unknown(node, {"kind", "beta", "fraction"}, "stepsize");
  const std::string kind = get_or<std::string>(node, "kind", "adaptive");
  if (kind == "constant") {
    const double beta = get_or(node, "beta", 0.0);
    if (!(beta > 0.0)) throw ConfigError("stepsize: constant beta must be positive");
    return StepsizeRule::constant(beta);
  }
  if (kind == "adaptive") {
    std::optional<double> fraction;
    if (node.contains("fraction") && !node.at("fraction").is_null()) fraction = node.at("fraction").get<double>();
    return StepsizeRule::adaptive(fraction);
  }
  throw ConfigError("stepsize: kind must be 'constant' or 'adaptive', got '" + kind + "'");
}

std::optional<Vec> optional_vec(const json& node, const char* key) {
  if (!node.contains(key) || node.at(key).is_null()) return std::nullopt;
  return Vec(node.at(key).get<std::vector<double>>());
}

AuditSpec parse_audit(const json& node) {
  reject_unknown(node, {"type", "w", "radius_fraction", "task", "sizes", "D_o", "phi", "n_mc", "n_points"}, "audit");
  AuditSpec a;
  a.type = get_or<std::string>(node, "type", "");
  static const std::set<std::string> kTypes = {"bias", "second_moment", "grad_gap", "stepsize_moments",
                                               "smoothness", "hvp", "kshot"};
  if (!kTypes.count(a.type)) throw ConfigError("audit: unknown type '" + a.type + "'");
  a.point.w = optional_vec(node, "w");
  a.point.radius_fraction = get_or(node, "radius_fraction", a.point.radius_fraction);
  a.task = get_or<std::size_t>(node, "task", 0);
  a.sizes = get_or<std::vector<int>>(node, "sizes", {});
  a.D_o = get_or(node, "D_o", a.D_o);
  a.phi = get_or(node, "phi", a.phi);
  a.n_mc = get_or(node, "n_mc", a.n_mc);
  a.n_points = get_or(node, "n_points", a.n_points);
  if ((a.type == "bias" || a.type == "second_moment" || a.type == "grad_gap" || a.type == "kshot") && a.sizes.empty()) {
    throw ConfigError("audit '" + a.type + "': 'sizes' must list batch sizes");
  }
  for (int s : a.sizes) {
    if (s < 1) throw ConfigError("audit '" + a.type + "': sizes must be >= 1");
  }
  return a;
}

json audit_to_json(const AuditSpec& a) {
  json doc = {{"type", a.type}, {"radius_fraction", a.point.radius_fraction}, {"task", a.task}, {"sizes", a.sizes},
              {"D_o", a.D_o},   {"phi", a.phi},   {"n_mc", a.n_mc},   {"n_points", a.n_points}};
  doc["w"] = a.point.w ? json(a.point.w->values()) : json();
  return doc;
}

}  // namespace

TaskFamily generate_family(const json& knobs) {
  reject_unknown(knobs, {"kind", "n_tasks", "dim", "similarity", "seed", "eig_min", "eig_max", "mean_generator"},
                 "generate");
  const FamilyKind kind = family_kind_from_string(get_or<std::string>(knobs, "kind", "rank1mf"));
  const auto n = get_or<std::size_t>(knobs, "n_tasks", 10);
  const auto dim = get_or<std::size_t>(knobs, "dim", 3);
  const double similarity = get_or(knobs, "similarity", 1.0);
  const RngStream rng(get_or<std::uint64_t>(knobs, "seed", 0));
  if (kind == FamilyKind::kQuadratic) {
    QuadraticFamilyKnobs q;
    q.n_tasks = n;
    q.dim = dim;
    q.eig_min = get_or(knobs, "eig_min", q.eig_min);
    q.eig_max = get_or(knobs, "eig_max", q.eig_max);
    q.b_scale = similarity;
    return generate_quadratic_family(q, rng);
  }
  const Vec mean = optional_vec(knobs, "mean_generator").value_or(Vec());
  return generate_mf_family(n, dim, similarity, rng, mean);
}

ExperimentConfig parse_experiment(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(doc,
                 {"description", "family", "family_path", "generate", "algorithm", "algorithms", "alpha", "noise",
                  "stepsize", "batches", "max_iters", "target_grad_norm", "seed", "seeds", "trust_ball_radius",
                  "trust_ball_center", "w0", "w0_random", "iterate_thinning", "fixed_delta", "threads",
                  "monitor_exact", "audits"},
                 "config");
  ExperimentConfig c;
  c.description = get_or<std::string>(doc, "description", "");

  const int sources = int(doc.contains("family")) + int(doc.contains("family_path")) + int(doc.contains("generate"));
  if (sources != 1) throw ConfigError("config needs exactly one of 'family', 'family_path', 'generate'");
  if (doc.contains("family")) {
    c.family_source = {{"family", doc.at("family")}};
  } else if (doc.contains("family_path")) {
    std::filesystem::path p = doc.at("family_path").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    if (!std::filesystem::exists(p)) throw ConfigError("family_path " + p.string() + " does not exist");
    c.family_source = {{"family_path", p.string()}};
  } else {
    c.family_source = {{"generate", doc.at("generate")}};
  }

  OptimizerConfig& o = c.optimizer;
  o.alpha = get_or(doc, "alpha", o.alpha);
  if (doc.contains("noise")) {
    const json& n = doc.at("noise");
    reject_unknown(n, {"sigma_tilde", "sigma_H"}, "noise");
    o.noise.sigma_tilde = get_or(n, "sigma_tilde", 0.0);
    o.noise.sigma_H = get_or(n, "sigma_H", 0.0);
  }
  if (doc.contains("stepsize")) o.stepsize = parse_stepsize(doc.at("stepsize"));
  if (doc.contains("batches")) o.batches = parse_batches(doc.at("batches"));
  o.max_iters = get_or(doc, "max_iters", o.max_iters);
  o.target_grad_norm = get_or(doc, "target_grad_norm", o.target_grad_norm);
  o.seed = get_or<std::uint64_t>(doc, "seed", o.seed);
  o.trust_ball_radius = get_or(doc, "trust_ball_radius", o.trust_ball_radius);
  o.trust_ball_center = optional_vec(doc, "trust_ball_center").value_or(Vec());
  o.w0 = optional_vec(doc, "w0").value_or(Vec());
  o.iterate_thinning = get_or(doc, "iterate_thinning", o.iterate_thinning);
  if (doc.contains("fixed_delta") && !doc.at("fixed_delta").is_null()) o.fixed_delta = doc.at("fixed_delta").get<double>();
  o.threads = get_or(doc, "threads", o.threads);
  o.monitor_exact = get_or(doc, "monitor_exact", o.monitor_exact);
  if (o.threads < 1) throw ConfigError("threads must be >= 1");

  if (doc.contains("w0_random")) {
    if (doc.contains("w0")) throw ConfigError("config has both 'w0' and 'w0_random'");
    const json& r = doc.at("w0_random");
    reject_unknown(r, {"scale", "seed"}, "w0_random");
    c.w0_random_scale = get_or(r, "scale", 1.0);
    c.w0_random_seed = get_or<std::uint64_t>(r, "seed", 0);
    if (!(*c.w0_random_scale > 0.0)) throw ConfigError("w0_random.scale must be positive");
  }

  if (doc.contains("algorithms")) {
    c.algorithms.clear();
    for (const auto& a : doc.at("algorithms")) c.algorithms.push_back(algorithm_from_string(a.get<std::string>()));
    if (c.algorithms.empty()) throw ConfigError("algorithms must not be empty");
  } else if (doc.contains("algorithm")) {
    c.algorithms = {algorithm_from_string(doc.at("algorithm").get<std::string>())};
  }
  o.algorithm = c.algorithms.front();

  c.seeds = get_or<std::vector<std::uint64_t>>(doc, "seeds", {});
  if (c.seeds.empty()) c.seeds = {o.seed};
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size()) {
    throw ConfigError("seeds must be distinct across replicates");
  }
  o.seed = c.seeds.front();

  if (doc.contains("audits")) {
    for (const auto& a : doc.at("audits")) c.audits.push_back(parse_audit(a));
  }
  return c;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return parse_experiment(doc, path.parent_path());
}

TaskFamily build_family(const ExperimentConfig& config, const std::filesystem::path& base_dir) {
  const json& src = config.family_source;
  if (src.contains("family")) return family_from_json(src.at("family"));
  if (src.contains("family_path")) {
    std::filesystem::path p = src.at("family_path").get<std::string>();
    if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
    return load_family(p);
  }
  return generate_family(src.at("generate"));
}

Vec resolve_w0(const ExperimentConfig& config, const TaskFamily& family) {
  const OptimizerConfig& o = config.optimizer;
  if (o.w0.dim() != 0) {
    if (o.w0.dim() != family.dim()) throw ConfigError("w0 dimension does not match the family");
    return o.w0;
  }
  if (config.w0_random_scale) {
    const Vec center = o.trust_ball_center.dim() == 0 ? Vec(family.dim()) : o.trust_ball_center;
    return center + gaussian(RngStream(config.w0_random_seed).derive(Purpose::kSampling), family.dim(),
                             *config.w0_random_scale / std::sqrt(static_cast<double>(family.dim())));
  }
  return Vec(family.dim());
}

json optimizer_to_json(const OptimizerConfig& o) {
  json doc;
  doc["algorithm"] = to_string(o.algorithm);
  doc["alpha"] = o.alpha;
  json step;
  step["kind"] = o.stepsize.kind == StepsizeRule::Kind::kConstant ? "constant" : "adaptive";
  if (o.stepsize.kind == StepsizeRule::Kind::kConstant) {
    step["beta"] = o.stepsize.beta;
  } else {
    step["fraction"] = o.stepsize.resolved_fraction(o.algorithm);
  }
  doc["stepsize"] = step;
  doc["batches"] = batches_to_json(o.batches);
  doc["noise"] = {{"sigma_tilde", o.noise.sigma_tilde}, {"sigma_H", o.noise.sigma_H}};
  doc["max_iters"] = o.max_iters;
  doc["target_grad_norm"] = o.target_grad_norm;
  doc["seed"] = o.seed;
  doc["trust_ball_radius"] = o.trust_ball_radius;
  doc["trust_ball_center"] = o.trust_ball_center.values();
  doc["w0"] = o.w0.values();
  doc["iterate_thinning"] = o.iterate_thinning;
  doc["fixed_delta"] = o.fixed_delta ? json(*o.fixed_delta) : json();
  doc["threads"] = o.threads;
  doc["monitor_exact"] = o.monitor_exact;
  return doc;
}

json resolved_json(const ExperimentConfig& config, const TaskFamily& family) {
  json doc;
  doc["description"] = config.description;
  doc["family_source"] = config.family_source;
  doc["family"] = family_to_json(family);
  OptimizerConfig o = config.optimizer;
  o.w0 = resolve_w0(config, family);
  if (o.trust_ball_center.dim() == 0) o.trust_ball_center = Vec(family.dim());
  doc["optimizer"] = optimizer_to_json(o);
  json algos = json::array();
  for (Algorithm a : config.algorithms) algos.push_back(to_string(a));
  doc["algorithms"] = algos;
  doc["seeds"] = config.seeds;
  json audits = json::array();
  for (const AuditSpec& a : config.audits) audits.push_back(audit_to_json(a));
  doc["audits"] = audits;
  return doc;
}

std::vector<BoundAudit> run_audits(const ExperimentConfig& config, const TaskFamily& family, json* extra) {
  OptimizerConfig o = config.optimizer;
  o.w0 = resolve_w0(config, family);
  const SmoothnessProfile profile = profile_for(family, o);
  const RngStream root = RngStream(o.seed).derive(Purpose::kTest);

  std::vector<BoundAudit> out;
  for (std::size_t ai = 0; ai < config.audits.size(); ++ai) {
    const AuditSpec& a = config.audits[ai];
    const RngStream rng = root.derive(ai);
    const auto point = [&](std::size_t index) {
      if (a.point.w) {
        if (a.point.w->dim() != family.dim()) throw ConfigError("audit w has the wrong dimension");
        return *a.point.w;
      }
      return sample_in_ball(rng.derive(1000 + index), profile.center, a.point.radius_fraction * profile.radius);
    };
    if (a.task >= family.size()) throw ConfigError("audit task index out of range");

    if (a.type == "bias") {
      for (std::size_t k = 0; k < a.sizes.size(); ++k) {
        out.push_back(audit_bias(family, a.task, point(0), o.alpha, profile, a.sizes[k], a.D_o, a.n_mc, rng.derive(k)));
      }
    } else if (a.type == "second_moment") {
      for (std::size_t k = 0; k < a.sizes.size(); ++k) {
        out.push_back(audit_second_moment(family, a.task, point(0), o.alpha, profile, a.sizes[k], a.D_o, a.phi,
                                          a.n_mc, rng.derive(k)));
      }
    } else if (a.type == "grad_gap") {
      for (std::size_t k = 0; k < a.sizes.size(); ++k) {
        out.push_back(audit_grad_gap_F_hat(family, point(0), o.alpha, profile, a.sizes[k], a.n_mc, rng.derive(k)));
      }
    } else if (a.type == "stepsize_moments") {
      const int B_prime = static_cast<int>(std::max<long long>(o.batches.B_prime, min_stepsize_task_batch(profile, o.alpha)));
      const int D_beta = static_cast<int>(std::max<long long>(o.batches.D_beta, min_stepsize_data_batch(profile, o.alpha)));
      for (int p = 0; p < a.n_points; ++p) {
        for (BoundAudit& b : audit_stepsize_moments(family, point(static_cast<std::size_t>(p)), o.alpha, profile,
                                                    B_prime, D_beta, a.n_mc, rng.derive(p))) {
          out.push_back(std::move(b));
        }
      }
    } else if (a.type == "smoothness") {
      out.push_back(audit_smoothness(family, o.alpha, profile, a.n_points, rng));
    } else if (a.type == "hvp") {
      out.push_back(audit_hvp_error(family, profile, a.n_points, rng));
    } else if (a.type == "kshot") {
      const auto floors = audit_kshot_floor(family, a.sizes, o);
      if (extra) {
        json rows = json::array();
        for (const auto& f : floors) rows.push_back({{"K", f.K}, {"floor", f.floor}});
        (*extra)["kshot"] = rows;
      }
      for (std::size_t k = 1; k < floors.size(); ++k) {
        // Weak monotonicity of the floor in K.
        out.push_back(BoundAudit::make("kshot_floor K=" + std::to_string(floors[k].K) + " vs K=" +
                                           std::to_string(floors[k - 1].K),
                                       floors[k].floor, floors[k - 1].floor, 0.0, 1));
      }
    }
  }
  return out;
}

}  // namespace metagrad
