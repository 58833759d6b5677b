#include "metagrad/family_io.hpp"

#include <fstream>

#include "metagrad/error.hpp"

namespace metagrad {

using nlohmann::json;

namespace {

Vec read_vec(const json& node, std::size_t dim, const char* what) {
  auto values = node.get<std::vector<double>>();
  if (values.size() != dim) {
    throw ConfigError(std::string("family JSON: '") + what + "' has " + std::to_string(values.size()) +
                      " entries, expected " + std::to_string(dim));
  }
  return Vec(std::move(values));
}

Mat read_mat(const json& node, std::size_t dim, const char* what) {
  auto values = node.get<std::vector<double>>();
  if (values.size() != dim * dim) {
    throw ConfigError(std::string("family JSON: '") + what + "' has " + std::to_string(values.size()) +
                      " entries, expected " + std::to_string(dim * dim));
  }
  return Mat::from_row_major(std::move(values));
}

}  // namespace

json family_to_json(const TaskFamily& family) {
  json doc;
  doc["kind"] = to_string(family.kind());
  doc["dim"] = family.dim();
  json tasks = json::array();
  for (std::size_t i = 0; i < family.size(); ++i) {
    switch (family.kind()) {
      case FamilyKind::kQuadratic: {
        const auto& t = family.quadratic_task(i);
        tasks.push_back({{"A", t.a().row_major()}, {"b", t.b().values()}, {"c", t.c()}});
        break;
      }
      case FamilyKind::kRank1MF: {
        const auto& t = family.mf_task(i);
        tasks.push_back({{"g", t.generator().values()}, {"M", t.target().row_major()}});
        break;
      }
      case FamilyKind::kCustom:
        throw std::invalid_argument("family_to_json: custom families are not serializable");
    }
  }
  doc["tasks"] = std::move(tasks);
  doc["weights"] = family.weights();
  return doc;
}

TaskFamily family_from_json(const json& doc) {
  try {
    const FamilyKind kind = family_kind_from_string(doc.at("kind").get<std::string>());
    const auto dim = doc.at("dim").get<std::size_t>();
    std::vector<double> weights;
    if (doc.contains("weights")) weights = doc.at("weights").get<std::vector<double>>();
    const json& tasks = doc.at("tasks");
    if (!tasks.is_array() || tasks.empty()) throw ConfigError("family JSON: 'tasks' must be a non-empty array");

    if (kind == FamilyKind::kQuadratic) {
      std::vector<QuadraticTask> out;
      for (const json& t : tasks) {
        out.emplace_back(read_mat(t.at("A"), dim, "A"), read_vec(t.at("b"), dim, "b"), t.value("c", 0.0));
      }
      return TaskFamily::quadratic(std::move(out), std::move(weights));
    }
    std::vector<MatrixFactorizationTask> out;
    for (const json& t : tasks) {
      MatrixFactorizationTask task(read_vec(t.at("g"), dim, "g"));
      if (t.contains("M") && read_mat(t.at("M"), dim, "M") != task.target()) {
        throw ConfigError("family JSON: rank-1 task has M != g g^T");
      }
      out.push_back(std::move(task));
    }
    return TaskFamily::rank1mf(std::move(out), std::move(weights));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("family JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    if (dynamic_cast<const ConfigError*>(&e)) throw;
    throw ConfigError(std::string("family JSON: ") + e.what());
  }
}

void save_family(const TaskFamily& family, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << family_to_json(family).dump(2) << '\n';
}

TaskFamily load_family(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read family file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError("family file " + path.string() + ": " + e.what());
  }
  return family_from_json(doc);
}

}  // namespace metagrad
