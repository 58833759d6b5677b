#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "metagrad/tasks.hpp"

namespace metagrad {

// {"kind": "quadratic"|"rank1mf", "dim": d, "tasks": [...], "weights": [...]}
// Quadratic tasks are {"A": row-major, "b": [...], "c": x}; rank-1 tasks are
// {"g": [...], "M": row-major}. Doubles round-trip bit-exactly.
nlohmann::json family_to_json(const TaskFamily& family);
TaskFamily family_from_json(const nlohmann::json& doc);

void save_family(const TaskFamily& family, const std::filesystem::path& path);
TaskFamily load_family(const std::filesystem::path& path);

}  // namespace metagrad
