#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "metagrad/optimizer.hpp"

namespace metagrad {

inline constexpr const char* kCsvHeader = "iter,grad_norm_F,loss_F,beta,dist_wstar,dist_wfo";

// %.17g: enough digits to round-trip any double.
std::string format_double(double x);

// Header plus one line per row, LF endings, empty fields when absent.
void write_csv(const RunRecord& record, std::ostream& out);
void emit_csv(const RunRecord& record, const std::filesystem::path& path);

// Inverse of write_csv; throws std::runtime_error on malformed input.
std::vector<RunRow> parse_csv(std::istream& in);

nlohmann::json summary_to_json(const RunRecord& record);

// Pretty-printed with a trailing newline.
void write_json(const nlohmann::json& doc, const std::filesystem::path& path);

// Writes `<path>.config.json` next to an emitted file.
void write_sidecar(const std::filesystem::path& emitted, const nlohmann::json& resolved_config);

}  // namespace metagrad
