#include "metagrad/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace metagrad {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

namespace {

void put(std::ostream& out, const std::optional<double>& v) {
  if (v) out << format_double(*v);
}

std::optional<double> parse_field(const std::string& field, std::size_t line) {
  if (field.empty()) return std::nullopt;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != field.size()) {
    throw std::runtime_error("CSV line " + std::to_string(line) + ": bad number '" + field + "'");
  }
  return v;
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

}  // namespace

void write_csv(const RunRecord& record, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const RunRow& r : record.rows) {
    out << r.iter << ',';
    put(out, r.grad_norm_F);
    out << ',';
    put(out, r.loss_F);
    out << ',';
    put(out, r.beta);
    out << ',';
    put(out, r.dist_wstar);
    out << ',';
    put(out, r.dist_wfo);
    out << '\n';
  }
}

void emit_csv(const RunRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(record, out);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<RunRow> parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::runtime_error("CSV: missing or unexpected header");
  std::vector<RunRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    if (fields.size() != 6) throw std::runtime_error("CSV line " + std::to_string(line_no) + ": expected 6 fields");
    RunRow r;
    r.iter = std::stoi(fields[0]);
    r.grad_norm_F = parse_field(fields[1], line_no);
    r.loss_F = parse_field(fields[2], line_no);
    r.beta = parse_field(fields[3], line_no);
    r.dist_wstar = parse_field(fields[4], line_no);
    r.dist_wfo = parse_field(fields[5], line_no);
    rows.push_back(r);
  }
  return rows;
}

nlohmann::json summary_to_json(const RunRecord& record) {
  const RunSummary& s = record.summary;
  nlohmann::json doc;
  doc["algorithm"] = to_string(record.algorithm);
  doc["iterations"] = record.rows.empty() ? 0 : record.rows.back().iter;
  doc["best_grad_norm"] = s.best_grad_norm;
  doc["best_iter"] = s.best_iter;
  doc["last_grad_norm"] = s.last_grad_norm;
  doc["tail_mean_grad_norm"] = s.tail_mean_grad_norm;
  doc["delta"] = optional_json(s.delta);
  doc["iterations_to_eps"] = s.iterations_to_eps ? nlohmann::json(*s.iterations_to_eps) : nlohmann::json();
  doc["final_w"] = s.final_w.values();
  doc["warnings"] = record.warnings;
  return doc;
}

void write_json(const nlohmann::json& doc, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_sidecar(const std::filesystem::path& emitted, const nlohmann::json& resolved_config) {
  std::filesystem::path side = emitted;
  side += ".config.json";
  write_json(resolved_config, side);
}

}  // namespace metagrad
