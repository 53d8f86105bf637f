// Copyright (c) barrier-blo contributors
#include "barrier_blo_cli/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <barrier_blo/errors.hpp>

namespace bblo::cli {

std::string format_double(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

double parse_field_double(const std::string& field, const std::filesystem::path& path) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error("read_trace_csv: malformed real '" + field + "' in " + path.string());
  }
  return v;
}

long long parse_field_int(const std::string& field, const std::filesystem::path& path) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw Error("read_trace_csv: malformed integer '" + field + "' in " + path.string());
  }
  return v;
}

}  // namespace

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceRow> rows) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("write_trace_csv: cannot open '" + path.string() + "'");
  }
  out << kTraceHeader << '\n';
  for (const TraceRow& row : rows) {
    out << row.k << ',' << format_double(row.f) << ',' << format_double(row.h_minus_eps2) << ','
        << format_double(row.norm_dz) << ',' << format_double(row.t) << ','
        << format_double(row.lambda) << ',' << row.backtracks << ','
        << format_double(row.kkt_residual) << ',' << format_double(row.hypergrad_norm) << ','
        << format_double(row.wall_ms) << '\n';
  }
  if (!out) {
    throw IoError("write_trace_csv: write failure on '" + path.string() + "'");
  }
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("read_trace_csv: cannot open '" + path.string() + "'");
  }
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) {
    throw Error("read_trace_csv: missing or unexpected header in " + path.string());
  }
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10) {
      throw Error("read_trace_csv: expected 10 fields in " + path.string());
    }
    TraceRow row;
    row.k = parse_field_int(fields[0], path);
    row.f = parse_field_double(fields[1], path);
    row.h_minus_eps2 = parse_field_double(fields[2], path);
    row.norm_dz = parse_field_double(fields[3], path);
    row.t = parse_field_double(fields[4], path);
    row.lambda = parse_field_double(fields[5], path);
    row.backtracks = parse_field_int(fields[6], path);
    row.kkt_residual = parse_field_double(fields[7], path);
    row.hypergrad_norm = parse_field_double(fields[8], path);
    row.wall_ms = parse_field_double(fields[9], path);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bblo::cli
