// Copyright (c) barrier-blo contributors
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace bblo::cli {

/// One serialized trace row. The CSV schema is fixed:
///   k,f,h_minus_eps2,norm_dz,t,lambda,backtracks,kkt_residual,hypergrad_norm,wall_ms
/// All reals are written in shortest round-trip form, so re-parsing yields
/// the same double. wall_ms is excluded from determinism guarantees.
struct TraceRow {
  long long k = 0;
  double f = 0.0;
  double h_minus_eps2 = 0.0;
  double norm_dz = 0.0;
  double t = 0.0;
  double lambda = 0.0;
  long long backtracks = 0;
  double kkt_residual = 0.0;
  double hypergrad_norm = 0.0;
  double wall_ms = 0.0;
};

inline constexpr const char* kTraceHeader =
    "k,f,h_minus_eps2,norm_dz,t,lambda,backtracks,kkt_residual,hypergrad_norm,wall_ms";

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double value);

void write_trace_csv(const std::filesystem::path& path, std::span<const TraceRow> rows);

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

}  // namespace bblo::cli
