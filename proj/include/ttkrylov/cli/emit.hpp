#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ttkrylov/cli/config.hpp"
#include "ttkrylov/cli/experiments.hpp"
#include "ttkrylov/diagnostics.hpp"
#include "ttkrylov/solver.hpp"

namespace ttk::cli {

extern const std::vector<std::string> kTraceColumns;
extern const std::vector<std::string> kBoundColumns;

/// `%.17g` text; NaN prints as `nan`.
std::string format_number(double v);

std::string trace_csv(const std::vector<IterationRecord>& trace);
/// One row per (iteration, slice): the trace columns followed by the slice columns.
std::string bounds_csv(const std::vector<IterationRecord>& trace, const BoundReport& report);
nlohmann::json trace_json(const std::vector<IterationRecord>& trace);
nlohmann::json bounds_json(const std::vector<IterationRecord>& trace, const BoundReport& report);
std::vector<IterationRecord> trace_from_json(const nlohmann::json& j);

/// Writes `<prefix>.trace.{csv,json}` and, with a report, `<prefix>.bounds.{csv,json}`.
std::vector<std::filesystem::path> emit_trace(const GmresOutcome& outcome, const BoundReport* report,
                                              const std::filesystem::path& prefix,
                                              OutputFormat format);

nlohmann::json manifest_json(const RunManifest& manifest);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ttk::cli
