#include "ttkrylov/cli/emit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <stdexcept>

namespace ttk::cli {

using nlohmann::json;

const std::vector<std::string> kTraceColumns{
    "iter",        "eta_b",      "eta_Ab",     "eta_AMb",  "eta_tilde_b", "lsq_residual",
    "true_residual", "max_rank_v", "max_rank_x", "cr_last_vec", "cr_basis", "delta_used"};

const std::vector<std::string> kBoundColumns{"ell",     "eta_b_slice", "eta_Ab_slice",
                                             "rho_ell", "rho_star",    "psi_ell"};

namespace {

std::vector<std::string> trace_fields(const IterationRecord& r) {
  return {std::to_string(r.iter),        format_number(r.eta_b),
          format_number(r.eta_Ab),       format_number(r.eta_AMb),
          format_number(r.eta_tilde_b),  format_number(r.lsq_residual),
          format_number(r.true_residual), std::to_string(r.max_rank_v),
          std::to_string(r.max_rank_x),  format_number(r.cr_last_vec),
          format_number(r.cr_basis),     format_number(r.delta_used)};
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double from_num(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json record_json(const IterationRecord& r) {
  return json{{"iter", r.iter},
              {"eta_b", num(r.eta_b)},
              {"eta_Ab", num(r.eta_Ab)},
              {"eta_AMb", num(r.eta_AMb)},
              {"eta_tilde_b", num(r.eta_tilde_b)},
              {"lsq_residual", num(r.lsq_residual)},
              {"true_residual", num(r.true_residual)},
              {"max_rank_v", r.max_rank_v},
              {"max_rank_x", r.max_rank_x},
              {"cr_last_vec", num(r.cr_last_vec)},
              {"cr_basis", num(r.cr_basis)},
              {"delta_used", num(r.delta_used)}};
}

void append_row(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += fields[i];
  }
  out += '\n';
}

std::map<Index, const IterationRecord*> by_iter(const std::vector<IterationRecord>& trace) {
  std::map<Index, const IterationRecord*> out;
  for (const auto& r : trace) out[r.iter] = &r;
  return out;
}

const IterationRecord& lookup(const std::map<Index, const IterationRecord*>& m, Index iter) {
  const auto it = m.find(iter);
  if (it == m.end())
    throw std::invalid_argument("bound report refers to iteration " + std::to_string(iter) +
                                " missing from the trace");
  return *it->second;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_csv(const std::vector<IterationRecord>& trace) {
  std::string out;
  append_row(out, kTraceColumns);
  for (const auto& r : trace) append_row(out, trace_fields(r));
  return out;
}

std::string bounds_csv(const std::vector<IterationRecord>& trace, const BoundReport& report) {
  std::vector<std::string> header = kTraceColumns;
  header.insert(header.end(), kBoundColumns.begin(), kBoundColumns.end());
  std::string out;
  append_row(out, header);
  const auto index = by_iter(trace);
  for (const BoundRow& row : report.rows) {
    std::vector<std::string> fields = trace_fields(lookup(index, row.iter));
    fields.push_back(std::to_string(row.ell));
    fields.push_back(format_number(row.eta_b_slice));
    fields.push_back(format_number(row.eta_Ab_slice));
    fields.push_back(format_number(row.rho_ell));
    fields.push_back(format_number(row.rho_star));
    fields.push_back(format_number(row.psi_ell));
    append_row(out, fields);
  }
  return out;
}

json trace_json(const std::vector<IterationRecord>& trace) {
  json rows = json::array();
  for (const auto& r : trace) rows.push_back(record_json(r));
  return json{{"columns", kTraceColumns}, {"iterations", rows}};
}

json bounds_json(const std::vector<IterationRecord>& trace, const BoundReport& report) {
  const auto index = by_iter(trace);
  json rows = json::array();
  Index current = -1;
  for (const BoundRow& row : report.rows) {
    if (row.iter != current) {
      rows.push_back(record_json(lookup(index, row.iter)));
      rows.back()["slices"] = json::array();
      current = row.iter;
    }
    rows.back()["slices"].push_back(json{{"ell", row.ell},
                                         {"eta_b_slice", num(row.eta_b_slice)},
                                         {"eta_Ab_slice", num(row.eta_Ab_slice)},
                                         {"rho_ell", num(row.rho_ell)},
                                         {"rho_star", num(row.rho_star)},
                                         {"psi_ell", num(row.psi_ell)}});
  }
  json violations = json::array();
  for (const auto& v : report.violations)
    violations.push_back(
        json{{"iter", v.iter}, {"ell", v.ell}, {"bound", v.bound}, {"lhs", v.lhs}, {"rhs", v.rhs}});
  json out{{"columns", kTraceColumns},
           {"slice_columns", kBoundColumns},
           {"iterations", rows},
           {"ell_min_upsilon", report.ell_min_upsilon},
           {"ell_max_upsilon", report.ell_max_upsilon},
           {"ell_min_gamma", report.ell_min_gamma},
           {"ell_max_gamma", report.ell_max_gamma},
           {"opnorm", num(report.opnorm_A)},
           {"slice_opnorms", report.slice_opnorm},
           {"norm_identity_error", num(report.norm_identity_error)},
           {"violations", violations}};
  out["k_star"] = report.k_star ? json(*report.k_star) : json(nullptr);
  out["nu"] = report.nu ? num(*report.nu) : json(nullptr);
  return out;
}

std::vector<IterationRecord> trace_from_json(const json& j) {
  std::vector<IterationRecord> out;
  for (const json& row : j.at("iterations")) {
    IterationRecord r;
    r.iter = row.at("iter").get<Index>();
    r.eta_b = from_num(row.at("eta_b"));
    r.eta_Ab = from_num(row.at("eta_Ab"));
    r.eta_AMb = from_num(row.at("eta_AMb"));
    r.eta_tilde_b = from_num(row.at("eta_tilde_b"));
    r.lsq_residual = from_num(row.at("lsq_residual"));
    r.true_residual = from_num(row.at("true_residual"));
    r.max_rank_v = row.at("max_rank_v").get<Index>();
    r.max_rank_x = row.at("max_rank_x").get<Index>();
    r.cr_last_vec = from_num(row.at("cr_last_vec"));
    r.cr_basis = from_num(row.at("cr_basis"));
    r.delta_used = from_num(row.at("delta_used"));
    out.push_back(r);
  }
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::vector<std::filesystem::path> emit_trace(const GmresOutcome& outcome, const BoundReport* report,
                                              const std::filesystem::path& prefix,
                                              OutputFormat format) {
  std::vector<std::filesystem::path> files;
  const bool csv = format == OutputFormat::Csv;
  const std::string ext = csv ? ".csv" : ".json";
  auto path = [&](const char* kind) {
    std::filesystem::path p = prefix;
    p += std::string(kind) + ext;
    return p;
  };
  files.push_back(path(".trace"));
  write_text(files.back(), csv ? trace_csv(outcome.trace) : trace_json(outcome.trace).dump(1) + "\n");
  if (report != nullptr) {
    files.push_back(path(".bounds"));
    write_text(files.back(), csv ? bounds_csv(outcome.trace, *report)
                                 : bounds_json(outcome.trace, *report).dump(1) + "\n");
  }
  return files;
}

json manifest_json(const RunManifest& m) {
  json config = json::object();
  for (const auto& [k, v] : m.config) config[k] = v;
  json phases = json::array();
  for (const auto& ph : m.phases) phases.push_back(json{{"phase", ph.phase}, {"seconds", ph.seconds}});
  return json{{"config", config},       {"started", m.started},   {"finished", m.finished},
              {"version", m.version},   {"files", m.files},       {"phases", phases},
              {"warnings", m.warnings}, {"converged", m.converged}, {"status", m.status}};
}

}  // namespace ttk::cli
