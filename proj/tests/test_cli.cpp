#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ttkrylov/cli/config.hpp"
#include "ttkrylov/cli/emit.hpp"
#include "ttkrylov/cli/experiments.hpp"

using namespace ttk;
using namespace ttk::cli;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ttkrylov_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

ExperimentConfig small(const std::string& text) {
  ExperimentConfig c = config_from(parse_key_values(text));
  validate(c);
  return c;
}

IterationRecord sample_record(Index iter) {
  IterationRecord r;
  r.iter = iter;
  r.eta_b = 0.1 / 3.0 * static_cast<double>(iter);
  r.eta_Ab = std::nextafter(1e-7, 1.0);
  r.eta_AMb = 1.0 / 7.0;
  r.eta_tilde_b = 6.02214076e23;
  r.lsq_residual = 5e-324;
  r.true_residual = std::numeric_limits<double>::quiet_NaN();
  r.max_rank_v = 12;
  r.max_rank_x = 3;
  r.cr_last_vec = 0.3;
  r.cr_basis = 2.0 / 3.0;
  r.delta_used = 1e-5;
  return r;
}

}  // namespace

TEST(Config, ParsesKeyValues) {
  const KeyValues kv = parse_key_values("# comment\nexperiment = convdiff\n\n n=31 # trailing\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"experiment", "convdiff"}));
  EXPECT_EQ(kv[1].second, "31");
  try {
    parse_key_values("n = 3\nthis line is wrong\n");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find('2'), std::string::npos);
  }
}

TEST(Config, OverridesReplaceAndAppend) {
  KeyValues base = parse_key_values("experiment = poisson\nn = 15\nm = 20\n");
  apply_overrides(base, parse_key_values("m = 30\nseed = 4\n"));
  const ExperimentConfig c = config_from(base);
  EXPECT_EQ(c.n, 15);
  EXPECT_EQ(c.m, 30);
  EXPECT_EQ(c.seed, 4u);
}

TEST(Config, TypedFieldsAndLists) {
  const ExperimentConfig c = config_from(parse_key_values(
      "experiment = prec-sweep\nn = 63\nq_list = 2, 8,16\ntau_list = 1e-2,1e-8\nformat = json\n"
      "precondition = false\n"));
  EXPECT_EQ(c.experiment, Experiment::PrecSweep);
  EXPECT_EQ(c.q_list, (std::vector<Index>{2, 8, 16}));
  EXPECT_EQ(c.tau_list, (std::vector<double>{1e-2, 1e-8}));
  EXPECT_EQ(c.format, OutputFormat::Json);
  EXPECT_FALSE(c.precondition);
}

TEST(Config, FieldErrorsNameTheField) {
  auto field_of = [](const std::string& text) -> std::string {
    try {
      validate(config_from(parse_key_values("experiment = poisson\n" + text)));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return "";
  };
  EXPECT_EQ(field_of("n = abc\n"), "n");
  EXPECT_EQ(field_of("bogus = 1\n"), "bogus");
  EXPECT_EQ(field_of("experiment = nope\n"), "experiment");
  EXPECT_EQ(field_of("epsilon = -1\n"), "epsilon");
  EXPECT_EQ(field_of("m = 10\nmaxit = 0\n"), "maxit");
  EXPECT_EQ(field_of("format = xml\n"), "format");
  EXPECT_EQ(field_of("n = 15\n"), "");
  EXPECT_THROW(config_from(parse_key_values("n = 15\n")), ConfigError);
}

TEST(Config, WarnsWhenDeltaExceedsEpsilon) {
  const auto w =
      validate(config_from(parse_key_values("experiment = poisson\nepsilon = 1e-6\ndelta = 1e-4\n")));
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NE(w[0].find("delta"), std::string::npos);
  EXPECT_TRUE(
      validate(config_from(parse_key_values("experiment = poisson\nepsilon = 1e-4\ndelta = 1e-6\n")))
          .empty());
}

TEST(Config, RoundTripThroughKeyValues) {
  const ExperimentConfig c = small("experiment = heat-param\nn = 15\np = 5\nboundary = closed\n");
  const ExperimentConfig back = config_from(to_key_values(c));
  EXPECT_EQ(to_key_values(back), to_key_values(c));
  EXPECT_EQ(to_string(Experiment::MultiRhsConvdiff), "multi-rhs-convdiff");
  EXPECT_EQ(parse_experiment("eigen-rhs"), Experiment::EigenRhs);
  EXPECT_FALSE(parse_experiment("nothing").has_value());
}

TEST(Presets, AllParseAndValidate) {
  ASSERT_FALSE(presets().empty());
  for (const Preset& p : presets()) {
    SCOPED_TRACE(p.name);
    const ExperimentConfig c = config_from(parse_key_values(p.text));
    EXPECT_NO_THROW(validate(c));
    EXPECT_EQ(find_preset(p.name), &p);
  }
  EXPECT_EQ(find_preset("missing"), nullptr);
}

TEST(Presets, ShippedConfigFilesMatchBuiltIns) {
  const char* root = std::getenv("TTKRYLOV_SOURCE_DIR");
  if (root == nullptr) GTEST_SKIP() << "TTKRYLOV_SOURCE_DIR not set";
  for (const Preset& p : presets()) {
    const fs::path f = fs::path(root) / "configs" / (p.name + ".conf");
    ASSERT_TRUE(fs::exists(f)) << f;
    EXPECT_EQ(slurp(f), p.text) << f;
  }
}

TEST(Emit, NumberFormat) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(std::numeric_limits<double>::quiet_NaN()), "nan");
  const double v = 0.1 / 3.0;
  EXPECT_EQ(std::strtod(format_number(v).c_str(), nullptr), v);
}

TEST(Emit, TraceCsvShape) {
  std::vector<IterationRecord> trace{sample_record(1), sample_record(2), sample_record(3)};
  const auto rows = lines(trace_csv(trace));
  ASSERT_EQ(rows.size(), 4u);
  std::string header;
  for (std::size_t i = 0; i < kTraceColumns.size(); ++i)
    header += (i ? "," : "") + kTraceColumns[i];
  EXPECT_EQ(rows[0], header);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    EXPECT_EQ(std::count(rows[r].begin(), rows[r].end(), ','),
              static_cast<long>(kTraceColumns.size()) - 1);
    EXPECT_EQ(rows[r].substr(0, 2), std::to_string(r) + ",");
  }
  EXPECT_NE(rows[1].find(",nan,"), std::string::npos);
}

TEST(Emit, JsonRoundTripIsBitwise) {
  std::vector<IterationRecord> trace{sample_record(1), sample_record(2)};
  const nlohmann::json j = nlohmann::json::parse(trace_json(trace).dump());
  const auto back = trace_from_json(j);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    const IterationRecord &a = trace[k], &b = back[k];
    EXPECT_EQ(a.iter, b.iter);
    for (auto [x, y] : {std::pair{a.eta_b, b.eta_b}, {a.eta_Ab, b.eta_Ab}, {a.eta_AMb, b.eta_AMb},
                        {a.eta_tilde_b, b.eta_tilde_b}, {a.lsq_residual, b.lsq_residual},
                        {a.cr_last_vec, b.cr_last_vec}, {a.cr_basis, b.cr_basis},
                        {a.delta_used, b.delta_used}})
      EXPECT_EQ(std::memcmp(&x, &y, sizeof(double)), 0) << x << " vs " << y;
    EXPECT_TRUE(std::isnan(b.true_residual));
    EXPECT_EQ(a.max_rank_v, b.max_rank_v);
    EXPECT_EQ(a.max_rank_x, b.max_rank_x);
  }
}

TEST(Run, ConvdiffWritesDeclaredFiles) {
  const fs::path dir = scratch_dir("convdiff");
  const ExperimentConfig c =
      small("experiment = convdiff\nn = 7\nm = 30\nmaxit = 30\nepsilon = 1e-6\ndelta = 1e-7\n"
            "q = 4\noutput = cd\n");
  const RunManifest man = run_experiment(c, dir);
  EXPECT_TRUE(man.converged);
  EXPECT_EQ(man.status, 0);
  EXPECT_FALSE(man.phases.empty());
  for (const auto& f : man.files) EXPECT_TRUE(fs::exists(f)) << f;
  const auto manifest = nlohmann::json::parse(slurp(dir / "cd.manifest.json"));
  EXPECT_EQ(manifest["files"].size(), man.files.size());
  const auto summary = nlohmann::json::parse(slurp(dir / "cd.summary.json"));
  const auto rows = lines(slurp(dir / "cd.trace.csv"));
  EXPECT_EQ(static_cast<Index>(rows.size()) - 1, summary["iterations"].get<Index>());

  const fs::path again = scratch_dir("convdiff_again");
  run_experiment(c, again);
  EXPECT_EQ(slurp(dir / "cd.trace.csv"), slurp(again / "cd.trace.csv"));
  EXPECT_EQ(slurp(dir / "cd.summary.json"), slurp(again / "cd.summary.json"));
}

TEST(Run, BoundsRowsCoverEverySlice) {
  const fs::path dir = scratch_dir("bounds");
  const ExperimentConfig c =
      small("experiment = param-convdiff\nn = 5\np = 3\nm = 40\nmaxit = 40\nepsilon = 1e-7\n"
            "delta = 1e-8\nq = 4\nbounds = true\noutput = pc\n");
  const RunManifest man = run_experiment(c, dir);
  EXPECT_TRUE(man.converged);
  const auto trace = lines(slurp(dir / "pc.trace.csv"));
  const auto bounds = lines(slurp(dir / "pc.bounds.csv"));
  EXPECT_EQ(bounds.size() - 1, (trace.size() - 1) * 3);
  EXPECT_EQ(std::count(bounds[0].begin(), bounds[0].end(), ','),
            static_cast<long>(kTraceColumns.size() + kBoundColumns.size()) - 1);
  const auto summary = nlohmann::json::parse(slurp(dir / "pc.summary.json"));
  EXPECT_EQ(summary["bound_violations"].get<int>(), 0);
}

TEST(Run, JsonFormatAndNonConvergenceStatus) {
  const fs::path dir = scratch_dir("json");
  const ExperimentConfig c =
      small("experiment = poisson\nn = 7\nm = 3\nmaxit = 3\nepsilon = 1e-12\ndelta = 1e-13\n"
            "precondition = false\nformat = json\noutput = pj\n");
  const RunManifest man = run_experiment(c, dir);
  EXPECT_FALSE(man.converged);
  EXPECT_EQ(man.status, 1);
  const auto j = nlohmann::json::parse(slurp(dir / "pj.trace.json"));
  EXPECT_EQ(trace_from_json(j).size(), 3u);
}
