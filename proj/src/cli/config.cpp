#include "ttkrylov/cli/config.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace ttk::cli {

namespace {

constexpr std::array<std::pair<Experiment, std::string_view>, 9> kNames{{
    {Experiment::Poisson, "poisson"},
    {Experiment::Convdiff, "convdiff"},
    {Experiment::ParamConvdiff, "param-convdiff"},
    {Experiment::HeatParam, "heat-param"},
    {Experiment::MultiRhsPoisson, "multi-rhs-poisson"},
    {Experiment::MultiRhsConvdiff, "multi-rhs-convdiff"},
    {Experiment::EigenRhs, "eigen-rhs"},
    {Experiment::PrecSweep, "prec-sweep"},
    {Experiment::RelaxedCompare, "relaxed-compare"},
}};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

double to_double(const std::string& key, std::string_view v) {
  double out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out))
    throw ConfigError(key, "expected a real number, got '" + std::string(v) + "'");
  return out;
}

Index to_index(const std::string& key, std::string_view v) {
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key, "expected an integer, got '" + std::string(v) + "'");
  return static_cast<Index>(out);
}

std::uint64_t to_seed(const std::string& key, std::string_view v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError(key, "expected a non-negative integer, got '" + std::string(v) + "'");
  return out;
}

bool to_bool(const std::string& key, std::string_view v) {
  const std::string s = lower(v);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key, "expected a boolean, got '" + std::string(v) + "'");
}

template <class T, class F>
std::vector<T> to_list(const std::string& key, std::string_view v, F parse) {
  std::vector<T> out;
  while (!v.empty()) {
    const auto comma = v.find(',');
    const std::string_view item = trim(v.substr(0, comma));
    if (item.empty()) throw ConfigError(key, "empty list element");
    out.push_back(parse(key, item));
    if (comma == std::string_view::npos) break;
    v.remove_prefix(comma + 1);
  }
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list");
  return out;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T, class F>
std::string join(const std::vector<T>& values, F fmt) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += fmt(values[i]);
  }
  return out;
}

}  // namespace

std::string to_string(Experiment e) {
  for (const auto& [key, name] : kNames)
    if (key == e) return std::string(name);
  return "unknown";
}

std::optional<Experiment> parse_experiment(std::string_view name) {
  for (const auto& [key, n] : kNames)
    if (n == name) return key;
  return std::nullopt;
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues out;
  Index line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("line " + std::to_string(line_no), "expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no), "empty key");
    out.emplace_back(key, std::string(trim(line.substr(eq + 1))));
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

void apply_overrides(KeyValues& base, const KeyValues& overrides) {
  for (const auto& [key, value] : overrides) {
    auto it = std::find_if(base.begin(), base.end(), [&](const auto& kv) { return kv.first == key; });
    if (it != base.end()) it->second = value;
    else base.emplace_back(key, value);
  }
}

ExperimentConfig config_from(const KeyValues& kv) {
  std::map<std::string, std::string> seen;
  for (const auto& [key, value] : kv) seen[key] = value;
  ExperimentConfig c;
  auto it = seen.find("experiment");
  if (it == seen.end()) throw ConfigError("experiment", "required");
  const auto exp = parse_experiment(it->second);
  if (!exp) throw ConfigError("experiment", "unknown experiment '" + it->second + "'");
  c.experiment = *exp;

  for (const auto& [key, v] : seen) {
    if (key == "experiment") continue;
    else if (key == "n") c.n = to_index(key, v);
    else if (key == "d") c.d = to_index(key, v);
    else if (key == "p") c.p = to_index(key, v);
    else if (key == "m") c.m = to_index(key, v);
    else if (key == "epsilon") c.epsilon = to_double(key, v);
    else if (key == "delta") c.delta = to_double(key, v);
    else if (key == "maxit") c.maxit = to_index(key, v);
    else if (key == "q") c.q = to_index(key, v);
    else if (key == "tau") c.tau = to_double(key, v);
    else if (key == "precondition") c.precondition = to_bool(key, v);
    else if (key == "seed") c.seed = to_seed(key, v);
    else if (key == "output") c.output = v;
    else if (key == "format") {
      if (v == "csv") c.format = OutputFormat::Csv;
      else if (v == "json") c.format = OutputFormat::Json;
      else throw ConfigError(key, "expected csv or json");
    }
    else if (key == "policy") c.policy = v;
    else if (key == "criterion") c.criterion = v;
    else if (key == "assemble_every") c.assemble_every = to_index(key, v);
    else if (key == "norm_samples") c.norm_samples = to_index(key, v);
    else if (key == "sample_rank") c.sample_rank = to_index(key, v);
    else if (key == "bounds") c.bounds = to_bool(key, v);
    else if (key == "rank_cap") c.rank_cap = to_index(key, v);
    else if (key == "param_lo") c.param_lo = to_double(key, v);
    else if (key == "param_hi") c.param_hi = to_double(key, v);
    else if (key == "boundary") c.boundary = v;
    else if (key == "eigen_count") c.eigen_count = to_index(key, v);
    else if (key == "q_list") c.q_list = to_list<Index>(key, v, to_index);
    else if (key == "tau_list") c.tau_list = to_list<double>(key, v, to_double);
    else if (key == "delta_list") c.delta_list = to_list<double>(key, v, to_double);
    else throw ConfigError(key, "unknown key");
  }
  return c;
}

std::vector<std::string> validate(const ExperimentConfig& c) {
  std::vector<std::string> warnings;
  const auto need = [](bool ok, const char* field, const char* msg) {
    if (!ok) throw ConfigError(field, msg);
  };
  need(c.n >= 2, "n", "must be >= 2");
  need(c.d >= 1, "d", "must be >= 1");
  need(c.m >= 1, "m", "must be >= 1");
  need(c.maxit >= 1, "maxit", "must be >= 1");
  need(c.epsilon > 0, "epsilon", "must be > 0");
  need(c.delta >= 0, "delta", "must be >= 0");
  need(c.q >= 0, "q", "must be >= 0 (0 selects round(n/4))");
  need(c.tau >= 0, "tau", "must be >= 0");
  need(c.assemble_every >= 1, "assemble_every", "must be >= 1");
  need(c.norm_samples >= 1, "norm_samples", "must be >= 1");
  need(c.sample_rank >= 1, "sample_rank", "must be >= 1");
  need(c.policy == "constant" || c.policy == "relaxed", "policy", "expected constant or relaxed");
  need(c.criterion == "eta_Ab" || c.criterion == "eta_b" || c.criterion == "eta_tilde_b",
       "criterion", "expected eta_Ab, eta_b or eta_tilde_b");
  need(c.boundary == "reject" || c.boundary == "closed", "boundary", "expected reject or closed");

  switch (c.experiment) {
    case Experiment::ParamConvdiff:
    case Experiment::HeatParam:
    case Experiment::MultiRhsPoisson:
    case Experiment::MultiRhsConvdiff:
      need(c.p >= 1, "p", "required (>= 1) for this experiment");
      need(c.d == 3, "d", "this experiment is three-dimensional");
      if (c.bounds) need(c.m >= c.maxit, "m", "bounds need a single cycle: m >= maxit");
      if (c.experiment == Experiment::MultiRhsPoisson || c.experiment == Experiment::MultiRhsConvdiff)
        need(c.rank_cap >= 1, "rank_cap", "must be >= 1");
      break;
    case Experiment::Convdiff:
    case Experiment::RelaxedCompare:
      need(c.d == 3, "d", "this experiment is three-dimensional");
      break;
    case Experiment::EigenRhs:
      need(c.d == 3, "d", "this experiment is three-dimensional");
      need(c.eigen_count >= 1, "eigen_count", "must be >= 1");
      break;
    case Experiment::PrecSweep:
      need(!c.q_list.empty(), "q_list", "required for prec-sweep");
      need(!c.tau_list.empty(), "tau_list", "required for prec-sweep");
      for (Index q : c.q_list) need(q >= 1, "q_list", "entries must be >= 1");
      break;
    case Experiment::Poisson:
      break;
  }
  if (c.experiment == Experiment::RelaxedCompare) {
    need(!c.delta_list.empty(), "delta_list", "required for relaxed-compare");
    for (double d : c.delta_list)
      if (d > c.epsilon)
        warnings.push_back("delta_list entry " + number(d) + " exceeds epsilon " + number(c.epsilon) +
                           "; the rounding accuracy should not exceed the GMRES target accuracy");
  }
  if (c.delta > c.epsilon)
    warnings.push_back("delta " + number(c.delta) + " exceeds epsilon " + number(c.epsilon) +
                       "; the rounding accuracy should not exceed the GMRES target accuracy");
  return warnings;
}

KeyValues to_key_values(const ExperimentConfig& c) {
  auto idx = [](Index v) { return std::to_string(v); };
  KeyValues kv{
      {"experiment", to_string(c.experiment)},
      {"n", idx(c.n)},
      {"d", idx(c.d)},
      {"p", idx(c.p)},
      {"m", idx(c.m)},
      {"epsilon", number(c.epsilon)},
      {"delta", number(c.delta)},
      {"maxit", idx(c.maxit)},
      {"q", idx(c.q)},
      {"tau", number(c.tau)},
      {"precondition", c.precondition ? "true" : "false"},
      {"seed", std::to_string(c.seed)},
      {"output", c.output},
      {"format", c.format == OutputFormat::Csv ? "csv" : "json"},
      {"policy", c.policy},
      {"criterion", c.criterion},
      {"assemble_every", idx(c.assemble_every)},
      {"norm_samples", idx(c.norm_samples)},
      {"sample_rank", idx(c.sample_rank)},
      {"bounds", c.bounds ? "true" : "false"},
      {"rank_cap", idx(c.rank_cap)},
      {"param_lo", number(c.param_lo)},
      {"param_hi", number(c.param_hi)},
      {"boundary", c.boundary},
      {"eigen_count", idx(c.eigen_count)},
  };
  if (!c.q_list.empty()) kv.emplace_back("q_list", join(c.q_list, idx));
  if (!c.tau_list.empty()) kv.emplace_back("tau_list", join(c.tau_list, number));
  if (!c.delta_list.empty()) kv.emplace_back("delta_list", join(c.delta_list, number));
  return kv;
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> list{
      {"poisson-n63", "restarted unpreconditioned Poisson solve", false,
       "experiment = poisson\nn = 63\nm = 25\nmaxit = 500\nepsilon = 1e-5\ndelta = 1e-5\n"
       "precondition = false\noutput = poisson-n63\n"},
      {"poisson-n127", "restarted unpreconditioned Poisson solve", true,
       "experiment = poisson\nn = 127\nm = 25\nmaxit = 500\nepsilon = 1e-5\ndelta = 1e-5\n"
       "precondition = false\noutput = poisson-n127\n"},
      {"convdiff-n63", "preconditioned convection-diffusion solve", false,
       "experiment = convdiff\nn = 63\nm = 25\nmaxit = 500\nepsilon = 1e-5\ndelta = 1e-5\n"
       "precondition = true\nq = 16\ntau = 1e-2\noutput = convdiff-n63\n"},
      {"convdiff-n127", "preconditioned convection-diffusion solve", true,
       "experiment = convdiff\nn = 127\nm = 25\nmaxit = 500\nepsilon = 1e-5\ndelta = 1e-5\n"
       "precondition = true\nq = 32\ntau = 1e-2\noutput = convdiff-n127\n"},
      {"param-convdiff-n15", "parametric convection-diffusion with bound checks", false,
       "experiment = param-convdiff\nn = 15\np = 5\nm = 50\nmaxit = 50\nepsilon = 1e-5\n"
       "delta = 1e-6\nparam_lo = 1\nparam_hi = 10\nprecondition = true\nq = 16\ntau = 1e-2\n"
       "bounds = true\noutput = param-convdiff-n15\n"},
      {"param-convdiff-n63", "parametric convection-diffusion with bound checks", true,
       "experiment = param-convdiff\nn = 63\np = 20\nm = 50\nmaxit = 50\nepsilon = 1e-5\n"
       "delta = 1e-6\nparam_lo = 1\nparam_hi = 10\nprecondition = true\nq = 16\ntau = 1e-2\n"
       "bounds = true\noutput = param-convdiff-n63\n"},
      {"heat-param-n15", "heterogeneous heat-type problem with bound checks", false,
       "experiment = heat-param\nn = 15\np = 5\nm = 50\nmaxit = 50\nepsilon = 1e-5\n"
       "delta = 1e-6\nparam_lo = 0\nparam_hi = 10\nboundary = closed\nprecondition = true\n"
       "q = 16\ntau = 1e-2\nbounds = true\noutput = heat-param-n15\n"},
      {"multi-rhs-poisson-n15", "Poisson with several right-hand sides", false,
       "experiment = multi-rhs-poisson\nn = 15\np = 5\nm = 50\nmaxit = 50\nepsilon = 1e-5\n"
       "delta = 1e-6\nrank_cap = 8\nprecondition = true\nq = 16\ntau = 1e-2\nbounds = true\n"
       "seed = 1\noutput = multi-rhs-poisson-n15\n"},
      {"multi-rhs-convdiff-n15", "convection-diffusion with several right-hand sides", false,
       "experiment = multi-rhs-convdiff\nn = 15\np = 5\nm = 50\nmaxit = 50\nepsilon = 1e-5\n"
       "delta = 1e-6\nrank_cap = 10\nprecondition = true\nq = 16\ntau = 1e-2\nbounds = true\n"
       "seed = 1\noutput = multi-rhs-convdiff-n15\n"},
      {"eigen-rhs-n31", "eigenvector right-hand sides, fast, slow and stacked", false,
       "experiment = eigen-rhs\nn = 31\nm = 30\nmaxit = 30\nepsilon = 1e-5\ndelta = 1e-14\n"
       "eigen_count = 10\nprecondition = false\ncriterion = eta_Ab\noutput = eigen-rhs-n31\n"},
      {"prec-sweep-n63", "preconditioner rank and norm sweep over q and tau", false,
       "experiment = prec-sweep\nn = 63\nq_list = 2,8,16,32,64\ntau_list = 1e-2,1e-8\n"
       "norm_samples = 10\nsample_rank = 5\noutput = prec-sweep-n63\n"},
      {"relaxed-compare-n63", "constant against relaxed rounding, convection-diffusion", true,
       "experiment = relaxed-compare\nn = 63\nm = 100\nmaxit = 100\nepsilon = 1e-6\n"
       "delta = 1e-6\ndelta_list = 1e-3,1e-5,1e-8\nprecondition = true\nq = 16\ntau = 1e-2\n"
       "output = relaxed-compare-n63\n"},
  };
  return list;
}

const Preset* find_preset(std::string_view name) {
  for (const Preset& p : presets())
    if (p.name == name) return &p;
  return nullptr;
}

}  // namespace ttk::cli
