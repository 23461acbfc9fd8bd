#include <atomic>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ttkrylov/cli/config.hpp"
#include "ttkrylov/cli/emit.hpp"
#include "ttkrylov/cli/experiments.hpp"

namespace fs = std::filesystem;
using namespace ttk::cli;

namespace {

KeyValues load(const std::string& source) {
  if (fs::exists(source)) return read_key_values(source);
  if (const Preset* p = find_preset(source)) return parse_key_values(p->text);
  throw ConfigError("config", "'" + source + "' is neither a file nor a preset name");
}

struct Job {
  std::string source;
  ExperimentConfig cfg;
};

int run_jobs(const std::vector<Job>& jobs, const fs::path& out_dir, unsigned workers) {
  std::mutex io;
  std::atomic<std::size_t> next{0};
  std::vector<int> status(jobs.size(), 0);
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const RunManifest man = run_experiment(jobs[i].cfg, out_dir);
        std::lock_guard lock(io);
        for (const auto& w : man.warnings) std::cerr << jobs[i].source << ": warning: " << w << '\n';
        std::cout << jobs[i].source << ": " << (man.converged ? "converged" : "not converged")
                  << ", " << man.files.size() << " files\n";
        status[i] = man.status;
      } catch (const std::exception& e) {
        std::lock_guard lock(io);
        std::cerr << jobs[i].source << ": error: " << e.what() << '\n';
        status[i] = 2;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  int worst = 0;
  for (int s : status) worst = std::max(worst, s);
  return worst;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor-train GMRES experiment harness"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run experiments from config files or preset names");
  std::vector<std::string> sources;
  std::vector<std::string> sets;
  std::string out_dir = ".";
  std::string format;
  unsigned jobs = 1;
  run->add_option("config", sources, "config file or preset name")->required();
  run->add_option("--set", sets, "override a key, key=value");
  run->add_option("--output", out_dir, "output directory");
  run->add_option("--format", format, "trace format")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--jobs", jobs, "configs run concurrently")->check(CLI::PositiveNumber);

  auto* list = app.add_subcommand("presets", "list built-in presets");
  std::string dump_dir;
  list->add_option("--write", dump_dir, "write every preset as <name>.conf into this directory");

  CLI11_PARSE(app, argc, argv);

  if (list->parsed()) {
    for (const Preset& p : presets()) {
      std::cout << p.name << (p.long_running ? "  [long-running]" : "") << "  " << p.description
                << '\n';
      if (!dump_dir.empty()) write_text(fs::path(dump_dir) / (p.name + ".conf"), p.text);
    }
    return 0;
  }

  std::vector<Job> queue;
  try {
    KeyValues overrides;
    for (const auto& s : sets) {
      const KeyValues kv = parse_key_values(s);
      if (kv.size() != 1) throw ConfigError("--set", "expected key=value, got '" + s + "'");
      overrides.push_back(kv.front());
    }
    if (!format.empty()) overrides.emplace_back("format", format);
    for (const auto& src : sources) {
      KeyValues kv = load(src);
      apply_overrides(kv, overrides);
      ExperimentConfig cfg = config_from(kv);
      validate(cfg);
      queue.push_back({src, std::move(cfg)});
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return run_jobs(queue, out_dir, std::min<unsigned>(jobs, static_cast<unsigned>(queue.size())));
}
