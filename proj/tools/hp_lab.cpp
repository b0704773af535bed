// hp-lab: run, list and replay verification experiments through the C API.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hplab/hplab.h"

namespace {

int fail(hplab_status st) {
  std::fprintf(stderr, "hp-lab: %s\n", hplab_last_error());
  return hplab_status_exit_code(st);
}

void print_reports(const hplab_run* run) {
  for (size_t i = 0; i < hplab_run_report_count(run); ++i) {
    hplab_report r;
    if (hplab_run_report(run, i, &r) != HPLAB_OK) continue;
    std::printf("%-4s %-62s stat=%-12.6g", r.passed ? "PASS" : "FAIL", r.name, r.statistic);
    if (std::isnan(r.p_value))
      std::printf(" threshold=%g", r.threshold);
    else
      std::printf(" p=%.4g", r.p_value);
    std::printf(" n=%zu", r.n1);
    if (r.n2) std::printf("/%zu", r.n2);
    std::printf("\n");
  }
}

int cmd_run(const std::string& config_file, const std::vector<std::string>& sets) {
  std::vector<const char*> overrides;
  for (const auto& s : sets) overrides.push_back(s.c_str());
  hplab_config* cfg = nullptr;
  hplab_status st = hplab_config_load(config_file.c_str(), overrides.data(), overrides.size(), &cfg);
  if (st != HPLAB_OK) return fail(st);

  hplab_run* run = nullptr;
  st = hplab_run_experiment(cfg, &run);
  if (st != HPLAB_OK) {
    hplab_config_free(cfg);
    return fail(st);
  }
  char* dir = nullptr;
  hplab_config_get(cfg, "out_dir", &dir);
  st = hplab_run_write(run, nullptr, nullptr);
  if (st != HPLAB_OK) {
    hplab_string_free(dir);
    hplab_run_free(run);
    hplab_config_free(cfg);
    return fail(st);
  }

  print_reports(run);
  std::printf("flagged replicates: %zu, wall clock %.2fs, outputs in %s\n", hplab_run_flagged_count(run),
              hplab_run_wall_seconds(run), dir ? dir : "?");
  const int code = hplab_run_passed(run) ? 0 : 1;
  hplab_string_free(dir);
  hplab_run_free(run);
  hplab_config_free(cfg);
  return code;
}

int cmd_list(bool as_json) {
  char* text = nullptr;
  const hplab_status st = hplab_list_experiments(as_json ? 1 : 0, &text);
  if (st != HPLAB_OK) return fail(st);
  std::fputs(text, stdout);
  if (as_json) std::fputs("\n", stdout);
  hplab_string_free(text);
  return 0;
}

int cmd_replay(const std::string& manifest, std::string out) {
  if (out.empty()) out = (std::filesystem::path(manifest).parent_path() / "replay").string();
  int identical = 0;
  char* mismatched = nullptr;
  const hplab_status st = hplab_replay(manifest.c_str(), out.c_str(), &identical, &mismatched);
  if (st != HPLAB_OK) return fail(st);
  if (identical)
    std::printf("replay identical: all output digests match (%s)\n", out.c_str());
  else
    std::printf("replay differs: %s\n", mismatched);
  hplab_string_free(mismatched);
  return identical ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reproducible Monte Carlo checks for Hua-Pickrell diffusions and exponential functionals", "hp-lab"};
  app.require_subcommand(0, 1);
  app.set_version_flag("--version", hplab_version());

  std::string config_file;
  std::vector<std::string> sets;
  auto* run = app.add_subcommand("run", "run an experiment from a key=value config");
  run->add_option("--config", config_file, "config file")->required();
  run->add_option("--set", sets, "override, key=value (repeatable)")->take_all();

  bool as_json = false;
  auto* list = app.add_subcommand("list", "list the experiments and their defaults");
  list->add_flag("--json", as_json, "machine-readable output");

  std::string manifest, out;
  auto* replay = app.add_subcommand("replay", "rerun a manifest and compare output digests");
  replay->add_option("manifest", manifest, "manifest.json of a previous run")->required();
  replay->add_option("--out", out, "directory for the rerun (default: <manifest dir>/replay)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*run) return cmd_run(config_file, sets);
  if (*replay) return cmd_replay(manifest, out);
  return cmd_list(as_json);
}
