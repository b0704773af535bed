#include "hplab/hplab.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>
#include <vector>

#include "hplab/error.hpp"
#include "hplab/experiment.hpp"
#include "hplab/measures.hpp"

#ifndef HPLAB_VERSION
#define HPLAB_VERSION "unknown"
#endif

struct hplab_config {
  hplab::ExperimentConfig value;
};

struct hplab_run {
  hplab::RunResult value;
};

namespace {

thread_local std::string last_error;

hplab_status status_of(hplab::ErrorCode code) { return static_cast<hplab_status>(static_cast<int>(code) + 1); }

template <class Fn>
hplab_status guarded(Fn&& fn) {
  try {
    last_error.clear();
    fn();
    return HPLAB_OK;
  } catch (const hplab::Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown exception";
  }
  return HPLAB_INTERNAL_ERROR;
}

hplab_status null_argument(const char* what) {
  last_error = std::string("InvalidArgument: null ") + what;
  return HPLAB_INVALID_ARGUMENT;
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::vector<std::string> collect_overrides(const char* const* overrides, size_t count) {
  std::vector<std::string> out;
  for (size_t i = 0; i < count; ++i)
    if (overrides[i]) out.emplace_back(overrides[i]);
  return out;
}

}  // namespace

extern "C" {

const char* hplab_version(void) { return HPLAB_VERSION; }

const char* hplab_last_error(void) { return last_error.c_str(); }

const char* hplab_status_name(hplab_status status) {
  if (status == HPLAB_OK) return "OK";
  if (status == HPLAB_INTERNAL_ERROR) return "InternalError";
  if (status < HPLAB_OK || status > HPLAB_INTERNAL_ERROR) return "UnknownStatus";
  return hplab::error_code_name(static_cast<hplab::ErrorCode>(static_cast<int>(status) - 1));
}

int hplab_status_exit_code(hplab_status status) {
  if (status == HPLAB_OK) return 0;
  if (status == HPLAB_INTERNAL_ERROR) return 3;
  return hplab::exit_code_for(static_cast<hplab::ErrorCode>(static_cast<int>(status) - 1));
}

void hplab_string_free(char* s) { std::free(s); }

hplab_status hplab_config_load(const char* path, const char* const* overrides, size_t count, hplab_config** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  if (count && !overrides) return null_argument("overrides");
  return guarded([&] {
    const auto o = collect_overrides(overrides, count);
    *out = new hplab_config{hplab::ExperimentConfig::load(path, o)};
  });
}

hplab_status hplab_config_parse(const char* text, const char* const* overrides, size_t count, hplab_config** out) {
  if (!text) return null_argument("text");
  if (!out) return null_argument("out");
  if (count && !overrides) return null_argument("overrides");
  return guarded([&] {
    const auto o = collect_overrides(overrides, count);
    *out = new hplab_config{hplab::ExperimentConfig::parse(text, o)};
  });
}

hplab_status hplab_config_defaults(const char* experiment, hplab_config** out) {
  if (!experiment) return null_argument("experiment");
  if (!out) return null_argument("out");
  return guarded([&] {
    *out = new hplab_config{hplab::ExperimentConfig::defaults(hplab::parse_experiment_kind(experiment))};
  });
}

hplab_status hplab_config_set(hplab_config* config, const char* key, const char* value) {
  if (!config) return null_argument("config");
  if (!key || !value) return null_argument("key or value");
  return guarded([&] {
    if (std::strcmp(key, "experiment") == 0) {
      // switching experiments reloads its defaults, keeping the output directory
      const std::string dir = config->value.out_dir;
      config->value = hplab::ExperimentConfig::defaults(hplab::parse_experiment_kind(value));
      config->value.out_dir = dir;
    } else {
      config->value.set(key, value);
    }
  });
}

hplab_status hplab_config_get(const hplab_config* config, const char* key, char** value) {
  if (!config) return null_argument("config");
  if (!key || !value) return null_argument("key or value");
  return guarded([&] {
    for (const auto& [k, v] : config->value.entries()) {
      if (k == key) {
        *value = duplicate(v);
        return;
      }
    }
    throw hplab::Error(hplab::ErrorCode::kConfigError, std::string("unknown config key '") + key + "'");
  });
}

hplab_status hplab_config_to_text(const hplab_config* config, char** text) {
  if (!config) return null_argument("config");
  if (!text) return null_argument("text");
  return guarded([&] { *text = duplicate(config->value.to_text()); });
}

hplab_status hplab_config_validate(const hplab_config* config) {
  if (!config) return null_argument("config");
  return guarded([&] { config->value.validate(); });
}

void hplab_config_free(hplab_config* config) { delete config; }

hplab_status hplab_run_experiment(const hplab_config* config, hplab_run** out) {
  if (!config) return null_argument("config");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new hplab_run{hplab::run_experiment(config->value)}; });
}

size_t hplab_run_report_count(const hplab_run* run) { return run ? run->value.reports.size() : 0; }

hplab_status hplab_run_report(const hplab_run* run, size_t index, hplab_report* out) {
  if (!run) return null_argument("run");
  if (!out) return null_argument("out");
  if (index >= run->value.reports.size()) {
    last_error = "InvalidArgument: report index out of range";
    return HPLAB_INVALID_ARGUMENT;
  }
  const auto& r = run->value.reports[index];
  *out = {r.name.c_str(), r.kind.c_str(), r.statistic, r.p_value, r.threshold, r.n1, r.n2, r.passed ? 1 : 0};
  return HPLAB_OK;
}

int hplab_run_passed(const hplab_run* run) { return run && run->value.passed() ? 1 : 0; }

size_t hplab_run_flagged_count(const hplab_run* run) { return run ? run->value.flagged_replicates.size() : 0; }

double hplab_run_wall_seconds(const hplab_run* run) { return run ? run->value.wall_seconds : 0.0; }

hplab_status hplab_run_write(const hplab_run* run, const char* dir, char** manifest_json) {
  if (!run) return null_argument("run");
  return guarded([&] {
    const auto m = hplab::write_run(run->value, dir ? std::string(dir) : run->value.config.out_dir);
    if (manifest_json) *manifest_json = duplicate(m.to_json());
  });
}

void hplab_run_free(hplab_run* run) { delete run; }

hplab_status hplab_replay(const char* manifest_path, const char* dir, int* identical, char** mismatched) {
  if (!manifest_path || !dir) return null_argument("manifest_path or dir");
  if (!identical) return null_argument("identical");
  return guarded([&] {
    const auto outcome = hplab::replay_manifest(manifest_path, dir);
    *identical = outcome.identical() ? 1 : 0;
    if (mismatched) {
      std::string list;
      for (const auto& f : outcome.mismatched) list += (list.empty() ? "" : ",") + f;
      *mismatched = duplicate(list);
    }
  });
}

hplab_status hplab_list_experiments(int as_json, char** out) {
  if (!out) return null_argument("out");
  return guarded([&] { *out = duplicate(as_json ? hplab::catalog_json() : hplab::catalog_table()); });
}

hplab_status hplab_density_eval(int n, double s_re, double s_im, const double* x, size_t count, double* pdf,
                                double* cdf) {
  if (count && (!x || (!pdf && !cdf))) return null_argument("x, pdf or cdf");
  return guarded([&] {
    const hplab::ModelParams p{n, s_re, s_im};
    p.validate();
    const auto m = hplab::Density1D::reversible_m(p.s(), n);
    for (size_t i = 0; i < count; ++i) {
      if (pdf) pdf[i] = m.pdf(x[i]);
      if (cdf) cdf[i] = m.cdf(x[i]);
    }
  });
}

}  // extern "C"
