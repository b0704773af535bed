#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include <json.hpp>

#include "hplab/error.hpp"
#include "hplab/experiment.hpp"

#ifndef HPLAB_VERSION
#define HPLAB_VERSION "unknown"
#endif

namespace hplab {

namespace {

using json = nlohmann::ordered_json;

std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_file(const std::filesystem::path& file, std::string_view bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + file.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIoError, "short write to " + file.string());
}

std::string read_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json seed_layout() {
  return {
      {"generator", "philox4x32-10"},
      {"key", "seed"},
      {"counter", "stream_id in the high 64 bits, draw block in the low 64 bits"},
      {"stream_id", "(role << 48) | replicate_id"},
      {"roles",
       {{"matrix_w", 0},
        {"matrix_b", 1},
        {"scalar_beta", 2},
        {"scalar_gamma", 3},
        {"reference", 4},
        {"initial", 5},
        {"auxiliary", 6},
        {"second_w", 7},
        {"second_b", 8}}},
  };
}

}  // namespace

std::string reports_json(const RunResult& result) {
  json reports = json::array();
  for (const auto& r : result.reports) reports.push_back(json::parse(r.to_json()));
  const json doc = {
      {"experiment", experiment_name(result.config.experiment)},
      {"verdict", result.passed() ? "pass" : "fail"},
      {"reports", reports},
  };
  return doc.dump(2) + "\n";
}

std::string samples_csv(const RunResult& result) {
  std::string out = "replicate_id,statistic_name,value,flagged\n";
  for (const auto& s : result.samples)
    out += std::to_string(s.replicate) + "," + s.statistic + "," + num(s.value) + "," + (s.flagged ? "1" : "0") + "\n";
  return out;
}

std::string paths_csv(const RunResult& result) {
  std::string out = "replicate_id,t,component_index,value\n";
  for (const auto& p : result.paths)
    out += std::to_string(p.replicate) + "," + num(p.t) + "," + std::to_string(p.component) + "," + num(p.value) + "\n";
  return out;
}

std::string density_csv(const RunResult& result) {
  std::string out = "x,pdf,cdf\n";
  for (const auto& d : result.density) out += num(d.x) + "," + num(d.pdf) + "," + num(d.cdf) + "\n";
  return out;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::kIoError, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_file(const std::filesystem::path& file) { return sha256_hex(read_file(file)); }

std::string RunManifest::to_json() const {
  json cfg = json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  json outs = json::object();
  for (const auto& o : outputs) outs[o.file] = {{"sha256", o.sha256}, {"bytes", o.bytes}};
  const json doc = {
      {"code_version", code_version},
      {"csv_schema_version", kCsvSchemaVersion},
      {"config", cfg},
      {"seed_layout", seed_layout()},
      {"flagged_replicates", flagged_replicates},
      {"threads", threads_used},
      {"wall_clock_seconds", wall_seconds},
      {"verdict", verdict},
      {"outputs", outs},
  };
  return doc.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
  RunManifest m;
  try {
    const json doc = json::parse(text);
    for (const auto& [k, v] : doc.at("config").items()) m.config.emplace_back(k, v.get<std::string>());
    m.code_version = doc.value("code_version", "");
    m.flagged_replicates = doc.value("flagged_replicates", std::vector<std::uint64_t>{});
    m.wall_seconds = doc.value("wall_clock_seconds", 0.0);
    m.threads_used = doc.value("threads", 1u);
    m.verdict = doc.value("verdict", "");
    for (const auto& [file, info] : doc.at("outputs").items())
      m.outputs.push_back({file, info.at("sha256").get<std::string>(), info.value("bytes", std::uintmax_t{0})});
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

RunManifest RunManifest::load(const std::filesystem::path& file) { return from_json(read_file(file)); }

RunManifest write_run(const RunResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<std::pair<std::string, std::string>> files = {
      {"reports.json", reports_json(result)},
      {"samples.csv", samples_csv(result)},
      {"paths.csv", paths_csv(result)},
  };
  if (result.config.experiment == ExperimentKind::kDensityEval) files.emplace_back("density.csv", density_csv(result));

  RunManifest m;
  m.config = result.config.entries();
  m.code_version = HPLAB_VERSION;
  m.flagged_replicates = result.flagged_replicates;
  m.wall_seconds = result.wall_seconds;
  m.threads_used = result.threads_used;
  m.verdict = result.passed() ? "pass" : "fail";
  for (const auto& [name, bytes] : files) {
    write_file(dir / name, bytes);
    m.outputs.push_back({name, sha256_hex(bytes), bytes.size()});
  }
  write_file(dir / "manifest.json", m.to_json());
  return m;
}

ReplayOutcome replay_manifest(const std::filesystem::path& manifest, const std::filesystem::path& dir) {
  ReplayOutcome out;
  out.original = RunManifest::load(manifest);
  std::map<std::string, std::string> entries(out.original.config.begin(), out.original.config.end());
  ExperimentConfig config = ExperimentConfig::from_entries(entries);
  config.out_dir = dir.string();
  out.replayed = write_run(run_experiment(config), dir);
  for (const auto& o : out.original.outputs) {
    const auto it = std::find_if(out.replayed.outputs.begin(), out.replayed.outputs.end(),
                                 [&](const OutputDigest& d) { return d.file == o.file; });
    if (it == out.replayed.outputs.end() || it->sha256 != o.sha256) out.mismatched.push_back(o.file);
  }
  return out;
}

}  // namespace hplab
