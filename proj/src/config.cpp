#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "hplab/error.hpp"
#include "hplab/experiment.hpp"

namespace hplab {

namespace {

constexpr ExperimentKind kAll[] = {
    ExperimentKind::kScalarBougerol,  ExperimentKind::kPearson4Functional, ExperimentKind::kDufresne,
    ExperimentKind::kMatrixBougerol,  ExperimentKind::kHuaPickrellLimit,   ExperimentKind::kInvariance,
    ExperimentKind::kTimeReversal,    ExperimentKind::kLyapunov,           ExperimentKind::kExplicitSolution,
    ExperimentKind::kDensityEval,
};

[[noreturn]] void config_error(const std::string& what) { throw Error(ErrorCode::kConfigError, what); }

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
void parse_value(std::string_view key, std::string_view text, T& out) {
  if constexpr (std::is_same_v<T, std::string>) {
    out = std::string(text);
  } else {
    T v{};
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size())
      config_error("bad value '" + std::string(text) + "' for " + std::string(key));
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(v)) config_error(std::string(key) + " must be finite");
    }
    out = v;
  }
}

template <class T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_floating_point_v<T>) {
    return format_double(v);
  } else {
    return std::to_string(v);
  }
}

struct Field {
  const char* key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

template <class T>
Field field(const char* key, T ExperimentConfig::*member) {
  return {key, [key, member](ExperimentConfig& c, std::string_view v) { parse_value(key, v, c.*member); },
          [member](const ExperimentConfig& c) { return format_value(c.*member); }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      {"experiment", [](ExperimentConfig& c, std::string_view v) { c.experiment = parse_experiment_kind(v); },
       [](const ExperimentConfig& c) { return std::string(experiment_name(c.experiment)); }},
      field("N", &ExperimentConfig::n),
      field("s_re", &ExperimentConfig::s_re),
      field("s_im", &ExperimentConfig::s_im),
      field("nu", &ExperimentConfig::nu),
      field("mu", &ExperimentConfig::mu),
      field("t", &ExperimentConfig::t),
      field("h", &ExperimentConfig::h),
      field("replicates", &ExperimentConfig::replicates),
      field("seed", &ExperimentConfig::seed),
      field("threads", &ExperimentConfig::threads),
      field("tail_eps", &ExperimentConfig::tail_eps),
      field("tail_block", &ExperimentConfig::tail_block),
      field("tail_max_t", &ExperimentConfig::tail_max_t),
      field("alpha", &ExperimentConfig::alpha),
      field("burn_in", &ExperimentConfig::burn_in),
      field("init_h", &ExperimentConfig::init_h),
      field("levels", &ExperimentConfig::levels),
      field("x_min", &ExperimentConfig::x_min),
      field("x_max", &ExperimentConfig::x_max),
      field("points", &ExperimentConfig::points),
      field("save_paths", &ExperimentConfig::save_paths),
      field("path_points", &ExperimentConfig::path_points),
      field("out_dir", &ExperimentConfig::out_dir),
  };
  return table;
}

std::string canonical_key(std::string_view key) {
  if (key == "T") return "t";
  if (key == "n") return "N";
  return std::string(key);
}

std::pair<std::string, std::string> split_assignment(std::string_view line, const char* where) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) config_error(std::string(where) + ": expected key=value, got '" + std::string(line) + "'");
  const auto key = trim(line.substr(0, eq));
  if (key.empty()) config_error(std::string(where) + ": empty key");
  return {canonical_key(key), std::string(trim(line.substr(eq + 1)))};
}

ExperimentConfig apply_all(const std::vector<std::pair<std::string, std::string>>& assignments) {
  ExperimentKind kind = ExperimentKind::kScalarBougerol;
  bool named = false;
  for (const auto& [k, v] : assignments) {
    if (k == "experiment") {
      kind = parse_experiment_kind(v);
      named = true;
    }
  }
  if (!named) config_error("config does not name an experiment");
  ExperimentConfig c = ExperimentConfig::defaults(kind);
  for (const auto& [k, v] : assignments)
    if (k != "experiment") c.set(k, v);
  return c;
}

}  // namespace

const char* experiment_name(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::kScalarBougerol: return "scalar-bougerol";
    case ExperimentKind::kPearson4Functional: return "pearson4-functional";
    case ExperimentKind::kDufresne: return "dufresne";
    case ExperimentKind::kMatrixBougerol: return "matrix-bougerol";
    case ExperimentKind::kHuaPickrellLimit: return "hua-pickrell-limit";
    case ExperimentKind::kInvariance: return "invariance";
    case ExperimentKind::kTimeReversal: return "time-reversal";
    case ExperimentKind::kLyapunov: return "lyapunov";
    case ExperimentKind::kExplicitSolution: return "explicit-solution";
    case ExperimentKind::kDensityEval: return "density-eval";
  }
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  for (ExperimentKind k : kAll)
    if (name == experiment_name(k)) return k;
  config_error("unknown experiment '" + std::string(name) + "'");
}

std::span<const ExperimentKind> all_experiments() noexcept { return kAll; }

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  switch (kind) {
    case ExperimentKind::kScalarBougerol:
      c.h = std::ldexp(1.0, -12);
      c.replicates = 20000;
      c.seed = 7;
      break;
    case ExperimentKind::kPearson4Functional:
      c.h = std::ldexp(1.0, -8);
      c.replicates = 10000;
      c.seed = 11;
      c.save_paths = 0;
      break;
    case ExperimentKind::kDufresne:
      c.h = std::ldexp(1.0, -8);
      c.replicates = 10000;
      c.seed = 13;
      c.save_paths = 0;
      break;
    case ExperimentKind::kMatrixBougerol:
      c.n = 2;
      c.s_re = 0.5;
      c.s_im = 0.5;
      c.h = std::ldexp(1.0, -12);
      c.replicates = 5000;
      c.seed = 17;
      break;
    case ExperimentKind::kHuaPickrellLimit:
      c.h = std::ldexp(1.0, -8);
      c.t = 10.0;
      c.replicates = 10000;
      c.seed = 19;
      c.save_paths = 0;
      break;
    case ExperimentKind::kInvariance:
      c.n = 2;
      c.h = std::ldexp(1.0, -10);
      c.init_h = std::ldexp(1.0, -7);
      c.replicates = 4000;
      c.seed = 23;
      break;
    case ExperimentKind::kTimeReversal:
      c.n = 2;
      c.h = std::ldexp(1.0, -10);
      c.replicates = 5000;
      c.seed = 29;
      break;
    case ExperimentKind::kLyapunov:
      c.n = 2;
      c.t = 20.0;
      c.h = std::ldexp(1.0, -8);
      c.replicates = 50;
      c.seed = 31;
      break;
    case ExperimentKind::kExplicitSolution:
      c.n = 2;
      c.s_re = 0.2;
      c.s_im = 0.3;
      c.h = std::ldexp(1.0, -6);
      c.replicates = 64;
      c.seed = 37;
      break;
    case ExperimentKind::kDensityEval:
      c.replicates = 1;
      c.save_paths = 0;
      break;
  }
  return c;
}

void ExperimentConfig::set(std::string_view key, std::string_view value) {
  const std::string k = canonical_key(trim(key));
  const std::string_view v = trim(value);
  for (const auto& f : fields()) {
    if (k == f.key) {
      f.set(*this, v);
      return;
    }
  }
  config_error("unknown config key '" + k + "'");
}

std::vector<std::pair<std::string, std::string>> ExperimentConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(*this));
  return out;
}

std::string ExperimentConfig::to_text() const {
  std::string out;
  for (const auto& [k, v] : entries()) out += k + " = " + v + "\n";
  return out;
}

ExperimentConfig ExperimentConfig::parse(std::string_view text, std::span<const std::string> overrides) {
  std::vector<std::pair<std::string, std::string>> assignments;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    assignments.push_back(split_assignment(line, where.c_str()));
  }
  for (const auto& o : overrides) assignments.push_back(split_assignment(o, "--set"));
  return apply_all(assignments);
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& file, std::span<const std::string> overrides) {
  std::ifstream in(file, std::ios::binary);
  if (!in) config_error("cannot read config " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), overrides);
}

ExperimentConfig ExperimentConfig::from_entries(const std::map<std::string, std::string>& entries) {
  std::vector<std::pair<std::string, std::string>> assignments(entries.begin(), entries.end());
  return apply_all(assignments);
}

bool ExperimentConfig::statistical() const noexcept {
  switch (experiment) {
    case ExperimentKind::kLyapunov:
    case ExperimentKind::kExplicitSolution:
    case ExperimentKind::kDensityEval:
      return false;
    default:
      return true;
  }
}

bool ExperimentConfig::infinite_horizon() const noexcept {
  switch (experiment) {
    case ExperimentKind::kPearson4Functional:
    case ExperimentKind::kDufresne:
    case ExperimentKind::kHuaPickrellLimit:
    case ExperimentKind::kInvariance:
      return true;
    default:
      return false;
  }
}

void ExperimentConfig::validate() const {
  auto need = [](bool ok, const std::string& what) {
    if (!ok) config_error(what);
  };
  need(n >= 1 && n <= 32, "N must be in [1, 32]");
  need(std::isfinite(s_re) && std::isfinite(s_im), "s must be finite");
  need(t > 0.0, "t must be > 0");
  need(h > 0.0, "h must be > 0");
  need(alpha > 0.0 && alpha < 1.0, "alpha must be in (0, 1)");
  need(tail_eps > 0.0 && tail_block > 0.0, "tail_eps and tail_block must be > 0");
  need(tail_max_t == 0.0 || tail_max_t >= tail_block, "tail_max_t must be 0 (derived) or >= tail_block");
  need(path_points >= 2, "path_points must be >= 2");
  need(!out_dir.empty(), "out_dir must not be empty");
  need(replicates >= 1, "replicates must be >= 1");
  if (statistical()) need(replicates >= kMinKsSample, "replicates must be >= 100 for a statistical experiment");

  const bool scalar = experiment == ExperimentKind::kPearson4Functional || experiment == ExperimentKind::kDufresne;
  if (scalar) {
    need(nu > 0.0, "nu must be > 0");
    need(std::isfinite(mu), "mu must be finite");
  } else if (infinite_horizon()) {
    need(s_re > -0.5, "infinite-horizon experiments need s_re > -1/2");
  }
  if (!infinite_horizon() || experiment == ExperimentKind::kInvariance || experiment == ExperimentKind::kHuaPickrellLimit)
    need(h <= t, "h must not exceed t");
  need(t / h <= 1e8, "t / h exceeds 1e8 steps");

  switch (experiment) {
    case ExperimentKind::kInvariance:
      need(init_h > 0.0, "init_h must be > 0");
      break;
    case ExperimentKind::kLyapunov:
      need(replicates >= 2, "lyapunov needs >= 2 replicates");
      need(burn_in >= 0.0 && burn_in < 1.0, "burn_in must be in [0, 1)");
      break;
    case ExperimentKind::kExplicitSolution: {
      need(levels >= 3 && levels <= 16, "levels must be in [3, 16]");
      need(replicates >= 2, "explicit-solution needs >= 2 replicates");
      const double finest = std::round(t / h) * std::ldexp(1.0, levels - 1);
      need(finest <= 1e7, "finest level exceeds 1e7 steps");
      need(finest * static_cast<double>(replicates) >= 1000.0,
           "explicit-solution needs >= 1000 pooled increments at the finest level");
      break;
    }
    case ExperimentKind::kDensityEval:
      need(points >= 2, "points must be >= 2");
      need(x_min < x_max, "x_min must be < x_max");
      need(s_re + n > 0.5, "density needs s_re + N > 1/2 to be integrable");
      break;
    default:
      break;
  }
}

TailPolicy ExperimentConfig::tail_policy(const TailPolicy& derived) const {
  TailPolicy p;
  p.eps = tail_eps;
  p.block = tail_block;
  p.max_t = tail_max_t > 0.0 ? tail_max_t : std::max(derived.max_t, tail_block);
  return p;
}

std::string ExperimentConfig::fingerprint() const {
  std::string f = std::string(experiment_name(experiment)) + " ";
  if (experiment == ExperimentKind::kPearson4Functional || experiment == ExperimentKind::kDufresne)
    f += "nu=" + format_double(nu) + " mu=" + format_double(mu);
  else
    f += "N=" + std::to_string(n) + " s=" + format_double(s_re) + (s_im < 0 ? "" : "+") + format_double(s_im) + "i";
  f += " t=" + format_double(t) + " h=" + format_double(h);
  return f;
}

// ---------------------------------------------------------------- catalog ---

std::vector<ExperimentInfo> experiment_catalog() {
  auto statement = [](ExperimentKind k) -> std::string {
    switch (k) {
      case ExperimentKind::kScalarBougerol:
        return "sinh of a standard Brownian motion at time t has the same law as the Ito integral of exp(beta) "
               "against an independent Brownian motion over [0, t]";
      case ExperimentKind::kPearson4Functional:
        return "the infinite-horizon integral of exp(beta_u - nu u) against (d gamma_u - mu du) follows the "
               "Pearson type IV density with parameters (nu, mu)";
      case ExperimentKind::kDufresne:
        return "for Brownian motion with drift -nu, one over twice the integral of exp(2 beta) over [0, inf) is "
               "Gamma(nu) distributed";
      case ExperimentKind::kMatrixBougerol:
        return "the Hermitian diffusion started at the zero matrix has, at time t, the law of the matrix Ito "
               "integral of M^(-nu) dB^(mu) M^(-nu)^dagger over [0, t]";
      case ExperimentKind::kHuaPickrellLimit:
        return "the infinite-horizon matrix integral is distributed according to the Hua-Pickrell measure with "
               "parameter s";
      case ExperimentKind::kInvariance:
        return "the Hua-Pickrell measure is invariant for the Hermitian diffusion, and the one-dimensional "
               "generator is reversible for its measure m_s";
      case ExperimentKind::kTimeReversal:
        return "(M_T)^-1 M_(T-t) built from M^(nu) has the law of M^(-nu)_t";
      case ExperimentKind::kLyapunov:
        return "the largest log squared singular value of M^(-nu) grows at rate at most -2 nu + N - 1, with "
               "equality -2 nu when N = 1";
      case ExperimentKind::kExplicitSolution:
        return "the closed-form expression built from M^(nu) and B solves the Hermitian diffusion for the "
               "reconstructed driving noise, whose covariation is that of a complex Brownian matrix";
      case ExperimentKind::kDensityEval:
        return "tabulates the normalized one-dimensional density m_s^(N) and its CDF on a grid";
    }
    return {};
  };
  std::vector<ExperimentInfo> rows;
  for (ExperimentKind k : kAll) rows.push_back({k, experiment_name(k), statement(k), ExperimentConfig::defaults(k)});
  return rows;
}

std::string catalog_table() {
  std::ostringstream out;
  for (const auto& row : experiment_catalog()) {
    const auto& c = row.defaults;
    out << row.name << "\n  " << row.statement << "\n  defaults:";
    if (c.experiment == ExperimentKind::kPearson4Functional || c.experiment == ExperimentKind::kDufresne)
      out << " nu=" << format_double(c.nu) << " mu=" << format_double(c.mu);
    else
      out << " N=" << c.n << " s_re=" << format_double(c.s_re) << " s_im=" << format_double(c.s_im)
          << " t=" << format_double(c.t);
    out << " h=" << format_double(c.h) << " replicates=" << c.replicates << " seed=" << c.seed << "\n";
  }
  return out.str();
}

std::string catalog_json() {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : experiment_catalog()) {
    nlohmann::json cfg = nlohmann::json::object();
    for (const auto& [k, v] : row.defaults.entries()) cfg[k] = v;
    rows.push_back({{"name", row.name}, {"statement", row.statement}, {"config", cfg}});
  }
  return rows.dump(2);
}

}  // namespace hplab
