#include "panelsmc/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "panelsmc/csv.hpp"
#include "panelsmc/design.hpp"
#include "panelsmc/errors.hpp"
#include "panelsmc/filter.hpp"
#include "panelsmc/gompertz.hpp"
#include "panelsmc/mcap.hpp"
#include "panelsmc/parallel.hpp"
#include "panelsmc/pif.hpp"

namespace panelsmc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// key -> default; presets are resolved separately
const std::map<std::string, std::string>& known_keys() {
  static const std::map<std::string, std::string> keys = {
      {"run_level", "1"},
      {"seed", "1"},
      {"threads", "1"},
      {"U", "50"},
      {"N", "100"},
      {"r", "0.1"},
      {"sigma", "0.1"},
      {"K", "1"},
      {"tau", "0.1"},
      {"X.0", "1"},
      {"resampler", "multinomial"},
      {"pf_tol", "1e-300"},
      {"pf_reps", "10"},
      {"pf_np", ""},
      {"mif_nseq", ""},
      {"mif_nmif", ""},
      {"mif_np", ""},
      {"rw_sd", "0.02"},
      {"cooling_fraction_50", "0.5"},
      {"box_lower", "0.05"},
      {"box_upper", "0.2"},
      {"refine_reps", ""},
      {"eval_reps", ""},
      {"eval_np", ""},
      {"profile_param", "r"},
      {"profile_points", ""},
      {"profile_lower", "0.05"},
      {"profile_upper", "0.2"},
      {"nprof", "2"},
      {"mcap_level", "0.95"},
      {"mcap_span", "0.75"},
      {"mcap_grid_size", "1000"},
      {"data_file", ""},
      {"params_file", ""},
      {"profile_file", ""},
  };
  return keys;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

long preset3(const RunConfig& cfg, const std::string& key, long l1, long l2, long l3) {
  const std::string v = cfg.get_string(key);
  if (!v.empty()) return cfg.get_int(key);
  switch (cfg.run_level()) {
    case 1: return l1;
    case 2: return l2;
    default: return l3;
  }
}

}  // namespace

RunConfig RunConfig::from_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
    cfg.set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return cfg;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
  entries_[key] = value;
}

std::string RunConfig::get_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it != entries_.end()) return it->second;
  auto def = known_keys().find(key);
  if (def == known_keys().end()) throw ConfigError("unknown config key '" + key + "'");
  return def->second;
}

long RunConfig::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t pos = 0;
    const long out = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' is not an integer: '" + v + "'");
  }
}

double RunConfig::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    return parse_double(v);
  } catch (const FormatError&) {
    throw ConfigError("config key '" + key + "' is not a number: '" + v + "'");
  }
}

int RunConfig::run_level() const {
  const long level = get_int("run_level");
  if (level < 1 || level > 3) throw ConfigError("run_level must be 1, 2 or 3");
  return static_cast<int>(level);
}

std::uint64_t RunConfig::seed() const { return static_cast<std::uint64_t>(get_int("seed")); }

unsigned RunConfig::threads() const {
  const long t = get_int("threads");
  if (t < 1) throw ConfigError("threads must be at least 1");
  return static_cast<unsigned>(t);
}

long RunConfig::pf_np() const { return preset3(*this, "pf_np", 10, 200, 1000); }
long RunConfig::mif_nseq() const { return preset3(*this, "mif_nseq", 2, 4, 6); }
long RunConfig::mif_nmif() const { return preset3(*this, "mif_nmif", 2, 20, 150); }
long RunConfig::mif_np() const { return preset3(*this, "mif_np", 10, 500, 1500); }
long RunConfig::eval_reps() const { return preset3(*this, "eval_reps", 2, 5, 10); }
long RunConfig::eval_np() const { return preset3(*this, "eval_np", 10, 500, 2500); }
long RunConfig::refine_reps() const { return preset3(*this, "refine_reps", 2, 4, 6); }
long RunConfig::profile_points() const { return preset3(*this, "profile_points", 10, 10, 20); }

std::map<std::string, std::string> RunConfig::echo() const {
  std::map<std::string, std::string> out;
  for (const auto& [key, def] : known_keys()) out[key] = get_string(key);
  out["pf_np"] = std::to_string(pf_np());
  out["mif_nseq"] = std::to_string(mif_nseq());
  out["mif_nmif"] = std::to_string(mif_nmif());
  out["mif_np"] = std::to_string(mif_np());
  out["eval_reps"] = std::to_string(eval_reps());
  out["eval_np"] = std::to_string(eval_np());
  out["refine_reps"] = std::to_string(refine_reps());
  out["profile_points"] = std::to_string(profile_points());
  return out;
}

std::string file_checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "' for checksumming");
  std::uint64_t hash = 0xcbf29ce484222325ull;
  char buf[1 << 14];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ull;
    }
    if (!in) break;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(hash));
  return hex;
}

namespace {

Resampler resampler_from(const RunConfig& cfg) {
  const std::string name = cfg.get_string("resampler");
  if (name == "multinomial") return Resampler::multinomial;
  if (name == "systematic") return Resampler::systematic;
  throw ConfigError("resampler must be 'multinomial' or 'systematic'");
}

struct ManifestWriter {
  ManifestWriter(std::string command, const RunConfig& cfg, fs::path out_dir)
      : manifest{std::move(command), cfg.echo(), 0.0, {}, {}},
        dir(std::move(out_dir)),
        start(std::chrono::steady_clock::now()) {
    fs::create_directories(dir);
  }

  fs::path path_of(const std::string& name) const { return dir / name; }

  void record(const std::string& name) {
    manifest.artifacts.emplace_back(name, file_checksum(dir / name));
  }

  RunManifest finish() {
    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    json j;
    j["command"] = manifest.command;
    j["config"] = manifest.config;
    j["duration_seconds"] = manifest.duration_seconds;
    j["artifacts"] = json::array();
    for (const auto& [name, checksum] : manifest.artifacts)
      j["artifacts"].push_back({{"file", name}, {"checksum", checksum}});
    j["warnings"] = manifest.warnings;
    std::ofstream out(dir / ("manifest_" + manifest.command + ".json"));
    out << j.dump(2) << '\n';
    return manifest;
  }

  RunManifest manifest;
  fs::path dir;
  std::chrono::steady_clock::time_point start;
};

NamedValues base_params_from(const RunConfig& cfg) {
  return {{"r", cfg.get_double("r")},
          {"sigma", cfg.get_double("sigma")},
          {"K", cfg.get_double("K")},
          {"tau", cfg.get_double("tau")},
          {"X.0", cfg.get_double("X.0")}};
}

void write_params_csv(const ParamVector& params, const fs::path& path) {
  CsvTable table({"parameter", "value"});
  for (std::size_t i = 0; i < params.size(); ++i)
    table.add_row({params.name_at(i), format_double(params.value_at(i))});
  table.write(path);
}

ParamVector read_params_csv(const fs::path& path) {
  const CsvTable table = CsvTable::read(path);
  table.column_index("parameter");
  table.column_index("value");
  ParamVector out;
  for (std::size_t r = 0; r < table.n_rows(); ++r)
    out.push_back(table.cell(r, "parameter"), table.number(r, "value"));
  return out;
}

fs::path resolve_input(const RunConfig& cfg, const std::string& key, const fs::path& out_dir,
                       const std::string& fallback) {
  const std::string configured = cfg.get_string(key);
  return configured.empty() ? out_dir / fallback : fs::path(configured);
}

}  // namespace

PanelModel model_from_config(const RunConfig& config) {
  const long n_units = config.get_int("U");
  const long n_obs = config.get_int("N");
  if (n_units < 1 || n_obs < 1) throw ConfigError("U and N must be at least 1");
  return build_panel_gompertz(static_cast<std::size_t>(n_units), static_cast<std::size_t>(n_obs),
                              base_params_from(config), config.seed());
}

PanelModel load_model(const RunConfig& config, const fs::path& out_dir) {
  const fs::path data_path = resolve_input(config, "data_file", out_dir, "data.csv");
  const fs::path params_path = resolve_input(config, "params_file", out_dir, "params.csv");
  if (!fs::exists(data_path))
    throw FormatError("data file '" + data_path.string() + "' does not exist; run simulate first");
  if (!fs::exists(params_path))
    throw FormatError("params file '" + params_path.string() + "' does not exist");

  const CsvTable data = CsvTable::read(data_path);
  data.column_index("unit");
  data.column_index("time");
  data.column_index("Y");

  std::vector<std::string> unit_names;
  std::vector<std::vector<double>> times;
  std::vector<std::vector<double>> ys;
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    const std::string& unit = data.cell(r, "unit");
    auto it = std::find(unit_names.begin(), unit_names.end(), unit);
    std::size_t u;
    if (it == unit_names.end()) {
      unit_names.push_back(unit);
      times.emplace_back();
      ys.emplace_back();
      u = unit_names.size() - 1;
    } else {
      u = static_cast<std::size_t>(it - unit_names.begin());
    }
    times[u].push_back(data.number(r, "time"));
    ys[u].push_back(data.number(r, "Y"));
  }

  PanelModel model = build_panel_gompertz_grid(times, unit_names, read_params_csv(params_path));
  PanelData panel_data;
  panel_data.units.resize(unit_names.size());
  for (std::size_t u = 0; u < unit_names.size(); ++u) {
    Matrix obs(ys[u].size(), 1);
    for (std::size_t n = 0; n < ys[u].size(); ++n) obs(n, 0) = ys[u][n];
    panel_data.units[u].obs = std::move(obs);
  }
  return model.with_data(panel_data);
}

RunManifest cmd_simulate(const RunConfig& config, const fs::path& out_dir) {
  ManifestWriter writer("simulate", config, out_dir);
  const PanelModel model = model_from_config(config);

  CsvTable data({"unit", "time", "Y"});
  for (std::size_t u = 0; u < model.n_units(); ++u) {
    const UnitModel& um = model.unit(u);
    for (std::size_t n = 0; n < um.n_obs(); ++n)
      data.add_row({model.spec().unit_names[u], format_double(um.times[n]),
                    format_double(um.data(n, 0))});
  }
  data.write(writer.path_of("data.csv"));
  writer.record("data.csv");

  write_params_csv(model.coef(), writer.path_of("params.csv"));
  writer.record("params.csv");
  return writer.finish();
}

RunManifest cmd_kalman(const RunConfig& config, const fs::path& out_dir) {
  ManifestWriter writer("kalman", config, out_dir);
  const PanelModel model = load_model(config, out_dir);
  const KalmanLoglik ll = gompertz_kalman_loglik(model);

  CsvTable table({"unit", "loglik"});
  for (std::size_t u = 0; u < model.n_units(); ++u)
    table.add_row({model.spec().unit_names[u], format_double(ll.per_unit[u])});
  table.add_row({"total", format_double(ll.total)});
  table.write(writer.path_of("kalman.csv"));
  writer.record("kalman.csv");
  return writer.finish();
}

RunManifest cmd_pfilter(const RunConfig& config, const fs::path& out_dir) {
  ManifestWriter writer("pfilter", config, out_dir);
  const PanelModel model = load_model(config, out_dir);
  const long reps = config.get_int("pf_reps");
  if (reps < 1) throw ConfigError("pf_reps must be at least 1");
  const auto n_particles = static_cast<std::size_t>(config.pf_np());
  const Resampler resampler = resampler_from(config);
  const double tol = config.get_double("pf_tol");

  std::vector<PanelFilterResult> results(reps);
  parallel_for(static_cast<std::size_t>(reps), config.threads(), [&](std::size_t i) {
    results[i] = panel_particle_filter(model, model.coef(), n_particles, config.seed(), resampler,
                                       tol, 1, i);
  });

  CsvTable logliks({"replicate", "unit", "loglik"});
  Matrix unit_matrix(results.size(), model.n_units());
  std::vector<double> totals(results.size());
  for (std::size_t i = 0; i < results.size(); ++i) {
    totals[i] = results[i].loglik;
    for (std::size_t u = 0; u < model.n_units(); ++u) {
      unit_matrix(i, u) = results[i].unit_results[u].loglik;
      logliks.add_row({std::to_string(i + 1), model.spec().unit_names[u],
                       format_double(unit_matrix(i, u))});
    }
    for (const auto& w : results[i].warnings())
      writer.manifest.warnings.push_back("replicate " + std::to_string(i + 1) +
                                         ": weights below tolerance in unit " +
                                         std::to_string(w.unit + 1) + " at step " +
                                         std::to_string(w.time_index + 1));
  }
  logliks.write(writer.path_of("pfilter_logliks.csv"));
  writer.record("pfilter_logliks.csv");

  const MeanEstimate lambda1 = log_mean_exp(totals, true);
  const MeanEstimate lambda2 = panel_log_mean_exp(unit_matrix, true);
  const double kalman = gompertz_kalman_loglik(model).total;

  CsvTable summary({"lambda1", "lambda1_se", "lambda2", "lambda2_se", "kalman_loglik"});
  summary.add_row({format_double(lambda1.estimate),
                   lambda1.se ? format_double(*lambda1.se) : std::string{},
                   format_double(lambda2.estimate),
                   lambda2.se ? format_double(*lambda2.se) : std::string{},
                   format_double(kalman)});
  summary.write(writer.path_of("pfilter_summary.csv"));
  writer.record("pfilter_summary.csv");
  return writer.finish();
}

namespace {

// perturbations for the searched parameters {r, sigma, tau}; the profile's
// focal parameter is left without a sd, which pins it
RwSd search_rw_sd(const RunConfig& cfg, const std::string& skip_focal) {
  const double sd = cfg.get_double("rw_sd");
  RwSd rw;
  if (skip_focal != "r") rw.set_shared("r", sd);
  if (skip_focal != "sigma") rw.set_shared("sigma", sd);
  if (skip_focal != "tau") rw.set_specific("tau", sd);
  return rw;
}

// replicated unperturbed filtering at a fitted point
MeanEstimate evaluate_loglik(const PanelModel& model, const ParamVector& params,
                             std::size_t n_particles, std::size_t reps, std::uint64_t seed,
                             Resampler resampler, double tol) {
  Matrix unit_matrix(reps, model.n_units());
  for (std::size_t i = 0; i < reps; ++i) {
    const PanelFilterResult r =
        panel_particle_filter(model, params, n_particles, seed, resampler, tol, 1, i);
    for (std::size_t u = 0; u < model.n_units(); ++u)
      unit_matrix(i, u) = r.unit_results[u].loglik;
  }
  return panel_log_mean_exp(unit_matrix, reps >= 2);
}

}  // namespace

RunManifest cmd_mif(const RunConfig& config, const fs::path& out_dir) {
  ManifestWriter writer("mif", config, out_dir);
  const PanelModel model = load_model(config, out_dir);
  const ParamSpec& spec = model.spec();

  const double lo = config.get_double("box_lower"), hi = config.get_double("box_upper");
  const NamedValues lower = {{"r", lo}, {"sigma", lo}, {"tau", lo},
                             {"K", config.get_double("K")}, {"X.0", config.get_double("X.0")}};
  const NamedValues upper = {{"r", hi}, {"sigma", hi}, {"tau", hi},
                             {"K", config.get_double("K")}, {"X.0", config.get_double("X.0")}};
  const DesignTable starts =
      runif_panel_design(lower, upper, spec.specific_names, spec.unit_names,
                         static_cast<std::size_t>(config.mif_nseq()),
                         derive_seed(config.seed(), {rng_tag::design, 1}));

  const auto n_iter = static_cast<std::size_t>(config.mif_nmif());
  const auto n_particles = static_cast<std::size_t>(config.mif_np());
  const auto refine_reps = static_cast<std::size_t>(config.refine_reps());
  const CoolingSchedule cooling{config.get_double("cooling_fraction_50")};
  const RwSd rw = search_rw_sd(config, "");
  const Resampler resampler = resampler_from(config);
  const double tol = config.get_double("pf_tol");
  const std::vector<std::string> block_names = {"tau"};

  struct StartResult {
    PifResult fit;
    MeanEstimate loglik;
  };
  std::vector<StartResult> fits(starts.rows.size());
  parallel_for(starts.rows.size(), config.threads(), [&](std::size_t s) {
    const ParamVector start = conform_to_spec(starts.rows[s], spec);
    PifResult fit = run_pif(model, start, n_iter, n_particles, rw, cooling,
                            derive_seed(config.seed(), {rng_tag::pif, s}));
    fit = refine_unit_blocks(model, fit, block_names, refine_reps,
                             derive_seed(config.seed(), {rng_tag::refine, s}));
    const MeanEstimate ll = evaluate_loglik(
        model, fit.point_estimate, static_cast<std::size_t>(config.eval_np()),
        static_cast<std::size_t>(config.eval_reps()),
        derive_seed(config.seed(), {rng_tag::pfilter, s}), resampler, tol);
    fits[s] = {std::move(fit), ll};
  });

  CsvTable traces({"start", "iteration", "parameter", "value"});
  for (std::size_t s = 0; s < fits.size(); ++s)
    for (const TraceRow& row : pif_traces(fits[s].fit))
      traces.add_row({std::to_string(s + 1), std::to_string(row.iteration), row.parameter,
                      format_double(row.value)});
  traces.write(writer.path_of("mif_traces.csv"));
  writer.record("mif_traces.csv");

  std::vector<std::size_t> order(fits.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return fits[a].loglik.estimate > fits[b].loglik.estimate;
  });

  std::vector<std::string> columns = {"start"};
  for (const auto& name : spec.full_names()) columns.push_back(name);
  columns.push_back("loglik");
  columns.push_back("loglik.se");
  CsvTable results(columns);
  for (std::size_t s : order) {
    std::vector<std::string> row = {std::to_string(s + 1)};
    for (const auto& name : spec.full_names())
      row.push_back(format_double(fits[s].fit.point_estimate.get(name)));
    row.push_back(format_double(fits[s].loglik.estimate));
    row.push_back(fits[s].loglik.se ? format_double(*fits[s].loglik.se) : std::string{});
    results.add_row(std::move(row));
  }
  results.write(writer.path_of("mif_results.csv"));
  writer.record("mif_results.csv");

  write_params_csv(fits[order.front()].fit.point_estimate, writer.path_of("mif_best_params.csv"));
  writer.record("mif_best_params.csv");
  return writer.finish();
}

RunManifest cmd_profile(const RunConfig& config, const fs::path& out_dir) {
  ManifestWriter writer("profile", config, out_dir);
  const PanelModel model = load_model(config, out_dir);
  const ParamSpec& spec = model.spec();
  const std::string focal = config.get_string("profile_param");

  const auto n_points = static_cast<std::size_t>(config.profile_points());
  if (n_points < 2) throw ConfigError("profile_points must be at least 2");
  const double g_lo = config.get_double("profile_lower");
  const double g_hi = config.get_double("profile_upper");
  std::vector<double> grid(n_points);
  for (std::size_t i = 0; i < n_points; ++i)
    grid[i] = g_lo + (g_hi - g_lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);

  // box for the other searched parameters: halve / double the current
  // coefficients; fixed parameters get degenerate bounds
  const NamedValues current = [&] {
    NamedValues base;
    for (const std::string name : {"r", "sigma", "K", "tau", "X.0"})
      if (model.coef().contains(name))
        base.push_back(name, model.coef().get(name));
      else
        base.push_back(name, model.coef().get(make_param_key(name, spec.unit_names.front())));
    return base;
  }();
  NamedValues lower, upper;
  for (const std::string name : {"r", "sigma", "tau"}) {
    if (name == focal) continue;
    lower.push_back(name, current.get(name) / 2.0);
    upper.push_back(name, current.get(name) * 2.0);
  }
  for (const std::string name : {"K", "X.0"}) {
    if (name == focal) continue;
    lower.push_back(name, current.get(name));
    upper.push_back(name, current.get(name));
  }

  const DesignTable design =
      profile_design(focal, grid, lower, upper, spec.specific_names, spec.unit_names,
                     static_cast<std::size_t>(config.get_int("nprof")),
                     derive_seed(config.seed(), {rng_tag::design, 2}));

  const auto n_iter = static_cast<std::size_t>(config.mif_nmif());
  const auto n_particles = static_cast<std::size_t>(config.mif_np());
  const auto refine_reps = static_cast<std::size_t>(config.refine_reps());
  const CoolingSchedule cooling{config.get_double("cooling_fraction_50")};
  const RwSd rw = search_rw_sd(config, focal);  // focal parameter stays fixed
  const Resampler resampler = resampler_from(config);
  const double tol = config.get_double("pf_tol");
  std::vector<std::string> block_names;
  if (focal != "tau") block_names.push_back("tau");

  std::vector<ProfilePoint> points(design.rows.size());
  parallel_for(design.rows.size(), config.threads(), [&](std::size_t s) {
    const ParamVector start = conform_to_spec(design.rows[s], spec);
    PifResult fit = run_pif(model, start, n_iter, n_particles, rw, cooling,
                            derive_seed(config.seed(), {rng_tag::pif, 1000 + s}));
    if (!block_names.empty())
      fit = refine_unit_blocks(model, fit, block_names, refine_reps,
                               derive_seed(config.seed(), {rng_tag::refine, 1000 + s}));
    const MeanEstimate ll = evaluate_loglik(
        model, fit.point_estimate, static_cast<std::size_t>(config.eval_np()),
        static_cast<std::size_t>(config.eval_reps()),
        derive_seed(config.seed(), {rng_tag::pfilter, 1000 + s}), resampler, tol);
    points[s] = {fit.point_estimate, ll.estimate, ll.se.value_or(0.0)};
  });

  std::vector<std::string> columns;
  for (const auto& name : spec.full_names()) columns.push_back(name);
  columns.push_back("loglik");
  columns.push_back("loglik.se");
  CsvTable table(columns);
  for (const auto& p : points) {
    std::vector<std::string> row;
    for (const auto& name : spec.full_names()) row.push_back(format_double(p.params.get(name)));
    row.push_back(format_double(p.loglik));
    row.push_back(format_double(p.loglik_se));
    table.add_row(std::move(row));
  }
  table.write(writer.path_of("profile_table.csv"));
  writer.record("profile_table.csv");
  return writer.finish();
}

RunManifest cmd_mcap(const RunConfig& config, const fs::path& out_dir) {
  ManifestWriter writer("mcap", config, out_dir);
  const fs::path table_path = resolve_input(config, "profile_file", out_dir, "profile_table.csv");
  if (!fs::exists(table_path))
    throw FormatError("profile table '" + table_path.string() + "' does not exist");
  const CsvTable table = CsvTable::read(table_path);
  const std::string focal = config.get_string("profile_param");
  table.column_index("loglik");
  if (table.n_rows() < 5) throw DomainError("need at least 5 profile points");

  // the focal column may be shared ("r") or unit-specific ("tau[unit1]")
  std::string focal_column = focal;
  if (!table.has_column(focal_column)) {
    for (const auto& col : table.columns())
      if (split_param_key(col).first == focal) {
        focal_column = col;
        break;
      }
  }
  std::vector<double> xs(table.n_rows()), ys(table.n_rows());
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    xs[r] = table.number(r, focal_column);
    ys[r] = table.number(r, "loglik");
  }

  McapOptions options;
  options.level = config.get_double("mcap_level");
  options.span = config.get_double("mcap_span");
  options.grid_size = static_cast<std::size_t>(config.get_int("mcap_grid_size"));
  const McapResult res = mcap(xs, ys, options);

  CsvTable summary({"mle", "se_stat", "se_mc", "delta", "ci_lo", "ci_hi"});
  summary.add_row({format_double(res.mle), format_double(res.se_stat), format_double(res.se_mc),
                   format_double(res.delta), format_double(res.ci_lo),
                   format_double(res.ci_hi)});
  summary.write(writer.path_of("mcap_summary.csv"));
  writer.record("mcap_summary.csv");

  CsvTable curve({"x", "smoothed"});
  for (std::size_t g = 0; g < res.grid.size(); ++g)
    curve.add_row({format_double(res.grid[g]), format_double(res.smoothed[g])});
  curve.write(writer.path_of("mcap_curve.csv"));
  writer.record("mcap_curve.csv");
  return writer.finish();
}

}  // namespace panelsmc::cli
