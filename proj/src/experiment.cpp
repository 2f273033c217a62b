#include "clemit/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "clemit/csv.hpp"
#include "parallel.hpp"

namespace clemit {

using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& path, const std::string& message) {
  throw Error(ErrorCode::ConfigParse, (path.empty() ? std::string("<root>") : path) + ": " + message);
}

std::string join_path(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string index_path(const std::string& parent, std::size_t k) {
  return parent + "[" + std::to_string(k) + "]";
}

void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) config_error(path, "expected an object");
}

void reject_unknown(const json& j, const std::string& path, std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error(join_path(path, key), "unknown key");
    }
  }
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) config_error(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) config_error(path, "expected a finite number");
  return v;
}

std::size_t as_count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) config_error(path, "expected a non-negative integer");
  return static_cast<std::size_t>(j.get<long long>());
}

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) config_error(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> as_number_list(const json& j, const std::string& path) {
  if (!j.is_array()) config_error(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(as_number(j[k], index_path(path, k)));
  return out;
}

/// A scalar expands to n equal entries.
std::vector<double> as_level_list(const json& j, const std::string& path, int n) {
  if (j.is_number()) return std::vector<double>(static_cast<std::size_t>(n), as_number(j, path));
  return as_number_list(j, path);
}

void check_label(const std::string& label, const std::string& path) {
  const bool ok = !label.empty() && std::all_of(label.begin(), label.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' ||
           c == '.';
  });
  if (!ok) config_error(path, "label '" + label + "' must be non-empty and use only [A-Za-z0-9._-]");
}

ModelParams parse_model(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"n_excited", "omega", "gamma_rad", "excitation", "gamma_nr", "nr_channels"});
  ModelParams params;
  if (j.contains("n_excited")) {
    const std::size_t n = as_count(j["n_excited"], join_path(path, "n_excited"));
    if (n < 1 || n > 16) config_error(join_path(path, "n_excited"), "must be between 1 and 16");
    params.n_excited = static_cast<int>(n);
  }
  const int n = params.n_excited;
  if (!j.contains("omega")) config_error(join_path(path, "omega"), "required");
  params.omega = as_number_list(j["omega"], join_path(path, "omega"));
  params.gamma_rad = j.contains("gamma_rad") ? as_level_list(j["gamma_rad"], join_path(path, "gamma_rad"), n)
                                             : std::vector<double>(static_cast<std::size_t>(n), 1.0);
  if (!j.contains("excitation")) config_error(join_path(path, "excitation"), "required");
  params.excitation = as_level_list(j["excitation"], join_path(path, "excitation"), n);
  if (j.contains("gamma_nr")) params.gamma_nr = as_number(j["gamma_nr"], join_path(path, "gamma_nr"));
  if (j.contains("nr_channels")) {
    const std::string cpath = join_path(path, "nr_channels");
    const json& list = j["nr_channels"];
    if (!list.is_array()) config_error(cpath, "expected an array of [upper, lower] pairs");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const json& pair = list[k];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_integer() || !pair[1].is_number_integer()) {
        config_error(index_path(cpath, k), "expected [upper, lower] integers");
      }
      params.nr_channels.emplace_back(pair[0].get<int>(), pair[1].get<int>());
    }
  } else {
    params.nr_channels = default_nr_channels(n);
  }
  return params;
}

json model_to_json(const ModelParams& params) {
  json channels = json::array();
  for (const auto& [u, l] : params.nr_channels) channels.push_back({u, l});
  return json{{"n_excited", params.n_excited},
              {"omega", params.omega},
              {"gamma_rad", params.gamma_rad},
              {"excitation", params.excitation},
              {"gamma_nr", params.gamma_nr},
              {"nr_channels", channels}};
}

InitialStateChoice parse_state(const json& j, const std::string& path, int n_excited) {
  InitialStateChoice choice;
  if (j.is_string()) {
    choice.preset = j.get<std::string>();
    choice.label = choice.preset;
  } else {
    require_object(j, path);
    reject_unknown(j, path, {"label", "preset", "amplitudes", "phases"});
    if (j.contains("preset") == j.contains("amplitudes")) {
      config_error(path, "give exactly one of 'preset' or 'amplitudes'");
    }
    if (j.contains("preset")) {
      choice.preset = as_string(j["preset"], join_path(path, "preset"));
      if (j.contains("phases")) config_error(join_path(path, "phases"), "not allowed together with 'preset'");
    } else {
      choice.spec.amplitudes = as_number_list(j["amplitudes"], join_path(path, "amplitudes"));
      if (j.contains("phases")) choice.spec.phases = as_number_list(j["phases"], join_path(path, "phases"));
    }
    if (j.contains("label")) {
      choice.label = as_string(j["label"], join_path(path, "label"));
    } else if (!choice.preset.empty()) {
      choice.label = choice.preset;
    } else {
      config_error(join_path(path, "label"), "required for an explicit amplitude list");
    }
  }
  check_label(choice.label, path);
  if (!choice.preset.empty()) {
    try {
      choice.spec = preset_state_spec(n_excited, choice.preset);
    } catch (const Error& e) {
      config_error(join_path(path, "preset"), e.detail());
    }
  }
  return choice;
}

json state_to_json(const InitialStateChoice& s) {
  if (!s.preset.empty()) return json{{"label", s.label}, {"preset", s.preset}};
  return json{{"label", s.label}, {"amplitudes", s.spec.amplitudes}, {"phases", s.spec.phases}};
}

RunMode parse_mode(const std::string& text, const std::string& path) {
  if (text == "dynamics") return RunMode::Dynamics;
  if (text == "spectrum") return RunMode::Spectrum;
  if (text == "derived") return RunMode::Derived;
  if (text == "all") return RunMode::All;
  config_error(path, "unknown mode '" + text + "' (dynamics, spectrum, derived, all)");
}

std::string_view mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::Dynamics: return "dynamics";
    case RunMode::Spectrum: return "spectrum";
    case RunMode::Derived: return "derived";
    case RunMode::All: return "all";
  }
  return "all";
}

bool needs_spectra(RunMode mode) { return mode != RunMode::Dynamics; }
bool writes_dynamics(RunMode mode) { return mode == RunMode::Dynamics || mode == RunMode::All; }
bool writes_spectra(RunMode mode) { return mode == RunMode::Spectrum || mode == RunMode::All; }
bool writes_derived(RunMode mode) { return mode == RunMode::Derived || mode == RunMode::All; }

std::vector<double> parse_times(const json& j, const std::string& path) {
  if (j.is_array()) return as_number_list(j, path);
  require_object(j, path);
  reject_unknown(j, path, {"min", "max", "count"});
  for (const char* key : {"min", "max", "count"}) {
    if (!j.contains(key)) config_error(join_path(path, key), "required");
  }
  const double lo = as_number(j["min"], join_path(path, "min"));
  const double hi = as_number(j["max"], join_path(path, "max"));
  const std::size_t count = as_count(j["count"], join_path(path, "count"));
  if (count < 1) config_error(join_path(path, "count"), "must be at least 1");
  if (count == 1) return {lo};
  return linspace(lo, hi, count);
}

DynamicsSettings parse_dynamics(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"t_max", "points", "snapshot_times"});
  DynamicsSettings d;
  if (j.contains("t_max")) d.t_max = as_number(j["t_max"], join_path(path, "t_max"));
  if (j.contains("points")) d.points = as_count(j["points"], join_path(path, "points"));
  if (j.contains("snapshot_times")) d.snapshot_times = as_number_list(j["snapshot_times"], join_path(path, "snapshot_times"));
  if (!(d.t_max > 0.0)) config_error(join_path(path, "t_max"), "must be positive");
  if (d.points < 2) config_error(join_path(path, "points"), "must be at least 2");
  for (std::size_t k = 0; k < d.snapshot_times.size(); ++k) {
    if (d.snapshot_times[k] < 0.0) config_error(index_path(join_path(path, "snapshot_times"), k), "must be >= 0");
  }
  return d;
}

SpectrumSettings parse_spectrum(const json& j, const std::string& path) {
  require_object(j, path);
  reject_unknown(j, path, {"filter_bandwidth", "step", "times", "omega", "route", "correlation_dump_stride"});
  SpectrumSettings s;
  if (j.contains("filter_bandwidth")) s.filter_bandwidth = as_number(j["filter_bandwidth"], join_path(path, "filter_bandwidth"));
  if (j.contains("step")) s.step = as_number(j["step"], join_path(path, "step"));
  if (j.contains("times")) s.times = parse_times(j["times"], join_path(path, "times"));
  if (j.contains("omega")) {
    const std::string opath = join_path(path, "omega");
    const json& o = j["omega"];
    require_object(o, opath);
    reject_unknown(o, opath, {"min", "max", "count"});
    if (o.contains("min")) s.omega.min = as_number(o["min"], join_path(opath, "min"));
    if (o.contains("max")) s.omega.max = as_number(o["max"], join_path(opath, "max"));
    if (o.contains("count")) s.omega.count = as_count(o["count"], join_path(opath, "count"));
    if (s.omega.count < 1) config_error(join_path(opath, "count"), "must be at least 1");
  }
  if (j.contains("route")) s.route = as_string(j["route"], join_path(path, "route"));
  if (s.route != "quadrature" && s.route != "eigen") {
    config_error(join_path(path, "route"), "unknown route '" + s.route + "' (quadrature, eigen)");
  }
  if (j.contains("correlation_dump_stride")) {
    s.correlation_dump_stride = as_count(j["correlation_dump_stride"], join_path(path, "correlation_dump_stride"));
  }
  return s;
}

std::vector<double> omega_axis(const OmegaRange& r) {
  if (r.count == 1) return {r.min};
  return linspace(r.min, r.max, r.count);
}

SpectrumConfig spectrum_config(const SpectrumSettings& s, unsigned threads) {
  SpectrumConfig cfg;
  cfg.filter_bandwidth = s.filter_bandwidth;
  cfg.step = s.step;
  cfg.times = s.times;
  cfg.omega = omega_axis(s.omega);
  cfg.threads = threads;
  return cfg;
}

std::string format_short(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string set_text(const std::vector<double>& values) {
  std::string out = "{";
  for (std::size_t k = 0; k < values.size(); ++k) out += (k ? "," : "") + format_short(values[k]);
  return out + "}";
}

struct Job {
  std::size_t variant = 0;
  std::size_t state = 0;
  std::size_t p_index = 0;
  std::string stem;
};

std::vector<Job> enumerate_jobs(const ExperimentConfig& cfg) {
  std::vector<Job> jobs;
  for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
    for (std::size_t s = 0; s < cfg.initial_states.size(); ++s) {
      for (std::size_t p = 0; p < cfg.p_values.size(); ++p) {
        std::string stem;
        if (!cfg.variants[v].label.empty()) stem += cfg.variants[v].label + "_";
        stem += cfg.initial_states[s].label + "_p" + format_short(cfg.p_values[p]);
        jobs.push_back({v, s, p, stem});
      }
    }
  }
  return jobs;
}

std::string job_context(const ExperimentConfig& cfg, const Job& job) {
  std::string out;
  if (!cfg.variants[job.variant].label.empty()) {
    out += "variants[" + std::to_string(job.variant) + "] (" + cfg.variants[job.variant].label + ") ";
  }
  out += "model with p_values[" + std::to_string(job.p_index) + "] = " + format_short(cfg.p_values[job.p_index]) +
         ", initial_states[" + std::to_string(job.state) + "] (" + cfg.initial_states[job.state].label + ")";
  return out;
}

EmitterModel job_model(const ExperimentConfig& cfg, const Job& job) {
  ModelParams params = cfg.variants[job.variant].params;
  params.p_interf = cfg.p_values[job.p_index];
  return build_model(std::move(params));
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

void write_spectrum_csv(const SpectrumGrid& grid, const std::filesystem::path& path, const char* value_column) {
  CsvWriter csv(path, {"t", "omega_detuning", value_column});
  for (std::size_t t = 0; t < grid.times.size(); ++t) {
    for (std::size_t w = 0; w < grid.omega.size(); ++w) {
      csv.cell(grid.times[t]).cell(grid.omega[w]).cell(grid.at(t, w));
      csv.end_row();
    }
  }
  csv.close();
}

struct JobResult {
  std::optional<SpectrumGrid> spectrum;
  std::vector<std::string> artifacts;
};

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  json root;
  try {
    root = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    std::size_t line = 1;
    std::size_t column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t k = 0; k < end; ++k) {
      if (text[k] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::string detail = e.what();
    if (const auto col = detail.find("column "); col != std::string::npos) {
      if (const auto pos = detail.find(": ", col); pos != std::string::npos) detail = detail.substr(pos + 2);
    }
    throw Error(ErrorCode::ConfigParse,
                "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + detail);
  }

  require_object(root, "");
  reject_unknown(root, "", {"name", "mode", "model", "variants", "p_values", "initial_states", "dynamics", "spectrum",
                            "provenance"});
  ExperimentConfig cfg;
  if (!root.contains("name")) config_error("name", "required");
  cfg.name = as_string(root["name"], "name");
  check_label(cfg.name, "name");
  if (root.contains("mode")) cfg.mode = parse_mode(as_string(root["mode"], "mode"), "mode");
  if (!root.contains("model")) config_error("model", "required");
  require_object(root["model"], "model");
  const ModelParams base = parse_model(root["model"], "model");

  if (root.contains("variants")) {
    const json& list = root["variants"];
    if (!list.is_array() || list.empty()) config_error("variants", "expected a non-empty array");
    std::set<std::string> seen;
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string path = index_path("variants", k);
      require_object(list[k], path);
      reject_unknown(list[k], path, {"label", "model"});
      if (!list[k].contains("label")) config_error(join_path(path, "label"), "required");
      ModelVariant variant;
      variant.label = as_string(list[k]["label"], join_path(path, "label"));
      check_label(variant.label, join_path(path, "label"));
      if (!seen.insert(variant.label).second) config_error(join_path(path, "label"), "duplicate label");
      json merged = root["model"];
      if (list[k].contains("model")) {
        require_object(list[k]["model"], join_path(path, "model"));
        merged.merge_patch(list[k]["model"]);
      }
      variant.params = parse_model(merged, join_path(path, "model"));
      cfg.variants.push_back(std::move(variant));
    }
  } else {
    cfg.variants.push_back({"", base});
  }
  const int n = cfg.variants.front().params.n_excited;
  for (std::size_t k = 0; k < cfg.variants.size(); ++k) {
    if (cfg.variants[k].params.n_excited != n) {
      config_error(join_path(index_path("variants", k), "model.n_excited"), "all variants must share n_excited");
    }
  }

  cfg.p_values = root.contains("p_values") ? as_number_list(root["p_values"], "p_values") : std::vector<double>{0.0};
  if (cfg.p_values.empty()) config_error("p_values", "must not be empty");
  {
    std::set<std::string> seen;
    for (std::size_t k = 0; k < cfg.p_values.size(); ++k) {
      if (!seen.insert(format_short(cfg.p_values[k])).second) config_error(index_path("p_values", k), "duplicate value");
    }
  }

  if (root.contains("initial_states")) {
    const json& list = root["initial_states"];
    if (!list.is_array() || list.empty()) config_error("initial_states", "expected a non-empty array");
    std::set<std::string> seen;
    for (std::size_t k = 0; k < list.size(); ++k) {
      cfg.initial_states.push_back(parse_state(list[k], index_path("initial_states", k), n));
      if (!seen.insert(cfg.initial_states.back().label).second) {
        config_error(index_path("initial_states", k), "duplicate label");
      }
    }
  } else {
    cfg.initial_states.push_back(parse_state(json("ground"), "initial_states[0]", n));
  }

  if (root.contains("dynamics")) cfg.dynamics = parse_dynamics(root["dynamics"], "dynamics");
  if (root.contains("spectrum")) cfg.spectrum = parse_spectrum(root["spectrum"], "spectrum");
  if (cfg.spectrum.times.empty()) cfg.spectrum.times = {cfg.dynamics.t_max};
  if (root.contains("provenance")) require_object(root["provenance"], "provenance");
  return cfg;
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
  json root;
  root["name"] = cfg.name;
  root["mode"] = std::string(mode_name(cfg.mode));
  if (cfg.variants.size() == 1 && cfg.variants.front().label.empty()) {
    root["model"] = model_to_json(cfg.variants.front().params);
  } else {
    root["model"] = model_to_json(cfg.variants.front().params);
    json variants = json::array();
    for (const auto& v : cfg.variants) variants.push_back({{"label", v.label}, {"model", model_to_json(v.params)}});
    root["variants"] = variants;
  }
  root["p_values"] = cfg.p_values;
  json states = json::array();
  for (const auto& s : cfg.initial_states) states.push_back(state_to_json(s));
  root["initial_states"] = states;
  root["dynamics"] = {{"t_max", cfg.dynamics.t_max},
                      {"points", cfg.dynamics.points},
                      {"snapshot_times", cfg.dynamics.snapshot_times}};
  root["spectrum"] = {{"filter_bandwidth", cfg.spectrum.filter_bandwidth},
                      {"step", cfg.spectrum.step},
                      {"times", cfg.spectrum.times},
                      {"omega", {{"min", cfg.spectrum.omega.min}, {"max", cfg.spectrum.omega.max}, {"count", cfg.spectrum.omega.count}}},
                      {"route", cfg.spectrum.route},
                      {"correlation_dump_stride", cfg.spectrum.correlation_dump_stride}};
  root["provenance"] = {{"code_version", std::string(kVersion)}};
  return root.dump(2) + "\n";
}

std::string validate_config(const ExperimentConfig& cfg) {
  int dim = 0;
  for (const Job& job : enumerate_jobs(cfg)) {
    try {
      const EmitterModel model = job_model(cfg, job);
      auto basis = std::make_shared<const Basis>(model.n_excited());
      dim = basis->dim();
      initial_state(basis, cfg.initial_states[job.state].spec);
    } catch (const Error& e) {
      throw Error(e.code(), job_context(cfg, job) + ": " + e.detail());
    }
  }
  if (needs_spectra(cfg.mode)) {
    try {
      validate_spectrum_config(spectrum_config(cfg.spectrum, 1));
    } catch (const Error& e) {
      throw Error(e.code(), std::string("spectrum: ") + e.detail());
    }
  }
  return "valid; " + std::to_string(dim) + "-dim Liouvillian; p ∈ " + set_text(cfg.p_values);
}

RunSummary run_experiment(ExperimentConfig cfg, const RunOptions& opt) {
  if (opt.step_override) cfg.spectrum.step = *opt.step_override;
  validate_config(cfg);

  namespace fs = std::filesystem;
  const fs::path final_dir = opt.out_dir / cfg.name;
  const fs::path staging = opt.out_dir / ("." + cfg.name + ".partial");
  std::error_code ec;
  fs::remove_all(staging, ec);
  fs::create_directories(staging, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + staging.string() + ": " + ec.message());

  const std::vector<Job> jobs = enumerate_jobs(cfg);
  std::vector<JobResult> results(jobs.size());
  const unsigned workers = std::max(1u, opt.workers);
  const unsigned inner_threads = std::max<unsigned>(1, workers / static_cast<unsigned>(jobs.size()));
  const SpectrumConfig scfg = spectrum_config(cfg.spectrum, inner_threads);
  const int n = cfg.variants.front().params.n_excited;

  auto run_job = [&](std::size_t k) {
    const Job& job = jobs[k];
    JobResult& result = results[k];
    try {
      const EmitterModel model = job_model(cfg, job);
      const Liouvillian generator = build_liouvillian(model);
      const StateVector psi0 = initial_state(generator.basis_ptr(), cfg.initial_states[job.state].spec);

      if (writes_dynamics(cfg.mode) || writes_derived(cfg.mode)) {
        const std::vector<double> times = linspace(0.0, cfg.dynamics.t_max, cfg.dynamics.points);
        const Trajectory traj = propagate(generator, psi0, times);
        if (writes_dynamics(cfg.mode)) {
          const std::string file = "trajectory_" + job.stem + ".csv";
          std::vector<std::string> header{"t"};
          for (int i = 1; i <= n; ++i) header.push_back("rho_" + std::to_string(i) + std::to_string(i));
          for (int i = 1; i <= n; ++i) {
            for (int j = i + 1; j <= n; ++j) header.push_back("abs_rho_" + std::to_string(i) + std::to_string(j));
          }
          CsvWriter csv(staging / file, header);
          for (std::size_t t = 0; t < traj.size(); ++t) {
            csv.cell(traj.times()[t]);
            for (int i = 1; i <= n; ++i) csv.cell(traj.at(t).population(i));
            for (int i = 1; i <= n; ++i) {
              for (int j = i + 1; j <= n; ++j) csv.cell(std::abs(traj.at(t).rho(i, j)));
            }
            csv.end_row();
          }
          csv.close();
          result.artifacts.push_back(file);

          if (!cfg.dynamics.snapshot_times.empty()) {
            const std::string snap_file = "snapshots_" + job.stem + ".csv";
            std::vector<double> snap_times = cfg.dynamics.snapshot_times;
            std::sort(snap_times.begin(), snap_times.end());
            const Trajectory snaps = propagate(generator, psi0, snap_times);
            CsvWriter snap(staging / snap_file, {"t", "i", "j", "abs_rho"});
            for (std::size_t t = 0; t < snaps.size(); ++t) {
              for (int i = 1; i <= n; ++i) {
                for (int j = 1; j <= n; ++j) {
                  snap.cell(snaps.times()[t]).cell(static_cast<long long>(i)).cell(static_cast<long long>(j));
                  snap.cell(std::abs(snaps.at(t).rho(i, j)));
                  snap.end_row();
                }
              }
            }
            snap.close();
            result.artifacts.push_back(snap_file);
          }
        }
        if (n >= 2) {
          const std::string file = "coherence_ratio_" + job.stem + ".csv";
          std::vector<std::string> header{"t"};
          std::vector<std::vector<double>> columns;
          for (int i = 1; i <= n; ++i) {
            for (int j = i + 1; j <= n; ++j) {
              header.push_back("C_" + std::to_string(i) + std::to_string(j));
              columns.push_back(coherence_ratio(traj, i, j));
            }
          }
          CsvWriter csv(staging / file, header);
          for (std::size_t t = 0; t < traj.size(); ++t) {
            csv.cell(traj.times()[t]);
            for (const auto& c : columns) csv.cell(c[t]);
            csv.end_row();
          }
          csv.close();
          result.artifacts.push_back(file);
        }
      }

      if (needs_spectra(cfg.mode)) {
        const Trajectory straj = spectrum_trajectory(generator, psi0, scfg);
        SpectrumGrid grid = cfg.spectrum.route == "eigen" ? spectrum_eigen(straj, generator, scfg, model)
                                                          : spectrum_quadrature(generator, straj, scfg, model);
        if (writes_spectra(cfg.mode)) {
          const std::string file = "spectrum_" + job.stem + ".csv";
          write_spectrum_csv(grid, staging / file, "S");
          result.artifacts.push_back(file);

          json model_json = model_to_json(model.params());
          model_json["p_interf"] = model.p_interf();
          json sidecar{{"artifact", file},
                       {"columns", {"t", "omega_detuning", "S"}},
                       {"experiment", cfg.name},
                       {"variant", cfg.variants[job.variant].label},
                       {"model", model_json},
                       {"p", model.p_interf()},
                       {"initial_state", state_to_json(cfg.initial_states[job.state])},
                       {"filter_bandwidth", scfg.filter_bandwidth},
                       {"step", scfg.step},
                       {"times", scfg.times},
                       {"omega", scfg.omega},
                       {"route", grid.route},
                       {"code_version", std::string(kVersion)}};
          const std::string side_file = "spectrum_" + job.stem + ".json";
          write_text(staging / side_file, sidecar.dump(2) + "\n");
          result.artifacts.push_back(side_file);

          if (cfg.spectrum.correlation_dump_stride > 0) {
            const double coarse = scfg.step * static_cast<double>(cfg.spectrum.correlation_dump_stride);
            const double t_end = *std::max_element(scfg.times.begin(), scfg.times.end());
            const auto count = static_cast<std::size_t>(std::floor(t_end / coarse + 1e-9)) + 1;
            const std::vector<double> grid_times = uniform_grid(coarse, count);
            const Trajectory coarse_traj = propagate(generator, psi0, grid_times);
            for (int j = 1; j <= n; ++j) {
              const CorrelationSlice slice = two_time_correlations(generator, coarse_traj, j, grid_times);
              const std::string dump = "correlations_" + job.stem + "_j" + std::to_string(j) + ".csv";
              write_correlation_csv(slice, staging / dump, 1);
              result.artifacts.push_back(dump);
            }
          }
        }
        result.spectrum = std::move(grid);
      }
    } catch (const Error& e) {
      throw Error(e.code(), job_context(cfg, job) + ": " + e.detail());
    }
  };

  try {
    detail::parallel_for(jobs.size(), workers, run_job);

    std::vector<std::string> artifacts;
    for (const auto& r : results) artifacts.insert(artifacts.end(), r.artifacts.begin(), r.artifacts.end());

    if (writes_derived(cfg.mode)) {
      const auto zero = std::find(cfg.p_values.begin(), cfg.p_values.end(), 0.0);
      if (zero != cfg.p_values.end()) {
        const auto zero_index = static_cast<std::size_t>(zero - cfg.p_values.begin());
        for (std::size_t k = 0; k < jobs.size(); ++k) {
          const Job& job = jobs[k];
          if (job.p_index == zero_index) continue;
          const std::size_t ref = k - job.p_index + zero_index;
          const SpectrumGrid& with = *results[k].spectrum;
          const SpectrumGrid& without = *results[ref].spectrum;

          const std::string ifile = "interference_" + job.stem + ".csv";
          write_spectrum_csv(interference_contribution(with, without), staging / ifile, "abs_diff");
          const std::string rfile = "relative_intensity_" + job.stem + ".csv";
          write_spectrum_csv(relative_intensity(with, without), staging / rfile, "ratio");
          const std::string pfile = "peak_ratio_" + job.stem + ".csv";
          CsvWriter csv(staging / pfile, {"t", "omega_peak", "S_p0", "S_p", "ratio"});
          for (const PeakRatio& peak : peak_ratios(with, without)) {
            csv.cell(peak.time).cell(peak.omega).cell(peak.reference).cell(peak.value).cell(peak.ratio);
            csv.end_row();
          }
          csv.close();
          artifacts.insert(artifacts.end(), {ifile, rfile, pfile});
        }
      }
    }

    write_text(staging / "run.json", resolved_config_json(cfg));
    artifacts.push_back("run.json");

    fs::remove_all(final_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot replace " + final_dir.string() + ": " + ec.message());
    fs::rename(staging, final_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot move results into " + final_dir.string() + ": " + ec.message());
    return {final_dir, artifacts};
  } catch (...) {
    fs::remove_all(staging, ec);
    throw;
  }
}

}  // namespace clemit
