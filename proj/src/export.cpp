#include "obstherm/export.hpp"

#include "obstherm/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#ifndef OBSTHERM_VERSION
#define OBSTHERM_VERSION "dev"
#endif

namespace obstherm {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return nullptr;
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json pair(const std::array<double, 2>& a) { return json::array({a[0], a[1]}); }

json optional_pair(const std::array<std::optional<double>, 2>& a) {
  return json::array({optional_number(a[0]), optional_number(a[1])});
}

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

std::string format17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string version_string() { return OBSTHERM_VERSION; }

ExperimentConfig config_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown_keys(j,
                      {"ising", "theta_grid", "observables", "time_grid", "transient", "entropy_base", "output_dir",
                       "ote_threshold"},
                      "config");
  ExperimentConfig c;
  try {
    if (j.contains("ising")) {
      const json& is = j.at("ising");
      reject_unknown_keys(is, {"preset", "coupling_jz", "field_bz", "field_bx", "num_sites", "boundary"}, "ising");
      const int sites = is.value("num_sites", c.ising.num_sites);
      if (is.contains("preset")) c.ising = IsingParams::preset(is.at("preset").get<std::string>(), sites);
      c.ising.num_sites = sites;
      c.ising.coupling_jz = is.value("coupling_jz", c.ising.coupling_jz);
      c.ising.field_bz = is.value("field_bz", c.ising.field_bz);
      c.ising.field_bx = is.value("field_bx", c.ising.field_bx);
      if (is.contains("boundary")) c.ising.boundary = parse_boundary(is.at("boundary").get<std::string>());
    }
    if (j.contains("theta_grid")) {
      const json& tg = j.at("theta_grid");
      c.theta_grid.clear();
      if (tg.is_string() && tg.get<std::string>() == "all") {
        for (int m = 1; m <= kThetaGridSize; ++m) c.theta_grid.push_back(InitialStateSpec::from_grid_index(m));
      } else if (tg.is_array()) {
        for (const json& e : tg) {
          if (e.is_number_integer()) {
            c.theta_grid.push_back(InitialStateSpec::from_grid_index(e.get<int>()));
          } else if (e.is_object() && e.contains("theta")) {
            c.theta_grid.push_back(InitialStateSpec::from_angle(e.at("theta").get<double>()));
          } else {
            throw ConfigError("theta_grid entries must be grid indices or {\"theta\": radians}");
          }
        }
      } else {
        throw ConfigError("theta_grid must be \"all\" or an array");
      }
    }
    if (j.contains("observables")) {
      c.observables.clear();
      for (const json& e : j.at("observables")) c.observables.push_back(ObservableId::parse(e.get<std::string>()));
    }
    if (j.contains("time_grid")) {
      const json& tg = j.at("time_grid");
      reject_unknown_keys(tg, {"t_max", "num_steps"}, "time_grid");
      c.time_grid.t_max = tg.value("t_max", c.time_grid.t_max);
      c.time_grid.num_steps = tg.value("num_steps", c.time_grid.num_steps);
    }
    if (j.contains("transient")) {
      const json& tr = j.at("transient");
      reject_unknown_keys(tr, {"mode", "value"}, "transient");
      const std::string mode = tr.value("mode", std::string("auto"));
      if (mode == "auto") {
        c.transient.mode = TransientMode::automatic;
      } else if (mode == "fixed") {
        c.transient.mode = TransientMode::fixed;
      } else {
        throw ConfigError("transient mode must be auto or fixed");
      }
      c.transient.value = tr.value("value", 0.0);
    }
    if (j.contains("entropy_base")) {
      const json& b = j.at("entropy_base");
      c.entropy_base = b.is_number() ? parse_entropy_base(b.get<int>() == 2 ? "2" : "?")
                                     : parse_entropy_base(b.get<std::string>());
    }
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (j.contains("ote_threshold") && !j.at("ote_threshold").is_null()) {
      c.ote_threshold = j.at("ote_threshold").get<double>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json thetas = json::array();
  for (const auto& th : c.theta_grid) {
    if (th.grid_index) {
      thetas.push_back(*th.grid_index);
    } else {
      thetas.push_back({{"theta", th.theta}});
    }
  }
  json obs = json::array();
  for (const auto& o : c.observables) obs.push_back(o.label());
  json out = {
      {"ising",
       {{"coupling_jz", c.ising.coupling_jz},
        {"field_bz", c.ising.field_bz},
        {"field_bx", c.ising.field_bx},
        {"num_sites", c.ising.num_sites},
        {"boundary", std::string(to_string(c.ising.boundary))}}},
      {"theta_grid", thetas},
      {"observables", obs},
      {"time_grid", {{"t_max", c.time_grid.t_max}, {"num_steps", c.time_grid.num_steps}}},
      {"transient",
       {{"mode", c.transient.mode == TransientMode::fixed ? "fixed" : "auto"}, {"value", c.transient.value}}},
      {"entropy_base", std::string(to_string(c.entropy_base))},
      {"output_dir", c.output_dir.string()},
      {"ote_threshold", c.ote_threshold ? json(*c.ote_threshold) : json(nullptr)},
  };
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

json record_to_json(const ValidationRecord& r) {
  const OrbitFit& f = r.orbit;
  return json{
      {"observable", r.observable},
      {"theta", r.theta},
      {"grid_index", r.grid_index ? json(*r.grid_index) : json(nullptr)},
      {"status", r.status},
      {"message", r.message},
      {"energy", r.energy},
      {"energy_spread", r.energy_spread},
      {"transient_cut", r.transient_cut},
      {"transient_fallback", r.transient_fallback},
      {"p_time_avg", pair(r.p_time_avg)},
      {"r_time_avg", pair(r.r_time_avg)},
      {"p_eq", pair(r.p_eq)},
      {"max_abs_gap", r.max_abs_gap},
      {"eps_eq", optional_pair(r.eps_eq)},
      {"eps_de", optional_pair(r.eps_de)},
      {"eps_estimator_gap", r.eps_estimator_gap},
      {"orbit_fit",
       {{"slope", optional_pair(f.slope)},
        {"ratio", optional_pair(f.ratio)},
        {"residual_rms", pair(f.residual_rms)},
        {"relative_gap", pair(f.relative_gap)},
        {"max_abs_r", pair(f.max_abs_r)},
        {"samples", f.samples}}},
      {"ote",
       {{"eps_de_timeavg", pair(r.ote.eps_de_timeavg)},
        {"eps_mc", pair(r.ote.eps_mc)},
        {"p_de", pair(r.ote.p_de)},
        {"p_mc", pair(r.ote.p_mc)},
        {"window_count", r.window_count},
        {"within_threshold", r.ote_within_threshold ? json(*r.ote_within_threshold) : json(nullptr)}}},
      {"lambda_e", r.lambda_e},
      {"lambda_n", r.lambda_n},
      {"partition_z", finite_or_null(r.partition_z)},
      {"degenerate", r.degenerate},
      {"thermo",
       {{"entropy", r.thermo.entropy},
        {"entropy_nats", r.thermo.entropy_nats},
        {"temperature", finite_or_null(r.thermo.temperature)},
        {"temperature_infinite", r.thermo.temperature_infinite},
        {"free_energy", finite_or_null(r.thermo.free_energy)},
        {"free_energy_defined", r.thermo.free_energy_defined}}},
      {"entropy_identity_residual", r.entropy_identity_residual},
      {"trajectory_file", r.trajectory_file},
  };
}

json records_to_json(const std::vector<ValidationRecord>& records) {
  json arr = json::array();
  for (const auto& r : records) arr.push_back(record_to_json(r));
  return arr;
}

void write_trajectory_csv(const TrajectorySeries& traj, const std::filesystem::path& path) {
  std::string text = std::string(kTrajectoryCsvHeader) + "\n";
  for (const auto& s : traj.samples) {
    text += format17(s.time) + ',' + format17(s.probabilities[0]) + ',' + format17(s.probabilities[1]) + ',' +
            format17(s.r_values[0]) + ',' + format17(s.r_values[1]) + ',' + format17(s.entropy) + '\n';
  }
  write_text(path, text);
}

TrajectoryTable read_trajectory_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kTrajectoryCsvHeader) {
    throw IoError(path.string() + ": expected header '" + kTrajectoryCsvHeader + "'");
  }
  TrajectoryTable t;
  std::vector<double>* columns[] = {&t.time, &t.p0, &t.p1, &t.r0, &t.r1, &t.entropy};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    for (auto* col : columns) {
      if (!std::getline(row, cell, ',')) throw IoError(path.string() + ": short row '" + line + "'");
      col->push_back(std::strtod(cell.c_str(), nullptr));
    }
  }
  return t;
}

std::string trajectory_file_name(std::size_t theta_position, const std::string& observable) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "traj_t%02zu_%s.csv", theta_position, observable.c_str());
  return buf;
}

ExportSummary export_results(std::vector<ValidationRecord>& records, const std::vector<TrajectorySeries>& trajectories,
                             const ExperimentConfig& config, const std::filesystem::path& output_dir,
                             double wall_seconds) {
  ExportSummary summary;
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw IoError("cannot create " + output_dir.string() + ": " + ec.message());

  const std::size_t per_theta = std::max<std::size_t>(1, config.observables.size());
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const std::string name = trajectory_file_name(i / per_theta + 1, trajectories[i].observable.label());
    write_trajectory_csv(trajectories[i], output_dir / name);
    if (i < records.size()) records[i].trajectory_file = name;
    summary.files.push_back(output_dir / name);
  }
  if (!records.empty()) {
    write_text(output_dir / "validation.json", records_to_json(records).dump(2) + "\n");
    summary.files.push_back(output_dir / "validation.json");
  }

  std::size_t infeasible = 0;
  for (const auto& r : records) infeasible += r.status == "infeasible" ? 1 : 0;
  json files = json::array();
  for (const auto& f : summary.files) files.push_back(f.filename().string());
  const json manifest = {
      {"tool", "obstherm"},
      {"version", version_string()},
      {"config", config_to_json(config)},
      {"wall_time_seconds", wall_seconds},
      {"records", records.size()},
      {"infeasible_records", infeasible},
      {"files", files},
      {"conventions",
       {{"hbar", 1.0},
        {"time_units", "1/J^z"},
        {"time_average", "arithmetic mean over grid samples with t > transient_cut"},
        {"basis", "site 0 is the most significant bit; bit 0 is the +1 eigenstate of sigma_z"},
        {"microcanonical_width", "standard deviation of H in psi0"}}},
      {"acceptance_tolerances",
       {{"max_abs_gap_theta1", 1e-7},
        {"max_abs_gap_sweep", 1e-6},
        {"orbit_slope_relative_gap", 0.01},
        {"orbit_residual_rms_fraction_of_max_abs_r", 0.02},
        {"entropy_post_transient_std_fraction", 0.05},
        {"shell_bound_slack_fraction_of_abs_energy", 1e-6}}},
      {"unspecified_choices",
       {"t_max and num_steps", "transient cut (auto: windowed entropy standard deviation)", "entropy base"}},
  };
  write_text(output_dir / "manifest.json", manifest.dump(2) + "\n");
  summary.files.push_back(output_dir / "manifest.json");
  return summary;
}

}  // namespace obstherm
