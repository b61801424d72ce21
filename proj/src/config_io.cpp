#include "sqmag/config_io.hpp"

#include <fstream>
#include <set>
#include <string>

#include "sqmag/errors.hpp"

namespace sqmag {

namespace {

using nlohmann::json;

class Section {
 public:
  Section(const json& parent, std::string name) : name_(std::move(name)) {
    if (!parent.is_object()) throw Error(ErrorCode::ConfigError, "'" + name_ + "' must be an object");
    node_ = &parent;
  }

  template <typename T>
  void get(const char* key, T& field) {
    seen_.insert(key);
    auto it = node_->find(key);
    if (it == node_->end()) return;
    try {
      field = it->get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::ConfigError, name_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  void get(const char* key, std::optional<T>& field) {
    seen_.insert(key);
    auto it = node_->find(key);
    if (it == node_->end()) return;
    if (it->is_null()) {
      field.reset();
      return;
    }
    T value{};
    get(key, value);
    field = value;
  }

  /// Nested object, if present.
  const json* child(const char* key) {
    seen_.insert(key);
    auto it = node_->find(key);
    return it == node_->end() ? nullptr : &*it;
  }

  void finish() const {
    for (const auto& [key, value] : node_->items()) {
      if (!seen_.contains(key)) throw Error(ErrorCode::ConfigError, "unknown key '" + name_ + "." + key + "'");
    }
  }

 private:
  const json* node_ = nullptr;
  std::string name_;
  std::set<std::string, std::less<>> seen_;
};

template <typename Fn>
void with_section(Section& parent, const char* key, const std::string& name, Fn&& fn) {
  if (const json* node = parent.child(key)) {
    Section s(*node, name);
    fn(s);
    s.finish();
  }
}

SourceMode parse_source_mode(const std::string& s) {
  if (s == "gain") return SourceMode::Gain;
  if (s == "fit") return SourceMode::Fit;
  throw Error(ErrorCode::ConfigError, "source.mode must be 'gain' or 'fit'");
}

SpinPolarization parse_polarization(const std::string& s) {
  if (s == "thermal") return SpinPolarization::Thermal;
  if (s == "fully_polarized") return SpinPolarization::FullyPolarized;
  throw Error(ErrorCode::ConfigError, "ensemble.polarization must be 'thermal' or 'fully_polarized'");
}

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg = ExperimentConfig::published_defaults();
  Section root(j, "config");
  root.get("seed", cfg.seed);
  root.get("sample_rate_hz", cfg.sample_rate_hz);
  root.get("target_coherent_floor_t_per_rthz", cfg.target_coherent_floor_t_per_rthz);
  root.get("spin_correlation_time_s", cfg.spin_correlation_time_s);
  root.get("atomic_fraction", cfg.atomic_fraction);

  with_section(root, "source", "source", [&](Section& s) {
    std::string mode = cfg.source.mode == SourceMode::Gain ? "gain" : "fit";
    s.get("mode", mode);
    cfg.source.mode = parse_source_mode(mode);
    s.get("parametric_gain", cfg.source.parametric_gain);
    s.get("phase_jitter_rad", cfg.source.phase_jitter_rad);
    s.get("measured_vmin_db", cfg.source.measured_vmin_db);
    s.get("measured_vmax_db", cfg.source.measured_vmax_db);
  });
  with_section(root, "loss_chain", "loss_chain", [&](Section& s) {
    s.get("escape", cfg.loss_chain.escape);
    s.get("homodyne", cfg.loss_chain.homodyne);
    s.get("cell_transmission", cfg.loss_chain.cell_transmission);
    s.get("optics", cfg.loss_chain.optics);
    s.get("detector_qe", cfg.loss_chain.detector_qe);
    s.get("mode_overlap", cfg.loss_chain.mode_overlap);
  });
  with_section(root, "probe", "probe", [&](Section& s) {
    s.get("lo_power_w", cfg.probe.lo_power_w);
    s.get("waist_m", cfg.probe.waist_m);
    s.get("wavelength_m", cfg.probe.wavelength_m);
    s.get("detuning_hz", cfg.probe.detuning_hz);
    s.get("overlap", cfg.probe.overlap);
  });
  with_section(root, "ensemble", "ensemble", [&](Section& s) {
    s.get("n_atoms", cfg.ensemble.n_atoms);
    s.get("f_quantum_number", cfg.ensemble.f_quantum_number);
    s.get("length_m", cfg.ensemble.length_m);
    s.get("f2_fraction", cfg.ensemble.f2_fraction);
    std::string pol = cfg.ensemble.polarization == SpinPolarization::Thermal ? "thermal" : "fully_polarized";
    s.get("polarization", pol);
    cfg.ensemble.polarization = parse_polarization(pol);
  });
  with_section(root, "coupling", "coupling", [&](Section& s) {
    s.get("verdet_rad_per_t_m", cfg.coupling.verdet_rad_per_t_m);
    s.get("alpha_rad_per_spin_m", cfg.coupling.alpha_rad_per_spin_m);
    s.get("nmor_coefficient_per_w2", cfg.coupling.nmor_coefficient_per_w2);
    s.get("transmission", cfg.coupling.transmission);
  });
  with_section(root, "polarimeter", "polarimeter", [&](Section& s) {
    s.get("hwp_angle_rad", cfg.polarimeter.hwp_angle_rad);
    s.get("detector_qe", cfg.polarimeter.detector_qe);
    s.get("electronic_noise_db", cfg.polarimeter.electronic_noise_db);
    s.get("transimpedance_v_per_a", cfg.polarimeter.transimpedance_v_per_a);
  });
  with_section(root, "scan", "scan", [&](Section& s) {
    s.get("center_hz", cfg.scan_sa.center_hz);
    s.get("rbw_hz", cfg.scan_sa.rbw_hz);
    s.get("vbw_hz", cfg.scan_sa.vbw_hz);
    s.get("sweep_time_s", cfg.scan_sa.sweep_time_s);
    s.get("n_averages", cfg.scan_sa.n_averages);
    s.get("n_points", cfg.scan_sa.n_points);
    s.get("phase_start_rad", cfg.scan_phase_start_rad);
    s.get("phase_span_rad", cfg.scan_phase_span_rad);
  });
  with_section(root, "magnetometry", "magnetometry", [&](Section& s) {
    s.get("start_hz", cfg.magnetometry_sa.start_hz);
    s.get("stop_hz", cfg.magnetometry_sa.stop_hz);
    s.get("rbw_hz", cfg.magnetometry_sa.rbw_hz);
    s.get("vbw_hz", cfg.magnetometry_sa.vbw_hz);
    s.get("sweep_time_s", cfg.magnetometry_sa.sweep_time_s);
    s.get("n_averages", cfg.magnetometry_sa.n_averages);
    s.get("bin_spacing_hz", cfg.magnetometry_sa.bin_spacing_hz);
    s.get("guard_rbw", cfg.guard_rbw);
  });
  with_section(root, "field", "field", [&](Section& s) {
    s.get("freq_hz", cfg.field.freq_hz);
    s.get("amplitude_t", cfg.field.amplitude_t);
    s.get("reference_rotation_rad", cfg.field.reference_rotation_rad);
  });
  with_section(root, "lock", "lock", [&](Section& s) {
    s.get("dither_amplitude_rad", cfg.lock.dither_amplitude_rad);
    s.get("dither_freq_hz", cfg.lock.dither_freq_hz);
    s.get("loop_gain", cfg.lock.loop_gain);
    s.get("settle_tolerance_rad", cfg.lock.settle_tolerance_rad);
    s.get("max_steps", cfg.lock.max_steps);
    s.get("consecutive_to_lock", cfg.lock.consecutive_to_lock);
    s.get("initial_phase_rad", cfg.lock.initial_phase_rad);
    s.get("measurement_noise", cfg.lock_measurement_noise);
    s.get("ideal", cfg.ideal_lock);
  });
  root.finish();

  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::ConfigError, e.what());
  }
  return cfg;
}

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ConfigError, "cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigError, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

json to_json(const ExperimentConfig& cfg) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return {
      {"seed", cfg.seed},
      {"sample_rate_hz", cfg.sample_rate_hz},
      {"target_coherent_floor_t_per_rthz", opt(cfg.target_coherent_floor_t_per_rthz)},
      {"spin_correlation_time_s", cfg.spin_correlation_time_s},
      {"atomic_fraction", cfg.atomic_fraction},
      {"source",
       {{"mode", cfg.source.mode == SourceMode::Gain ? "gain" : "fit"},
        {"parametric_gain", cfg.source.parametric_gain},
        {"phase_jitter_rad", cfg.source.phase_jitter_rad},
        {"measured_vmin_db", cfg.source.measured_vmin_db},
        {"measured_vmax_db", cfg.source.measured_vmax_db}}},
      {"loss_chain",
       {{"escape", cfg.loss_chain.escape},
        {"homodyne", cfg.loss_chain.homodyne},
        {"cell_transmission", cfg.loss_chain.cell_transmission},
        {"optics", cfg.loss_chain.optics},
        {"detector_qe", cfg.loss_chain.detector_qe},
        {"mode_overlap", opt(cfg.loss_chain.mode_overlap)}}},
      {"probe",
       {{"lo_power_w", cfg.probe.lo_power_w},
        {"waist_m", cfg.probe.waist_m},
        {"wavelength_m", cfg.probe.wavelength_m},
        {"detuning_hz", cfg.probe.detuning_hz},
        {"overlap", cfg.probe.overlap}}},
      {"ensemble",
       {{"n_atoms", cfg.ensemble.n_atoms},
        {"f_quantum_number", cfg.ensemble.f_quantum_number},
        {"length_m", cfg.ensemble.length_m},
        {"f2_fraction", cfg.ensemble.f2_fraction},
        {"polarization", cfg.ensemble.polarization == SpinPolarization::Thermal ? "thermal" : "fully_polarized"}}},
      {"coupling",
       {{"verdet_rad_per_t_m", cfg.coupling.verdet_rad_per_t_m},
        {"alpha_rad_per_spin_m", cfg.coupling.alpha_rad_per_spin_m},
        {"nmor_coefficient_per_w2", cfg.coupling.nmor_coefficient_per_w2},
        {"transmission", cfg.coupling.transmission}}},
      {"polarimeter",
       {{"hwp_angle_rad", cfg.polarimeter.hwp_angle_rad},
        {"detector_qe", cfg.polarimeter.detector_qe},
        {"electronic_noise_db", cfg.polarimeter.electronic_noise_db},
        {"transimpedance_v_per_a", cfg.polarimeter.transimpedance_v_per_a}}},
      {"scan",
       {{"center_hz", cfg.scan_sa.center_hz},
        {"rbw_hz", cfg.scan_sa.rbw_hz},
        {"vbw_hz", cfg.scan_sa.vbw_hz},
        {"sweep_time_s", cfg.scan_sa.sweep_time_s},
        {"n_averages", cfg.scan_sa.n_averages},
        {"n_points", cfg.scan_sa.n_points},
        {"phase_start_rad", cfg.scan_phase_start_rad},
        {"phase_span_rad", cfg.scan_phase_span_rad}}},
      {"magnetometry",
       {{"start_hz", cfg.magnetometry_sa.start_hz},
        {"stop_hz", cfg.magnetometry_sa.stop_hz},
        {"rbw_hz", cfg.magnetometry_sa.rbw_hz},
        {"vbw_hz", cfg.magnetometry_sa.vbw_hz},
        {"sweep_time_s", cfg.magnetometry_sa.sweep_time_s},
        {"n_averages", cfg.magnetometry_sa.n_averages},
        {"bin_spacing_hz", cfg.magnetometry_sa.bin_spacing_hz},
        {"guard_rbw", cfg.guard_rbw}}},
      {"field",
       {{"freq_hz", cfg.field.freq_hz},
        {"amplitude_t", opt(cfg.field.amplitude_t)},
        {"reference_rotation_rad", cfg.field.reference_rotation_rad}}},
      {"lock",
       {{"dither_amplitude_rad", cfg.lock.dither_amplitude_rad},
        {"dither_freq_hz", cfg.lock.dither_freq_hz},
        {"loop_gain", cfg.lock.loop_gain},
        {"settle_tolerance_rad", cfg.lock.settle_tolerance_rad},
        {"max_steps", cfg.lock.max_steps},
        {"consecutive_to_lock", cfg.lock.consecutive_to_lock},
        {"initial_phase_rad", cfg.lock.initial_phase_rad},
        {"measurement_noise", cfg.lock_measurement_noise},
        {"ideal", cfg.ideal_lock}}},
  };
}

json to_json(const SensitivityReport& r) {
  return {
      {"probe", r.probe},
      {"noise_floor_t_per_rthz", r.noise_floor_t_per_rthz},
      {"signal_freq_hz", r.signal_freq_hz},
      {"signal_power_v2", r.signal_power_v2},
      {"floor_power_v2", r.floor_power_v2},
      {"improvement_db", r.improvement_db},
      {"squeezing_at_lock_db", r.squeezing_at_lock_db},
      {"volts_per_tesla", r.volts_per_tesla},
      {"enbw_hz", r.enbw_hz},
      {"n_floor_bins", r.n_floor_bins},
      {"n_averages", r.n_averages},
      {"seed", r.seed},
  };
}

json to_json(const SourceFit& fit) {
  return {
      {"x", fit.pump_relative_amplitude},
      {"sigma_rad", fit.sigma_rad},
      {"implied_gain", fit.implied_gain},
      {"forward_vmin_db", fit.forward_vmin_db},
      {"forward_vmax_db", fit.forward_vmax_db},
  };
}

}  // namespace sqmag
