// Command-line driver for the squeezed-light magnetometer simulation.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sqmag/config_io.hpp"
#include "sqmag/errors.hpp"
#include "sqmag/experiments.hpp"
#include "sqmag/light_source.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitLock = 3;
constexpr int kExitNumerical = 4;

int exit_code_for(sqmag::ErrorCode code) {
  using sqmag::ErrorCode;
  switch (code) {
    case ErrorCode::ConfigError:
    case ErrorCode::InvalidParameter:
    case ErrorCode::GainBelowUnity:
    case ErrorCode::EfficiencyOutOfRange:
    case ErrorCode::ConfigModeMismatch:
    case ErrorCode::NyquistViolation:
    case ErrorCode::IoError:
      return kExitConfig;
    case ErrorCode::LockNotAcquired:
      return kExitLock;
    default:
      return kExitNumerical;
  }
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string format = "json";
};

sqmag::ExperimentConfig load(const std::string& path, const Globals& g) {
  auto cfg = path.empty() ? sqmag::ExperimentConfig::published_defaults() : sqmag::load_config_file(path);
  if (!g.seed) throw sqmag::Error(sqmag::ErrorCode::ConfigError, "--seed is required for this subcommand");
  cfg.seed = *g.seed;
  return cfg;
}

fs::path prepare_out(const std::string& out) {
  fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw sqmag::Error(sqmag::ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw sqmag::Error(sqmag::ErrorCode::IoError, "cannot write " + p.string());
  return f;
}

void write_json(const fs::path& p, const json& j) {
  auto f = open_out(p);
  f << j.dump(2) << '\n';
}

int squeeze_scan(const std::string& config, const std::string& out, const Globals& g) {
  const auto cfg = load(config, g);
  const auto result = sqmag::run_squeezing_scan(cfg);
  const auto dir = prepare_out(out);

  {
    auto f = open_out(dir / "squeeze_scan.csv");
    f << "# relative to coherent reference, seed " << cfg.seed << '\n';
    f << "time_s,squeezed_db,coherent_db\n";
    const auto& s = result.squeezed_db;
    const auto& c = result.coherent_db;
    f.precision(10);
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      f << s.abscissa[i] << ',' << s.values[i] << ',' << c.values[i] << '\n';
    }
  }
  const json summary = {
      {"min_db", result.min_db},
      {"max_db", result.max_db},
      {"coherent_min_db", result.coherent_min_db},
      {"coherent_max_db", result.coherent_max_db},
      {"model_vmin_db", sqmag::to_db(result.model.v_min())},
      {"model_vmax_db", sqmag::to_db(result.model.v_max())},
      {"seed", cfg.seed},
  };
  write_json(dir / "squeeze_scan.json", summary);
  write_json(dir / "config_resolved.json", sqmag::to_json(cfg));

  if (g.format == "json") {
    std::cout << summary.dump(2) << '\n';
  } else {
    std::cout << "min_db,max_db\n" << result.min_db << ',' << result.max_db << '\n';
  }
  return kExitOk;
}

int magnetometry(const std::string& config, const std::string& probe_name, const std::string& out,
                 const Globals& g) {
  const auto cfg = load(config, g);
  const auto probe = probe_name == "squeezed" ? sqmag::ProbeKind::Squeezed : sqmag::ProbeKind::Coherent;
  const auto result = sqmag::run_magnetometry(cfg, probe);
  const auto dir = prepare_out(out);
  const std::string stem = "magnetometry_" + probe_name;

  {
    auto f = open_out(dir / (stem + ".csv"));
    sqmag::write_csv(result.trace_db, f);
  }
  const json report = sqmag::to_json(result.report);
  write_json(dir / (stem + ".json"), report);
  write_json(dir / "config_resolved.json", sqmag::to_json(cfg));
  if (result.lock) {
    auto f = open_out(dir / (stem + "_lock.csv"));
    sqmag::write_history_csv(*result.lock, f);
  }

  if (g.format == "json") {
    std::cout << report.dump(2) << '\n';
  } else {
    sqmag::write_csv(result.trace_db, std::cout);
  }
  return kExitOk;
}

int fit_source(double vmin_db, double vmax_db, double eta, const Globals& g) {
  const auto fit = sqmag::fit_source_model(vmin_db, vmax_db, eta);
  const json j = sqmag::to_json(fit);
  if (g.format == "json") {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << "x,sigma_rad,implied_gain\n"
              << fit.pump_relative_amplitude << ',' << fit.sigma_rad << ',' << fit.implied_gain << '\n';
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Squeezed-light Faraday magnetometer simulation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed (u64)");
  app.add_option("--format", g.format, "Console output format")->check(CLI::IsMember({"csv", "json"}));

  std::string config, out, probe = "coherent";
  double vmin_db = -3.6, vmax_db = 7.4, eta = 0.82;

  auto* scan = app.add_subcommand("squeeze-scan", "Zero-span noise versus LO phase");
  scan->add_option("--config", config, "JSON configuration")->check(CLI::ExistingFile);
  scan->add_option("--out", out, "Output directory");

  auto* mag = app.add_subcommand("magnetometry", "Swept field-noise spectrum and sensitivity");
  mag->add_option("--config", config, "JSON configuration")->check(CLI::ExistingFile);
  mag->add_option("--probe", probe, "Probe light")->check(CLI::IsMember({"coherent", "squeezed"}));
  mag->add_option("--out", out, "Output directory");

  auto* fit = app.add_subcommand("fit-source", "Invert measured squeezing/antisqueezing to OPO parameters");
  fit->add_option("--vmin-db", vmin_db, "Measured squeezing (dB)")->required();
  fit->add_option("--vmax-db", vmax_db, "Measured antisqueezing (dB)")->required();
  fit->add_option("--eta", eta, "Total detection efficiency")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*scan) return squeeze_scan(config, out, g);
    if (*mag) return magnetometry(config, probe, out, g);
    if (*fit) return fit_source(vmin_db, vmax_db, eta, g);
  } catch (const sqmag::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitConfig;
}
