#include "tofplane/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace tofplane::cli {

namespace {

using nlohmann::json;

double wrap_degrees(double phi) {
  phi = std::fmod(phi, 360.0);
  if (phi < 0.0) phi += 360.0;
  if (phi >= 360.0) phi = 0.0;
  return phi;
}

}  // namespace

void RunConfig::validate() const {
  io::method_from_name(method);
  require(init_mode == "peak" || init_mode == "truth-perturbed", Errc::config,
          "init mode must be 'peak' or 'truth-perturbed', got '" + init_mode + "'");
  require(steps >= 1, Errc::config, "steps must be >= 1");
  require(lr > 0.0, Errc::config, "lr must be positive");
  require(tol > 0.0, Errc::config, "tol must be positive");
  require(calib_evals >= 1, Errc::config, "calib-evals must be >= 1");
  require(threads >= 1, Errc::config, "threads must be >= 1");
}

RunConfig run_config_from_json(const std::string& text, const std::string& context) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    raise(Errc::config, context + ": " + e.what());
  }
  RunConfig cfg;
  try {
    if (j.contains("camera")) cfg.camera_path = j.at("camera").get<std::string>();
    if (j.contains("peaks")) cfg.peaks_path = j.at("peaks").get<std::string>();
    if (j.contains("method")) cfg.method = j.at("method").get<std::string>();
    if (j.contains("steps")) cfg.steps = j.at("steps").get<int>();
    if (j.contains("lr")) cfg.lr = j.at("lr").get<double>();
    if (j.contains("tol")) cfg.tol = j.at("tol").get<double>();
    if (j.contains("calib_evals")) cfg.calib_evals = j.at("calib_evals").get<int>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("threads")) cfg.threads = j.at("threads").get<int>();
    if (j.contains("verbose")) cfg.verbose = j.at("verbose").get<bool>();
    if (j.contains("init_mode")) cfg.init_mode = j.at("init_mode").get<std::string>();
    if (j.contains("perturb_theta_deg"))
      cfg.perturb_theta_deg = j.at("perturb_theta_deg").get<double>();
    if (j.contains("perturb_z0_m")) cfg.perturb_z0_m = j.at("perturb_z0_m").get<double>();
    if (j.contains("perturb_phi_deg"))
      cfg.perturb_phi_deg = j.at("perturb_phi_deg").get<double>();
  } catch (const json::exception& e) {
    raise(Errc::config, context + ": " + e.what());
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::config, "cannot open config file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return run_config_from_json(buf.str(), path);
}

void apply_env_overrides(RunConfig& cfg) {
  const auto get = [](const char* name) -> const char* { return std::getenv(name); };
  if (const char* v = get("TOFPLANE_CAMERA")) cfg.camera_path = v;
  if (const char* v = get("TOFPLANE_PEAKS")) cfg.peaks_path = v;
  if (const char* v = get("TOFPLANE_METHOD")) cfg.method = v;
  if (const char* v = get("TOFPLANE_STEPS")) cfg.steps = std::atoi(v);
  if (const char* v = get("TOFPLANE_LR")) cfg.lr = std::atof(v);
  if (const char* v = get("TOFPLANE_TOL")) cfg.tol = std::atof(v);
  if (const char* v = get("TOFPLANE_CALIB_EVALS")) cfg.calib_evals = std::atoi(v);
  if (const char* v = get("TOFPLANE_SEED")) cfg.seed = std::strtoull(v, nullptr, 10);
  if (const char* v = get("TOFPLANE_THREADS")) cfg.threads = std::atoi(v);
  if (const char* v = get("TOFPLANE_VERBOSE")) cfg.verbose = std::atoi(v) != 0;
  if (const char* v = get("TOFPLANE_INIT_MODE")) cfg.init_mode = v;
  if (const char* v = get("TOFPLANE_PERTURB_THETA_DEG")) cfg.perturb_theta_deg = std::atof(v);
  if (const char* v = get("TOFPLANE_PERTURB_Z0_M")) cfg.perturb_z0_m = std::atof(v);
  if (const char* v = get("TOFPLANE_PERTURB_PHI_DEG")) cfg.perturb_phi_deg = std::atof(v);
}

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case Errc::config:
    case Errc::invalid_argument:
      return 1;
    case Errc::data:
    case Errc::io:
      return 2;
    default:
      return 3;
  }
}

int run_simulate(const std::string& spec_path, const std::string& camera_path,
                 const std::string& out_path, const RunConfig& cfg, std::ostream& out,
                 std::ostream& err) {
  std::size_t written = 0;
  try {
    cfg.validate();
    const SweepSpec spec = io::load_sweep(spec_path);
    const CameraParams camera = io::load_camera(camera_path);
    std::ofstream sink(out_path, std::ios::binary);
    if (!sink) raise(Errc::io, "cannot write " + out_path);
    const std::string camera_id = std::filesystem::path(camera_path).stem().string();
    generate_dataset(spec, camera,
                     [&](const MeasurementRecord& rec) {
                       sink << io::record_to_line(rec) << '\n';
                       if (!sink) raise(Errc::io, "write failed for " + out_path);
                       ++written;
                     },
                     camera_id);
    out << written << (written == 1 ? " record written" : " records written") << "\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (written > 0) err << written << " records written before failure\n";
    return exit_code_for(e);
  }
}

namespace {

PlaneGeometry clamp_to_recovery_bounds(PlaneGeometry g) {
  g.theta_deg = std::clamp(g.theta_deg, 0.0, 75.0);
  g.z0_m = std::clamp(g.z0_m, 0.005, 1.5);
  g.phi_deg = wrap_degrees(g.phi_deg);
  return g;
}

io::StoredResult process_record(const MeasurementRecord& rec, RecoveryMethod method,
                                const CameraParams& camera, const PeakParams& peak_params,
                                const RunConfig& cfg) {
  io::StoredResult stored;
  stored.id = rec.id;
  try {
    if (method == RecoveryMethod::peak_naive || method == RecoveryMethod::peak_calibrated) {
      RecoveryResult result;
      result.plane = recover_plane_peaks(rec.image, peak_params, camera.zones);
      result.geometry = geometry_from_plane(result.plane);
      result.method = method;
      result.report.converged = true;
      stored.result = std::move(result);
      return stored;
    }

    PlaneGeometry init;
    if (cfg.init_mode == "truth-perturbed") {
      require(rec.truth.has_value(), Errc::data,
              "record " + std::to_string(rec.id) + " lacks ground truth for perturbed init");
      init = rec.truth->geometry;
      init.theta_deg += cfg.perturb_theta_deg;
      init.z0_m += cfg.perturb_z0_m;
      init.phi_deg += cfg.perturb_phi_deg;
    } else {
      init = geometry_from_plane(recover_plane_peaks(rec.image, peak_params, camera.zones));
    }
    init = clamp_to_recovery_bounds(init);

    DiffRenderOptions opts;
    opts.lr = cfg.lr;
    opts.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(rec.id));
    stored.result =
        recover_plane_diffrender(rec.image, rec.reference, camera, init, cfg.steps, opts);
    return stored;
  } catch (const Error& e) {
    stored.result.reset();
    stored.error = e.what();
    return stored;
  }
}

}  // namespace

int run_recover(const std::string& dataset_path, const std::string& out_path,
                const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    const RecoveryMethod method = io::method_from_name(cfg.method);
    require(!cfg.camera_path.empty(), Errc::config, "recover requires --camera");
    const CameraParams camera = io::load_camera(cfg.camera_path);

    PeakParams peak_params = naive_peak_params(camera);
    if (method == RecoveryMethod::peak_calibrated) {
      require(!cfg.peaks_path.empty(), Errc::config,
              "peak-calibrated method requires --peaks");
      peak_params = io::load_peaks(cfg.peaks_path);
    } else if (!cfg.peaks_path.empty()) {
      peak_params = io::load_peaks(cfg.peaks_path);
    }

    const std::vector<MeasurementRecord> records = io::load_dataset(dataset_path);
    std::vector<io::StoredResult> results(records.size());

    if (cfg.threads > 1 && records.size() > 1) {
      // Static index partition; slots are preassigned so output order matches
      // input order for any thread count.
      const int workers = std::min<int>(cfg.threads, static_cast<int>(records.size()));
      std::vector<std::future<void>> futures;
      futures.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w) {
        futures.push_back(std::async(std::launch::async, [&, w] {
          for (std::size_t i = static_cast<std::size_t>(w); i < records.size();
               i += static_cast<std::size_t>(workers))
            results[i] = process_record(records[i], method, camera, peak_params, cfg);
        }));
      }
      for (auto& f : futures) f.get();
    } else {
      for (std::size_t i = 0; i < records.size(); ++i)
        results[i] = process_record(records[i], method, camera, peak_params, cfg);
    }

    io::save_results(out_path, results);
    std::size_t failed = 0;
    for (const auto& r : results)
      if (!r.error.empty()) ++failed;
    out << results.size() << " results written (" << failed << " failed)\n";
    if (cfg.verbose) {
      for (const auto& r : results)
        if (!r.error.empty()) err << "record " << r.id << ": " << r.error << "\n";
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int run_calibrate(const std::string& mode, const std::string& dataset_path,
                  const std::string& init_path, const std::string& out_path,
                  const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    cfg.validate();
    require(mode == "peaks" || mode == "camera", Errc::config,
            "calibrate mode must be 'peaks' or 'camera', got '" + mode + "'");
    const std::vector<MeasurementRecord> dataset = io::load_dataset(dataset_path);

    if (mode == "peaks") {
      require(!cfg.camera_path.empty(), Errc::config, "calibrate peaks requires --camera");
      const CameraParams camera = io::load_camera(cfg.camera_path);
      const PeakParams init =
          init_path.empty() ? naive_peak_params(camera) : io::load_peaks(init_path);
      const double before = peak_calibration_objective(dataset, init, camera);

      PeakCalibOptions opts;
      opts.max_evals = cfg.calib_evals;
      opts.tol = cfg.tol;
      std::vector<std::string> warnings;
      opts.warnings = &warnings;
      const PeakParams fitted = calibrate_peaks(dataset, init, camera, opts);
      const double after = peak_calibration_objective(dataset, fitted, camera);

      for (const std::string& w : warnings) err << "warning: " << w << "\n";
      io::save_peaks(out_path, fitted);
      out << "objective before=" << before << " after=" << after << "\n";
      return 0;
    }

    const CameraParams init = io::load_camera(init_path);
    CameraCalibOptions opts;
    opts.lr = cfg.lr;
    opts.seed = cfg.seed;
    ReflectanceParams fitted_refl;
    opts.fitted_reflectance = &fitted_refl;
    const double before =
        camera_calibration_objective(dataset, init, opts.init_reflectance, cfg.seed);
    const CameraParams fitted = calibrate_camera(dataset, init, cfg.steps, opts);
    const double after = camera_calibration_objective(dataset, fitted, fitted_refl, cfg.seed);

    io::save_camera(out_path, fitted);
    out << "objective before=" << before << " after=" << after << "\n";
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int run_evaluate(const std::string& results_path, const std::string& dataset_path,
                 const std::string& out_dir, const RunConfig& cfg, std::ostream& out,
                 std::ostream& err) {
  try {
    cfg.validate();
    const std::vector<io::StoredResult> results = io::load_results(results_path);
    const std::vector<MeasurementRecord> dataset = io::load_dataset(dataset_path);
    FieldOfView fov;
    if (!cfg.camera_path.empty()) fov = io::load_camera(cfg.camera_path).full_fov();

    const EvaluationReport report = evaluate_results(results, dataset, fov);
    write_report_csvs(report, out_dir);

    out << "evaluated " << report.records.size() << " records";
    if (report.skipped_errors > 0) out << " (" << report.skipped_errors << " failed skipped)";
    out << "\n";
    if (!report.records.empty()) {
      out << "angular_deg mean=" << report.angular_deg.mean
          << " median=" << report.angular_deg.median << " p95=" << report.angular_deg.p95
          << "\n";
      out << "linear_mm mean=" << report.linear_m.mean * 1000.0
          << " median=" << report.linear_m.median * 1000.0
          << " p95=" << report.linear_m.p95 * 1000.0 << "\n";
      out << "point_mm mean=" << report.point_m.mean * 1000.0
          << " median=" << report.point_m.median * 1000.0
          << " p95=" << report.point_m.p95 * 1000.0 << "\n";
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

int run_render(const RenderRequest& request, const std::string& camera_path,
               const std::string& out_path, const RunConfig& cfg, std::ostream& out,
               std::ostream& err) {
  try {
    cfg.validate();
    require(request.mode == "hard" || request.mode == "soft", Errc::config,
            "render mode must be 'hard' or 'soft'");
    const CameraParams camera = io::load_camera(camera_path);
    const ReferenceHistogram delta =
        synth_reference(request.ref_width_ps, request.ref_bin_size_ps, request.ref_num_bins);

    MeasurementRecord record;
    record.image = render_image(request.geometry, request.reflectance, camera, delta, cfg.seed,
                                request.mode == "hard" ? BinningMode::hard : BinningMode::soft,
                                cfg.threads);
    record.reference = delta;
    record.truth = GroundTruth{request.geometry, request.reflectance};
    record.meta.seed = cfg.seed;
    record.meta.camera_id = std::filesystem::path(camera_path).stem().string();
    record.meta.tags["mode"] = request.mode;

    const std::string line = io::record_to_line(record);
    if (out_path.empty() || out_path == "-") {
      out << line << "\n";
    } else {
      std::ofstream sink(out_path, std::ios::binary);
      if (!sink) raise(Errc::io, "cannot write " + out_path);
      sink << line << '\n';
    }
    return 0;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
}

}  // namespace tofplane::cli
