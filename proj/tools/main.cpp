#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tofplane/cli.hpp"

namespace {

using tofplane::cli::RunConfig;

/// Tracks which RunConfig fields the command line (or TOFPLANE_* environment,
/// via CLI11 envnames) provided, so a --config file can fill in the rest
/// without clobbering explicit values.
struct ConfigFlags {
  RunConfig values;
  std::string config_path;
  CLI::Option* camera = nullptr;
  CLI::Option* peaks = nullptr;
  CLI::Option* method = nullptr;
  CLI::Option* steps = nullptr;
  CLI::Option* lr = nullptr;
  CLI::Option* tol = nullptr;
  CLI::Option* calib_evals = nullptr;
  CLI::Option* seed = nullptr;
  CLI::Option* threads = nullptr;
  CLI::Option* verbose = nullptr;
  CLI::Option* init_mode = nullptr;
  CLI::Option* perturb_theta = nullptr;
  CLI::Option* perturb_z0 = nullptr;
  CLI::Option* perturb_phi = nullptr;

  void attach_common(CLI::App& app) {
    app.add_option("--config", config_path, "JSON run-config file")
        ->envname("TOFPLANE_CONFIG");
    seed = app.add_option("--seed", values.seed, "Global RNG seed")->envname("TOFPLANE_SEED");
    threads = app.add_option("--threads", values.threads, "Worker threads")
                  ->envname("TOFPLANE_THREADS");
    verbose = app.add_flag("--verbose", values.verbose, "Verbose diagnostics")
                  ->envname("TOFPLANE_VERBOSE");
  }

  void attach_camera(CLI::App& app) {
    camera = app.add_option("--camera", values.camera_path, "Camera parameter file (JSON)")
                 ->envname("TOFPLANE_CAMERA");
  }

  void attach_optimizer(CLI::App& app) {
    steps = app.add_option("--steps", values.steps, "Gradient-descent iterations")
                ->envname("TOFPLANE_STEPS");
    lr = app.add_option("--lr", values.lr, "Adam learning rate (normalized space)")
             ->envname("TOFPLANE_LR");
    tol = app.add_option("--tol", values.tol, "Simplex diameter tolerance")
              ->envname("TOFPLANE_TOL");
    calib_evals = app.add_option("--calib-evals", values.calib_evals,
                                 "Nelder-Mead evaluation budget")
                      ->envname("TOFPLANE_CALIB_EVALS");
  }

  void attach_recover(CLI::App& app) {
    peaks = app.add_option("--peaks", values.peaks_path, "Peak parameter file (JSON)")
                ->envname("TOFPLANE_PEAKS");
    method = app.add_option("--method", values.method,
                            "diff-render | peak-calibrated | peak-naive")
                 ->envname("TOFPLANE_METHOD");
    init_mode = app.add_option("--init", values.init_mode,
                               "diff-render initialization: peak | truth-perturbed")
                    ->envname("TOFPLANE_INIT_MODE");
    perturb_theta = app.add_option("--perturb-theta-deg", values.perturb_theta_deg,
                                   "Init perturbation of theta (truth-perturbed mode)")
                        ->envname("TOFPLANE_PERTURB_THETA_DEG");
    perturb_z0 = app.add_option("--perturb-z0-m", values.perturb_z0_m,
                                "Init perturbation of z0 (truth-perturbed mode)")
                     ->envname("TOFPLANE_PERTURB_Z0_M");
    perturb_phi = app.add_option("--perturb-phi-deg", values.perturb_phi_deg,
                                 "Init perturbation of phi (truth-perturbed mode)")
                      ->envname("TOFPLANE_PERTURB_PHI_DEG");
  }

  /// Final value resolution; see RunConfig for the precedence order.
  RunConfig resolve() const {
    RunConfig cfg;
    if (!config_path.empty()) cfg = tofplane::cli::load_run_config(config_path);
    const auto take = [](CLI::Option* opt) { return opt != nullptr && opt->count() > 0; };
    if (take(camera)) cfg.camera_path = values.camera_path;
    if (take(peaks)) cfg.peaks_path = values.peaks_path;
    if (take(method)) cfg.method = values.method;
    if (take(steps)) cfg.steps = values.steps;
    if (take(lr)) cfg.lr = values.lr;
    if (take(tol)) cfg.tol = values.tol;
    if (take(calib_evals)) cfg.calib_evals = values.calib_evals;
    if (take(seed)) cfg.seed = values.seed;
    if (take(threads)) cfg.threads = values.threads;
    if (take(verbose)) cfg.verbose = values.verbose;
    if (take(init_mode)) cfg.init_mode = values.init_mode;
    if (take(perturb_theta)) cfg.perturb_theta_deg = values.perturb_theta_deg;
    if (take(perturb_z0)) cfg.perturb_z0_m = values.perturb_z0_m;
    if (take(perturb_phi)) cfg.perturb_phi_deg = values.perturb_phi_deg;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transient-histogram plane simulation and recovery"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic measurement dataset");
  ConfigFlags sim_cfg;
  std::string sim_spec, sim_camera, sim_out;
  sim->add_option("spec", sim_spec, "Sweep spec file (JSON)")->required();
  sim->add_option("--camera", sim_camera, "Camera parameter file (JSON)")
      ->envname("TOFPLANE_CAMERA")
      ->required();
  sim->add_option("-o,--out", sim_out, "Output dataset path (JSON lines)")->required();
  sim_cfg.attach_common(*sim);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Fit camera or peak parameters to a dataset");
  ConfigFlags cal_cfg;
  std::string cal_mode, cal_dataset, cal_init, cal_out;
  cal->add_option("mode", cal_mode, "camera | peaks")->required();
  cal->add_option("dataset", cal_dataset, "Dataset with ground truth (JSON lines)")->required();
  cal->add_option("--init", cal_init, "Initial parameter file (required for camera mode)");
  cal->add_option("-o,--out", cal_out, "Output parameter file")->required();
  cal_cfg.attach_common(*cal);
  cal_cfg.attach_camera(*cal);
  cal_cfg.attach_optimizer(*cal);

  // recover
  auto* rec = app.add_subcommand("recover", "Recover planes from a measurement dataset");
  ConfigFlags rec_cfg;
  std::string rec_dataset, rec_out;
  rec->add_option("dataset", rec_dataset, "Input dataset (JSON lines)")->required();
  rec->add_option("-o,--out", rec_out, "Output results path (JSON lines)")->required();
  rec_cfg.attach_common(*rec);
  rec_cfg.attach_camera(*rec);
  rec_cfg.attach_optimizer(*rec);
  rec_cfg.attach_recover(*rec);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score recovery results against ground truth");
  ConfigFlags ev_cfg;
  std::string ev_results, ev_dataset, ev_out;
  ev->add_option("results", ev_results, "Recovery results (JSON lines)")->required();
  ev->add_option("dataset", ev_dataset, "Dataset with ground truth (JSON lines)")->required();
  ev->add_option("-o,--out", ev_out, "Output directory for report CSVs")->required();
  ev_cfg.attach_common(*ev);
  ev_cfg.attach_camera(*ev);

  // render
  auto* ren = app.add_subcommand("render", "Single forward render for debugging");
  ConfigFlags ren_cfg;
  tofplane::cli::RenderRequest request;
  std::string ren_camera, ren_out;
  ren->add_option("--camera", ren_camera, "Camera parameter file (JSON)")
      ->envname("TOFPLANE_CAMERA")
      ->required();
  ren->add_option("--theta-deg", request.geometry.theta_deg, "Angle of incidence");
  ren->add_option("--z0-m", request.geometry.z0_m, "Plane distance along the optical axis");
  ren->add_option("--phi-deg", request.geometry.phi_deg, "Azimuth of the tilt direction");
  ren->add_option("--albedo", request.reflectance.albedo, "Surface albedo");
  ren->add_option("--spec-weight", request.reflectance.spec_weight, "Specular weight");
  ren->add_option("--spec-exp", request.reflectance.spec_exp, "Specular exponent");
  ren->add_option("--mode", request.mode, "hard | soft");
  ren->add_option("--ref-width-ps", request.ref_width_ps, "Synthetic reference pulse std");
  ren->add_option("--ref-bin-size-ps", request.ref_bin_size_ps, "Reference bin size");
  ren->add_option("--ref-num-bins", request.ref_num_bins, "Reference bin count");
  ren->add_option("-o,--out", ren_out, "Output path ('-' for stdout)");
  ren_cfg.attach_common(*ren);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed())
      return tofplane::cli::run_simulate(sim_spec, sim_camera, sim_out, sim_cfg.resolve(),
                                         std::cout, std::cerr);
    if (cal->parsed())
      return tofplane::cli::run_calibrate(cal_mode, cal_dataset, cal_init, cal_out,
                                          cal_cfg.resolve(), std::cout, std::cerr);
    if (rec->parsed())
      return tofplane::cli::run_recover(rec_dataset, rec_out, rec_cfg.resolve(), std::cout,
                                        std::cerr);
    if (ev->parsed())
      return tofplane::cli::run_evaluate(ev_results, ev_dataset, ev_out, ev_cfg.resolve(),
                                         std::cout, std::cerr);
    if (ren->parsed())
      return tofplane::cli::run_render(request, ren_camera, ren_out, ren_cfg.resolve(),
                                       std::cout, std::cerr);
  } catch (const tofplane::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return tofplane::cli::exit_code_for(e);
  }
  return 1;
}
