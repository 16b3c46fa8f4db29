#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "tofplane/eval.hpp"

namespace tofplane::cli {

/// Run settings shared across subcommands. Values resolve in the order
/// defaults < --config file < TOFPLANE_* environment < command-line flags;
/// the front-end performs the merge, this struct just carries the result.
struct RunConfig {
  std::string camera_path;
  std::string peaks_path;
  std::string method = "diff-render";  // diff-render | peak-calibrated | peak-naive
  int steps = 100;
  double lr = 0.02;
  double tol = 1e-9;
  int calib_evals = 4000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool verbose = false;
  std::string init_mode = "peak";  // peak | truth-perturbed
  double perturb_theta_deg = 5.0;
  double perturb_z0_m = 0.03;
  double perturb_phi_deg = 20.0;

  void validate() const;
};

RunConfig run_config_from_json(const std::string& text, const std::string& context);
RunConfig load_run_config(const std::string& path);

/// Applies TOFPLANE_<KEY> environment overrides for every config key.
void apply_env_overrides(RunConfig& cfg);

/// Maps the error taxonomy onto exit codes: usage/config 1, data 2,
/// numerical 3.
int exit_code_for(const Error& e);

int run_simulate(const std::string& spec_path, const std::string& camera_path,
                 const std::string& out_path, const RunConfig& cfg, std::ostream& out,
                 std::ostream& err);

int run_calibrate(const std::string& mode, const std::string& dataset_path,
                  const std::string& init_path, const std::string& out_path,
                  const RunConfig& cfg, std::ostream& out, std::ostream& err);

int run_recover(const std::string& dataset_path, const std::string& out_path,
                const RunConfig& cfg, std::ostream& out, std::ostream& err);

int run_evaluate(const std::string& results_path, const std::string& dataset_path,
                 const std::string& out_dir, const RunConfig& cfg, std::ostream& out,
                 std::ostream& err);

/// Single-shot forward render for debugging.
struct RenderRequest {
  PlaneGeometry geometry{0.0, 0.2, 0.0};
  ReflectanceParams reflectance;
  std::string mode = "hard";  // hard | soft
  double ref_width_ps = 160.0;
  double ref_bin_size_ps = 40.0;
  int ref_num_bins = 32;
};

int run_render(const RenderRequest& request, const std::string& camera_path,
               const std::string& out_path, const RunConfig& cfg, std::ostream& out,
               std::ostream& err);

}  // namespace tofplane::cli
