#include <filesystem>
#include <fstream>

#include <doctest.h>

#include "tofplane/eval.hpp"
#include "tofplane/io.hpp"

using namespace tofplane;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "tofplane_io_tests";
  std::filesystem::create_directories(dir);
  return dir;
}

MeasurementRecord truth_record(std::int64_t id, const PlaneGeometry& g) {
  MeasurementRecord rec;
  rec.id = id;
  for (auto& zone : rec.image.zones) zone.bins.assign(8, 1.0);
  rec.reference.bins.assign(4, 1.0);
  rec.truth = GroundTruth{g, ReflectanceParams{0.5, 0.1, 10.0}};
  return rec;
}

io::StoredResult result_for(std::int64_t id, const PlaneGeometry& g,
                            std::optional<double> albedo = std::nullopt) {
  io::StoredResult r;
  r.id = id;
  RecoveryResult res;
  res.geometry = g;
  res.plane = plane_from_geometry(g);
  res.method = RecoveryMethod::diff_render;
  if (albedo) res.reflectance = ReflectanceParams{*albedo, 0.1, 10.0};
  r.result = std::move(res);
  return r;
}

}  // namespace

TEST_CASE("camera params json round trip") {
  CameraParams c;
  c.gain = 1.75;
  c.crosstalk = 0.035;
  c.bin_offset_ps = -12.5;
  c.zones[3].center_x_deg = -11.25;

  const CameraParams back = io::camera_from_json(io::camera_to_json(c));
  CHECK(back.gain == c.gain);
  CHECK(back.crosstalk == c.crosstalk);
  CHECK(back.bin_offset_ps == c.bin_offset_ps);
  CHECK(back.num_bins == c.num_bins);
  CHECK(back.zones[3].center_x_deg == c.zones[3].center_x_deg);
  CHECK(back.zones[3].kind == c.zones[3].kind);
  CHECK(back.soft_bin_sigma == c.soft_bin_sigma);
}

TEST_CASE("camera params parse failures name the problem") {
  CHECK_THROWS_WITH_AS(io::camera_from_json("{", "cam.json"), doctest::Contains("cam.json"),
                       Error);
  // wrong version
  CHECK_THROWS_WITH_AS(io::camera_from_json(R"({"format_version": 99})", "cam.json"),
                       doctest::Contains("format_version"), Error);
  // missing field: the message names it
  std::string text = io::camera_to_json(CameraParams{});
  const auto pos = text.find("\"gain\"");
  REQUIRE(pos != std::string::npos);
  text.replace(pos, 6, "\"gane\"");
  CHECK_THROWS_WITH_AS(io::camera_from_json(text, "cam.json"), doctest::Contains("gain"), Error);

  try {
    io::camera_from_json("{", "cam.json");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::config);
  }
}

TEST_CASE("peak params json round trip") {
  PeakParams p;
  p.slope_m_per_bin = 0.0123;
  p.intercept_m = -0.045;
  p.edge_scale = 0.93;
  p.corner_scale = 1.07;
  const PeakParams back = io::peaks_from_json(io::peaks_to_json(p));
  CHECK(back.slope_m_per_bin == p.slope_m_per_bin);
  CHECK(back.intercept_m == p.intercept_m);
  CHECK(back.edge_scale == p.edge_scale);
  CHECK(back.corner_scale == p.corner_scale);
}

TEST_CASE("sweep spec json round trip") {
  SweepSpec s;
  s.theta_deg = {0.0, 27.5, 7};
  s.z0_m = {0.07, 0.31, 9};
  s.phi_deg = {0.0, 315.0, 8};
  s.reflectance = {0.77, 0.05, 42.0};
  s.noise = {NoiseKind::poisson, 35.0};
  s.seed = 123456789ULL;
  s.ref_width_ps = 200.0;

  const SweepSpec back = io::sweep_from_json(io::sweep_to_json(s));
  CHECK(back.theta_deg.min == s.theta_deg.min);
  CHECK(back.theta_deg.count == s.theta_deg.count);
  CHECK(back.z0_m.max == s.z0_m.max);
  CHECK(back.reflectance.albedo == s.reflectance.albedo);
  CHECK(back.noise.kind == NoiseKind::poisson);
  CHECK(back.noise.photon_scale == 35.0);
  CHECK(back.seed == s.seed);
  CHECK(back.ref_width_ps == 200.0);
}

TEST_CASE("stored result lines round trip") {
  const io::StoredResult ok = result_for(5, {12.0, 0.2, 45.0}, 0.61);
  const io::StoredResult back = io::result_from_line(io::result_to_line(ok));
  CHECK(back.id == 5);
  CHECK(back.error.empty());
  REQUIRE(back.result.has_value());
  CHECK(back.result->geometry.theta_deg == 12.0);
  CHECK(back.result->plane.offset == ok.result->plane.offset);
  CHECK(back.result->reflectance->albedo == 0.61);
  CHECK(back.result->method == RecoveryMethod::diff_render);

  io::StoredResult failed;
  failed.id = 9;
  failed.error = "no usable peaks";
  const io::StoredResult back2 = io::result_from_line(io::result_to_line(failed));
  CHECK(back2.id == 9);
  CHECK(back2.error == "no usable peaks");
  CHECK(!back2.result.has_value());
}

TEST_CASE("method names map both ways") {
  for (RecoveryMethod m : {RecoveryMethod::diff_render, RecoveryMethod::peak_calibrated,
                           RecoveryMethod::peak_naive})
    CHECK(io::method_from_name(io::method_name(m)) == m);
  CHECK_THROWS_AS(io::method_from_name("nonsense"), Error);
}

TEST_CASE("dataset file round trip with line numbers on errors") {
  const auto dir = temp_dir();
  const auto path = dir / "ds.jsonl";
  std::vector<MeasurementRecord> records{truth_record(0, {0.0, 0.2, 0.0}),
                                         truth_record(1, {10.0, 0.25, 90.0})};
  io::save_dataset(path, records);
  const auto back = io::load_dataset(path);
  REQUIRE(back.size() == 2);
  CHECK(back[1].truth->geometry.phi_deg == 90.0);

  std::ofstream bad(path, std::ios::app);
  bad << "{broken\n";
  bad.close();
  CHECK_THROWS_WITH_AS(io::load_dataset(path), doctest::Contains(":3"), Error);
}

TEST_CASE("nearest-rank percentile and median") {
  std::vector<double> twenty(20, 3.5);
  CHECK(percentile_nearest_rank(twenty, 95.0) == 3.5);

  std::vector<double> ramp;
  for (int i = 1; i <= 100; ++i) ramp.push_back(i);
  CHECK(percentile_nearest_rank(ramp, 95.0) == 95.0);
  CHECK(percentile_nearest_rank(ramp, 50.0) == 50.0);

  std::vector<double> vals{4.0, 1.0, 3.0};
  CHECK(median_value(vals) == 3.0);
  std::vector<double> even{4.0, 1.0, 3.0, 2.0};
  CHECK(median_value(even) == 2.5);
}

TEST_CASE("evaluate_results perfect predictions give zero errors") {
  std::vector<MeasurementRecord> dataset{truth_record(0, {5.0, 0.2, 10.0}),
                                         truth_record(1, {15.0, 0.3, 200.0})};
  std::vector<io::StoredResult> results{result_for(0, {5.0, 0.2, 10.0}),
                                        result_for(1, {15.0, 0.3, 200.0})};
  const EvaluationReport report = evaluate_results(results, dataset, FieldOfView{33.0, 34.0});
  REQUIRE(report.records.size() == 2);
  CHECK(report.angular_deg.mean == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(report.linear_m.mean == doctest::Approx(0.0));
  CHECK(report.point_m.mean == doctest::Approx(0.0));
}

TEST_CASE("evaluate_results matches direct metric computation") {
  const PlaneGeometry truth{10.0, 0.22, 120.0};
  const PlaneGeometry guess{12.0, 0.24, 130.0};
  std::vector<MeasurementRecord> dataset{truth_record(3, truth)};
  std::vector<io::StoredResult> results{result_for(3, guess)};
  const FieldOfView fov{33.0, 34.0};
  const EvaluationReport report = evaluate_results(results, dataset, fov);
  REQUIRE(report.records.size() == 1);

  const ImplicitPlane pt = plane_from_geometry(truth);
  const ImplicitPlane pg = plane_from_geometry(guess);
  CHECK(report.records[0].angular_deg == doctest::Approx(angular_error_deg(pg, pt)));
  CHECK(report.records[0].linear_m == doctest::Approx(linear_error_m(pg, pt)));
  CHECK(report.records[0].point_m == doctest::Approx(point_error_m(pg, pt, fov)));
}

TEST_CASE("evaluate_results rejects id mismatches listing orphans") {
  std::vector<MeasurementRecord> dataset{truth_record(0, {5.0, 0.2, 10.0}),
                                         truth_record(1, {6.0, 0.2, 10.0})};
  std::vector<io::StoredResult> results{result_for(0, {5.0, 0.2, 10.0}),
                                        result_for(7, {5.0, 0.2, 10.0})};
  CHECK_THROWS_WITH_AS(evaluate_results(results, dataset, FieldOfView{33.0, 34.0}),
                       doctest::Contains("7"), Error);
  CHECK_THROWS_WITH_AS(evaluate_results(results, dataset, FieldOfView{33.0, 34.0}),
                       doctest::Contains("1"), Error);
}

TEST_CASE("evaluate_results skips failed records but keeps alignment") {
  std::vector<MeasurementRecord> dataset{truth_record(0, {5.0, 0.2, 10.0}),
                                         truth_record(1, {6.0, 0.2, 10.0})};
  io::StoredResult failed;
  failed.id = 1;
  failed.error = "recovery failed";
  std::vector<io::StoredResult> results{result_for(0, {5.0, 0.2, 10.0}), failed};
  const EvaluationReport report = evaluate_results(results, dataset, FieldOfView{33.0, 34.0});
  CHECK(report.records.size() == 1);
  CHECK(report.skipped_errors == 1);
}

TEST_CASE("evaluation buckets use 5 degree and 54 mm widths") {
  // z0 buckets: 0.100 and 0.105 share [0.054, 0.108); 0.29 lands in [0.270, 0.324)
  std::vector<MeasurementRecord> dataset{truth_record(0, {7.0, 0.100, 0.0}),
                                         truth_record(1, {7.4, 0.105, 0.0}),
                                         truth_record(2, {23.0, 0.29, 0.0})};
  std::vector<io::StoredResult> results{result_for(0, {7.5, 0.100, 0.0}),
                                        result_for(1, {7.0, 0.105, 0.0}),
                                        result_for(2, {23.0, 0.30, 0.0})};
  const EvaluationReport report = evaluate_results(results, dataset, FieldOfView{33.0, 34.0});

  REQUIRE(report.theta_buckets.size() == 2);
  CHECK(report.theta_buckets[0].center == doctest::Approx(7.5));  // [5, 10) bucket
  CHECK(report.theta_buckets[0].count == 2);
  CHECK(report.theta_buckets[1].center == doctest::Approx(22.5));  // [20, 25)

  REQUIRE(report.z0_buckets.size() == 2);
  CHECK(report.z0_buckets[0].center == doctest::Approx(0.081));  // [0.054, 0.108)
  CHECK(report.z0_buckets[0].count == 2);
  CHECK(report.z0_buckets[1].center == doctest::Approx(0.297));  // bucket [0.270, 0.324)
}

TEST_CASE("report csv files are written with headers") {
  const auto dir = temp_dir() / "csv";
  std::filesystem::remove_all(dir);

  std::vector<MeasurementRecord> dataset{truth_record(0, {5.0, 0.2, 10.0})};
  std::vector<io::StoredResult> results{result_for(0, {6.0, 0.21, 15.0}, 0.42)};
  const EvaluationReport report = evaluate_results(results, dataset, FieldOfView{33.0, 34.0});
  write_report_csvs(report, dir);

  for (const char* name : {"table1.csv", "fig4_aoi_buckets.csv", "fig5_dist_buckets.csv",
                           "fig7_albedo.csv"}) {
    CAPTURE(name);
    CHECK(std::filesystem::exists(dir / name));
  }
  std::ifstream table(dir / "table1.csv");
  std::string header;
  std::getline(table, header);
  CHECK(header == "method,metric,mean,median,p95");
  std::ifstream albedo(dir / "fig7_albedo.csv");
  std::getline(albedo, header);
  CHECK(header == "record_id,truth_albedo,recovered_albedo");
}
