#include "tofplane/io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace tofplane::io {

namespace {

using nlohmann::json;

[[noreturn]] void parse_fail(const std::string& context, const std::string& what,
                             Errc code = Errc::data) {
  raise(code, context + ": " + what);
}

json parse_text(const std::string& text, const std::string& context, Errc code = Errc::data) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    parse_fail(context, e.what(), code);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io, "cannot write " + path.string());
  out << text;
  if (!out) raise(Errc::io, "write failed for " + path.string());
}

void check_version(const json& j, const std::string& context) {
  if (!j.contains("format_version")) parse_fail(context, "missing field 'format_version'");
  const int v = j.at("format_version").get<int>();
  if (v != kFormatVersion)
    parse_fail(context, "unsupported format_version " + std::to_string(v));
}

const char* kind_name(ZoneKind k) {
  switch (k) {
    case ZoneKind::center: return "center";
    case ZoneKind::edge: return "edge";
    case ZoneKind::corner: return "corner";
  }
  return "center";
}

ZoneKind kind_from_name(const std::string& s, const std::string& context) {
  if (s == "center") return ZoneKind::center;
  if (s == "edge") return ZoneKind::edge;
  if (s == "corner") return ZoneKind::corner;
  parse_fail(context, "unknown zone kind '" + s + "'");
}

json zone_to_json(const ZoneFov& z) {
  return json{{"center_x_deg", z.center_x_deg},
              {"center_y_deg", z.center_y_deg},
              {"width_deg", z.width_deg},
              {"height_deg", z.height_deg},
              {"kind", kind_name(z.kind)}};
}

ZoneFov zone_from_json(const json& j, const std::string& context) {
  ZoneFov z;
  z.center_x_deg = j.at("center_x_deg").get<double>();
  z.center_y_deg = j.at("center_y_deg").get<double>();
  z.width_deg = j.at("width_deg").get<double>();
  z.height_deg = j.at("height_deg").get<double>();
  z.kind = kind_from_name(j.at("kind").get<std::string>(), context);
  return z;
}

json reference_to_json(const ReferenceHistogram& r) {
  return json{{"bins", r.bins}, {"bin_size_ps", r.bin_size_ps}};
}

ReferenceHistogram reference_from_json(const json& j) {
  ReferenceHistogram r;
  r.bins = j.at("bins").get<std::vector<double>>();
  r.bin_size_ps = j.at("bin_size_ps").get<double>();
  return r;
}

json geometry_to_json(const PlaneGeometry& g) {
  return json{{"theta_deg", g.theta_deg}, {"z0_m", g.z0_m}, {"phi_deg", g.phi_deg}};
}

PlaneGeometry geometry_from_json(const json& j) {
  return PlaneGeometry{j.at("theta_deg").get<double>(), j.at("z0_m").get<double>(),
                       j.at("phi_deg").get<double>()};
}

json reflectance_to_json(const ReflectanceParams& f) {
  return json{{"albedo", f.albedo}, {"spec_weight", f.spec_weight}, {"spec_exp", f.spec_exp}};
}

ReflectanceParams reflectance_from_json(const json& j) {
  return ReflectanceParams{j.at("albedo").get<double>(), j.at("spec_weight").get<double>(),
                           j.at("spec_exp").get<double>()};
}

template <class F>
auto with_context(const std::string& context, Errc code, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    parse_fail(context, e.what(), code);
  }
}

}  // namespace

std::string camera_to_json(const CameraParams& c) {
  json j{{"format_version", kFormatVersion},
         {"num_bins", c.num_bins},
         {"bin_size_ps", c.bin_size_ps},
         {"bin_offset_ps", c.bin_offset_ps},
         {"gain", c.gain},
         {"saturation_counts", c.saturation},
         {"crosstalk", c.crosstalk},
         {"ref_rescale", c.ref_rescale},
         {"rays_per_zone", c.rays_per_zone},
         {"soft_bin_sigma_bins", c.soft_bin_sigma}};
  json zones = json::array();
  for (const ZoneFov& z : c.zones) zones.push_back(zone_to_json(z));
  j["zones"] = std::move(zones);
  return j.dump(2) + "\n";
}

CameraParams camera_from_json(const std::string& text, const std::string& context) {
  const json j = parse_text(text, context, Errc::config);
  return with_context(context, Errc::config, [&] {
    check_version(j, context);
    CameraParams c;
    c.num_bins = j.at("num_bins").get<int>();
    c.bin_size_ps = j.at("bin_size_ps").get<double>();
    c.bin_offset_ps = j.at("bin_offset_ps").get<double>();
    c.gain = j.at("gain").get<double>();
    c.saturation = j.at("saturation_counts").get<double>();
    c.crosstalk = j.at("crosstalk").get<double>();
    c.ref_rescale = j.at("ref_rescale").get<double>();
    c.rays_per_zone = j.at("rays_per_zone").get<int>();
    c.soft_bin_sigma = j.at("soft_bin_sigma_bins").get<double>();
    const json& zones = j.at("zones");
    if (zones.size() != 9) parse_fail(context, "'zones' must have exactly 9 entries");
    for (std::size_t z = 0; z < 9; ++z) c.zones[z] = zone_from_json(zones[z], context);
    c.validate();
    return c;
  });
}

void save_camera(const std::filesystem::path& path, const CameraParams& c) {
  write_file(path, camera_to_json(c));
}

CameraParams load_camera(const std::filesystem::path& path) {
  return camera_from_json(read_file(path), path.string());
}

std::string peaks_to_json(const PeakParams& p) {
  const json j{{"format_version", kFormatVersion},
               {"slope_m_per_bin", p.slope_m_per_bin},
               {"intercept_m", p.intercept_m},
               {"edge_scale", p.edge_scale},
               {"corner_scale", p.corner_scale}};
  return j.dump(2) + "\n";
}

PeakParams peaks_from_json(const std::string& text, const std::string& context) {
  const json j = parse_text(text, context, Errc::config);
  return with_context(context, Errc::config, [&] {
    check_version(j, context);
    PeakParams p;
    p.slope_m_per_bin = j.at("slope_m_per_bin").get<double>();
    p.intercept_m = j.at("intercept_m").get<double>();
    p.edge_scale = j.at("edge_scale").get<double>();
    p.corner_scale = j.at("corner_scale").get<double>();
    p.validate();
    return p;
  });
}

void save_peaks(const std::filesystem::path& path, const PeakParams& p) {
  write_file(path, peaks_to_json(p));
}

PeakParams load_peaks(const std::filesystem::path& path) {
  return peaks_from_json(read_file(path), path.string());
}

namespace {

json range_to_json(const SweepRange& r) {
  return json{{"min", r.min}, {"max", r.max}, {"count", r.count}};
}

SweepRange range_from_json(const json& j) {
  return SweepRange{j.at("min").get<double>(), j.at("max").get<double>(),
                    j.at("count").get<int>()};
}

const char* noise_name(NoiseKind k) { return k == NoiseKind::poisson ? "poisson" : "none"; }

NoiseKind noise_from_name(const std::string& s, const std::string& context) {
  if (s == "none") return NoiseKind::none;
  if (s == "poisson") return NoiseKind::poisson;
  parse_fail(context, "unknown noise kind '" + s + "'");
}

}  // namespace

std::string sweep_to_json(const SweepSpec& s) {
  const json j{{"format_version", kFormatVersion},
               {"theta_deg", range_to_json(s.theta_deg)},
               {"z0_m", range_to_json(s.z0_m)},
               {"phi_deg", range_to_json(s.phi_deg)},
               {"reflectance", reflectance_to_json(s.reflectance)},
               {"noise", json{{"kind", noise_name(s.noise.kind)},
                              {"photon_scale", s.noise.photon_scale}}},
               {"seed", s.seed},
               {"reference", json{{"width_ps", s.ref_width_ps},
                                  {"bin_size_ps", s.ref_bin_size_ps},
                                  {"num_bins", s.ref_num_bins}}}};
  return j.dump(2) + "\n";
}

SweepSpec sweep_from_json(const std::string& text, const std::string& context) {
  const json j = parse_text(text, context, Errc::config);
  return with_context(context, Errc::config, [&] {
    check_version(j, context);
    SweepSpec s;
    s.theta_deg = range_from_json(j.at("theta_deg"));
    s.z0_m = range_from_json(j.at("z0_m"));
    s.phi_deg = range_from_json(j.at("phi_deg"));
    s.reflectance = reflectance_from_json(j.at("reflectance"));
    const json& noise = j.at("noise");
    s.noise.kind = noise_from_name(noise.at("kind").get<std::string>(), context);
    s.noise.photon_scale = noise.at("photon_scale").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    const json& ref = j.at("reference");
    s.ref_width_ps = ref.at("width_ps").get<double>();
    s.ref_bin_size_ps = ref.at("bin_size_ps").get<double>();
    s.ref_num_bins = ref.at("num_bins").get<int>();
    s.validate();
    return s;
  });
}

void save_sweep(const std::filesystem::path& path, const SweepSpec& s) {
  write_file(path, sweep_to_json(s));
}

SweepSpec load_sweep(const std::filesystem::path& path) {
  return sweep_from_json(read_file(path), path.string());
}

std::string record_to_line(const MeasurementRecord& record) {
  json j;
  j["id"] = record.id;
  json zones = json::array();
  for (const Histogram& h : record.image.zones) zones.push_back(h.bins);
  j["zones"] = std::move(zones);
  j["reference"] = reference_to_json(record.reference);
  if (record.truth) {
    json t = geometry_to_json(record.truth->geometry);
    const json refl = reflectance_to_json(record.truth->reflectance);
    t.update(refl);
    j["truth"] = std::move(t);
  }
  j["meta"] = json{{"seed", record.meta.seed},
                   {"noise", noise_name(record.meta.noise)},
                   {"photon_scale", record.meta.photon_scale},
                   {"camera_id", record.meta.camera_id},
                   {"tags", record.meta.tags}};
  return j.dump();
}

MeasurementRecord record_from_line(const std::string& line, const std::string& context) {
  const json j = parse_text(line, context);
  return with_context(context, Errc::data, [&] {
    MeasurementRecord r;
    r.id = j.at("id").get<std::int64_t>();
    const json& zones = j.at("zones");
    if (zones.size() != 9) parse_fail(context, "'zones' must have exactly 9 histograms");
    for (std::size_t z = 0; z < 9; ++z)
      r.image.zones[z].bins = zones[z].get<std::vector<double>>();
    r.reference = reference_from_json(j.at("reference"));
    if (j.contains("truth") && !j.at("truth").is_null()) {
      const json& t = j.at("truth");
      r.truth = GroundTruth{geometry_from_json(t), reflectance_from_json(t)};
    }
    const json& meta = j.at("meta");
    r.meta.seed = meta.at("seed").get<std::uint64_t>();
    r.meta.noise = noise_from_name(meta.at("noise").get<std::string>(), context);
    r.meta.photon_scale = meta.at("photon_scale").get<double>();
    r.meta.camera_id = meta.at("camera_id").get<std::string>();
    r.meta.tags = meta.at("tags").get<std::map<std::string, std::string>>();
    return r;
  });
}

void save_dataset(const std::filesystem::path& path,
                  std::span<const MeasurementRecord> records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io, "cannot write " + path.string());
  for (const MeasurementRecord& r : records) {
    out << record_to_line(r) << '\n';
    if (!out) raise(Errc::io, "write failed for " + path.string());
  }
}

std::vector<MeasurementRecord> load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io, "cannot open " + path.string());
  std::vector<MeasurementRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    records.push_back(record_from_line(line, path.string() + ":" + std::to_string(line_no)));
  }
  return records;
}

std::string method_name(RecoveryMethod m) {
  switch (m) {
    case RecoveryMethod::diff_render: return "diff-render";
    case RecoveryMethod::peak_calibrated: return "peak-calibrated";
    case RecoveryMethod::peak_naive: return "peak-naive";
  }
  return "diff-render";
}

RecoveryMethod method_from_name(const std::string& name) {
  if (name == "diff-render") return RecoveryMethod::diff_render;
  if (name == "peak-calibrated") return RecoveryMethod::peak_calibrated;
  if (name == "peak-naive") return RecoveryMethod::peak_naive;
  raise(Errc::config, "unknown method '" + name +
                          "' (expected diff-render, peak-calibrated or peak-naive)");
}

std::string result_to_line(const StoredResult& r) {
  json j;
  j["id"] = r.id;
  if (!r.error.empty()) {
    j["error"] = r.error;
    return j.dump();
  }
  const RecoveryResult& res = *r.result;
  j["method"] = method_name(res.method);
  j["geometry"] = geometry_to_json(res.geometry);
  j["plane"] = json{{"normal", std::array<double, 3>{res.plane.normal.x, res.plane.normal.y,
                                                     res.plane.normal.z}},
                    {"offset_m", res.plane.offset}};
  if (res.reflectance) j["reflectance"] = reflectance_to_json(*res.reflectance);
  j["report"] = json{{"iterations", res.report.iterations},
                     {"final_loss", res.report.final_loss},
                     {"best_loss", res.report.best_loss},
                     {"converged", res.report.converged},
                     {"nonfinite_steps", res.report.nonfinite_steps}};
  return j.dump();
}

StoredResult result_from_line(const std::string& line, const std::string& context) {
  const json j = parse_text(line, context);
  return with_context(context, Errc::data, [&] {
    StoredResult r;
    r.id = j.at("id").get<std::int64_t>();
    if (j.contains("error")) {
      r.error = j.at("error").get<std::string>();
      return r;
    }
    RecoveryResult res;
    res.method = method_from_name(j.at("method").get<std::string>());
    res.geometry = geometry_from_json(j.at("geometry"));
    const json& plane = j.at("plane");
    const auto n = plane.at("normal").get<std::array<double, 3>>();
    res.plane = ImplicitPlane{Vec3{n[0], n[1], n[2]}, plane.at("offset_m").get<double>()};
    if (j.contains("reflectance"))
      res.reflectance = reflectance_from_json(j.at("reflectance"));
    const json& rep = j.at("report");
    res.report.iterations = rep.at("iterations").get<int>();
    res.report.final_loss = rep.at("final_loss").get<double>();
    res.report.best_loss = rep.at("best_loss").get<double>();
    res.report.converged = rep.at("converged").get<bool>();
    res.report.nonfinite_steps = rep.at("nonfinite_steps").get<int>();
    r.result = std::move(res);
    return r;
  });
}

void save_results(const std::filesystem::path& path, std::span<const StoredResult> results) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io, "cannot write " + path.string());
  for (const StoredResult& r : results) {
    out << result_to_line(r) << '\n';
    if (!out) raise(Errc::io, "write failed for " + path.string());
  }
}

std::vector<StoredResult> load_results(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::io, "cannot open " + path.string());
  std::vector<StoredResult> results;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    results.push_back(result_from_line(line, path.string() + ":" + std::to_string(line_no)));
  }
  return results;
}

}  // namespace tofplane::io
