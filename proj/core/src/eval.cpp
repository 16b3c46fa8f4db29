#include "tofplane/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace tofplane {

double percentile_nearest_rank(std::span<const double> values, double pct) {
  require(!values.empty(), Errc::invalid_argument, "percentile of empty set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = std::ceil(pct / 100.0 * static_cast<double>(sorted.size()));
  const std::size_t idx = static_cast<std::size_t>(std::max(1.0, rank)) - 1;
  return sorted[std::min(idx, sorted.size() - 1)];
}

double median_value(std::span<const double> values) {
  require(!values.empty(), Errc::invalid_argument, "median of empty set");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  if (n % 2 == 1) return sorted[n / 2];
  return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

namespace {

MetricAggregate aggregate(std::span<const double> values) {
  MetricAggregate a;
  double sum = 0.0;
  for (double v : values) sum += v;
  a.mean = sum / static_cast<double>(values.size());
  a.median = median_value(values);
  a.p95 = percentile_nearest_rank(values, 95.0);
  return a;
}

std::vector<ErrorBucket> make_buckets(std::span<const RecordErrors> records,
                                      bool by_theta, double width) {
  std::map<long, std::vector<const RecordErrors*>> groups;
  for (const RecordErrors& r : records) {
    const double key = by_theta ? r.truth_theta_deg : r.truth_z0_m;
    groups[static_cast<long>(std::floor(key / width))].push_back(&r);
  }
  std::vector<ErrorBucket> buckets;
  for (const auto& [idx, members] : groups) {
    ErrorBucket b;
    b.center = (static_cast<double>(idx) + 0.5) * width;
    b.count = static_cast<int>(members.size());
    std::vector<double> ang, lin, pt;
    for (const RecordErrors* r : members) {
      ang.push_back(r->angular_deg);
      lin.push_back(r->linear_m);
      pt.push_back(r->point_m);
    }
    b.angular_deg = aggregate(ang);
    b.linear_m = aggregate(lin);
    b.point_m = aggregate(pt);
    buckets.push_back(std::move(b));
  }
  return buckets;
}

/// Shortest-round-trip double formatting; keeps report files byte-stable.
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

EvaluationReport evaluate_results(std::span<const io::StoredResult> results,
                                  std::span<const MeasurementRecord> dataset,
                                  const FieldOfView& fov) {
  std::map<std::int64_t, const MeasurementRecord*> by_id;
  for (const MeasurementRecord& rec : dataset) by_id[rec.id] = &rec;

  std::vector<std::int64_t> orphans;
  std::map<std::int64_t, bool> covered;
  for (const auto& [id, rec] : by_id) covered[id] = false;

  EvaluationReport report;
  for (const io::StoredResult& res : results) {
    const auto it = by_id.find(res.id);
    if (it == by_id.end()) {
      orphans.push_back(res.id);
      continue;
    }
    covered[res.id] = true;
    if (!res.error.empty()) {
      ++report.skipped_errors;
      continue;
    }
    const MeasurementRecord& rec = *it->second;
    require(rec.truth.has_value(), Errc::data,
            "record " + std::to_string(rec.id) + " has no ground truth");
    const ImplicitPlane truth_plane = plane_from_geometry(rec.truth->geometry);
    const RecoveryResult& r = *res.result;

    RecordErrors e;
    e.id = res.id;
    e.angular_deg = angular_error_deg(r.plane, truth_plane);
    e.linear_m = linear_error_m(r.plane, truth_plane);
    e.point_m = point_error_m(r.plane, truth_plane, fov);
    e.truth_theta_deg = rec.truth->geometry.theta_deg;
    e.truth_z0_m = rec.truth->geometry.z0_m;
    e.truth_albedo = rec.truth->reflectance.albedo;
    if (r.reflectance) e.recovered_albedo = r.reflectance->albedo;
    if (report.method.empty()) report.method = io::method_name(r.method);
    report.records.push_back(e);
  }

  std::ostringstream missing;
  for (const auto& [id, seen] : covered)
    if (!seen) missing << (missing.tellp() > 0 ? " " : "") << id;

  if (!orphans.empty() || missing.tellp() > 0) {
    std::ostringstream os;
    os << "result/dataset id mismatch;";
    if (!orphans.empty()) {
      os << " results without dataset records:";
      for (std::int64_t id : orphans) os << " " << id;
      os << ";";
    }
    if (missing.tellp() > 0) os << " dataset records without results: " << missing.str();
    raise(Errc::data, os.str());
  }

  if (!report.records.empty()) {
    std::vector<double> ang, lin, pt;
    for (const RecordErrors& r : report.records) {
      ang.push_back(r.angular_deg);
      lin.push_back(r.linear_m);
      pt.push_back(r.point_m);
    }
    report.angular_deg = aggregate(ang);
    report.linear_m = aggregate(lin);
    report.point_m = aggregate(pt);
    report.theta_buckets = make_buckets(report.records, true, 5.0);
    report.z0_buckets = make_buckets(report.records, false, 0.054);
  }
  return report;
}

namespace {

void write_bucket_csv(const std::filesystem::path& path, std::span<const ErrorBucket> buckets,
                      const char* center_header, double center_unit_factor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(Errc::io, "cannot write " + path.string());
  out << center_header
      << ",count,angular_mean_deg,angular_median_deg,angular_p95_deg"
      << ",linear_mean_mm,linear_median_mm,linear_p95_mm"
      << ",point_mean_mm,point_median_mm,point_p95_mm\n";
  for (const ErrorBucket& b : buckets) {
    out << fmt(b.center * center_unit_factor) << ',' << b.count << ','
        << fmt(b.angular_deg.mean) << ',' << fmt(b.angular_deg.median) << ','
        << fmt(b.angular_deg.p95) << ',' << fmt(b.linear_m.mean * 1000.0) << ','
        << fmt(b.linear_m.median * 1000.0) << ',' << fmt(b.linear_m.p95 * 1000.0) << ','
        << fmt(b.point_m.mean * 1000.0) << ',' << fmt(b.point_m.median * 1000.0) << ','
        << fmt(b.point_m.p95 * 1000.0) << '\n';
  }
}

}  // namespace

void write_report_csvs(const EvaluationReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);

  {
    std::ofstream out(out_dir / "table1.csv", std::ios::binary);
    if (!out) raise(Errc::io, "cannot write " + (out_dir / "table1.csv").string());
    out << "method,metric,mean,median,p95\n";
    out << report.method << ",angular_error_deg," << fmt(report.angular_deg.mean) << ','
        << fmt(report.angular_deg.median) << ',' << fmt(report.angular_deg.p95) << '\n';
    out << report.method << ",linear_error_mm," << fmt(report.linear_m.mean * 1000.0) << ','
        << fmt(report.linear_m.median * 1000.0) << ',' << fmt(report.linear_m.p95 * 1000.0)
        << '\n';
    out << report.method << ",point_error_mm," << fmt(report.point_m.mean * 1000.0) << ','
        << fmt(report.point_m.median * 1000.0) << ',' << fmt(report.point_m.p95 * 1000.0)
        << '\n';
  }

  write_bucket_csv(out_dir / "fig4_aoi_buckets.csv", report.theta_buckets,
                   "theta_bucket_center_deg", 1.0);
  write_bucket_csv(out_dir / "fig5_dist_buckets.csv", report.z0_buckets,
                   "z0_bucket_center_mm", 1000.0);

  bool any_albedo = false;
  for (const RecordErrors& r : report.records)
    if (r.recovered_albedo) any_albedo = true;
  if (any_albedo) {
    std::ofstream out(out_dir / "fig7_albedo.csv", std::ios::binary);
    if (!out) raise(Errc::io, "cannot write " + (out_dir / "fig7_albedo.csv").string());
    out << "record_id,truth_albedo,recovered_albedo\n";
    for (const RecordErrors& r : report.records) {
      if (!r.recovered_albedo) continue;
      out << r.id << ',' << fmt(r.truth_albedo.value_or(-1.0)) << ','
          << fmt(*r.recovered_albedo) << '\n';
    }
  }
}

}  // namespace tofplane
