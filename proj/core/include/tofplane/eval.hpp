#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "tofplane/io.hpp"

namespace tofplane {

struct MetricAggregate {
  double mean = 0.0;
  double median = 0.0;
  double p95 = 0.0;  // nearest-rank 95th percentile
};

struct RecordErrors {
  std::int64_t id = 0;
  double angular_deg = 0.0;
  double linear_m = 0.0;
  double point_m = 0.0;
  double truth_theta_deg = 0.0;
  double truth_z0_m = 0.0;
  std::optional<double> truth_albedo;
  std::optional<double> recovered_albedo;
};

struct ErrorBucket {
  double center = 0.0;  // bucket center, in the bucketed quantity's unit
  int count = 0;
  MetricAggregate angular_deg;
  MetricAggregate linear_m;
  MetricAggregate point_m;
};

/// Per-record plane errors with aggregates and the per-theta / per-distance
/// breakdowns used by the report files.
struct EvaluationReport {
  std::vector<RecordErrors> records;
  MetricAggregate angular_deg;
  MetricAggregate linear_m;
  MetricAggregate point_m;
  std::vector<ErrorBucket> theta_buckets;  // 5 degree buckets
  std::vector<ErrorBucket> z0_buckets;     // 54 mm buckets
  std::string method;
  int skipped_errors = 0;  // results that carried a per-record failure
};

double percentile_nearest_rank(std::span<const double> values, double pct);
double median_value(std::span<const double> values);

/// Joins results to ground truth by record id and computes the three plane
/// metrics per record. Ids present on one side only are an error listing the
/// orphans; results carrying per-record failures are skipped (counted).
EvaluationReport evaluate_results(std::span<const io::StoredResult> results,
                                  std::span<const MeasurementRecord> dataset,
                                  const FieldOfView& fov);

/// Writes summary.csv-style tables: table1.csv, fig4_aoi_buckets.csv,
/// fig5_dist_buckets.csv, and (when albedo data exists) fig7_albedo.csv.
void write_report_csvs(const EvaluationReport& report, const std::filesystem::path& out_dir);

}  // namespace tofplane
