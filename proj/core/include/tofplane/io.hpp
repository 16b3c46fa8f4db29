#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tofplane/recovery.hpp"
#include "tofplane/simulate.hpp"

// Text formats: single-object JSON for parameter files (versioned, units in
// field names), JSON Lines for datasets and recovery results. Doubles are
// emitted shortest-round-trip, so parse(serialize(x)) == x bit-exactly and
// reruns produce byte-identical files.

namespace tofplane::io {

inline constexpr int kFormatVersion = 1;

std::string camera_to_json(const CameraParams& c);
CameraParams camera_from_json(const std::string& text, const std::string& context = "<camera>");
void save_camera(const std::filesystem::path& path, const CameraParams& c);
CameraParams load_camera(const std::filesystem::path& path);

std::string peaks_to_json(const PeakParams& p);
PeakParams peaks_from_json(const std::string& text, const std::string& context = "<peaks>");
void save_peaks(const std::filesystem::path& path, const PeakParams& p);
PeakParams load_peaks(const std::filesystem::path& path);

std::string sweep_to_json(const SweepSpec& s);
SweepSpec sweep_from_json(const std::string& text, const std::string& context = "<sweep>");
void save_sweep(const std::filesystem::path& path, const SweepSpec& s);
SweepSpec load_sweep(const std::filesystem::path& path);

std::string record_to_line(const MeasurementRecord& record);
MeasurementRecord record_from_line(const std::string& line,
                                   const std::string& context = "<record>");
void save_dataset(const std::filesystem::path& path,
                  std::span<const MeasurementRecord> records);
std::vector<MeasurementRecord> load_dataset(const std::filesystem::path& path);

/// One line of a recovery results file: either a result or a per-record
/// failure message.
struct StoredResult {
  std::int64_t id = 0;
  std::optional<RecoveryResult> result;
  std::string error;  // nonempty when the record failed
};

std::string result_to_line(const StoredResult& r);
StoredResult result_from_line(const std::string& line, const std::string& context = "<result>");
void save_results(const std::filesystem::path& path, std::span<const StoredResult> results);
std::vector<StoredResult> load_results(const std::filesystem::path& path);

std::string method_name(RecoveryMethod m);
RecoveryMethod method_from_name(const std::string& name);

}  // namespace tofplane::io
