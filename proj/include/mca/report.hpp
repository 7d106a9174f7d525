#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mca/cueing.hpp"
#include "mca/metrics.hpp"

namespace mca {

struct TraceResult {
  std::string label;
  ObjectiveBreakdown metrics;
  TimingStats timing;
  int flagged_steps = 0;
  bool failed = false;
  std::string error;
};

struct AlgorithmResult {
  std::string name;
  std::vector<TraceResult> traces;
  TimingStats timing;  ///< over every tick of every trace

  /// Objective per trace; NaN for failed traces.
  std::vector<double> objectives() const;
};

struct PairwiseTest {
  std::string first, second;
  WilcoxonResult result;
  bool significant = false;  ///< p < alpha
  std::string note;          ///< set when the test could not be run
};

struct EvaluationReport {
  std::vector<AlgorithmResult> algorithms;
  std::vector<PairwiseTest> tests;
  double alpha = 0.05;
};

struct EvaluateOptions {
  /// Per-trace cue, pose and joint CSVs go here when non-empty.
  std::filesystem::path trace_dir;
};

/// Runs every trace through the algorithm and the platform model. Per-trace failures
/// are recorded in the result instead of aborting the evaluation.
AlgorithmResult evaluate_mca(MotionCueingAlgorithm& mca, const std::vector<ReferenceTrace>& traces,
                             const EvaluateOptions& options = {});

/// Adds an exact signed-rank test for every pair of algorithms over their common successful traces.
EvaluationReport assemble_report(std::vector<AlgorithmResult> algorithms, double alpha = 0.05);

/// Objective matrix: one row per trace, one column per algorithm.
void write_objective_csv(const EvaluationReport& report, const std::filesystem::path& path);
/// Per-channel RMSE and PCC blocks per algorithm and trace.
void write_channel_csv(const EvaluationReport& report, const std::filesystem::path& path);
void write_timing_csv(const EvaluationReport& report, const std::filesystem::path& path);
void write_wilcoxon_csv(const EvaluationReport& report, const std::filesystem::path& path);
void write_summary_json(const EvaluationReport& report, const std::filesystem::path& path);
/// All of the above into `dir` with fixed file names.
void write_report(const EvaluationReport& report, const std::filesystem::path& dir);

/// "t q1 .. q6 flag" with round-trip precision; shared by batch and stream output.
std::string joint_line(double t, const TickOutput& tick, char separator);
std::string joint_csv_header();

}  // namespace mca
