#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mca/cueing.hpp"
#include "mca/report.hpp"
#include "mca/robot.hpp"
#include "mca/trainer.hpp"
#include "mca/washout.hpp"

namespace mca {

enum class Profile { Desk, Paper };

Profile parse_profile(const std::string& name);
std::string to_string(Profile profile);

/// Everything a subcommand needs. Loaded from a JSON config, then overridden by flags.
struct RunConfig {
  std::string subcommand;
  std::filesystem::path robot;  ///< empty: built-in reference robot
  std::uint64_t seed = 1;
  std::filesystem::path weights;
  std::filesystem::path out = "out";
  Profile profile = Profile::Desk;

  std::filesystem::path data = "out/data";
  DatasetLayout layout;
  PpoConfig ppo = PpoConfig::desk();
  RewardWeights reward;

  std::filesystem::path washout;  ///< filter parameter file; empty: defaults
  int tune_budget = 500;
  int tune_traces = 0;  ///< training traces used for tuning; 0: all
  int threads = 1;

  /// Throws IoError for referenced files or directories that do not exist.
  void validate_paths() const;
  RobotModel load_robot_model() const;
};

/// Reads a JSON run config. Unknown keys are rejected. `profile` selects the PPO base
/// before the `ppo` overrides are applied.
RunConfig load_run_config(const std::filesystem::path& path, std::optional<Profile> profile_override = {});

struct ManifestEntry {
  std::string split;
  std::string file;  ///< relative to the dataset directory
  std::string label;
  std::size_t samples = 0;
  std::uint64_t hash = 0;
};

struct DatasetManifest {
  std::uint64_t seed = 0;
  double dt = kControlPeriod;
  std::vector<ManifestEntry> entries;
};

/// Writes train/, test/, validation/ trace CSVs and manifest.json under out_dir.
DatasetManifest cmd_gen_data(std::uint64_t seed, const std::filesystem::path& out_dir,
                             const DatasetLayout& layout = {});

/// Loads a dataset written by cmd_gen_data, verifying every content hash.
Datasets load_dataset(const std::filesystem::path& dir);
/// One split ("train", "test" or "validation").
std::vector<ReferenceTrace> load_split(const std::filesystem::path& dir, const std::string& split);

/// Writes best_actor.mcaw, actor.mcaw, critic.mcaw and train_log.csv to cfg.out.
TrainResult cmd_train(const RunConfig& cfg, std::ostream& log);

struct EvaluateRequest {
  std::filesystem::path data;  ///< dataset directory
  std::string split = "validation";
  std::filesystem::path weights;           ///< DRL actor, optional
  std::optional<FilterParams> washout;     ///< CW, optional
  bool oracle = false;
  bool zero_motion = false;
  std::filesystem::path out;
  bool trace_files = true;
};

/// Writes the report files to out/ and per-trace CSVs to out/traces/.
EvaluationReport cmd_evaluate(const EvaluateRequest& request, const Platform& platform);

/// Tunes from `initial` on the training split; writes washout_tuned.json and tuning_log.csv to cfg.out.
TuneResult cmd_tune_washout(const RunConfig& cfg, const FilterParams& initial, const Platform& platform);

struct StreamOptions {
  bool realtime = false;  ///< pace ticks on the monotonic clock
  double dt = kControlPeriod;
};

struct StreamStats {
  std::size_t ticks = 0;
  std::size_t overruns = 0;  ///< ticks whose compute time exceeded dt
  TimingStats latency;
};

/// Parses one input frame "t fx fy fz wx wy wz". Throws ProtocolError naming `line_number`.
ReferenceSample parse_stream_frame(const std::string& line, std::size_t line_number);

/// Closed loop over text frames until end of input. Blank lines are skipped.
StreamStats cmd_stream(MotionCueingAlgorithm& mca, std::istream& in, std::ostream& out,
                       const StreamOptions& options = {});

/// Listens on host:port, serves one client with cmd_stream and returns at its end of stream.
StreamStats serve_stream_tcp(MotionCueingAlgorithm& mca, const std::string& host, int port,
                             const StreamOptions& options = {}, std::ostream* log = nullptr);

/// Full command line; returns the process exit code. Diagnostics go to `err` as one line.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace mca
