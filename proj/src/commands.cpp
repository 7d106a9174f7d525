#include "mca/commands.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <streambuf>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mca/channels.hpp"
#include "mca/errors.hpp"
#include "mca/util.hpp"

namespace mca {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kSplits[3] = {"train", "test", "validation"};

void require_exists(const fs::path& p, const std::string& what) {
  if (!p.empty() && !fs::exists(p)) throw IoError(what + " not found: " + p.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed) ok = ok || item.key() == k;
    if (!ok) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

template <typename T>
void read_if(const json& j, const char* key, T& value) {
  if (!j.contains(key)) return;
  try {
    value = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for '") + key + "'");
  }
}

void apply_ppo(const json& j, PpoConfig& p) {
  check_keys(j,
             {"n_steps", "batch_size", "learning_rate", "gamma", "n_epochs", "clip_range", "gae_lambda", "ent_coef",
              "vf_coef", "max_grad_norm", "adam_eps", "normalize_advantage", "total_steps", "n_envs", "hidden",
              "log_std_init", "reward_scale", "eval_interval", "threads"},
             "ppo");
  read_if(j, "n_steps", p.n_steps);
  read_if(j, "batch_size", p.batch_size);
  read_if(j, "learning_rate", p.learning_rate);
  read_if(j, "gamma", p.gamma);
  read_if(j, "n_epochs", p.n_epochs);
  read_if(j, "clip_range", p.clip_range);
  read_if(j, "gae_lambda", p.gae_lambda);
  read_if(j, "ent_coef", p.ent_coef);
  read_if(j, "vf_coef", p.vf_coef);
  read_if(j, "max_grad_norm", p.max_grad_norm);
  read_if(j, "adam_eps", p.adam_eps);
  read_if(j, "normalize_advantage", p.normalize_advantage);
  read_if(j, "total_steps", p.total_steps);
  read_if(j, "n_envs", p.n_envs);
  read_if(j, "hidden", p.hidden);
  read_if(j, "log_std_init", p.log_std_init);
  read_if(j, "reward_scale", p.reward_scale);
  read_if(j, "eval_interval", p.eval_interval);
  read_if(j, "threads", p.threads);
}

std::vector<ReferenceTrace> traces_of(const Datasets& d, const std::string& split) {
  if (split == "train") return d.train;
  if (split == "test") return d.test;
  if (split == "validation") return d.validation;
  throw ConfigError("unknown split '" + split + "'");
}

DatasetManifest read_manifest(const fs::path& dir) {
  const fs::path path = dir / "manifest.json";
  if (!fs::exists(path)) throw IoError("dataset not found: " + path.string() + " is missing (run gen-data first)");
  const json j = read_json(path);
  DatasetManifest m;
  try {
    m.seed = j.at("seed").get<std::uint64_t>();
    m.dt = j.at("dt").get<double>();
    for (const auto& e : j.at("files")) {
      ManifestEntry entry;
      entry.split = e.at("split").get<std::string>();
      entry.file = e.at("file").get<std::string>();
      entry.label = e.at("label").get<std::string>();
      entry.samples = e.at("samples").get<std::size_t>();
      entry.hash = std::stoull(e.at("hash").get<std::string>(), nullptr, 16);
      m.entries.push_back(entry);
    }
  } catch (const std::exception& e) {
    throw ConfigError(path.string() + ": malformed manifest (" + e.what() + ")");
  }
  return m;
}

ReferenceTrace load_entry(const fs::path& dir, const ManifestEntry& e) {
  ReferenceTrace trace = load_trace(dir / e.file);
  trace.label = e.label;
  if (trace.size() != e.samples || trace_hash(trace) != e.hash)
    throw CorruptFile("dataset file " + e.file + " does not match its manifest entry");
  return trace;
}

/// std::streambuf over a connected socket.
class SocketBuf : public std::streambuf {
 public:
  explicit SocketBuf(int fd) : fd_(fd) {
    setg(in_, in_, in_);
    setp(out_, out_ + sizeof(out_));
  }
  ~SocketBuf() override { sync(); }

 protected:
  int_type underflow() override {
    const ssize_t n = ::recv(fd_, in_, sizeof(in_), 0);
    if (n <= 0) return traits_type::eof();
    setg(in_, in_, in_ + n);
    return traits_type::to_int_type(in_[0]);
  }
  int_type overflow(int_type ch) override {
    if (sync() != 0) return traits_type::eof();
    if (!traits_type::eq_int_type(ch, traits_type::eof())) {
      *pptr() = traits_type::to_char_type(ch);
      pbump(1);
    }
    return traits_type::not_eof(ch);
  }
  int sync() override {
    char* p = pbase();
    while (p < pptr()) {
      const ssize_t n = ::send(fd_, p, static_cast<std::size_t>(pptr() - p), MSG_NOSIGNAL);
      if (n <= 0) return -1;
      p += n;
    }
    setp(out_, out_ + sizeof(out_));
    return 0;
  }

 private:
  int fd_;
  char in_[4096];
  char out_[4096];
};

struct Fd {
  int fd = -1;
  ~Fd() {
    if (fd >= 0) ::close(fd);
  }
};

}  // namespace

Profile parse_profile(const std::string& name) {
  if (name == "desk") return Profile::Desk;
  if (name == "paper" || name == "paper-scale") return Profile::Paper;
  throw ConfigError("unknown profile '" + name + "' (expected desk or paper-scale)");
}

std::string to_string(Profile profile) { return profile == Profile::Desk ? "desk" : "paper-scale"; }

void RunConfig::validate_paths() const {
  require_exists(robot, "robot description");
  require_exists(weights, "weight file");
  require_exists(washout, "washout parameter file");
}

RobotModel RunConfig::load_robot_model() const { return robot.empty() ? reference_robot() : load_robot(robot); }

RunConfig load_run_config(const fs::path& path, std::optional<Profile> profile_override) {
  const json j = read_json(path);
  check_keys(j,
             {"robot", "seed", "profile", "weights", "out", "data", "dataset", "ppo", "reward_weights", "action_bounds",
              "reference", "washout", "threads"},
             "config");
  RunConfig cfg;
  const auto read_path = [](const json& o, const char* key, fs::path& value) {
    std::string s;
    read_if(o, key, s);
    if (o.contains(key)) value = s;
  };
  read_path(j, "robot", cfg.robot);
  read_if(j, "seed", cfg.seed);
  read_path(j, "weights", cfg.weights);
  read_path(j, "out", cfg.out);
  read_path(j, "data", cfg.data);
  if (j.contains("profile")) {
    std::string name;
    read_if(j, "profile", name);
    cfg.profile = parse_profile(name);
  }
  if (profile_override) cfg.profile = *profile_override;
  cfg.ppo = cfg.profile == Profile::Paper ? PpoConfig::paper() : PpoConfig::desk();
  if (j.contains("ppo")) apply_ppo(j.at("ppo"), cfg.ppo);
  read_if(j, "threads", cfg.threads);
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    check_keys(d,
               {"train_traces", "train_duration", "test_traces", "test_duration", "validation_traces",
                "validation_duration"},
               "dataset");
    read_if(d, "train_traces", cfg.layout.train_traces);
    read_if(d, "train_duration", cfg.layout.train_duration);
    read_if(d, "test_traces", cfg.layout.test_traces);
    read_if(d, "test_duration", cfg.layout.test_duration);
    read_if(d, "validation_traces", cfg.layout.validation_traces);
    read_if(d, "validation_duration", cfg.layout.validation_duration);
  }
  if (j.contains("reward_weights")) {
    const json& r = j.at("reward_weights");
    check_keys(r, {"force", "angular", "position"}, "reward_weights");
    read_if(r, "force", cfg.reward.force);
    read_if(r, "angular", cfg.reward.angular);
    read_if(r, "position", cfg.reward.position);
  }
  if (j.contains("action_bounds")) {
    const json& a = j.at("action_bounds");
    check_keys(a, {"jerk", "angular"}, "action_bounds");
    read_if(a, "jerk", cfg.ppo.action_bounds.jerk);
    read_if(a, "angular", cfg.ppo.action_bounds.angular);
  }
  if (j.contains("reference")) {
    const json& r = j.at("reference");
    check_keys(r, {"scale", "clip"}, "reference");
    for (const char* key : {"scale", "clip"}) {
      if (r.contains(key) && (!r.at(key).is_array() || r.at(key).size() != 6))
        throw ConfigError(std::string("reference: '") + key + "' needs 6 values");
    }
    read_if(r, "scale", cfg.ppo.reference_preprocess.scale);
    read_if(r, "clip", cfg.ppo.reference_preprocess.clip);
  }
  if (j.contains("washout")) {
    const json& w = j.at("washout");
    check_keys(w, {"params", "budget", "tune_traces"}, "washout");
    read_path(w, "params", cfg.washout);
    read_if(w, "budget", cfg.tune_budget);
    read_if(w, "tune_traces", cfg.tune_traces);
  }
  cfg.ppo.validate();
  cfg.reward.validate();
  return cfg;
}

DatasetManifest cmd_gen_data(std::uint64_t seed, const fs::path& out_dir, const DatasetLayout& layout) {
  const Datasets data = build_datasets(seed, layout);
  DatasetManifest m;
  m.seed = seed;
  m.dt = kControlPeriod;
  json files = json::array();
  for (const char* split : kSplits) {
    make_dirs(out_dir / split);
    for (const auto& trace : traces_of(data, split)) {
      ManifestEntry e{split, std::string(split) + "/" + trace.label + ".csv", trace.label, trace.size(),
                      trace_hash(trace)};
      save_trace(trace, out_dir / e.file);
      files.push_back({{"split", e.split},
                       {"file", e.file},
                       {"label", e.label},
                       {"samples", e.samples},
                       {"hash", to_hex(e.hash)}});
      m.entries.push_back(e);
    }
  }
  json j{{"seed", seed}, {"dt", m.dt}, {"files", files}};
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (out_dir / "manifest.json").string());
  out << j.dump(2) << '\n';
  return m;
}

std::vector<ReferenceTrace> load_split(const fs::path& dir, const std::string& split) {
  if (split != "train" && split != "test" && split != "validation") throw ConfigError("unknown split '" + split + "'");
  const DatasetManifest m = read_manifest(dir);
  std::vector<ReferenceTrace> out;
  for (const auto& e : m.entries) {
    if (e.split == split) out.push_back(load_entry(dir, e));
  }
  if (out.empty()) throw IoError("dataset " + dir.string() + " has no " + split + " traces");
  return out;
}

Datasets load_dataset(const fs::path& dir) {
  return {load_split(dir, "train"), load_split(dir, "test"), load_split(dir, "validation")};
}

TrainResult cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate_paths();
  if (cfg.profile == Profile::Paper)
    log << "warning: paper-scale profile selected; training takes approximately 24 h on a workstation\n";
  const Datasets data = load_dataset(cfg.data);
  const Platform platform(cfg.load_robot_model());
  make_dirs(cfg.out);

  std::ofstream csv(cfg.out / "train_log.csv");
  if (!csv) throw IoError("cannot write " + (cfg.out / "train_log.csv").string());
  csv << train_log_header() << '\n';
  TrainOptions opts;
  opts.on_iteration = [&](const TrainLogRow& row) {
    csv << train_log_row(row) << '\n';
    csv.flush();
    if (std::isfinite(row.test_objective)) {
      log << "iteration " << row.iteration << " steps " << row.steps << " test objective "
          << format_double(row.test_objective) << '\n';
    }
  };
  PpoConfig ppo = cfg.ppo;
  ppo.threads = std::max(ppo.threads, cfg.threads);
  TrainResult result = train(ppo, data.train, data.test, platform, cfg.reward, cfg.seed, opts);
  save_weights(result.best_actor, result.normalization, cfg.out / "best_actor.mcaw");
  save_weights(result.actor, result.normalization, cfg.out / "actor.mcaw");
  save_weights(result.critic, result.normalization, cfg.out / "critic.mcaw");
  log << "untrained test objective " << format_double(result.initial_test_objective) << ", best "
      << format_double(result.best_test_objective) << '\n';
  return result;
}

EvaluationReport cmd_evaluate(const EvaluateRequest& request, const Platform& platform) {
  require_exists(request.weights, "weight file");
  const std::vector<ReferenceTrace> traces = load_split(request.data, request.split);

  std::vector<std::unique_ptr<MotionCueingAlgorithm>> algorithms;
  if (request.washout) algorithms.push_back(std::make_unique<WashoutCueing>(*request.washout, platform));
  if (!request.weights.empty()) {
    WeightFile w = load_weights(request.weights);
    algorithms.push_back(std::make_unique<DrlCueing>(std::move(w.network), w.normalization, platform));
  }
  if (request.oracle) algorithms.push_back(std::make_unique<ReplayCueing>(platform));
  if (request.zero_motion) algorithms.push_back(std::make_unique<HoldCueing>(platform));
  if (algorithms.empty()) throw ConfigError("evaluate: no algorithm selected (use --weights, --washout, --oracle or --zero-motion)");

  make_dirs(request.out);
  EvaluateOptions opts;
  if (request.trace_files) opts.trace_dir = request.out / "traces";
  std::vector<AlgorithmResult> results;
  for (auto& a : algorithms) results.push_back(evaluate_mca(*a, traces, opts));
  EvaluationReport report = assemble_report(std::move(results));
  write_report(report, request.out);
  return report;
}

TuneResult cmd_tune_washout(const RunConfig& cfg, const FilterParams& initial, const Platform& platform) {
  std::vector<ReferenceTrace> traces = load_split(cfg.data, "train");
  if (cfg.tune_traces > 0 && static_cast<std::size_t>(cfg.tune_traces) < traces.size())
    traces.resize(static_cast<std::size_t>(cfg.tune_traces));
  make_dirs(cfg.out);
  TuneOptions opts;
  opts.search.budget = cfg.tune_budget;
  opts.search.seed = cfg.seed;
  opts.search.threads = cfg.threads;
  opts.log_path = cfg.out / "tuning_log.csv";
  TuneResult result = tune_filters(initial, traces, FilterBounds::defaults(), platform, opts);
  save_filter_params(result.params, cfg.out / "washout_tuned.json");
  return result;
}

ReferenceSample parse_stream_frame(const std::string& line, std::size_t line_number) {
  double v[7];
  const char* p = line.data();
  const char* end = p + line.size();
  int n = 0;
  while (true) {
    while (p < end && (*p == ' ' || *p == '\t' || *p == '\r')) ++p;
    if (p == end) break;
    if (n == 7) throw ProtocolError(line_number, "expected 7 fields, got more");
    const auto [next, ec] = std::from_chars(p, end, v[n]);
    if (ec != std::errc() || (next < end && *next != ' ' && *next != '\t' && *next != '\r'))
      throw ProtocolError(line_number, "field " + std::to_string(n + 1) + " is not a number");
    if (!std::isfinite(v[n])) throw ProtocolError(line_number, "field " + std::to_string(n + 1) + " is not finite");
    p = next;
    ++n;
  }
  if (n != 7) throw ProtocolError(line_number, "expected 7 fields, got " + std::to_string(n));
  ReferenceSample s;
  s.t = v[0];
  s.f_ref = Vec3(v[1], v[2], v[3]);
  s.omega_ref = Vec3(v[4], v[5], v[6]);
  return s;
}

StreamStats cmd_stream(MotionCueingAlgorithm& mca, std::istream& in, std::ostream& out, const StreamOptions& options) {
  using clock = std::chrono::steady_clock;
  StreamStats stats;
  std::vector<double> latencies;
  mca.reset();
  std::string line;
  std::size_t line_number = 0;
  const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(options.dt));
  auto deadline = clock::now();
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const ReferenceSample sample = parse_stream_frame(line, line_number);
    const auto start = clock::now();
    const TickOutput tick = mca.tick(sample);
    const double elapsed = std::chrono::duration<double>(clock::now() - start).count();
    latencies.push_back(elapsed);
    if (elapsed > options.dt) ++stats.overruns;
    out << joint_line(sample.t, tick, ' ') << '\n';
    out.flush();
    ++stats.ticks;
    if (options.realtime) {
      deadline += period;
      std::this_thread::sleep_until(deadline);
    }
  }
  if (!latencies.empty()) stats.latency = timing_stats(latencies, options.dt);
  return stats;
}

StreamStats serve_stream_tcp(MotionCueingAlgorithm& mca, const std::string& host, int port,
                             const StreamOptions& options, std::ostream* log) {
  Fd server{::socket(AF_INET, SOCK_STREAM, 0)};
  if (server.fd < 0) throw IoError("stream: cannot create socket");
  const int yes = 1;
  ::setsockopt(server.fd, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) throw ConfigError("stream: bad address '" + host + "'");
  if (::bind(server.fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 || ::listen(server.fd, 1) != 0)
    throw IoError("stream: cannot listen on " + host + ":" + std::to_string(port));
  if (log) *log << "stream: listening on " << host << ':' << port << '\n';
  Fd client{::accept(server.fd, nullptr, nullptr)};
  if (client.fd < 0) throw IoError("stream: accept failed");
  SocketBuf buf(client.fd);
  std::istream in(&buf);
  std::ostream out(&buf);
  return cmd_stream(mca, in, out, options);
}

int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Motion cueing: data generation, training, washout tuning, evaluation and streaming", "mca"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path, profile_name, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "Random seed");
  app.add_option("--profile", profile_name, "desk or paper-scale");
  app.add_option("--out", out_dir, "Output directory");
  app.add_option("--threads", threads, "Worker threads");
  std::string robot_path, data_dir;
  app.add_option("--robot", robot_path, "Robot description file")->check(CLI::ExistingFile);

  auto* gen = app.add_subcommand("gen-data", "Write train/test/validation traces and a manifest");
  gen->add_option("--data", data_dir, "Dataset directory (default <out>/data)");

  auto* train_cmd = app.add_subcommand("train", "Train a cueing policy with PPO");
  train_cmd->add_option("--data", data_dir, "Dataset directory (default <out>/data)");
  long long total_steps = 0;
  train_cmd->add_option("--steps", total_steps, "Total environment steps");

  auto* eval = app.add_subcommand("evaluate", "Evaluate algorithms on a dataset split");
  eval->add_option("--data", data_dir, "Dataset directory (default <out>/data)");
  std::string weights_path, washout_arg, split = "validation";
  bool oracle = false, zero_motion = false, no_traces = false;
  eval->add_option("--weights", weights_path, "Policy weight file")->check(CLI::ExistingFile);
  eval->add_option("--washout", washout_arg, "Washout parameter file, or 'default'");
  eval->add_flag("--oracle", oracle, "Include the reference replay");
  eval->add_flag("--zero-motion", zero_motion, "Include the platform held at home");
  eval->add_option("--split", split, "train, test or validation");
  eval->add_flag("--no-trace-files", no_traces, "Skip per-trace CSVs");

  auto* tune = app.add_subcommand("tune-washout", "Globally tune the washout filter parameters");
  tune->add_option("--data", data_dir, "Dataset directory (default <out>/data)");
  int budget = 0, tune_traces = -1;
  std::string initial_path;
  tune->add_option("--budget", budget, "Objective evaluations");
  tune->add_option("--traces", tune_traces, "Training traces used (0: all)");
  tune->add_option("--initial", initial_path, "Initial parameter file")->check(CLI::ExistingFile);

  auto* stream = app.add_subcommand("stream", "Closed loop over newline-delimited frames");
  std::string stream_weights, stream_washout, listen;
  bool realtime = false;
  stream->add_option("--weights", stream_weights, "Policy weight file")->check(CLI::ExistingFile);
  stream->add_option("--washout", stream_washout, "Washout parameter file, or 'default'");
  stream->add_option("--listen", listen, "HOST:PORT or PORT; standard streams when omitted");
  stream->add_flag("--realtime", realtime, "Pace ticks at the control period");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    std::optional<Profile> profile;
    if (!profile_name.empty()) profile = parse_profile(profile_name);
    RunConfig cfg;
    if (!config_path.empty()) {
      cfg = load_run_config(config_path, profile);
    } else if (profile) {
      cfg.profile = *profile;
      cfg.ppo = *profile == Profile::Paper ? PpoConfig::paper() : PpoConfig::desk();
    }
    const bool data_from_config = !config_path.empty() && read_json(config_path).contains("data");
    if (app.count("--seed")) cfg.seed = seed;
    if (!out_dir.empty()) cfg.out = out_dir;
    if (!robot_path.empty()) cfg.robot = robot_path;
    if (threads > 0) cfg.threads = threads;
    if (!data_dir.empty()) {
      cfg.data = data_dir;
    } else if (!data_from_config) {
      cfg.data = cfg.out / "data";
    }
    auto washout_params = [](const std::string& arg) {
      return arg == "default" ? FilterParams{} : load_filter_params(arg);
    };

    if (gen->parsed()) {
      cfg.subcommand = "gen-data";
      cfg.validate_paths();
      const DatasetManifest m = cmd_gen_data(cfg.seed, cfg.data, cfg.layout);
      out << "wrote " << m.entries.size() << " traces to " << cfg.data.string() << '\n';
    } else if (train_cmd->parsed()) {
      cfg.subcommand = "train";
      if (total_steps > 0) cfg.ppo.total_steps = total_steps;
      cmd_train(cfg, out);
    } else if (eval->parsed()) {
      cfg.subcommand = "evaluate";
      cfg.validate_paths();
      EvaluateRequest req;
      req.data = cfg.data;
      req.split = split;
      req.weights = weights_path.empty() ? cfg.weights : fs::path(weights_path);
      if (!washout_arg.empty()) req.washout = washout_params(washout_arg);
      req.oracle = oracle;
      req.zero_motion = zero_motion;
      req.out = cfg.out / "report";
      req.trace_files = !no_traces;
      const Platform platform(cfg.load_robot_model());
      const EvaluationReport report = cmd_evaluate(req, platform);
      for (const auto& a : report.algorithms) {
        double sum = 0.0;
        int n = 0;
        for (double v : a.objectives()) {
          if (std::isfinite(v)) {
            sum += v;
            ++n;
          }
        }
        out << a.name << ": mean objective " << (n ? format_double(sum / n) : std::string("n/a")) << ", mean tick "
            << format_double(1e3 * a.timing.mean) << " ms\n";
      }
      for (const auto& t : report.tests) {
        out << "wilcoxon " << t.first << " vs " << t.second << ": p = " << format_double(t.result.p_value) << '\n';
      }
      out << "report written to " << req.out.string() << '\n';
    } else if (tune->parsed()) {
      cfg.subcommand = "tune-washout";
      if (budget > 0) cfg.tune_budget = budget;
      if (tune_traces >= 0) cfg.tune_traces = tune_traces;
      cfg.validate_paths();
      const FilterParams initial =
          !initial_path.empty() ? load_filter_params(initial_path)
                                : (cfg.washout.empty() ? FilterParams{} : load_filter_params(cfg.washout));
      const Platform platform(cfg.load_robot_model());
      const TuneResult r = cmd_tune_washout(cfg, initial, platform);
      out << "objective " << format_double(r.initial_objective) << " -> " << format_double(r.objective) << " after "
          << r.evaluations << " evaluations\n";
    } else if (stream->parsed()) {
      cfg.subcommand = "stream";
      cfg.validate_paths();
      if (stream_weights.empty() && stream_washout.empty() && !cfg.weights.empty()) stream_weights = cfg.weights.string();
      if (stream_weights.empty() == stream_washout.empty())
        throw ConfigError("stream: give exactly one of --weights or --washout");
      const Platform platform(cfg.load_robot_model());
      std::unique_ptr<MotionCueingAlgorithm> mca;
      if (!stream_weights.empty()) {
        WeightFile w = load_weights(stream_weights);
        mca = std::make_unique<DrlCueing>(std::move(w.network), w.normalization, platform);
      } else {
        mca = std::make_unique<WashoutCueing>(washout_params(stream_washout), platform);
      }
      StreamOptions opts;
      opts.realtime = realtime;
      opts.dt = platform.dt();
      StreamStats stats;
      if (listen.empty()) {
        stats = cmd_stream(*mca, in, out, opts);
      } else {
        std::string host = "127.0.0.1", port = listen;
        if (const auto colon = listen.rfind(':'); colon != std::string::npos) {
          host = listen.substr(0, colon);
          port = listen.substr(colon + 1);
        }
        int port_number = 0;
        const auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), port_number);
        if (ec != std::errc() || ptr != port.data() + port.size() || port_number <= 0 || port_number > 65535)
          throw ConfigError("stream: bad port '" + port + "'");
        stats = serve_stream_tcp(*mca, host, port_number, opts, &err);
      }
      err << "stream: " << stats.ticks << " ticks, " << stats.overruns << " overruns, mean "
          << format_double(1e3 * stats.latency.mean) << " ms, max " << format_double(1e3 * stats.latency.max)
          << " ms\n";
    }
    return 0;
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    err << "mca: error: " << msg << '\n';
    return 1;
  }
}

}  // namespace mca
