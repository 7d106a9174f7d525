#include "mca/report.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "mca/channels.hpp"
#include "mca/errors.hpp"
#include "mca/util.hpp"

namespace mca {

namespace {

constexpr const char* kChannelNames[6] = {"fx", "fy", "fz", "wx", "wy", "wz"};

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string safe_name(std::string s) {
  for (char& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

void write_trace_files(const std::filesystem::path& dir, const std::string& algorithm, const ReferenceTrace& trace,
                       const TraceRecord& record) {
  const std::string stem = safe_name(algorithm) + "_" + safe_name(trace.label);
  auto cues = open_out(dir / (stem + "_cues.csv"));
  cues << "t,ref_fx,ref_fy,ref_fz,ref_wx,ref_wy,ref_wz,fx,fy,fz,wx,wy,wz\n";
  auto pose = open_out(dir / (stem + "_pose.csv"));
  pose << "t,x,y,z,roll,pitch,yaw\n";
  auto joints = open_out(dir / (stem + "_joints.csv"));
  joints << joint_csv_header() << '\n';
  for (std::size_t k = 0; k < record.ticks.size(); ++k) {
    const ReferenceSample& s = trace.samples[k];
    const TickOutput& t = record.ticks[k];
    cues << format_double(s.t);
    for (int i = 0; i < 6; ++i) cues << ',' << format_double(s.channel(i));
    for (int i = 0; i < 3; ++i) cues << ',' << format_double(t.cue.specific_force(i));
    for (int i = 0; i < 3; ++i) cues << ',' << format_double(t.cue.angular_velocity(i));
    cues << '\n';
    pose << format_double(s.t);
    for (int i = 0; i < 3; ++i) pose << ',' << format_double(t.pose.position(i));
    for (int i = 0; i < 3; ++i) pose << ',' << format_double(t.euler(i));
    pose << '\n';
    joints << joint_line(s.t, t, ',') << '\n';
  }
}

}  // namespace

std::vector<double> AlgorithmResult::objectives() const {
  std::vector<double> v;
  for (const auto& t : traces) v.push_back(t.failed ? std::numeric_limits<double>::quiet_NaN() : t.metrics.value);
  return v;
}

std::string joint_line(double t, const TickOutput& tick, char sep) {
  std::string line = format_double(t);
  for (int i = 0; i < 6; ++i) {
    line += sep;
    line += format_double(tick.q(i));
  }
  line += sep;
  line += tick.flagged ? '1' : '0';
  return line;
}

std::string joint_csv_header() { return "t,q1,q2,q3,q4,q5,q6,flag"; }

AlgorithmResult evaluate_mca(MotionCueingAlgorithm& mca, const std::vector<ReferenceTrace>& traces,
                             const EvaluateOptions& options) {
  AlgorithmResult result;
  result.name = mca.name();
  if (!options.trace_dir.empty()) std::filesystem::create_directories(options.trace_dir);
  std::vector<double> all_ticks;
  for (const auto& trace : traces) {
    TraceResult tr;
    tr.label = trace.label;
    try {
      const TraceRecord record = run_trace(mca, trace);
      tr.metrics = objective_breakdown(achieved_channels(record), reference_channels(trace));
      tr.timing = timing_stats(record.tick_seconds);
      for (const auto& t : record.ticks) tr.flagged_steps += t.flagged ? 1 : 0;
      all_ticks.insert(all_ticks.end(), record.tick_seconds.begin(), record.tick_seconds.end());
      if (!options.trace_dir.empty()) write_trace_files(options.trace_dir, result.name, trace, record);
    } catch (const Error& e) {
      tr.failed = true;
      tr.error = e.what();
    }
    result.traces.push_back(tr);
  }
  if (!all_ticks.empty()) result.timing = timing_stats(all_ticks);
  return result;
}

EvaluationReport assemble_report(std::vector<AlgorithmResult> algorithms, double alpha) {
  EvaluationReport report;
  report.alpha = alpha;
  report.algorithms = std::move(algorithms);
  for (std::size_t i = 0; i < report.algorithms.size(); ++i) {
    for (std::size_t j = i + 1; j < report.algorithms.size(); ++j) {
      PairwiseTest test;
      test.first = report.algorithms[i].name;
      test.second = report.algorithms[j].name;
      const auto a = report.algorithms[i].objectives();
      const auto b = report.algorithms[j].objectives();
      std::vector<double> x, y;
      for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) {
        if (std::isfinite(a[k]) && std::isfinite(b[k])) {
          x.push_back(a[k]);
          y.push_back(b[k]);
        }
      }
      try {
        test.result = wilcoxon_signed_rank(x, y);
        test.significant = test.result.p_value < alpha;
      } catch (const Error& e) {
        test.result.p_value = std::numeric_limits<double>::quiet_NaN();
        test.note = e.what();
      }
      report.tests.push_back(test);
    }
  }
  return report;
}

void write_objective_csv(const EvaluationReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "trace";
  for (const auto& a : report.algorithms) out << ',' << a.name;
  out << '\n';
  const std::size_t rows = report.algorithms.empty() ? 0 : report.algorithms.front().traces.size();
  for (std::size_t r = 0; r < rows; ++r) {
    out << report.algorithms.front().traces[r].label;
    for (const auto& a : report.algorithms) {
      out << ',';
      if (r < a.traces.size() && !a.traces[r].failed) out << format_double(a.traces[r].metrics.value);
    }
    out << '\n';
  }
}

void write_channel_csv(const EvaluationReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "algorithm,trace";
  for (const char* c : kChannelNames) out << ",rmse_" << c;
  for (const char* c : kChannelNames) out << ",pcc_" << c;
  out << ",objective,degenerate_channels,flagged_steps,error\n";
  for (const auto& a : report.algorithms) {
    for (const auto& t : a.traces) {
      out << a.name << ',' << t.label;
      for (int c = 0; c < 6; ++c) out << ',' << (t.failed ? std::string() : format_double(t.metrics.rmse[c]));
      for (int c = 0; c < 6; ++c)
        out << ',' << (t.failed || t.metrics.degenerate[c] ? std::string() : format_double(t.metrics.pcc[c]));
      out << ',' << (t.failed ? std::string() : format_double(t.metrics.value)) << ',';
      std::string degenerate;
      for (int c = 0; c < 6; ++c) {
        if (!t.failed && t.metrics.degenerate[c]) degenerate += (degenerate.empty() ? "" : ";") + std::string(kChannelNames[c]);
      }
      out << degenerate << ',' << t.flagged_steps << ',' << t.error << '\n';
    }
  }
}

void write_timing_csv(const EvaluationReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "algorithm,mean_ms,std_ms,max_ms,ticks,real_time\n";
  for (const auto& a : report.algorithms) {
    out << a.name << ',' << format_double(1e3 * a.timing.mean) << ',' << format_double(1e3 * a.timing.stddev) << ','
        << format_double(1e3 * a.timing.max) << ',' << a.timing.count << ',' << (a.timing.real_time ? 1 : 0) << '\n';
  }
}

void write_wilcoxon_csv(const EvaluationReport& report, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "first,second,n,statistic,p_value,significant,note\n";
  for (const auto& t : report.tests) {
    out << t.first << ',' << t.second << ',' << t.result.n << ',' << format_double(t.result.statistic) << ','
        << format_double(t.result.p_value) << ',' << (t.significant ? 1 : 0) << ',' << t.note << '\n';
  }
}

void write_summary_json(const EvaluationReport& report, const std::filesystem::path& path) {
  using nlohmann::json;
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  json j;
  j["alpha"] = report.alpha;
  for (const auto& a : report.algorithms) {
    json ja;
    ja["name"] = a.name;
    ja["timing_ms"] = {{"mean", 1e3 * a.timing.mean}, {"std", 1e3 * a.timing.stddev}, {"max", 1e3 * a.timing.max},
                       {"real_time", a.timing.real_time}};
    double sum = 0.0;
    int ok = 0;
    for (const auto& t : a.traces) {
      json jt;
      jt["trace"] = t.label;
      jt["failed"] = t.failed;
      if (t.failed) {
        jt["error"] = t.error;
      } else {
        jt["objective"] = t.metrics.value;
        jt["rmse"] = t.metrics.rmse;
        json pccs = json::array();
        for (double p : t.metrics.pcc) pccs.push_back(num(p));
        jt["pcc"] = pccs;
        jt["flagged"] = t.metrics.flagged();
        jt["flagged_steps"] = t.flagged_steps;
        sum += t.metrics.value;
        ++ok;
      }
      ja["traces"].push_back(jt);
    }
    ja["mean_objective"] = ok > 0 ? json(sum / ok) : json(nullptr);
    j["algorithms"].push_back(ja);
  }
  for (const auto& t : report.tests) {
    j["tests"].push_back({{"first", t.first},
                          {"second", t.second},
                          {"n", t.result.n},
                          {"statistic", t.result.statistic},
                          {"p_value", num(t.result.p_value)},
                          {"significant", t.significant},
                          {"note", t.note}});
  }
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

void write_report(const EvaluationReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_objective_csv(report, dir / "objectives.csv");
  write_channel_csv(report, dir / "channels.csv");
  write_timing_csv(report, dir / "timing.csv");
  write_wilcoxon_csv(report, dir / "wilcoxon.csv");
  write_summary_json(report, dir / "summary.json");
}

}  // namespace mca
