#include "mca/robot.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include <json.hpp>

#include "mca/errors.hpp"

namespace mca {

namespace {

using nlohmann::json;
constexpr double kPi = std::numbers::pi;

JointVector vec_from_json(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("robot description: missing '") + key + "'");
  const auto& arr = j.at(key);
  if (!arr.is_array() || arr.size() != 6)
    throw ConfigError(std::string("robot description: '") + key + "' must hold 6 numbers");
  JointVector v;
  for (int i = 0; i < 6; ++i) v(i) = arr.at(i).get<double>();
  return v;
}

json vec_to_json(const JointVector& v) { return json(std::vector<double>(v.data(), v.data() + 6)); }

}  // namespace

void JointLimits::validate() const {
  for (int i = 0; i < 6; ++i) {
    const std::string joint = "joint " + std::to_string(i + 1);
    if (!(q_min(i) < q_max(i))) throw ConfigError(joint + ": position_min must be < position_max");
    if (!(qd_min(i) < 0.0 && 0.0 < qd_max(i)))
      throw ConfigError(joint + ": velocity range must contain zero strictly");
    if (!(qdd_min(i) < 0.0 && 0.0 < qdd_max(i)))
      throw ConfigError(joint + ": acceleration range must contain zero strictly");
  }
}

void RobotModel::validate() const {
  for (const auto& row : dh) {
    if (!std::isfinite(row.a) || !std::isfinite(row.alpha) || !std::isfinite(row.d) ||
        !std::isfinite(row.theta_offset))
      throw ConfigError("robot description: non-finite DH entry");
  }
  limits.validate();
  for (int i = 0; i < 6; ++i) {
    if (home(i) < limits.q_min(i) || home(i) > limits.q_max(i))
      throw ConfigError("robot description: home outside joint " + std::to_string(i + 1) + " limits");
  }
}

RobotModel reference_robot() {
  RobotModel r;
  r.name = "reference-6r";
  r.dh = {{
      {0.5, -kPi / 2, 1.045, 0.0},
      {1.3, 0.0, 0.0, -kPi / 2},
      {0.055, -kPi / 2, 0.0, 0.0},
      {0.0, kPi / 2, 1.3, kPi},
      {0.0, -kPi / 2, 0.0, 0.0},
      {0.0, 0.0, 0.45, 0.0},
  }};
  r.limits.q_min << -1.2, -0.7, -0.3, -2.0, 0.8, -2.8;
  r.limits.q_max << 1.2, 0.6, 1.2, 2.0, 2.7, 2.8;
  r.limits.qd_max << 1.0, 1.0, 1.0, 1.6, 1.6, 2.0;
  r.limits.qd_min = -r.limits.qd_max;
  r.limits.qdd_max << 2.5, 2.5, 2.5, 5.0, 5.0, 6.0;
  r.limits.qdd_min = -r.limits.qdd_max;
  r.home << 0.0, 0.0, kPi / 6, 0.0, 2 * kPi / 3, 0.0;
  return r;
}

RobotModel load_robot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open robot description " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("robot description " + path.string() + ": " + e.what());
  }

  RobotModel r;
  try {
    r.name = j.value("name", path.stem().string());
    const std::string convention = j.value("dh_convention", "classic");
    if (convention != "classic")
      throw ConfigError("robot description: only the classic DH convention is supported");
    const auto& rows = j.at("dh");
    if (!rows.is_array() || rows.size() != 6) throw ConfigError("robot description: 'dh' must hold 6 rows");
    for (int i = 0; i < 6; ++i) {
      const auto& row = rows.at(i);
      r.dh[i] = {row.at("a").get<double>(), row.at("alpha").get<double>(), row.at("d").get<double>(),
                 row.value("theta_offset", 0.0)};
    }
    const auto& lim = j.at("limits");
    r.limits.q_min = vec_from_json(lim, "position_min");
    r.limits.q_max = vec_from_json(lim, "position_max");
    r.limits.qd_min = vec_from_json(lim, "velocity_min");
    r.limits.qd_max = vec_from_json(lim, "velocity_max");
    r.limits.qdd_min = vec_from_json(lim, "acceleration_min");
    r.limits.qdd_max = vec_from_json(lim, "acceleration_max");
    r.home = vec_from_json(j, "home");
  } catch (const json::exception& e) {
    throw ConfigError("robot description " + path.string() + ": " + e.what());
  }
  r.validate();
  return r;
}

void save_robot(const RobotModel& r, const std::filesystem::path& path) {
  json j;
  j["name"] = r.name;
  j["dh_convention"] = "classic";
  for (const auto& row : r.dh)
    j["dh"].push_back({{"a", row.a}, {"alpha", row.alpha}, {"d", row.d}, {"theta_offset", row.theta_offset}});
  j["limits"] = {
      {"position_min", vec_to_json(r.limits.q_min)},     {"position_max", vec_to_json(r.limits.q_max)},
      {"velocity_min", vec_to_json(r.limits.qd_min)},    {"velocity_max", vec_to_json(r.limits.qd_max)},
      {"acceleration_min", vec_to_json(r.limits.qdd_min)}, {"acceleration_max", vec_to_json(r.limits.qdd_max)},
  };
  j["home"] = vec_to_json(r.home);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write robot description " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace mca
