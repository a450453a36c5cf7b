#include "mamba/envs/env.hpp"

#include <charconv>

#include "mamba/envs/point_robot.hpp"
#include "mamba/envs/reacher.hpp"
#include "mamba/envs/rooms.hpp"

namespace mamba::envs {

namespace {

bool parse_int(const std::string& s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

std::unique_ptr<Environment> make_env(const std::string& id) {
  if (id == "prn") return std::make_unique<PointRobotEnv>();
  if (id == "prn-wind") return std::make_unique<PointRobotEnv>(0.3);
  if (id == "escape-room") return std::make_unique<EscapeRoomEnv>();

  const std::string rooms = "rooms-";
  const std::string reacher = "reacher-";
  const std::string tiny = "-tiny";
  if (id.rfind(rooms, 0) == 0) {
    std::string rest = id.substr(rooms.size());
    bool is_tiny = rest.size() > tiny.size() &&
                   rest.compare(rest.size() - tiny.size(), tiny.size(), tiny) == 0;
    if (is_tiny) rest = rest.substr(0, rest.size() - tiny.size());
    int n = 0;
    if (parse_int(rest, n) && n >= 1) {
      // Tiny variants shorten sub-episodes for oracle-sized instances.
      int t = is_tiny ? (n == 1 ? 12 : 30) : 0;
      return std::make_unique<RoomsEnv>(n, t, 2, id);
    }
  }
  if (id.rfind(reacher, 0) == 0) {
    int n = 0;
    if (parse_int(id.substr(reacher.size()), n) && n >= 1) {
      return std::make_unique<ReacherEnv>(n);
    }
  }
  throw EnvError("unknown environment id: " + id);
}

}  // namespace mamba::envs
