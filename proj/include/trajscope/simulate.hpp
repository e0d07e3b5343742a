#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "trajscope/geo.hpp"
#include "trajscope/poi.hpp"
#include "trajscope/preprocess.hpp"

namespace trajscope {

struct SimConfig {
  std::uint64_t seed = 42;
  int n_agents = 200;
  int n_days = 30;
  GridSpec grid{44.85, -93.35, 500.0, 24, 24};
  int n_pois = 1500;
  std::vector<std::string> categories = {"residence", "office", "restaurant", "cafe",
                                         "grocery",   "school", "university", "bar",
                                         "gym",       "terminal"};
  double anomaly_rate = 0.05;
  double w_agent_atypical = 0.5;    // anomaly-kind weights
  double w_spatial_atypical = 0.5;
  int anomalous_days_per_agent = 2;
  int fix_interval_s = 60;          // GPS sampling while moving
  int dwell_fix_interval_s = 600;   // GPS sampling while stationary
  double gps_noise_m = 10.0;
  std::int64_t t0 = 1'700'000'000;  // corpus epoch start (UTC midnight of day 0)
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

inline constexpr int kZoneResidential = 0;
inline constexpr int kZoneCommercial = 1;
inline constexpr int kZoneCampus = 2;
inline constexpr int kZoneAirport = 3;

struct SimCity {
  std::vector<Poi> pois;
  std::vector<int> cell_zone;  // zone id per grid token
};

struct Anchor {
  double lat = 0.0;
  double lon = 0.0;
  int cell = 0;
};

struct AgentRoutine {
  std::string agent_id;
  int archetype = 0;  // 0 office, 1 student, 2 airport staff, 3 shop staff
  Anchor home, work;
  std::vector<Anchor> leisure;
  double leave_home_h = 7.5;
  double work_dwell_h = 8.5;
  double leisure_dwell_h = 1.5;
  double p_leisure = 0.5;
  double weekend_leave_h = 9.5;
  double speed_mps = 10.0;
};

/// One dwell at a fixed place; consecutive visits are connected by
/// constant-speed travel. A day plan tiles [day_start, day_end] with the
/// first and last visit at home.
struct Visit {
  double lat = 0.0;
  double lon = 0.0;
  std::int64_t t_arrive = 0;
  std::int64_t t_depart = 0;
};
using DayPlan = std::vector<Visit>;

struct InjectedWindow {
  std::string agent_id;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  std::string kind;  // "agent_atypical" or "spatial_atypical"
};

struct GroundTruth {
  std::map<std::string, int> agent_labels;
  std::vector<InjectedWindow> injected_windows;
};

struct SimOutput {
  SimCity city;
  std::vector<AgentRoutine> routines;
  std::vector<std::vector<DayPlan>> plans;  // [agent][day], after injection
  std::vector<RawTrajectory> trajectories;  // sorted by agent_id
  GroundTruth truth;
};

/// Fixed zone layout: an airport block in the southwest corner, a campus
/// block in the northeast, a commercial core in the center, residential
/// elsewhere.
int zone_of_cell(int row, int col, const GridSpec& g);

/// POIs placed in category-correlated zones; deterministic under the seed.
SimCity gen_city(const SimConfig& cfg);

/// Home/work/leisure anchors and routine parameters per agent. Home cells
/// are drawn round-robin from a reduced pool so several agents share each
/// home cell.
std::vector<AgentRoutine> gen_agents(const SimConfig& cfg, const SimCity& city);

std::vector<std::vector<DayPlan>> build_plans(const SimConfig& cfg,
                                              const std::vector<AgentRoutine>& routines);

/// Rewrites test-half days of the selected anomalous agents:
/// agent_atypical replays a same-home-cell donor's realized day;
/// spatial_atypical tours the POI cells whose category profile differs
/// most from the agent's habitual cells. The training half is untouched.
GroundTruth inject_anomalies(const SimConfig& cfg, const SimCity& city,
                             const std::vector<AgentRoutine>& routines,
                             std::vector<std::vector<DayPlan>>& plans);

/// Interpolates travel, samples fixes, adds isotropic Gaussian noise.
std::vector<RawTrajectory> render_gps(const SimConfig& cfg,
                                      const std::vector<AgentRoutine>& routines,
                                      const std::vector<std::vector<DayPlan>>& plans);

SimOutput simulate(const SimConfig& cfg);

}  // namespace trajscope
