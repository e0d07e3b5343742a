#include "trajscope/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "trajscope/rng.hpp"

namespace trajscope {

namespace {

constexpr std::int64_t kDay = 86'400;

struct ZoneProfile {
  double poi_share;
  std::vector<std::pair<std::string, double>> category_weights;
};

const ZoneProfile& zone_profile(int zone) {
  static const ZoneProfile residential{
      0.30,
      {{"residence", 0.55},
       {"grocery", 0.12},
       {"school", 0.10},
       {"cafe", 0.08},
       {"restaurant", 0.08},
       {"gym", 0.07}}};
  static const ZoneProfile commercial{
      0.45,
      {{"office", 0.35},
       {"restaurant", 0.20},
       {"cafe", 0.12},
       {"bar", 0.12},
       {"grocery", 0.08},
       {"gym", 0.08},
       {"school", 0.05}}};
  static const ZoneProfile campus{
      0.15,
      {{"university", 0.50}, {"cafe", 0.18}, {"gym", 0.12}, {"restaurant", 0.12}, {"bar", 0.08}}};
  static const ZoneProfile airport{
      0.10, {{"terminal", 0.60}, {"cafe", 0.20}, {"restaurant", 0.20}}};
  switch (zone) {
    case kZoneResidential: return residential;
    case kZoneCommercial: return commercial;
    case kZoneCampus: return campus;
    default: return airport;
  }
}

int weighted_pick(const std::vector<double>& weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double r = rng.uniform() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    acc += weights[i];
    if (acc >= r) return static_cast<int>(i);
  }
  return static_cast<int>(weights.size()) - 1;
}

/// Uniform position inside a cell, slightly inset so GPS noise cannot
/// push a dwell centroid across the cell boundary.
void random_pos_in_cell(int cell, const GridSpec& g, Rng& rng, double& lat, double& lon) {
  const int row = cell / g.n_cols;
  const int col = cell % g.n_cols;
  const double inset = 0.1;
  const double x = (col + inset + (1.0 - 2.0 * inset) * rng.uniform()) * g.cell_size_m;
  const double y = (row + inset + (1.0 - 2.0 * inset) * rng.uniform()) * g.cell_size_m;
  lat = g.origin_lat + y / (kEarthRadiusM * kDegToRad);
  lon = g.origin_lon + x / (kEarthRadiusM * kDegToRad * std::cos(g.origin_lat * kDegToRad));
}

std::vector<int> cells_of_zone(const SimCity& city, int zone) {
  std::vector<int> out;
  for (std::size_t c = 0; c < city.cell_zone.size(); ++c) {
    if (city.cell_zone[c] == zone) out.push_back(static_cast<int>(c));
  }
  return out;
}

std::int64_t travel_s(double lat_a, double lon_a, double lat_b, double lon_b, double speed_mps) {
  return static_cast<std::int64_t>(std::ceil(haversine_m(lat_a, lon_a, lat_b, lon_b) / speed_mps));
}

Anchor anchor_at(double lat, double lon, const GridSpec& g) {
  return Anchor{lat, lon, cell_of(lat, lon, g)};
}

/// Work anchor: a POI of the archetype's workplace category, falling back
/// to a random position in the matching zone.
Anchor pick_work_anchor(int archetype, const SimCity& city, const SimConfig& cfg, Rng& rng) {
  const char* category = archetype == 1   ? "university"
                         : archetype == 2 ? "terminal"
                         : archetype == 3 ? "grocery"
                                          : "office";
  const int zone = archetype == 1 ? kZoneCampus : archetype == 2 ? kZoneAirport : kZoneCommercial;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < city.pois.size(); ++i) {
    if (city.pois[i].category == category) candidates.push_back(i);
  }
  if (!candidates.empty()) {
    const Poi& p = city.pois[candidates[static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(candidates.size())))]];
    return anchor_at(p.lat, p.lon, cfg.grid);
  }
  const auto cells = cells_of_zone(city, zone);
  const int cell = cells.empty() ? 0 : cells[static_cast<std::size_t>(
                                           rng.uniform_int(static_cast<int>(cells.size())))];
  double lat, lon;
  random_pos_in_cell(cell, cfg.grid, rng, lat, lon);
  return anchor_at(lat, lon, cfg.grid);
}

}  // namespace

int zone_of_cell(int row, int col, const GridSpec& g) {
  const int a = std::max(2, std::min(g.n_rows, g.n_cols) / 8);  // airport block edge
  if (row < a && col < a) return kZoneAirport;
  const int u = std::max(2, std::min(g.n_rows, g.n_cols) / 6);  // campus block edge
  if (row >= g.n_rows - u && col >= g.n_cols - u) return kZoneCampus;
  if (row >= g.n_rows / 3 && row < 2 * g.n_rows / 3 && col >= g.n_cols / 3 &&
      col < 2 * g.n_cols / 3) {
    return kZoneCommercial;
  }
  return kZoneResidential;
}

SimCity gen_city(const SimConfig& cfg) {
  SimCity city;
  city.cell_zone.resize(static_cast<std::size_t>(cfg.grid.vocab_size()));
  for (int row = 0; row < cfg.grid.n_rows; ++row) {
    for (int col = 0; col < cfg.grid.n_cols; ++col) {
      city.cell_zone[static_cast<std::size_t>(row * cfg.grid.n_cols + col)] =
          zone_of_cell(row, col, cfg.grid);
    }
  }

  const std::set<std::string> available(cfg.categories.begin(), cfg.categories.end());
  Rng rng = Rng::stream(cfg.seed, 0x63697479ull);  // "city"
  std::vector<double> zone_shares;
  std::vector<std::vector<int>> zone_cells;
  for (int z = 0; z < 4; ++z) {
    zone_cells.push_back(cells_of_zone(city, z));
    zone_shares.push_back(zone_cells.back().empty() ? 0.0 : zone_profile(z).poi_share);
  }

  city.pois.reserve(static_cast<std::size_t>(cfg.n_pois));
  for (int i = 0; i < cfg.n_pois; ++i) {
    const int zone = weighted_pick(zone_shares, rng);
    const auto& cells = zone_cells[static_cast<std::size_t>(zone)];
    const int cell = cells[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(cells.size())))];

    const auto& profile = zone_profile(zone).category_weights;
    std::vector<double> w;
    std::vector<const std::string*> names;
    for (const auto& [name, weight] : profile) {
      if (available.count(name)) {
        names.push_back(&name);
        w.push_back(weight);
      }
    }
    std::string category;
    if (names.empty()) {
      category = cfg.categories[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(cfg.categories.size())))];
    } else {
      category = *names[static_cast<std::size_t>(weighted_pick(w, rng))];
    }

    Poi p;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "poi_%06d", i);
    p.poi_id = buf;
    p.name = category + "_" + std::to_string(i);
    p.category = category;
    random_pos_in_cell(cell, cfg.grid, rng, p.lat, p.lon);
    city.pois.push_back(std::move(p));
  }
  return city;
}

std::vector<AgentRoutine> gen_agents(const SimConfig& cfg, const SimCity& city) {
  const auto residential = cells_of_zone(city, kZoneResidential);
  if (residential.empty()) throw ConfigError("grid too small: no residential cells");

  // Round-robin over a reduced pool so each used home cell hosts several
  // agents; shared home cells keep individual routines ambiguous without
  // the agent id.
  Rng pool_rng = Rng::stream(cfg.seed, 0x686f6d65ull);  // "home"
  std::vector<int> pool = residential;
  pool_rng.shuffle(pool);
  const std::size_t pool_size =
      std::max<std::size_t>(1, std::min(pool.size(), static_cast<std::size_t>(cfg.n_agents) / 3));
  pool.resize(pool_size);

  std::vector<std::size_t> leisure_pois;
  for (std::size_t i = 0; i < city.pois.size(); ++i) {
    const std::string& c = city.pois[i].category;
    if (c == "restaurant" || c == "cafe" || c == "bar" || c == "gym" || c == "grocery") {
      leisure_pois.push_back(i);
    }
  }

  std::vector<AgentRoutine> out;
  out.reserve(static_cast<std::size_t>(cfg.n_agents));
  for (int i = 0; i < cfg.n_agents; ++i) {
    Rng rng = Rng::stream(cfg.seed, 0x10000ull + static_cast<std::uint64_t>(i));
    AgentRoutine a;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "agent_%05d", i);
    a.agent_id = buf;
    const double r = rng.uniform();
    a.archetype = r < 0.6 ? 0 : r < 0.8 ? 1 : r < 0.9 ? 2 : 3;

    const int home_cell = pool[static_cast<std::size_t>(i) % pool.size()];
    double lat, lon;
    random_pos_in_cell(home_cell, cfg.grid, rng, lat, lon);
    a.home = anchor_at(lat, lon, cfg.grid);
    a.work = pick_work_anchor(a.archetype, city, cfg, rng);

    const int n_leisure = 2 + rng.uniform_int(3);
    for (int l = 0; l < n_leisure; ++l) {
      if (!leisure_pois.empty()) {
        const Poi& p = city.pois[leisure_pois[static_cast<std::size_t>(
            rng.uniform_int(static_cast<int>(leisure_pois.size())))]];
        a.leisure.push_back(anchor_at(p.lat, p.lon, cfg.grid));
      } else {
        const int cell = rng.uniform_int(cfg.grid.vocab_size());
        random_pos_in_cell(cell, cfg.grid, rng, lat, lon);
        a.leisure.push_back(anchor_at(lat, lon, cfg.grid));
      }
    }

    a.leave_home_h = rng.uniform(7.0, 8.5);
    a.work_dwell_h = rng.uniform(8.0, 9.0);
    a.leisure_dwell_h = rng.uniform(1.2, 2.0);
    a.p_leisure = rng.uniform(0.3, 0.7);
    a.weekend_leave_h = rng.uniform(9.0, 11.0);
    a.speed_mps = rng.uniform(8.0, 14.0);
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

DayPlan make_day_plan(const AgentRoutine& a, int day, std::int64_t day_start, Rng& rng) {
  DayPlan plan;
  const bool weekday = day % 7 < 5;
  const std::int64_t day_end = day_start + kDay;

  auto h2s = [](double h) { return static_cast<std::int64_t>(h * 3600.0); };

  if (weekday) {
    const std::int64_t leave = day_start + h2s(a.leave_home_h + rng.uniform(-0.3, 0.3));
    plan.push_back(Visit{a.home.lat, a.home.lon, day_start, leave});
    std::int64_t t =
        leave + travel_s(a.home.lat, a.home.lon, a.work.lat, a.work.lon, a.speed_mps);
    const std::int64_t work_end = t + h2s(a.work_dwell_h + rng.uniform(-0.4, 0.4));
    plan.push_back(Visit{a.work.lat, a.work.lon, t, work_end});
    double cur_lat = a.work.lat, cur_lon = a.work.lon;
    std::int64_t cur_end = work_end;
    if (rng.uniform() < a.p_leisure && !a.leisure.empty()) {
      const Anchor& l = a.leisure[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(a.leisure.size())))];
      const std::int64_t arr = cur_end + travel_s(cur_lat, cur_lon, l.lat, l.lon, a.speed_mps);
      const std::int64_t dep = arr + h2s(a.leisure_dwell_h + rng.uniform(-0.3, 0.3));
      plan.push_back(Visit{l.lat, l.lon, arr, dep});
      cur_lat = l.lat;
      cur_lon = l.lon;
      cur_end = dep;
    }
    const std::int64_t home_arr =
        cur_end + travel_s(cur_lat, cur_lon, a.home.lat, a.home.lon, a.speed_mps);
    plan.push_back(Visit{a.home.lat, a.home.lon, std::min(home_arr, day_end - 600), day_end});
  } else {
    const std::int64_t leave = day_start + h2s(a.weekend_leave_h + rng.uniform(-0.5, 0.5));
    plan.push_back(Visit{a.home.lat, a.home.lon, day_start, leave});
    double cur_lat = a.home.lat, cur_lon = a.home.lon;
    std::int64_t cur_end = leave;
    const int n_trips = a.leisure.empty() ? 0 : 1 + rng.uniform_int(2);
    for (int k = 0; k < n_trips; ++k) {
      const Anchor& l = a.leisure[static_cast<std::size_t>(
          rng.uniform_int(static_cast<int>(a.leisure.size())))];
      const std::int64_t arr = cur_end + travel_s(cur_lat, cur_lon, l.lat, l.lon, a.speed_mps);
      const std::int64_t dep = arr + h2s(rng.uniform(1.5, 3.0));
      plan.push_back(Visit{l.lat, l.lon, arr, dep});
      cur_lat = l.lat;
      cur_lon = l.lon;
      cur_end = dep;
    }
    const std::int64_t home_arr =
        cur_end + travel_s(cur_lat, cur_lon, a.home.lat, a.home.lon, a.speed_mps);
    plan.push_back(Visit{a.home.lat, a.home.lon, std::min(home_arr, day_end - 600), day_end});
  }
  return plan;
}

}  // namespace

std::vector<std::vector<DayPlan>> build_plans(const SimConfig& cfg,
                                              const std::vector<AgentRoutine>& routines) {
  std::vector<std::vector<DayPlan>> plans(routines.size());
  for (std::size_t i = 0; i < routines.size(); ++i) {
    Rng rng = Rng::stream(cfg.seed, 0x20000ull + static_cast<std::uint64_t>(i));
    plans[i].reserve(static_cast<std::size_t>(cfg.n_days));
    for (int d = 0; d < cfg.n_days; ++d) {
      plans[i].push_back(make_day_plan(routines[i], d, cfg.t0 + d * kDay, rng));
    }
  }
  return plans;
}

namespace {

/// Replace the excursion of `day` (everything between the morning home
/// departure and the evening return) with the given middle visits,
/// keeping the victim's own home at both ends.
void splice_day(std::vector<DayPlan>& days, int day, const AgentRoutine& victim,
                const std::vector<Visit>& middle) {
  DayPlan& plan = days[static_cast<std::size_t>(day)];
  const std::int64_t day_start = plan.front().t_arrive;
  const std::int64_t day_end = plan.back().t_depart;
  DayPlan out;
  const Visit& first = middle.front();
  const Visit& last = middle.back();
  const std::int64_t leave =
      first.t_arrive - travel_s(victim.home.lat, victim.home.lon, first.lat, first.lon,
                                victim.speed_mps);
  out.push_back(Visit{victim.home.lat, victim.home.lon, day_start, std::max(day_start, leave)});
  for (const Visit& v : middle) out.push_back(v);
  const std::int64_t back =
      last.t_depart + travel_s(last.lat, last.lon, victim.home.lat, victim.home.lon,
                               victim.speed_mps);
  out.push_back(Visit{victim.home.lat, victim.home.lon, std::min(back, day_end - 600), day_end});
  plan = std::move(out);
}

std::vector<Visit> middle_of(const DayPlan& plan) {
  // First and last visits are home by construction.
  return {plan.begin() + 1, plan.end() - 1};
}

}  // namespace

GroundTruth inject_anomalies(const SimConfig& cfg, const SimCity& city,
                             const std::vector<AgentRoutine>& routines,
                             std::vector<std::vector<DayPlan>>& plans) {
  GroundTruth truth;
  for (const AgentRoutine& a : routines) truth.agent_labels[a.agent_id] = 0;
  if (cfg.anomaly_rate == 0.0) return truth;

  const int n_anom = static_cast<int>(std::floor(cfg.anomaly_rate * cfg.n_agents));
  if (n_anom < 1) {
    throw ConfigError("anomaly_rate * n_agents < 1: no agent would be anomalous");
  }
  // Eligible days sit strictly inside the test half so every affected
  // subtrajectory starts after the temporal split boundary.
  const int first_day = cfg.n_days / 2 + 1;
  if (first_day >= cfg.n_days) {
    throw ConfigError("n_days too small for test-half anomaly injection");
  }

  Rng rng = Rng::stream(cfg.seed, 0x616e6f6dull);  // "anom"
  std::vector<int> idx(routines.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
  rng.shuffle(idx);
  idx.resize(static_cast<std::size_t>(n_anom));
  std::sort(idx.begin(), idx.end());
  const std::set<int> anomalous(idx.begin(), idx.end());

  // Habitual per-cell category profiles for the spatial kind.
  const auto categories = category_table(city.pois);
  std::map<int, Eigen::VectorXd> cell_profile;
  for (const Poi& p : city.pois) {
    int cell;
    try {
      cell = cell_of(p.lat, p.lon, cfg.grid);
    } catch (const OutOfBoundsError&) {
      continue;
    }
    auto [it, inserted] =
        cell_profile.try_emplace(cell, Eigen::VectorXd::Zero(static_cast<int>(categories.size())));
    it->second[category_index(categories, p.category)] += 1.0;
  }
  for (auto& [cell, v] : cell_profile) v /= v.sum();

  for (int vi : idx) {
    const AgentRoutine& victim = routines[static_cast<std::size_t>(vi)];
    const std::size_t windows_before = truth.injected_windows.size();
    truth.agent_labels[victim.agent_id] = 1;
    const bool agent_kind =
        rng.uniform() * (cfg.w_agent_atypical + cfg.w_spatial_atypical) < cfg.w_agent_atypical;

    std::vector<int> days;
    for (int d = first_day; d < cfg.n_days; ++d) days.push_back(d);
    rng.shuffle(days);
    days.resize(std::min<std::size_t>(days.size(),
                                      static_cast<std::size_t>(cfg.anomalous_days_per_agent)));
    std::sort(days.begin(), days.end());

    if (agent_kind && routines.size() >= 2) {
      // Donor: a clean agent sharing the victim's home cell (so the
      // replayed day's token sequences exist verbatim in the donor's own
      // data) that works somewhere else. Anomalous agents are excluded:
      // their own days may already be rewritten.
      std::vector<int> donors, fallback;
      for (std::size_t j = 0; j < routines.size(); ++j) {
        if (static_cast<int>(j) == vi || anomalous.count(static_cast<int>(j))) continue;
        if (routines[j].work.cell == victim.work.cell) continue;
        fallback.push_back(static_cast<int>(j));
        if (routines[j].home.cell == victim.home.cell) donors.push_back(static_cast<int>(j));
      }
      const std::vector<int>& cands = donors.empty() ? fallback : donors;
      const int donor =
          cands.empty()
              ? (vi + 1) % static_cast<int>(routines.size())
              : cands[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(cands.size())))];
      // Stay detection can date a stay up to one travel fix before the
      // planned arrival; pad the recorded window accordingly.
      const std::int64_t pad = 2 * cfg.fix_interval_s;
      for (int d : days) {
        const auto middle = middle_of(plans[static_cast<std::size_t>(donor)][
            static_cast<std::size_t>(d)]);
        if (middle.empty()) continue;
        splice_day(plans[static_cast<std::size_t>(vi)], d, victim, middle);
        truth.injected_windows.push_back(InjectedWindow{victim.agent_id,
                                                        middle.front().t_arrive - pad,
                                                        middle.back().t_depart + pad,
                                                        "agent_atypical"});
      }
    } else {
      // Spatial kind: tour the POI cells whose category profile differs
      // most from the victim's habitual cells.
      Eigen::VectorXd habit = Eigen::VectorXd::Zero(static_cast<int>(categories.size()));
      auto add_cell = [&](int cell) {
        const auto it = cell_profile.find(cell);
        if (it != cell_profile.end()) habit += it->second;
      };
      add_cell(victim.home.cell);
      add_cell(victim.work.cell);
      for (const Anchor& l : victim.leisure) add_cell(l.cell);
      if (habit.sum() > 0) habit /= habit.sum();

      std::vector<std::pair<double, int>> ranked;
      for (const auto& [cell, prof] : cell_profile) {
        if (cell == victim.home.cell || cell == victim.work.cell) continue;
        ranked.emplace_back((prof - habit).lpNorm<1>(), cell);
      }
      std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      if (ranked.size() < 3) continue;  // degenerate city; leave agent normal days

      for (int d : days) {
        std::vector<int> tour;
        std::set<int> used;
        const int top = static_cast<int>(std::min<std::size_t>(12, ranked.size()));
        while (tour.size() < 3 && used.size() < static_cast<std::size_t>(top)) {
          const int pick = rng.uniform_int(top);
          if (!used.insert(pick).second) continue;
          tour.push_back(ranked[static_cast<std::size_t>(pick)].second);
        }
        std::vector<Visit> middle;
        std::int64_t t = cfg.t0 + d * kDay +
                         static_cast<std::int64_t>(victim.leave_home_h * 3600.0);
        double cur_lat = victim.home.lat, cur_lon = victim.home.lon;
        Rng pos_rng = Rng::stream(cfg.seed, 0x30000ull + static_cast<std::uint64_t>(vi * 64 + d));
        for (int cell : tour) {
          double lat, lon;
          random_pos_in_cell(cell, cfg.grid, pos_rng, lat, lon);
          t += travel_s(cur_lat, cur_lon, lat, lon, victim.speed_mps);
          const std::int64_t dep = t + static_cast<std::int64_t>(rng.uniform(1.6, 2.4) * 3600.0);
          middle.push_back(Visit{lat, lon, t, dep});
          cur_lat = lat;
          cur_lon = lon;
          t = dep;
        }
        splice_day(plans[static_cast<std::size_t>(vi)], d, victim, middle);
        const std::int64_t pad = 2 * cfg.fix_interval_s;
        truth.injected_windows.push_back(InjectedWindow{victim.agent_id,
                                                        middle.front().t_arrive - pad,
                                                        middle.back().t_depart + pad,
                                                        "spatial_atypical"});
      }
    }
    // A labeled agent must carry at least one window; undo the label if
    // the city was too degenerate to inject anything.
    if (truth.injected_windows.size() == windows_before) {
      truth.agent_labels[victim.agent_id] = 0;
    }
  }
  return truth;
}

std::vector<RawTrajectory> render_gps(const SimConfig& cfg,
                                      const std::vector<AgentRoutine>& routines,
                                      const std::vector<std::vector<DayPlan>>& plans) {
  std::vector<RawTrajectory> out;
  out.reserve(routines.size());
  const double m2lat = 1.0 / (kEarthRadiusM * kDegToRad);
  const double m2lon = 1.0 / (kEarthRadiusM * kDegToRad * std::cos(cfg.grid.origin_lat * kDegToRad));

  for (std::size_t i = 0; i < routines.size(); ++i) {
    Rng rng = Rng::stream(cfg.seed, 0x40000ull + static_cast<std::uint64_t>(i));
    RawTrajectory traj;
    traj.agent_id = routines[i].agent_id;

    std::vector<Visit> visits;
    for (const DayPlan& day : plans[i]) {
      for (const Visit& v : day) visits.push_back(v);
    }

    auto emit = [&](double lat, double lon, std::int64_t t) {
      if (!traj.points.empty() && t <= traj.points.back().t) return;
      GpsPoint p;
      p.lat = lat + rng.normal(0.0, cfg.gps_noise_m) * m2lat;
      p.lon = lon + rng.normal(0.0, cfg.gps_noise_m) * m2lon;
      p.t = t;
      traj.points.push_back(p);
    };

    for (std::size_t v = 0; v < visits.size(); ++v) {
      const Visit& cur = visits[v];
      for (std::int64_t t = cur.t_arrive; t < cur.t_depart; t += cfg.dwell_fix_interval_s) {
        emit(cur.lat, cur.lon, t);
      }
      emit(cur.lat, cur.lon, cur.t_depart);
      if (v + 1 < visits.size()) {
        const Visit& nxt = visits[v + 1];
        const std::int64_t gap = nxt.t_arrive - cur.t_depart;
        for (std::int64_t t = cur.t_depart + cfg.fix_interval_s; t < nxt.t_arrive;
             t += cfg.fix_interval_s) {
          const double f = static_cast<double>(t - cur.t_depart) / static_cast<double>(gap);
          emit(cur.lat + f * (nxt.lat - cur.lat), cur.lon + f * (nxt.lon - cur.lon), t);
        }
      }
    }
    out.push_back(std::move(traj));
  }
  std::sort(out.begin(), out.end(),
            [](const RawTrajectory& a, const RawTrajectory& b) { return a.agent_id < b.agent_id; });
  return out;
}

SimOutput simulate(const SimConfig& cfg) {
  SimOutput out;
  out.city = gen_city(cfg);
  out.routines = gen_agents(cfg, out.city);
  out.plans = build_plans(cfg, out.routines);
  out.truth = inject_anomalies(cfg, out.city, out.routines, out.plans);
  out.trajectories = render_gps(cfg, out.routines, out.plans);
  return out;
}

}  // namespace trajscope
