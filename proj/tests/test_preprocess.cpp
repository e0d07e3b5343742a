#include <doctest.h>

#include <map>
#include <set>

#include "trajscope/io.hpp"
#include "trajscope/preprocess.hpp"
#include "trajscope/rng.hpp"

using namespace trajscope;

namespace {

// Exhaustive-window stay point oracle: a window [i, j) is a stay iff every
// interior point lies within the radius of p_i, p_j (or the trace end) is
// the exit, the time to the exit exceeds the dwell threshold, and the
// window holds at least two fixes. Scans all candidate windows per anchor.
bool window_is_stay(const std::vector<GpsPoint>& p, std::size_t i, std::size_t j,
                    const PreprocessConfig& cfg) {
  const std::size_t n = p.size();
  if (j - i < 2) return false;
  for (std::size_t k = i + 1; k < j; ++k) {
    if (haversine_m(p[i], p[k]) > cfg.spd_radius_m) return false;
  }
  if (j < n && haversine_m(p[i], p[j]) <= cfg.spd_radius_m) return false;
  const std::int64_t t_exit = (j < n) ? p[j].t : p[n - 1].t;
  return t_exit - p[i].t > cfg.spd_duration_s;
}

std::vector<StayPoint> spd_oracle(const RawTrajectory& traj, const PreprocessConfig& cfg) {
  const auto& p = traj.points;
  const std::size_t n = p.size();
  std::vector<StayPoint> out;
  std::size_t i = 0;
  while (i < n) {
    bool emitted = false;
    for (std::size_t j = i + 2; j <= n; ++j) {
      if (!window_is_stay(p, i, j, cfg)) continue;
      StayPoint sp;
      double lat = 0.0, lon = 0.0;
      for (std::size_t k = i; k < j; ++k) {
        lat += p[k].lat;
        lon += p[k].lon;
      }
      sp.lat = lat / static_cast<double>(j - i);
      sp.lon = lon / static_cast<double>(j - i);
      sp.t_arrive = p[i].t;
      sp.t_depart = p[j - 1].t;
      out.push_back(sp);
      i = j;
      emitted = true;
      break;
    }
    if (!emitted) ++i;
  }
  return out;
}

bool same_stays(const std::vector<StayPoint>& a, const std::vector<StayPoint>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].lat != b[i].lat || a[i].lon != b[i].lon || a[i].t_arrive != b[i].t_arrive ||
        a[i].t_depart != b[i].t_depart) {
      return false;
    }
  }
  return true;
}

constexpr double kMPerDeg = kEarthRadiusM * kDegToRad;

RawTrajectory random_trace(Rng& rng, int max_points) {
  RawTrajectory tr;
  tr.agent_id = "a";
  const int n = 2 + rng.uniform_int(max_points - 1);
  double lat = rng.uniform(-0.01, 0.01), lon = rng.uniform(-0.01, 0.01);
  std::int64_t t = 0;
  for (int i = 0; i < n; ++i) {
    // Mix of lingering (small steps) and moving (radius-scale jumps).
    const bool moving = rng.uniform() < 0.35;
    const double step_m = moving ? rng.uniform(150, 600) : rng.uniform(0, 80);
    const double ang = rng.uniform(0, 6.283185307179586);
    lat += step_m * std::cos(ang) / kMPerDeg;
    lon += step_m * std::sin(ang) / kMPerDeg;
    t += 30 + rng.uniform_int(600);
    tr.points.push_back(GpsPoint{lat, lon, t});
  }
  return tr;
}

StayPoint stay(double lat, double lon, std::int64_t t_arrive, std::int64_t t_depart) {
  return StayPoint{lat, lon, t_arrive, t_depart};
}

}  // namespace

TEST_CASE("stay point detection on a single dwell cluster") {
  PreprocessConfig cfg;
  cfg.spd_duration_s = 1200;
  cfg.spd_radius_m = 200;
  RawTrajectory tr;
  tr.agent_id = "a";
  for (int i = 0; i < 10; ++i) {
    tr.points.push_back(GpsPoint{40.0, -75.0, i * 2400 / 9});  // 40 min span
  }
  const auto stays = detect_stay_points(tr, cfg);
  REQUIRE(stays.size() == 1);
  CHECK(stays[0].lat == doctest::Approx(40.0));
  CHECK(stays[0].lon == doctest::Approx(-75.0));
  CHECK(stays[0].t_arrive == 0);
  CHECK(stays[0].t_depart == 2400);
  CHECK(stays[0].dwell_s() == 2400);
}

TEST_CASE("constant-velocity trace produces no stay points") {
  PreprocessConfig cfg;
  cfg.spd_duration_s = 1200;
  cfg.spd_radius_m = 200;
  RawTrajectory tr;
  tr.agent_id = "a";
  for (int i = 0; i < 60; ++i) {
    // 100 m per minute straight north.
    tr.points.push_back(GpsPoint{i * 100.0 / kMPerDeg, 0.0, i * 60});
  }
  CHECK(detect_stay_points(tr, cfg).empty());
}

TEST_CASE("three dwell clusters separated by moves match the window oracle") {
  PreprocessConfig cfg;
  cfg.spd_duration_s = 1200;
  cfg.spd_radius_m = 200;
  RawTrajectory tr;
  tr.agent_id = "a";
  std::int64_t t = 0;
  auto dwell = [&](double lat_m, double lon_m, int fixes) {
    for (int i = 0; i < fixes; ++i) {
      tr.points.push_back(GpsPoint{lat_m / kMPerDeg, lon_m / kMPerDeg, t});
      t += 400;
    }
  };
  auto move = [&](double from_m, double to_m, int fixes) {
    for (int i = 1; i <= fixes; ++i) {
      const double x = from_m + (to_m - from_m) * i / fixes;
      tr.points.push_back(GpsPoint{x / kMPerDeg, 0.0, t});
      t += 60;
    }
  };
  dwell(0, 0, 8);
  move(0, 3000, 5);
  dwell(3000, 0, 8);
  move(3000, 6000, 5);
  dwell(6000, 0, 8);
  const auto got = detect_stay_points(tr, cfg);
  CHECK(got.size() == 3);
  CHECK(same_stays(got, spd_oracle(tr, cfg)));
}

TEST_CASE("empty trajectory raises") {
  CHECK_THROWS_AS(detect_stay_points(RawTrajectory{"a", {}}, PreprocessConfig{}),
                  EmptyTrajectoryError);
}

TEST_CASE("stay point detection equals the exhaustive-window oracle on random traces") {
  PreprocessConfig cfg;
  cfg.spd_duration_s = 600;
  cfg.spd_radius_m = 200;
  Rng rng(101);
  for (int it = 0; it < 300; ++it) {
    const RawTrajectory tr = random_trace(rng, 50);
    CHECK(same_stays(detect_stay_points(tr, cfg), spd_oracle(tr, cfg)));
  }
}

TEST_CASE("partition keeps an uncut run intact") {
  PreprocessConfig cfg;
  std::vector<StayPoint> stays;
  for (int i = 0; i < 5; ++i) stays.push_back(stay(0, 0, i * 4000, i * 4000 + 3000));
  const auto subs = partition("a", stays, cfg);
  REQUIRE(subs.size() == 1);
  CHECK(subs[0].stays.size() == 5);
}

TEST_CASE("a long dwell terminates one piece and seeds the next") {
  PreprocessConfig cfg;
  cfg.long_stay_split_s = 4 * 3600;
  std::vector<StayPoint> stays = {
      stay(0, 0, 0, 1800),                      // A
      stay(1, 0, 3600, 3600 + 9 * 3600),        // B dwells 9 h
      stay(2, 0, 14 * 3600, 14 * 3600 + 1800),  // C
  };
  const auto subs = partition("a", stays, cfg);
  REQUIRE(subs.size() == 2);
  CHECK(subs[0].stays.size() == 2);
  CHECK(subs[0].stays[0].lat == 0);
  CHECK(subs[0].stays[1].lat == 1);
  CHECK(subs[1].stays.size() == 2);
  CHECK(subs[1].stays[0].lat == 1);  // duplicated split point
  CHECK(subs[1].stays[1].lat == 2);
}

TEST_CASE("a long transition cuts hard and short pieces are dropped") {
  PreprocessConfig cfg;
  cfg.transition_split_s = 5 * 3600;
  std::vector<StayPoint> stays = {
      stay(0, 0, 0, 1800),
      stay(1, 0, 1800 + 6 * 3600, 1800 + 6 * 3600 + 900),  // 6 h gap
  };
  CHECK(partition("a", stays, cfg).empty());
}

TEST_CASE("partition invariants hold on random stay sequences") {
  Rng rng(73);
  PreprocessConfig cfg;
  cfg.long_stay_split_s = 4000;
  cfg.transition_split_s = 6000;
  for (int it = 0; it < 400; ++it) {
    std::vector<StayPoint> stays;
    std::int64_t t = 0;
    const int n = rng.uniform_int(14);
    for (int i = 0; i < n; ++i) {
      const std::int64_t dwell = 500 + rng.uniform_int(6000);
      stays.push_back(stay(rng.uniform(0, 1), rng.uniform(0, 1), t, t + dwell));
      t += dwell + 100 + rng.uniform_int(9000);
    }
    const auto subs = partition("a", stays, cfg);

    std::map<std::int64_t, int> appearances;  // t_arrive is unique per stay
    for (const auto& sub : subs) {
      CHECK(sub.stays.size() >= 2);
      for (std::size_t i = 0; i < sub.stays.size(); ++i) {
        ++appearances[sub.stays[i].t_arrive];
        if (i > 0) {
          CHECK(sub.stays[i].t_arrive > sub.stays[i - 1].t_arrive);
          CHECK(sub.stays[i].t_arrive - sub.stays[i - 1].t_depart <= cfg.transition_split_s);
        }
        const bool interior = i > 0 && i + 1 < sub.stays.size();
        if (interior) CHECK(sub.stays[i].dwell_s() < cfg.long_stay_split_s);
      }
    }
    for (const auto& s : stays) {
      const auto it = appearances.find(s.t_arrive);
      const int count = it == appearances.end() ? 0 : it->second;
      CHECK(count <= 2);
      if (count == 2) CHECK(s.dwell_s() >= cfg.long_stay_split_s);
    }
  }
}

TEST_CASE("tokenize collapses repeats, truncates and filters short results") {
  GridSpec g{0, 0, 500, 8, 8};
  PreprocessConfig cfg;
  auto stay_in_cell = [&](int cell, std::int64_t t) {
    double lat, lon;
    cell_center(cell, g, lat, lon);
    return stay(lat, lon, t, t + 100);
  };

  SUBCASE("collapse on") {
    Subtrajectory sub{"a", {stay_in_cell(3, 0), stay_in_cell(3, 200), stay_in_cell(7, 400)}};
    const auto seq = tokenize(sub, g, cfg);
    REQUIRE(seq.has_value());
    CHECK(seq->tokens == std::vector<int>{3, 7});
    CHECK(seq->t_start == 0);
    CHECK(seq->t_end == 500);
  }
  SUBCASE("collapse off") {
    cfg.collapse_repeats = false;
    Subtrajectory sub{"a", {stay_in_cell(3, 0), stay_in_cell(3, 200), stay_in_cell(7, 400)}};
    const auto seq = tokenize(sub, g, cfg);
    REQUIRE(seq.has_value());
    CHECK(seq->tokens == std::vector<int>{3, 3, 7});
  }
  SUBCASE("truncation to w_max") {
    cfg.w_max = 32;
    Subtrajectory sub{"a", {}};
    for (int i = 0; i < 40; ++i) sub.stays.push_back(stay_in_cell(i % 64, i * 200));
    const auto seq = tokenize(sub, g, cfg);
    REQUIRE(seq.has_value());
    CHECK(seq->tokens.size() == 32);
    for (int i = 0; i < 32; ++i) CHECK(seq->tokens[static_cast<std::size_t>(i)] == i % 64);
  }
  SUBCASE("all stays in one cell collapse below the minimum length") {
    Subtrajectory sub{"a", {stay_in_cell(5, 0), stay_in_cell(5, 200), stay_in_cell(5, 400)}};
    CHECK_FALSE(tokenize(sub, g, cfg).has_value());
  }
}

TEST_CASE("corpus preprocessing composes the stages and reports stats") {
  GridSpec g{0, 0, 500, 8, 8};
  PreprocessConfig cfg;
  cfg.spd_duration_s = 1200;
  cfg.spd_radius_m = 200;
  cfg.long_stay_split_s = 4 * 3600;

  SUBCASE("empty corpus") {
    const auto res = preprocess_corpus({}, g, cfg);
    CHECK(res.sequences.empty());
    CHECK(res.stats.n_agents == 0);
    CHECK(res.stats.n_train_sequences == 0);
    CHECK(res.stats.n_test_sequences == 0);
  }

  SUBCASE("one agent with dwell-move pattern, stats cover the emitted range") {
    RawTrajectory tr;
    tr.agent_id = "a1";
    std::int64_t t = 0;
    auto dwell_at = [&](int cell, std::int64_t seconds) {
      double lat, lon;
      cell_center(cell, g, lat, lon);
      for (std::int64_t s = 0; s < seconds; s += 600) {
        tr.points.push_back(GpsPoint{lat, lon, t});
        t += 600;
      }
    };
    // Long dwells split the stay sequence into three subtrajectories:
    // [0,9,18], [18,27,36], [36,45,54].
    dwell_at(0, 5 * 3600);
    dwell_at(9, 1800);
    dwell_at(18, 5 * 3600);
    dwell_at(27, 1800);
    dwell_at(36, 5 * 3600);
    dwell_at(45, 1800);
    dwell_at(54, 5 * 3600);
    const auto res = preprocess_corpus({tr}, g, cfg);
    CHECK(res.sequences.size() == 3);
    for (const auto& s : res.sequences) CHECK(s.agent_id == "a1");
    int mn = 1 << 30, mx = 0;
    for (const auto& s : res.sequences) {
      mn = std::min(mn, static_cast<int>(s.tokens.size()));
      mx = std::max(mx, static_cast<int>(s.tokens.size()));
    }
    CHECK(res.stats.min_len == mn);
    CHECK(res.stats.max_len == mx);
    CHECK(res.stats.n_train_sequences + res.stats.n_test_sequences ==
          static_cast<std::int64_t>(res.sequences.size()));
    // subtraj ids are sequential in output order
    for (std::size_t i = 0; i < res.sequences.size(); ++i) {
      CHECK(res.sequences[i].subtraj_id == static_cast<std::int64_t>(i));
    }
  }

  SUBCASE("per-trajectory failures are reported, not fatal") {
    // Two dwell clusters far outside the grid: tokenize hits OutOfBounds.
    RawTrajectory bad;
    bad.agent_id = "bad";
    std::int64_t bt = 0;
    for (int i = 0; i < 8; ++i, bt += 600) bad.points.push_back(GpsPoint{-80.0, 170.0, bt});
    for (int i = 0; i < 8; ++i, bt += 600) bad.points.push_back(GpsPoint{-80.1, 170.0, bt});
    RawTrajectory good;
    good.agent_id = "good";
    double lat, lon;
    cell_center(0, g, lat, lon);
    for (int i = 0; i < 8; ++i) good.points.push_back(GpsPoint{lat, lon, i * 600});
    cell_center(9, g, lat, lon);
    for (int i = 8; i < 16; ++i) good.points.push_back(GpsPoint{lat, lon, i * 600});
    const auto res = preprocess_corpus({bad, good}, g, cfg);
    REQUIRE(res.stats.failures.size() == 1);
    CHECK(res.stats.failures[0].find("bad") != std::string::npos);
    CHECK(res.sequences.size() == 1);
  }
}

TEST_CASE("preprocessing is deterministic byte for byte") {
  Rng rng(5);
  std::vector<RawTrajectory> corpus;
  for (int a = 0; a < 4; ++a) {
    RawTrajectory tr = random_trace(rng, 50);
    tr.agent_id = "agent_" + std::to_string(a);
    // shift into positive coordinates near the grid
    for (auto& p : tr.points) {
      p.lat += 0.05;
      p.lon += 0.05;
    }
    corpus.push_back(std::move(tr));
  }
  GridSpec g{0, 0, 500, 32, 32};
  PreprocessConfig cfg;
  cfg.spd_duration_s = 600;
  cfg.spd_radius_m = 200;
  const auto r1 = preprocess_corpus(corpus, g, cfg);
  const auto r2 = preprocess_corpus(corpus, g, cfg);
  CHECK(sequences_to_jsonl(r1.sequences) == sequences_to_jsonl(r2.sequences));
  CHECK(meta_to_json(g, cfg, r1.stats) == meta_to_json(g, cfg, r2.stats));
}
