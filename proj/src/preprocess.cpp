#include "trajscope/preprocess.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace trajscope {

std::vector<StayPoint> detect_stay_points(const RawTrajectory& traj, const PreprocessConfig& cfg) {
  const auto& p = traj.points;
  const std::size_t n = p.size();
  if (n == 0) {
    throw EmptyTrajectoryError("trajectory for agent '" + traj.agent_id + "' has no points");
  }
  std::vector<StayPoint> out;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && haversine_m(p[i], p[j]) <= cfg.spd_radius_m) ++j;
    const std::int64_t t_exit = (j < n) ? p[j].t : p[n - 1].t;
    if (t_exit - p[i].t > cfg.spd_duration_s && j - i >= 2) {
      StayPoint sp;
      double lat = 0.0, lon = 0.0;
      for (std::size_t k = i; k < j; ++k) {
        lat += p[k].lat;
        lon += p[k].lon;
      }
      const double m = static_cast<double>(j - i);
      sp.lat = lat / m;
      sp.lon = lon / m;
      sp.t_arrive = p[i].t;
      sp.t_depart = p[j - 1].t;
      out.push_back(sp);
      i = j;
    } else {
      ++i;
    }
  }
  return out;
}

std::vector<Subtrajectory> partition(const std::string& agent_id,
                                     const std::vector<StayPoint>& stays,
                                     const PreprocessConfig& cfg) {
  std::vector<Subtrajectory> out;
  std::vector<StayPoint> cur;
  auto flush = [&] {
    if (cur.size() >= 2) out.push_back(Subtrajectory{agent_id, cur});
    cur.clear();
  };
  for (const StayPoint& s : stays) {
    if (!cur.empty() && s.t_arrive - cur.back().t_depart > cfg.transition_split_s) {
      flush();  // rule 2: hard cut, no duplication
    }
    cur.push_back(s);
    if (s.dwell_s() >= cfg.long_stay_split_s) {
      flush();       // rule 1: the long stay closes this piece...
      cur.push_back(s);  // ...and seeds the next one
    }
  }
  flush();
  // A trailing piece consisting only of a duplicated long stay is not a
  // subtrajectory; flush() already dropped it via the length-2 filter.
  return out;
}

std::optional<TokenSequence> tokenize(const Subtrajectory& sub, const GridSpec& g,
                                      const PreprocessConfig& cfg) {
  std::vector<int> tokens;
  tokens.reserve(sub.stays.size());
  for (const StayPoint& s : sub.stays) {
    const int tok = to_token(s, g);
    if (cfg.collapse_repeats && !tokens.empty() && tokens.back() == tok) continue;
    tokens.push_back(tok);
  }
  if (static_cast<int>(tokens.size()) > cfg.w_max) tokens.resize(cfg.w_max);
  if (tokens.size() < 2) return std::nullopt;
  TokenSequence seq;
  seq.agent_id = sub.agent_id;
  seq.tokens = std::move(tokens);
  seq.t_start = sub.stays.front().t_arrive;
  seq.t_end = sub.stays.back().t_depart;
  return seq;
}

PreprocessResult preprocess_corpus(const std::vector<RawTrajectory>& trajs, const GridSpec& g,
                                   const PreprocessConfig& cfg) {
  PreprocessResult res;
  // Stable processing order: by agent id, then by first timestamp.
  std::vector<std::size_t> order(trajs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (trajs[a].agent_id != trajs[b].agent_id) return trajs[a].agent_id < trajs[b].agent_id;
    const std::int64_t ta = trajs[a].points.empty() ? 0 : trajs[a].points.front().t;
    const std::int64_t tb = trajs[b].points.empty() ? 0 : trajs[b].points.front().t;
    return ta < tb;
  });

  std::int64_t t_min = std::numeric_limits<std::int64_t>::max();
  std::int64_t t_max = std::numeric_limits<std::int64_t>::min();
  std::map<std::string, bool> agents_seen;  // agent -> emitted anything

  std::int64_t next_id = 0;
  for (std::size_t idx : order) {
    const RawTrajectory& traj = trajs[idx];
    agents_seen.emplace(traj.agent_id, false);
    try {
      if (!traj.points.empty()) {
        t_min = std::min(t_min, traj.points.front().t);
        t_max = std::max(t_max, traj.points.back().t);
      }
      const auto stays = detect_stay_points(traj, cfg);
      for (const auto& sub : partition(traj.agent_id, stays, cfg)) {
        auto seq = tokenize(sub, g, cfg);
        if (!seq) continue;
        seq->subtraj_id = next_id++;
        res.sequences.push_back(std::move(*seq));
        agents_seen[traj.agent_id] = true;
      }
    } catch (const std::exception& e) {
      res.stats.failures.push_back("agent '" + traj.agent_id + "': " + e.what());
    }
  }

  CorpusStats& st = res.stats;
  st.n_agents = static_cast<std::int64_t>(agents_seen.size());
  for (const auto& [id, emitted] : agents_seen) {
    if (emitted) ++st.n_agents_emitted;
  }
  st.split_t = (t_min <= t_max) ? t_min + (t_max - t_min) / 2 : 0;
  int mn = std::numeric_limits<int>::max(), mx = 0;
  for (const TokenSequence& s : res.sequences) {
    const int w = static_cast<int>(s.tokens.size());
    mn = std::min(mn, w);
    mx = std::max(mx, w);
    if (is_train_sequence(s, st)) {
      ++st.n_train_sequences;
    } else {
      ++st.n_test_sequences;
    }
  }
  st.min_len = res.sequences.empty() ? 0 : mn;
  st.max_len = mx;
  return res;
}

}  // namespace trajscope
