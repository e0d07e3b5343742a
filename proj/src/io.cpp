#include "trajscope/io.hpp"

#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace trajscope {

using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void atomic_write_file(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open for writing: " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

namespace {

json parse_json(const std::string& text, const std::string& what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ParseError("malformed JSON in " + what);
  return j;
}

json parse_json_line(const std::string& line, const std::string& filename, std::size_t lineno) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) {
    throw ParseError(filename + ":" + std::to_string(lineno) + ": malformed JSON record");
  }
  return j;
}

template <typename F>
void for_each_line(const std::string& text, F&& f) {
  std::size_t start = 0, lineno = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++lineno;
    if (end > start) f(text.substr(start, end - start), lineno);
    start = end + 1;
  }
}

// Minimal CSV: fields are quoted only when they contain a delimiter,
// quote or newline; embedded quotes are doubled.
std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> csv_split(const std::string& line, const std::string& filename,
                                   std::size_t lineno) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"' && cur.empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) {
    throw ParseError(filename + ":" + std::to_string(lineno) + ": unterminated quoted field");
  }
  fields.push_back(std::move(cur));
  return fields;
}

double parse_double_field(const std::string& s, const std::string& filename, std::size_t lineno,
                          const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError(filename + ":" + std::to_string(lineno) + ": bad " + what + " '" + s + "'");
  }
}

std::int64_t parse_int_field(const std::string& s, const std::string& filename,
                             std::size_t lineno, const char* what) {
  std::int64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw ParseError(filename + ":" + std::to_string(lineno) + ": bad " + what + " '" + s + "'");
  }
  return v;
}

}  // namespace

// --- GridSpec ----------------------------------------------------------------

std::string grid_to_json(const GridSpec& g) {
  json j;
  j["origin_lat"] = g.origin_lat;
  j["origin_lon"] = g.origin_lon;
  j["cell_size_m"] = g.cell_size_m;
  j["n_rows"] = g.n_rows;
  j["n_cols"] = g.n_cols;
  return j.dump() + "\n";
}

GridSpec grid_from_json(const std::string& text) {
  const json j = parse_json(text, "grid spec");
  GridSpec g;
  try {
    g.origin_lat = j.at("origin_lat").get<double>();
    g.origin_lon = j.at("origin_lon").get<double>();
    g.cell_size_m = j.at("cell_size_m").get<double>();
    g.n_rows = j.at("n_rows").get<int>();
    g.n_cols = j.at("n_cols").get<int>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("grid spec: ") + e.what());
  }
  if (g.cell_size_m <= 0 || g.n_rows <= 0 || g.n_cols <= 0) {
    throw ParseError("grid spec: cell_size_m, n_rows and n_cols must be positive");
  }
  return g;
}

// --- Trajectories --------------------------------------------------------------

std::string trajectories_to_jsonl(const std::vector<RawTrajectory>& trajs) {
  std::ostringstream os;
  for (const RawTrajectory& tr : trajs) {
    for (const GpsPoint& p : tr.points) {
      os << "{\"agent_id\":" << json(tr.agent_id).dump() << ",\"lat\":" << format_double(p.lat)
         << ",\"lon\":" << format_double(p.lon) << ",\"t\":" << p.t << "}\n";
    }
  }
  return os.str();
}

std::vector<RawTrajectory> trajectories_from_jsonl(const std::string& text,
                                                   const std::string& filename) {
  std::vector<RawTrajectory> out;
  std::map<std::string, std::size_t> seen;  // agent -> index in out
  for_each_line(text, [&](const std::string& line, std::size_t lineno) {
    const json j = parse_json_line(line, filename, lineno);
    GpsPoint p;
    std::string agent;
    try {
      agent = j.at("agent_id").get<std::string>();
      p.lat = j.at("lat").get<double>();
      p.lon = j.at("lon").get<double>();
      p.t = j.at("t").get<std::int64_t>();
    } catch (const json::exception& e) {
      throw ParseError(filename + ":" + std::to_string(lineno) + ": " + e.what());
    }
    if (p.lat < -90 || p.lat > 90 || p.lon < -180 || p.lon > 180 || p.t < 0) {
      throw ParseError(filename + ":" + std::to_string(lineno) + ": coordinate or time out of range");
    }
    const auto it = seen.find(agent);
    if (it == seen.end()) {
      if (!out.empty() && agent < out.back().agent_id) {
        throw ParseError(filename + ":" + std::to_string(lineno) +
                         ": file not sorted by (agent_id, t)");
      }
      seen.emplace(agent, out.size());
      out.push_back(RawTrajectory{agent, {p}});
      return;
    }
    if (it->second != out.size() - 1) {
      throw ParseError(filename + ":" + std::to_string(lineno) +
                       ": file not sorted by (agent_id, t): agent '" + agent + "' reappears");
    }
    RawTrajectory& tr = out[it->second];
    if (p.t <= tr.points.back().t) {
      throw ParseError(filename + ":" + std::to_string(lineno) +
                       ": timestamps not strictly increasing for agent '" + agent + "'");
    }
    tr.points.push_back(p);
  });
  return out;
}

// --- Token sequences -----------------------------------------------------------

std::string sequences_to_jsonl(const std::vector<TokenSequence>& seqs) {
  std::ostringstream os;
  for (const TokenSequence& s : seqs) {
    os << "{\"subtraj_id\":" << s.subtraj_id << ",\"agent_id\":" << json(s.agent_id).dump()
       << ",\"tokens\":[";
    for (std::size_t i = 0; i < s.tokens.size(); ++i) {
      if (i) os << ',';
      os << s.tokens[i];
    }
    os << "],\"t_start\":" << s.t_start << ",\"t_end\":" << s.t_end << "}\n";
  }
  return os.str();
}

std::vector<TokenSequence> sequences_from_jsonl(const std::string& text,
                                                const std::string& filename) {
  std::vector<TokenSequence> out;
  for_each_line(text, [&](const std::string& line, std::size_t lineno) {
    const json j = parse_json_line(line, filename, lineno);
    TokenSequence s;
    try {
      s.subtraj_id = j.at("subtraj_id").get<std::int64_t>();
      s.agent_id = j.at("agent_id").get<std::string>();
      s.tokens = j.at("tokens").get<std::vector<int>>();
      s.t_start = j.at("t_start").get<std::int64_t>();
      s.t_end = j.at("t_end").get<std::int64_t>();
    } catch (const json::exception& e) {
      throw ParseError(filename + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(s));
  });
  return out;
}

std::string meta_to_json(const GridSpec& g, const PreprocessConfig& cfg,
                         const CorpusStats& stats) {
  json j;
  j["grid"] = {{"origin_lat", g.origin_lat},
               {"origin_lon", g.origin_lon},
               {"cell_size_m", g.cell_size_m},
               {"n_rows", g.n_rows},
               {"n_cols", g.n_cols}};
  j["preprocess_config"] = {{"spd_duration_s", cfg.spd_duration_s},
                            {"spd_radius_m", cfg.spd_radius_m},
                            {"long_stay_split_s", cfg.long_stay_split_s},
                            {"transition_split_s", cfg.transition_split_s},
                            {"w_max", cfg.w_max},
                            {"collapse_repeats", cfg.collapse_repeats}};
  j["stats"] = {{"n_agents", stats.n_agents},
                {"n_agents_emitted", stats.n_agents_emitted},
                {"n_train_sequences", stats.n_train_sequences},
                {"n_test_sequences", stats.n_test_sequences},
                {"min_len", stats.min_len},
                {"max_len", stats.max_len},
                {"split_t", stats.split_t},
                {"failures", stats.failures}};
  return j.dump(2) + "\n";
}

void meta_from_json(const std::string& text, GridSpec& g, PreprocessConfig& cfg,
                    CorpusStats& stats) {
  const json j = parse_json(text, "dataset metadata");
  try {
    const json& jg = j.at("grid");
    g.origin_lat = jg.at("origin_lat").get<double>();
    g.origin_lon = jg.at("origin_lon").get<double>();
    g.cell_size_m = jg.at("cell_size_m").get<double>();
    g.n_rows = jg.at("n_rows").get<int>();
    g.n_cols = jg.at("n_cols").get<int>();
    const json& jc = j.at("preprocess_config");
    cfg.spd_duration_s = jc.at("spd_duration_s").get<std::int64_t>();
    cfg.spd_radius_m = jc.at("spd_radius_m").get<double>();
    cfg.long_stay_split_s = jc.at("long_stay_split_s").get<std::int64_t>();
    cfg.transition_split_s = jc.at("transition_split_s").get<std::int64_t>();
    cfg.w_max = jc.at("w_max").get<int>();
    cfg.collapse_repeats = jc.at("collapse_repeats").get<bool>();
    const json& js = j.at("stats");
    stats.n_agents = js.at("n_agents").get<std::int64_t>();
    stats.n_agents_emitted = js.at("n_agents_emitted").get<std::int64_t>();
    stats.n_train_sequences = js.at("n_train_sequences").get<std::int64_t>();
    stats.n_test_sequences = js.at("n_test_sequences").get<std::int64_t>();
    stats.min_len = js.at("min_len").get<int>();
    stats.max_len = js.at("max_len").get<int>();
    stats.split_t = js.at("split_t").get<std::int64_t>();
    stats.failures = js.at("failures").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("dataset metadata: ") + e.what());
  }
}

// --- POIs -----------------------------------------------------------------------

std::string pois_to_csv(const std::vector<Poi>& pois) {
  std::ostringstream os;
  os << "poi_id,name,category,lat,lon\n";
  for (const Poi& p : pois) {
    os << csv_escape(p.poi_id) << ',' << csv_escape(p.name) << ',' << csv_escape(p.category)
       << ',' << format_double(p.lat) << ',' << format_double(p.lon) << "\n";
  }
  return os.str();
}

std::vector<Poi> pois_from_csv(const std::string& text, const std::string& filename) {
  std::vector<Poi> out;
  bool header_seen = false;
  for_each_line(text, [&](const std::string& line, std::size_t lineno) {
    if (!header_seen) {
      header_seen = true;
      if (line != "poi_id,name,category,lat,lon") {
        throw ParseError(filename + ":1: expected header poi_id,name,category,lat,lon");
      }
      return;
    }
    const auto f = csv_split(line, filename, lineno);
    if (f.size() != 5) {
      throw ParseError(filename + ":" + std::to_string(lineno) + ": expected 5 fields, got " +
                       std::to_string(f.size()));
    }
    Poi p;
    p.poi_id = f[0];
    p.name = f[1];
    p.category = f[2];
    p.lat = parse_double_field(f[3], filename, lineno, "lat");
    p.lon = parse_double_field(f[4], filename, lineno, "lon");
    if (p.lat < -90 || p.lat > 90 || p.lon < -180 || p.lon > 180) {
      throw ParseError(filename + ":" + std::to_string(lineno) + ": coordinate out of range");
    }
    out.push_back(std::move(p));
  });
  return out;
}

// --- Labels ----------------------------------------------------------------------

std::string labels_to_csv(const std::map<std::string, int>& labels) {
  std::ostringstream os;
  os << "agent_id,label\n";
  for (const auto& [id, label] : labels) os << csv_escape(id) << ',' << label << "\n";
  return os.str();
}

std::map<std::string, int> labels_from_csv(const std::string& text, const std::string& filename) {
  std::map<std::string, int> out;
  bool header_seen = false;
  for_each_line(text, [&](const std::string& line, std::size_t lineno) {
    if (!header_seen) {
      header_seen = true;
      if (line != "agent_id,label") {
        throw ParseError(filename + ":1: expected header agent_id,label");
      }
      return;
    }
    const auto f = csv_split(line, filename, lineno);
    if (f.size() != 2) {
      throw ParseError(filename + ":" + std::to_string(lineno) + ": expected 2 fields");
    }
    const std::int64_t label = parse_int_field(f[1], filename, lineno, "label");
    if (label != 0 && label != 1) {
      throw ParseError(filename + ":" + std::to_string(lineno) + ": label must be 0 or 1");
    }
    out[f[0]] = static_cast<int>(label);
  });
  return out;
}

// --- Cluster model / grid vectors -------------------------------------------------

std::string cluster_model_to_json(const ClusterModel& m) {
  json j;
  j["K"] = m.k;
  j["seed"] = m.seed;
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.centroids.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.centroids.cols(); ++c) row.push_back(m.centroids(r, c));
    rows.push_back(std::move(row));
  }
  j["centroids"] = std::move(rows);
  return j.dump() + "\n";
}

ClusterModel cluster_model_from_json(const std::string& text) {
  const json j = parse_json(text, "cluster model");
  ClusterModel m;
  try {
    m.k = j.at("K").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    const auto rows = j.at("centroids").get<std::vector<std::vector<double>>>();
    if (static_cast<int>(rows.size()) != m.k || m.k < 1) {
      throw ParseError("cluster model: centroid count does not match K");
    }
    const std::size_t d = rows[0].size();
    m.centroids.resize(m.k, static_cast<Eigen::Index>(d));
    for (int r = 0; r < m.k; ++r) {
      if (rows[static_cast<std::size_t>(r)].size() != d) {
        throw ParseError("cluster model: ragged centroid matrix");
      }
      for (std::size_t c = 0; c < d; ++c) {
        m.centroids(r, static_cast<Eigen::Index>(c)) = rows[static_cast<std::size_t>(r)][c];
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("cluster model: ") + e.what());
  }
  return m;
}

std::string grid_vectors_to_jsonl(const GridPoiVectors& gv) {
  std::ostringstream os;
  for (const auto& [token, counts] : gv) {
    os << "{\"token\":" << token << ",\"counts\":[";
    for (int i = 0; i < counts.size(); ++i) {
      if (i) os << ',';
      os << counts[i];
    }
    os << "]}\n";
  }
  return os.str();
}

GridPoiVectors grid_vectors_from_jsonl(const std::string& text, const std::string& filename,
                                       int& n_classes) {
  GridPoiVectors out;
  n_classes = 0;
  for_each_line(text, [&](const std::string& line, std::size_t lineno) {
    const json j = parse_json_line(line, filename, lineno);
    try {
      const int token = j.at("token").get<int>();
      const auto counts = j.at("counts").get<std::vector<int>>();
      if (n_classes == 0) {
        n_classes = static_cast<int>(counts.size());
      } else if (n_classes != static_cast<int>(counts.size())) {
        throw ParseError(filename + ":" + std::to_string(lineno) +
                         ": inconsistent counts dimension");
      }
      Eigen::VectorXi v(static_cast<Eigen::Index>(counts.size()));
      for (std::size_t i = 0; i < counts.size(); ++i) v[static_cast<Eigen::Index>(i)] = counts[i];
      out[token] = std::move(v);
    } catch (const json::exception& e) {
      throw ParseError(filename + ":" + std::to_string(lineno) + ": " + e.what());
    }
  });
  return out;
}

std::string cluster_report_to_csv(const std::vector<std::pair<int, int>>& report) {
  std::ostringstream os;
  os << "token,dominant_cluster\n";
  for (const auto& [token, cluster] : report) os << token << ',' << cluster << "\n";
  return os.str();
}

// --- Scores / PR curve / ablation ---------------------------------------------------

std::string scores_to_csv(const std::vector<ScoreRecord>& scores) {
  std::ostringstream os;
  os << "subtraj_id,agent_id,recon_loglik,score\n";
  for (const ScoreRecord& s : scores) {
    os << s.subtraj_id << ',' << csv_escape(s.agent_id) << ',' << format_double(s.recon_loglik)
       << ',' << format_double(s.score) << "\n";
  }
  return os.str();
}

std::vector<ScoreRecord> scores_from_csv(const std::string& text, const std::string& filename) {
  std::vector<ScoreRecord> out;
  bool header_seen = false;
  for_each_line(text, [&](const std::string& line, std::size_t lineno) {
    if (!header_seen) {
      header_seen = true;
      if (line != "subtraj_id,agent_id,recon_loglik,score") {
        throw ParseError(filename + ":1: expected header subtraj_id,agent_id,recon_loglik,score");
      }
      return;
    }
    const auto f = csv_split(line, filename, lineno);
    if (f.size() != 4) {
      throw ParseError(filename + ":" + std::to_string(lineno) + ": expected 4 fields");
    }
    ScoreRecord r;
    r.subtraj_id = parse_int_field(f[0], filename, lineno, "subtraj_id");
    r.agent_id = f[1];
    r.recon_loglik = parse_double_field(f[2], filename, lineno, "recon_loglik");
    r.score = parse_double_field(f[3], filename, lineno, "score");
    out.push_back(std::move(r));
  });
  return out;
}

std::string pr_curve_to_json(const PrCurve& curve) {
  std::ostringstream os;
  os << "{\"points\":[";
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    if (i) os << ',';
    os << '[' << format_double(curve.points[i].recall) << ','
       << format_double(curve.points[i].precision) << ']';
  }
  os << "],\"average_precision\":" << format_double(curve.average_precision) << "}\n";
  return os.str();
}

std::string ablation_to_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << "mode,average_precision,flag\n";
  for (const AblationRow& r : rows) {
    os << r.mode << ',' << format_double(r.average_precision) << ',' << r.flag << "\n";
  }
  return os.str();
}

std::string truth_to_json(const GroundTruth& truth) {
  json j;
  j["agent_labels"] = truth.agent_labels;
  json windows = json::array();
  for (const InjectedWindow& w : truth.injected_windows) {
    windows.push_back({{"agent_id", w.agent_id},
                       {"t_start", w.t_start},
                       {"t_end", w.t_end},
                       {"kind", w.kind}});
  }
  j["injected_windows"] = std::move(windows);
  return j.dump(2) + "\n";
}

// --- Checkpoint -----------------------------------------------------------------------

std::string checkpoint_to_bytes(const Checkpoint& ck) {
  json header;
  header["version"] = ck.version;
  header["hyperparams"] = {{"d_tok", ck.hp.d_tok},
                           {"d_agent", ck.hp.d_agent},
                           {"d_ctx", ck.hp.d_ctx},
                           {"d_hid", ck.hp.d_hid},
                           {"d_z", ck.hp.d_z},
                           {"mc_samples", ck.hp.mc_samples},
                           {"lr", ck.hp.lr},
                           {"epochs", ck.hp.epochs},
                           {"batch_size", ck.hp.batch_size},
                           {"w_max", ck.hp.w_max},
                           {"seed", ck.hp.seed},
                           {"length_normalize", ck.hp.length_normalize}};
  header["vocab_size"] = ck.vocab;
  header["k_poi"] = ck.k_poi;
  header["context_mode"] = ck.context_mode;
  header["agent_rows"] = ck.agent_rows;
  json tensors = json::array();
  for_each_tensor(ck.params, [&](const char* name, const auto& t) {
    tensors.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  });
  header["tensors"] = std::move(tensors);

  const std::string htext = header.dump();
  std::string out;
  std::uint64_t hlen = htext.size();
  char lenbuf[8];
  for (int i = 0; i < 8; ++i) lenbuf[i] = static_cast<char>((hlen >> (8 * i)) & 0xff);
  out.append(lenbuf, 8);
  out += htext;
  for_each_tensor(ck.params, [&](const char*, const auto& t) {
    out.append(reinterpret_cast<const char*>(t.data()), sizeof(double) * t.size());
  });
  return out;
}

Checkpoint checkpoint_from_bytes(const std::string& bytes) {
  if (bytes.size() < 8) throw ParseError("checkpoint: truncated header length");
  std::uint64_t hlen = 0;
  for (int i = 0; i < 8; ++i) {
    hlen |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i])) << (8 * i);
  }
  if (bytes.size() < 8 + hlen) throw ParseError("checkpoint: truncated header");
  const json header = parse_json(bytes.substr(8, hlen), "checkpoint header");

  Checkpoint ck;
  try {
    ck.version = header.at("version").get<std::string>();
    if (ck.version != "cavae-v1") {
      throw ParseError("checkpoint version '" + ck.version + "' is not 'cavae-v1'");
    }
    const json& h = header.at("hyperparams");
    ck.hp.d_tok = h.at("d_tok").get<int>();
    ck.hp.d_agent = h.at("d_agent").get<int>();
    ck.hp.d_ctx = h.at("d_ctx").get<int>();
    ck.hp.d_hid = h.at("d_hid").get<int>();
    ck.hp.d_z = h.at("d_z").get<int>();
    ck.hp.mc_samples = h.at("mc_samples").get<int>();
    ck.hp.lr = h.at("lr").get<double>();
    ck.hp.epochs = h.at("epochs").get<int>();
    ck.hp.batch_size = h.at("batch_size").get<int>();
    ck.hp.w_max = h.at("w_max").get<int>();
    ck.hp.seed = h.at("seed").get<std::uint64_t>();
    ck.hp.length_normalize = h.at("length_normalize").get<bool>();
    ck.vocab = header.at("vocab_size").get<int>();
    ck.k_poi = header.at("k_poi").get<int>();
    ck.context_mode = header.at("context_mode").get<std::string>();
    ck.agent_rows = header.at("agent_rows").get<std::map<std::string, int>>();

    ck.params = init_params<double>(ck.hp, ck.vocab, static_cast<int>(ck.agent_rows.size()),
                                    ck.k_poi, 0);
    std::size_t offset = 8 + hlen;
    std::size_t ti = 0;
    const json& tensors = header.at("tensors");
    for_each_tensor(ck.params, [&](const char* name, auto& t) {
      const json& spec = tensors.at(ti++);
      if (spec.at("name").get<std::string>() != name ||
          spec.at("rows").get<Eigen::Index>() != t.rows() ||
          spec.at("cols").get<Eigen::Index>() != t.cols()) {
        throw ParseError(std::string("checkpoint: tensor mismatch at '") + name + "'");
      }
      const std::size_t nbytes = sizeof(double) * static_cast<std::size_t>(t.size());
      if (bytes.size() < offset + nbytes) throw ParseError("checkpoint: truncated tensor data");
      std::memcpy(t.data(), bytes.data() + offset, nbytes);
      offset += nbytes;
    });
    if (offset != bytes.size()) throw ParseError("checkpoint: trailing bytes");
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
  return ck;
}

}  // namespace trajscope
