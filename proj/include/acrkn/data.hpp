#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "acrkn/rng.hpp"
#include "acrkn/tensor.hpp"

namespace acrkn {

// ---------------------------------------------------------------------------
// episodes and batches

struct Episode {
  int id = 0;
  Tensor obs;  // (T, d_o)
  Tensor act;  // (T, d_a)

  std::size_t length() const { return obs.rows(); }
  std::size_t obs_dim() const { return obs.cols(); }
  std::size_t act_dim() const { return act.cols(); }
};

/// Time-major batch of equal-length episodes. Masking never deletes data:
/// obs_mask says what the model may read, target_mask says which steps
/// count in the forward loss (the next observation at t+1 is the target of
/// step t; t = T-1 never has one).
struct SequenceBatch {
  std::size_t T = 0, d_o = 0, d_a = 0;
  std::vector<Episode> episodes;
  std::vector<std::vector<std::uint8_t>> obs_mask;     // [episode][t]
  std::vector<std::vector<std::uint8_t>> target_mask;  // [episode][t]

  std::size_t count() const { return episodes.size(); }
  bool observed(std::size_t e, std::size_t t) const { return obs_mask[e][t] != 0; }
  bool counted(std::size_t e, std::size_t t) const { return target_mask[e][t] != 0; }

  std::vector<double> obs_at(std::size_t e, std::size_t t) const {
    const Tensor& o = episodes[e].obs;
    return std::vector<double>(o.v.begin() + t * d_o, o.v.begin() + (t + 1) * d_o);
  }
  std::vector<double> act_at(std::size_t e, std::size_t t) const {
    const Tensor& a = episodes[e].act;
    return std::vector<double>(a.v.begin() + t * d_a, a.v.begin() + (t + 1) * d_a);
  }

  SequenceBatch subset(const std::vector<std::size_t>& idx) const {
    SequenceBatch out;
    out.T = T;
    out.d_o = d_o;
    out.d_a = d_a;
    for (std::size_t e : idx) {
      out.episodes.push_back(episodes.at(e));
      out.obs_mask.push_back(obs_mask.at(e));
      out.target_mask.push_back(target_mask.at(e));
    }
    return out;
  }
};

inline SequenceBatch make_batch(const std::vector<Episode>& episodes) {
  if (episodes.empty()) throw Error("make_batch: no episodes");
  SequenceBatch b;
  b.T = episodes[0].length();
  b.d_o = episodes[0].obs_dim();
  b.d_a = episodes[0].act_dim();
  for (const Episode& e : episodes) {
    if (e.length() != b.T || e.obs_dim() != b.d_o || e.act_dim() != b.d_a)
      throw Error("make_batch: episodes must share length and dimensions");
    if (!e.obs.all_finite() || !e.act.all_finite())
      throw Error("make_batch: non-finite values in episode " + std::to_string(e.id));
    b.episodes.push_back(e);
    b.obs_mask.emplace_back(b.T, 1);
    std::vector<std::uint8_t> tm(b.T, 1);
    tm[b.T - 1] = 0;  // last step has no next observation
    b.target_mask.push_back(std::move(tm));
  }
  return b;
}

/// Prefix protocol: observations visible for t < observed_prefix, hidden
/// afterwards. Hidden steps are also dropped from the loss; actions stay
/// visible everywhere.
inline void mask_prefix(SequenceBatch& batch, std::size_t observed_prefix) {
  if (observed_prefix == 0 || observed_prefix >= batch.T)
    throw Error("mask_prefix: need 0 < P < T");
  for (std::size_t e = 0; e < batch.count(); ++e) {
    for (std::size_t t = 0; t < batch.T; ++t) {
      batch.obs_mask[e][t] = t < observed_prefix ? 1 : 0;
      batch.target_mask[e][t] = (t + 1 < batch.T && t + 1 < observed_prefix) ? 1 : 0;
    }
  }
}

/// Random-drop protocol: floor(rho*T) distinct interior steps hidden per
/// episode, t=0 always visible. The hidden states remain training targets.
inline void mask_random(SequenceBatch& batch, double drop_fraction, std::uint64_t seed) {
  if (drop_fraction < 0.0 || drop_fraction >= 1.0)
    throw Error("mask_random: need 0 <= rho < 1");
  Rng rng(seed);
  std::size_t drop = static_cast<std::size_t>(drop_fraction * static_cast<double>(batch.T));
  if (drop > batch.T - 1) drop = batch.T - 1;
  for (std::size_t e = 0; e < batch.count(); ++e) {
    std::fill(batch.obs_mask[e].begin(), batch.obs_mask[e].end(), 1);
    std::vector<std::size_t> interior(batch.T - 1);
    for (std::size_t i = 0; i < interior.size(); ++i) interior[i] = i + 1;
    // partial Fisher-Yates: first `drop` entries are the hidden steps
    for (std::size_t i = 0; i < drop; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.integer(interior.size() - i));
      std::swap(interior[i], interior[j]);
      batch.obs_mask[e][interior[i]] = 0;
    }
    for (std::size_t t = 0; t + 1 < batch.T; ++t) batch.target_mask[e][t] = 1;
    batch.target_mask[e][batch.T - 1] = 0;
  }
}

// ---------------------------------------------------------------------------
// normalization

/// Per-channel mean and standard deviation, fitted on the training split
/// only; constant channels are rejected at fit time.
struct NormStats {
  std::vector<double> obs_mean, obs_std;
  std::vector<double> act_mean, act_std;
};

inline NormStats fit_norm(const std::vector<Episode>& train) {
  if (train.empty()) throw Error("fit_norm: empty training split");
  std::size_t d_o = train[0].obs_dim(), d_a = train[0].act_dim();
  NormStats s;
  s.obs_mean.assign(d_o, 0.0);
  s.obs_std.assign(d_o, 0.0);
  s.act_mean.assign(d_a, 0.0);
  s.act_std.assign(d_a, 0.0);
  std::size_t count = 0;
  for (const Episode& e : train) {
    for (std::size_t t = 0; t < e.length(); ++t) {
      for (std::size_t j = 0; j < d_o; ++j) s.obs_mean[j] += e.obs.at(t, j);
      for (std::size_t j = 0; j < d_a; ++j) s.act_mean[j] += e.act.at(t, j);
    }
    count += e.length();
  }
  for (double& x : s.obs_mean) x /= static_cast<double>(count);
  for (double& x : s.act_mean) x /= static_cast<double>(count);
  for (const Episode& e : train) {
    for (std::size_t t = 0; t < e.length(); ++t) {
      for (std::size_t j = 0; j < d_o; ++j) {
        double d = e.obs.at(t, j) - s.obs_mean[j];
        s.obs_std[j] += d * d;
      }
      for (std::size_t j = 0; j < d_a; ++j) {
        double d = e.act.at(t, j) - s.act_mean[j];
        s.act_std[j] += d * d;
      }
    }
  }
  for (std::size_t j = 0; j < d_o; ++j) {
    s.obs_std[j] = std::sqrt(s.obs_std[j] / static_cast<double>(count));
    if (s.obs_std[j] <= 0.0)
      throw Error("fit_norm: observation channel " + std::to_string(j + 1) + " is constant");
  }
  for (std::size_t j = 0; j < d_a; ++j) {
    s.act_std[j] = std::sqrt(s.act_std[j] / static_cast<double>(count));
    if (s.act_std[j] <= 0.0)
      throw Error("fit_norm: action channel " + std::to_string(j + 1) + " is constant");
  }
  return s;
}

inline Episode apply_norm(const NormStats& s, const Episode& e) {
  Episode out = e;
  std::size_t d_o = e.obs_dim(), d_a = e.act_dim();
  if (d_o != s.obs_mean.size() || d_a != s.act_mean.size())
    throw Error("apply_norm: channel count mismatch");
  for (std::size_t t = 0; t < e.length(); ++t) {
    for (std::size_t j = 0; j < d_o; ++j)
      out.obs.at(t, j) = (e.obs.at(t, j) - s.obs_mean[j]) / s.obs_std[j];
    for (std::size_t j = 0; j < d_a; ++j)
      out.act.at(t, j) = (e.act.at(t, j) - s.act_mean[j]) / s.act_std[j];
  }
  return out;
}

inline Episode invert_norm(const NormStats& s, const Episode& e) {
  Episode out = e;
  for (std::size_t t = 0; t < e.length(); ++t) {
    for (std::size_t j = 0; j < e.obs_dim(); ++j)
      out.obs.at(t, j) = e.obs.at(t, j) * s.obs_std[j] + s.obs_mean[j];
    for (std::size_t j = 0; j < e.act_dim(); ++j)
      out.act.at(t, j) = e.act.at(t, j) * s.act_std[j] + s.act_mean[j];
  }
  return out;
}

inline std::vector<Episode> apply_norm(const NormStats& s, const std::vector<Episode>& es) {
  std::vector<Episode> out;
  out.reserve(es.size());
  for (const Episode& e : es) out.push_back(apply_norm(s, e));
  return out;
}

// ---------------------------------------------------------------------------
// synthetic actuator systems

enum class SystemKind { kPendulumLag, kAntagonisticBacklash };

inline const char* system_kind_name(SystemKind k) {
  return k == SystemKind::kPendulumLag ? "pendulum-lag" : "antagonistic-backlash";
}
inline SystemKind system_kind_from_name(const std::string& s) {
  if (s == "pendulum-lag") return SystemKind::kPendulumLag;
  if (s == "antagonistic-backlash") return SystemKind::kAntagonisticBacklash;
  throw Error("unknown system kind '" + s + "'");
}

/// Torque-commanded pendulum with a first-order actuator lag:
///   theta'' = -(g/L) sin(theta) - c theta' + u / (m L^2)
///   u'      = (a - u) / tau
/// Only theta is observed, so (theta') and the actuator state (u) must be
/// inferred from history - observations alone are non-Markovian. The
/// antagonistic-backlash variant additionally passes the command through a
/// dead zone of width delta before the lag. Commands are a smoothed random
/// telegraph in [-2, 2]. Integration: exact exponential step for the lag
/// (stable for any tau > 0), then semi-implicit Euler for the pendulum.
struct SyntheticSystem {
  SystemKind kind = SystemKind::kPendulumLag;
  double gravity = 9.81;
  double length = 1.0;
  double mass = 1.0;
  double damping = 0.3;
  double lag_tau = 0.25;
  double dt = 0.02;
  double noise = 0.0;           // observation noise stddev
  double dead_zone = 0.2;       // antagonistic-backlash only
  double command_lo = -2.0;
  double command_hi = 2.0;
  double command_switch = 0.05;  // per-step probability of a new target
  double command_tau = 0.1;      // command smoothing time constant
};

inline std::vector<Episode> simulate(const SyntheticSystem& sys, std::size_t episodes,
                                     std::size_t T, std::uint64_t seed) {
  if (T < 2) throw Error("simulate: T must be >= 2");
  if (sys.dt <= 0.0) throw Error("simulate: dt must be positive");
  std::vector<Episode> out;
  out.reserve(episodes);
  Rng master(seed);
  for (std::size_t e = 0; e < episodes; ++e) {
    Rng rng = master.fork(e);
    Episode ep;
    ep.id = static_cast<int>(e);
    ep.obs = Tensor::zeros({T, 1});
    ep.act = Tensor::zeros({T, 1});
    double theta = rng.uniform(-0.5, 0.5);
    double omega = rng.uniform(-1.0, 1.0);
    double u = 0.0;
    double target = rng.uniform(sys.command_lo, sys.command_hi);
    double a = 0.0;
    double lag_decay = std::exp(-sys.dt / sys.lag_tau);
    double cmd_blend = 1.0 - std::exp(-sys.dt / sys.command_tau);
    for (std::size_t t = 0; t < T; ++t) {
      if (rng.uniform() < sys.command_switch)
        target = rng.uniform(sys.command_lo, sys.command_hi);
      a += (target - a) * cmd_blend;
      ep.act.at(t, 0) = a;
      double command = a;
      if (sys.kind == SystemKind::kAntagonisticBacklash) {
        if (std::abs(command) <= sys.dead_zone)
          command = 0.0;
        else
          command -= command > 0.0 ? sys.dead_zone : -sys.dead_zone;
      }
      u = command + (u - command) * lag_decay;
      double accel = -(sys.gravity / sys.length) * std::sin(theta) - sys.damping * omega +
                     u / (sys.mass * sys.length * sys.length);
      omega += sys.dt * accel;
      theta += sys.dt * omega;
      ep.obs.at(t, 0) = theta + (sys.noise > 0.0 ? rng.normal(0.0, sys.noise) : 0.0);
    }
    out.push_back(std::move(ep));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV ingest / export
//
// Schema: header "episode,t,o_1..o_{d_o},a_1..a_{d_a}", one row per step.
// Rows may arrive in any order; within an episode the step indices must be
// 0..T-1 with no gaps.

struct CsvSchema {
  std::size_t d_o = 0;
  std::size_t d_a = 0;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

inline std::vector<Episode> load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error("load_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error("load_csv: empty file '" + path + "'");

  std::vector<std::string> expected{"episode", "t"};
  for (std::size_t j = 1; j <= schema.d_o; ++j) expected.push_back("o_" + std::to_string(j));
  for (std::size_t j = 1; j <= schema.d_a; ++j) expected.push_back("a_" + std::to_string(j));
  std::vector<std::string> header = split_csv_line(line);
  if (header != expected) {
    std::string want;
    for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
    throw Error("load_csv: header mismatch in '" + path + "', expected '" + want + "'");
  }

  struct Row {
    long t;
    std::vector<double> o, a;
  };
  std::map<long, std::vector<Row>> by_episode;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != expected.size())
      throw Error("load_csv: row " + std::to_string(line_no) + ": expected " +
                  std::to_string(expected.size()) + " cells, got " +
                  std::to_string(cells.size()));
    auto num = [&](const std::string& cell, bool integer) {
      double x = 0.0;
      const char* b = cell.data();
      const char* e = b + cell.size();
      auto r = std::from_chars(b, e, x);
      if (r.ec != std::errc{} || r.ptr != e)
        throw Error("load_csv: row " + std::to_string(line_no) + ": non-numeric cell '" +
                    cell + "'");
      if (integer && x != std::floor(x))
        throw Error("load_csv: row " + std::to_string(line_no) + ": expected integer, got '" +
                    cell + "'");
      return x;
    };
    long id = static_cast<long>(num(cells[0], true));
    Row row;
    row.t = static_cast<long>(num(cells[1], true));
    for (std::size_t j = 0; j < schema.d_o; ++j) row.o.push_back(num(cells[2 + j], false));
    for (std::size_t j = 0; j < schema.d_a; ++j)
      row.a.push_back(num(cells[2 + schema.d_o + j], false));
    by_episode[id].push_back(std::move(row));
  }

  std::vector<Episode> out;
  for (auto& [id, rows] : by_episode) {
    std::sort(rows.begin(), rows.end(), [](const Row& x, const Row& y) { return x.t < y.t; });
    for (std::size_t t = 0; t < rows.size(); ++t) {
      if (rows[t].t != static_cast<long>(t))
        throw Error("load_csv: episode " + std::to_string(id) + ": steps not contiguous at t=" +
                    std::to_string(rows[t].t) + " (expected " + std::to_string(t) + ")");
    }
    Episode ep;
    ep.id = static_cast<int>(id);
    ep.obs = Tensor::zeros({rows.size(), schema.d_o});
    ep.act = Tensor::zeros({rows.size(), schema.d_a});
    for (std::size_t t = 0; t < rows.size(); ++t) {
      for (std::size_t j = 0; j < schema.d_o; ++j) ep.obs.at(t, j) = rows[t].o[j];
      for (std::size_t j = 0; j < schema.d_a; ++j) ep.act.at(t, j) = rows[t].a[j];
    }
    out.push_back(std::move(ep));
  }
  return out;
}

inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline void write_csv(const std::string& path, const std::vector<Episode>& episodes) {
  if (episodes.empty()) throw Error("write_csv: no episodes");
  std::ofstream out(path);
  if (!out) throw Error("write_csv: cannot open '" + path + "'");
  std::size_t d_o = episodes[0].obs_dim(), d_a = episodes[0].act_dim();
  out << "episode,t";
  for (std::size_t j = 1; j <= d_o; ++j) out << ",o_" << j;
  for (std::size_t j = 1; j <= d_a; ++j) out << ",a_" << j;
  out << "\n";
  for (const Episode& e : episodes) {
    for (std::size_t t = 0; t < e.length(); ++t) {
      out << e.id << "," << t;
      for (std::size_t j = 0; j < d_o; ++j) out << "," << format_double(e.obs.at(t, j));
      for (std::size_t j = 0; j < d_a; ++j) out << "," << format_double(e.act.at(t, j));
      out << "\n";
    }
  }
}

}  // namespace acrkn
