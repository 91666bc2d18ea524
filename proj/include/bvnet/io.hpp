#ifndef BVNET_IO_HPP
#define BVNET_IO_HPP

// Text formats: key=value configuration, CSV exports, and the params file
// shared by every CLI command. Doubles are written as shortest round-trip
// decimals.

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "bvnet/errors.hpp"
#include "bvnet/estimator.hpp"
#include "bvnet/markov.hpp"
#include "bvnet/model.hpp"

namespace bvnet::io {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Parses a whole token as a double; nullopt-like failure via bool.
inline bool parse_double(std::string_view tok, double& out) {
  tok = trim(tok);
  if (tok.empty()) return false;
  if (tok.front() == '+') tok.remove_prefix(1);
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc{} && res.ptr == tok.data() + tok.size();
}

inline bool parse_uint(std::string_view tok, std::uint64_t& out) {
  tok = trim(tok);
  if (tok.empty()) return false;
  const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc{} && res.ptr == tok.data() + tok.size();
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// key=value configuration

/// Flat `key = value` text with `#` comments. Every key must be consumed;
/// check_consumed() rejects leftovers so typos fail fast.
class KeyValueConfig {
 public:
  struct Entry {
    std::string value;
    std::size_t line;
  };

  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text, std::string source) {
    KeyValueConfig cfg;
    cfg.source_ = std::move(source);
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto end = std::min(text.find('\n', pos), text.size());
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (const auto hash = line.find('#'); hash != std::string_view::npos)
        line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) {
        if (end == text.size()) break;
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        throw ParseError(cfg.source_, line_no, "expected key = value");
      const std::string key(trim(line.substr(0, eq)));
      if (key.empty()) throw ParseError(cfg.source_, line_no, "empty key");
      if (cfg.entries_.contains(key))
        throw ParseError(cfg.source_, line_no, "duplicate key '" + key + "'");
      cfg.entries_[key] = {std::string(trim(line.substr(eq + 1))), line_no};
      if (end == text.size()) break;
    }
    return cfg;
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    return parse(read_file(path), path.string());
  }

  const std::string& source() const noexcept { return source_; }
  bool has(const std::string& key) const { return entries_.contains(key); }

  /// Raw value; marks the key consumed.
  const Entry* take(const std::string& key) {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return nullptr;
    consumed_.insert(key);
    return &it->second;
  }

  std::string get_string(const std::string& key, std::string fallback) {
    const Entry* e = take(key);
    return e ? e->value : fallback;
  }

  double get_double(const std::string& key, double fallback) {
    const Entry* e = take(key);
    if (!e) return fallback;
    double v;
    if (!parse_double(e->value, v) || !std::isfinite(v))
      throw ParseError(source_, e->line, "'" + key + "' is not a number");
    return v;
  }

  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) {
    const Entry* e = take(key);
    if (!e) return fallback;
    std::uint64_t v;
    if (!parse_uint(e->value, v))
      throw ParseError(source_, e->line,
                       "'" + key + "' is not a non-negative integer");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) {
    const Entry* e = take(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    throw ParseError(source_, e->line, "'" + key + "' must be true or false");
  }

  /// Whitespace- or comma-separated list of numbers.
  std::vector<double> get_list(const std::string& key) {
    const Entry* e = take(key);
    if (!e) throw ParseError(source_, 0, "missing key '" + key + "'");
    std::vector<double> out;
    std::string_view rest = e->value;
    while (true) {
      const auto b = rest.find_first_not_of(" \t,;");
      if (b == std::string_view::npos) break;
      rest.remove_prefix(b);
      const auto len = std::min(rest.find_first_of(" \t,;"), rest.size());
      double v;
      if (!parse_double(rest.substr(0, len), v) || !std::isfinite(v))
        throw ParseError(source_, e->line,
                         "'" + key + "' has a non-numeric entry '" +
                             std::string(rest.substr(0, len)) + "'");
      out.push_back(v);
      rest.remove_prefix(len);
    }
    return out;
  }

  std::size_t line_of(const std::string& key) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? 0 : it->second.line;
  }

  void check_consumed() const {
    for (const auto& [key, entry] : entries_)
      if (!consumed_.contains(key))
        throw ParseError(source_, entry.line, "unknown key '" + key + "'");
  }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
  std::set<std::string> consumed_;
};

// ---------------------------------------------------------------------------
// params files
//
//   n = 2
//   A = 0.8 -0.3  0.4 0.5      # row-major
//   c = 0.1 -0.2
//   sigma = 1 1                # optional, defaults to ones

/// Reads the params keys (n, A, c, sigma) out of `cfg`, consuming them.
inline NetworkParams params_from_config(KeyValueConfig& cfg) {
  const auto* ne = cfg.take("n");
  if (!ne) throw ParseError(cfg.source(), 0, "missing key 'n'");
  std::uint64_t n64;
  if (!parse_uint(ne->value, n64) || n64 < 2 || n64 > 64)
    throw ParseError(cfg.source(), ne->line, "'n' must be an integer >= 2");
  const auto n = static_cast<Eigen::Index>(n64);
  const auto check_len = [&](const std::string& key,
                             const std::vector<double>& v, Eigen::Index want) {
    if (static_cast<Eigen::Index>(v.size()) != want)
      throw ParseError(cfg.source(), cfg.line_of(key),
                       "'" + key + "' needs " + std::to_string(want) +
                           " values, got " + std::to_string(v.size()));
  };
  const auto av = cfg.get_list("A");
  check_len("A", av, n * n);
  const auto cv = cfg.get_list("c");
  check_len("c", cv, n);
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = av[i * n + j];
  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(cv.data(), n);
  Eigen::VectorXd sigma = Eigen::VectorXd::Ones(n);
  if (cfg.has("sigma")) {
    const auto sv = cfg.get_list("sigma");
    check_len("sigma", sv, n);
    sigma = Eigen::Map<const Eigen::VectorXd>(sv.data(), n);
  }
  if (n > kMaxSimulationAgents)
    throw CapacityError("params file", static_cast<int>(n),
                        kMaxSimulationAgents);
  return NetworkParams(std::move(a), std::move(c), std::move(sigma));
}

inline NetworkParams load_params(const std::filesystem::path& path) {
  auto cfg = KeyValueConfig::load(path);
  auto p = params_from_config(cfg);
  cfg.check_consumed();
  return p;
}

inline void write_params(std::ostream& os, const NetworkParams& p) {
  const int n = p.n();
  os << "n = " << n << "\nA =";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) os << ' ' << format_double(p.weights()(i, j));
  os << "\nc =";
  for (int i = 0; i < n; ++i) os << ' ' << format_double(p.thresholds()(i));
  os << "\nsigma =";
  for (int i = 0; i < n; ++i) os << ' ' << format_double(p.sigma()(i));
  os << '\n';
}

// ---------------------------------------------------------------------------
// CSV

/// Row-major matrix, one CSV line per row, no header.
inline void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ',';
      os << format_double(m(r, c));
    }
    os << '\n';
  }
}

/// Parses a square matrix written by write_matrix_csv. Errors name the row.
inline Eigen::MatrixXd read_matrix_csv(std::string_view text,
                                       const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const auto comma = std::min(line.find(',', start), line.size());
      double v;
      if (!parse_double(line.substr(start, comma - start), v))
        throw ParseError(source, line_no,
                         "row " + std::to_string(rows.size() + 1) +
                             ": non-numeric field " +
                             std::to_string(row.size() + 1));
      row.push_back(v);
      if (comma == line.size()) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw ParseError(source, line_no,
                       "row " + std::to_string(rows.size() + 1) + " has " +
                           std::to_string(row.size()) + " fields, expected " +
                           std::to_string(rows.front().size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(source, line_no, "empty matrix");
  if (rows.size() != rows.front().size())
    throw ParseError(source, line_no, "matrix is not square");
  const auto dim = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r)
    for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = rows[r][c];
  return m;
}

/// `state,pi` with the state as a decimal bitmask.
inline void write_distribution_csv(std::ostream& os, const Eigen::VectorXd& pi) {
  os << "state,pi\n";
  for (Eigen::Index k = 0; k < pi.size(); ++k)
    os << k << ',' << format_double(pi(k)) << '\n';
}

/// `t,s_bits`, one row per step t = 1..T.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,s_bits\n";
  for (std::size_t t = 1; t <= traj.length(); ++t)
    os << t << ',' << traj.state(t).bits << '\n';
}

/// Observations from a trajectory CSV, in row order.
inline std::vector<StateVec> read_trajectory_csv(std::string_view text, int n,
                                                 const std::string& source) {
  std::vector<StateVec> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header = true;
  while (pos < text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    if (header) {
      if (line != "t,s_bits")
        throw ParseError(source, line_no, "expected header t,s_bits");
      header = false;
      continue;
    }
    const auto comma = line.find(',');
    std::uint64_t t, bits;
    if (comma == std::string_view::npos ||
        !parse_uint(line.substr(0, comma), t) ||
        !parse_uint(line.substr(comma + 1), bits))
      throw ParseError(source, line_no, "malformed trajectory row");
    if (bits >> n)
      throw ParseError(source, line_no, "state does not fit in n bits");
    out.push_back({static_cast<std::uint32_t>(bits), n});
  }
  return out;
}

/// `t,theta_1,...,theta_m,err_norm`; err_norm only when the truth is known.
inline void write_run_csv(std::ostream& os, const RunRecord& run) {
  const Eigen::Index m = run.final_theta.theta.size();
  os << 't';
  for (Eigen::Index j = 1; j <= m; ++j) os << ",theta_" << j;
  if (run.truth) os << ",err_norm";
  os << '\n';
  for (const auto& snap : run.snapshots) {
    os << snap.t;
    for (Eigen::Index j = 0; j < m; ++j) os << ',' << format_double(snap.theta(j));
    if (run.truth) os << ',' << format_double(snap.err_norm);
    os << '\n';
  }
}

}  // namespace bvnet::io

#endif  // BVNET_IO_HPP
