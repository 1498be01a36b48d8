#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "warpband/error.hpp"
#include "warpband/riccati.hpp"

namespace warpband {

/// Parameter grid for width sweeps. Each axis is a list of values; the sweep
/// runs over the Cartesian product in the order n, sigma, H_minus, H_plus.
struct SweepConfig {
  std::vector<int> n;
  std::vector<double> sigma;
  std::vector<double> H_minus;
  std::vector<double> H_plus;

  std::size_t size() const { return n.size() * sigma.size() * H_minus.size() * H_plus.size(); }
};

struct SweepRow {
  ComparisonProblem problem;
  WidthVerdict verdict;
};

namespace detail {

inline std::string trim(const std::string &s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos)
    return {};
  return s.substr(first, s.find_last_not_of(" \t\r") - first + 1);
}

inline double parse_real(const std::string &text, const std::string &where) {
  const std::string s = trim(text);
  if (s == "-inf" || s == "-infinity")
    return -INFINITY;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    throw ParseError(where + ": '" + s + "' is not a number");
  }
  if (used != s.size() || std::isnan(v) || std::isinf(v))
    throw ParseError(where + ": '" + s + "' is not a finite number");
  return v;
}

/// "a, b, c" or "lo:hi:count" (count >= 1 evenly spaced values, inclusive).
inline std::vector<double> parse_axis(const std::string &text, const std::string &where) {
  std::vector<double> out;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string piece;
    while (std::getline(ss, piece, ':'))
      parts.push_back(piece);
    if (parts.size() != 3)
      throw ParseError(where + ": range must be lo:hi:count");
    const double lo = parse_real(parts[0], where), hi = parse_real(parts[1], where);
    const double count = parse_real(parts[2], where);
    if (count < 1 || count != std::floor(count) || count > 1e6)
      throw ParseError(where + ": range count must be a positive integer");
    if (!std::isfinite(lo) || hi < lo)
      throw ParseError(where + ": range needs finite lo <= hi");
    const int c = static_cast<int>(count);
    for (int i = 0; i < c; ++i)
      out.push_back(c == 1 ? lo : lo + (hi - lo) * i / (c - 1.0));
    return out;
  }
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ','))
    out.push_back(parse_real(piece, where));
  if (out.empty())
    throw ParseError(where + ": no values");
  return out;
}

} // namespace detail

/// Key-value config: one `key = values` per line, `#` starts a comment.
/// Keys: n, sigma, H_minus, H_plus (all required).
inline SweepConfig read_sweep_config(std::istream &in) {
  std::map<std::string, std::vector<double>> axes;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = line.substr(0, line.find('#'));
    if (detail::trim(line).empty())
      continue;
    const auto eq = line.find('=');
    const std::string where = "sweep config line " + std::to_string(line_no);
    if (eq == std::string::npos)
      throw ParseError(where + ": expected key = values");
    const std::string key = detail::trim(line.substr(0, eq));
    if (key != "n" && key != "sigma" && key != "H_minus" && key != "H_plus")
      throw ParseError(where + ": unknown key '" + key + "'");
    if (axes.count(key))
      throw ParseError(where + ": duplicate key '" + key + "'");
    axes[key] = detail::parse_axis(line.substr(eq + 1), where);
  }
  SweepConfig c;
  for (const char *key : {"n", "sigma", "H_minus", "H_plus"})
    if (!axes.count(key))
      throw ParseError(std::string("sweep config: missing key '") + key + "'");
  for (double v : axes["n"]) {
    if (v != std::floor(v) || v < 2 || v > 1000)
      throw ParseError("sweep config: n values must be integers in [2, 1000]");
    c.n.push_back(static_cast<int>(v));
  }
  c.sigma = axes["sigma"];
  c.H_minus = axes["H_minus"];
  c.H_plus = axes["H_plus"];
  for (double v : c.H_plus)
    if (!std::isfinite(v))
      throw ParseError("sweep config: H_plus values must be finite");
  for (double v : c.sigma)
    if (!std::isfinite(v))
      throw ParseError("sweep config: sigma values must be finite");
  return c;
}

inline SweepConfig read_sweep_config(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw ParseError("cannot open " + path);
  return read_sweep_config(in);
}

/// Evaluates every grid point; `jobs` threads share the work, rows come back
/// in grid order regardless of scheduling.
inline std::vector<SweepRow> run_sweep(const SweepConfig &c, int jobs = 1,
                                       const WidthOptions &opt = {}) {
  if (jobs < 1)
    throw ArgumentError("jobs must be at least 1");
  std::vector<SweepRow> rows;
  rows.reserve(c.size());
  for (int n : c.n)
    for (double s : c.sigma)
      for (double hm : c.H_minus)
        for (double hp : c.H_plus)
          rows.push_back({ComparisonProblem{n, s, hm, hp}, {}});
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(jobs));
  auto work = [&](int id) {
    try {
      for (std::size_t k = next++; k < rows.size(); k = next++)
        rows[k].verdict = width_bound(rows[k].problem, opt);
    } catch (...) {
      failures[id] = std::current_exception();
      next = rows.size();
    }
  };
  const int threads = static_cast<int>(std::min<std::size_t>(jobs, std::max<std::size_t>(rows.size(), 1)));
  std::vector<std::thread> pool;
  for (int id = 1; id < threads; ++id)
    pool.emplace_back(work, id);
  work(0);
  for (auto &t : pool)
    t.join();
  for (auto &f : failures)
    if (f)
      std::rethrow_exception(f);
  return rows;
}

inline std::string format_real(double v) {
  if (std::isnan(v))
    return "nan";
  if (std::isinf(v))
    return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Columns n, sigma, H_minus, H_plus, verdict, width (empty width unless finite).
inline void write_sweep_csv(std::ostream &out, const std::vector<SweepRow> &rows) {
  out << "n,sigma,H_minus,H_plus,verdict,width\n";
  for (const auto &r : rows) {
    out << r.problem.n << ',' << format_real(r.problem.sigma) << ','
        << format_real(r.problem.H_minus) << ',' << format_real(r.problem.H_plus) << ','
        << to_string(r.verdict.kind) << ',';
    if (r.verdict.kind == WidthKind::Finite)
      out << format_real(r.verdict.width);
    out << '\n';
  }
}

/// Reads a sweep CSV back (problem and verdict kind and width; no certificates).
inline std::vector<SweepRow> read_sweep_csv(std::istream &in) {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != "n,sigma,H_minus,H_plus,verdict,width")
    throw ParseError("sweep csv: bad header");
  std::vector<SweepRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty())
      continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string piece;
    while (std::getline(ss, piece, ','))
      f.push_back(detail::trim(piece));
    if (f.size() == 5)
      f.emplace_back();
    const std::string where = "sweep csv line " + std::to_string(line_no);
    if (f.size() != 6)
      throw ParseError(where + ": expected 6 fields");
    SweepRow r;
    r.problem.n = static_cast<int>(detail::parse_real(f[0], where));
    r.problem.sigma = detail::parse_real(f[1], where);
    r.problem.H_minus = detail::parse_real(f[2], where);
    r.problem.H_plus = detail::parse_real(f[3], where);
    if (f[4] == "finite") {
      r.verdict.kind = WidthKind::Finite;
      r.verdict.width = detail::parse_real(f[5], where);
    } else if (f[4] == "infinite") {
      r.verdict.kind = WidthKind::Infinite;
    } else if (f[4] == "infeasible") {
      r.verdict.kind = WidthKind::Infeasible;
    } else {
      throw ParseError(where + ": unknown verdict '" + f[4] + "'");
    }
    rows.push_back(r);
  }
  return rows;
}

} // namespace warpband
