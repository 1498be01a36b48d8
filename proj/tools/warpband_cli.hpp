#pragma once

// Command-line front end. Every command builds a JSON payload, wraps it in a
// report envelope and prints it; plot and profile tables go to CSV files.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "warpband/warpband.hpp"

namespace warpband::cli {

using Json = nlohmann::ordered_json;

inline constexpr const char *tool_version = "1.0.0";
inline constexpr const char *spec_grammar_version = "1";
inline constexpr const char *output_dir_env = "WARPBAND_OUTPUT_DIR";

enum ExitCode { Success = 0, InternalError = 1, ArgumentFailure = 2, VerificationFailure = 3 };

/// Default tolerances, echoed in every envelope.
struct Tolerances {
  double identity = 1e-8;
  double width_agreement = 1e-6;
  double width_solver = 1e-11;
  double comparison = 1e-8;
  double first_variation = 0.1;
  double oracle_relative = 1e-12;
  double spectral_residual_relative = 1e-10;
  double verdict_relative = 1e-8;
  double stability_grid_factor = 5.0;

  Json to_json() const {
    return Json{{"identity", identity},
                {"width_agreement", width_agreement},
                {"width_solver", width_solver},
                {"comparison", comparison},
                {"first_variation", first_variation},
                {"oracle_relative", oracle_relative},
                {"spectral_residual_relative", spectral_residual_relative},
                {"verdict_relative", verdict_relative},
                {"stability_grid_factor", stability_grid_factor}};
  }
};

/// Finite numbers as numbers, infinities and NaN as strings.
inline Json number(double v) {
  if (std::isfinite(v))
    return v;
  return format_real(v);
}

// ---------------------------------------------------------------------------
// Output files

struct OutputContext {
  std::filesystem::path directory; // empty: current directory

  std::filesystem::path resolve(const std::string &path) const {
    std::filesystem::path p(path);
    if (p.is_relative() && !directory.empty())
      return directory / p;
    return p;
  }
};

inline void require_writable_directory(const std::filesystem::path &dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec))
    throw ArgumentError("output directory does not exist: " + dir.string());
  if (::access(dir.c_str(), W_OK) != 0)
    throw ArgumentError("output directory is not writable: " + dir.string());
}

/// Writes via a temporary file in the same directory and renames it into place.
inline void write_atomic(const std::filesystem::path &path, const std::string &content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  require_writable_directory(dir);
  const auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out)
      throw ArgumentError("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out)
      throw ArgumentError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw ArgumentError("cannot move output into place: " + path.string());
  }
}

// ---------------------------------------------------------------------------
// Spec mini-languages

/// "family,key=value,..." split into the family and a key map.
struct KeyValueSpec {
  std::string head;
  std::map<std::string, std::string> values;

  static KeyValueSpec parse(const std::string &text) {
    KeyValueSpec s;
    std::stringstream ss(text);
    std::string piece;
    bool first = true;
    while (std::getline(ss, piece, ',')) {
      piece = detail::trim(piece);
      if (first) {
        s.head = piece;
        first = false;
        continue;
      }
      const auto eq = piece.find('=');
      if (eq == std::string::npos)
        throw ArgumentError("expected key=value in '" + text + "', got '" + piece + "'");
      const std::string key = detail::trim(piece.substr(0, eq));
      if (s.values.count(key))
        throw ArgumentError("duplicate key '" + key + "' in '" + text + "'");
      s.values[key] = detail::trim(piece.substr(eq + 1));
    }
    if (s.head.empty())
      throw ArgumentError("empty specification");
    return s;
  }

  double real(const std::string &key, double fallback) const {
    const auto it = values.find(key);
    return it == values.end() ? fallback : detail::parse_real(it->second, key);
  }
  int integer(const std::string &key, int fallback) const {
    const double v = real(key, fallback);
    if (v != std::floor(v) || std::abs(v) > 1e9)
      throw ArgumentError("'" + key + "' must be an integer");
    return static_cast<int>(v);
  }
  void allow(std::initializer_list<const char *> keys) const {
    for (const auto &[k, v] : values)
      if (std::find_if(keys.begin(), keys.end(), [&](const char *a) { return k == a; }) ==
          keys.end())
        throw ArgumentError("unknown key '" + k + "' for '" + head + "'");
  }
};

inline std::vector<std::string> split(const std::string &text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, sep))
    out.push_back(detail::trim(piece));
  return out;
}

/// "family,n=3,a=-0.3,b=0.3"; a and b default to the catalog interval.
inline ModelSpace parse_model(const std::string &text) {
  const auto s = KeyValueSpec::parse(text);
  s.allow({"n", "a", "b"});
  const auto &entry = catalog_entry(s.head);
  const int n = s.integer("n", 2);
  return entry.make(n, s.real("a", entry.default_l_minus), s.real("b", entry.default_l_plus));
}

struct BandSpec {
  DiscreteBand band;
  std::optional<ModelSpace> model; // warped bands carry their model
};

/// cylinder:L,r,nu,nv | warped:family,n=2,a=..,b=..,nu=..,nv=.. | file:path
inline BandSpec parse_band(const std::string &text, const OutputContext &) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw ArgumentError("band spec must be cylinder:..., warped:... or file:...");
  const std::string kind = text.substr(0, colon), rest = text.substr(colon + 1);
  if (kind == "cylinder") {
    const auto f = split(rest, ',');
    if (f.size() != 4)
      throw ArgumentError("cylinder band spec is cylinder:L,r,nu,nv");
    const double L = detail::parse_real(f[0], "L"), r = detail::parse_real(f[1], "r");
    const double nu = detail::parse_real(f[2], "nu"), nv = detail::parse_real(f[3], "nv");
    if (nu != std::floor(nu) || nv != std::floor(nv) || nu > 4096 || nv > 4096)
      throw ArgumentError("cylinder nu, nv must be integers up to 4096");
    return {build_flat_cylinder(L, r, static_cast<int>(nu), static_cast<int>(nv)), std::nullopt};
  }
  if (kind == "warped") {
    const auto s = KeyValueSpec::parse(rest);
    s.allow({"n", "a", "b", "nu", "nv", "circumference"});
    const auto &entry = catalog_entry(s.head);
    ModelSpace m = entry.make(s.integer("n", 2), s.real("a", entry.default_l_minus),
                              s.real("b", entry.default_l_plus));
    const int nu = s.integer("nu", 32), nv = s.integer("nv", 128);
    if (nu > 4096 || nv > 4096)
      throw ArgumentError("warped band nu, nv must be at most 4096");
    auto b = build_warped_band(m, nv, nu, s.real("circumference", 2.0 * M_PI));
    return {std::move(b), std::move(m)};
  }
  if (kind == "file")
    return {read_band(rest), std::nullopt};
  throw ArgumentError("unknown band kind '" + kind + "'");
}

/// coordinate | lipschitz:margin
inline BandMap parse_map(const std::string &text, const DiscreteBand &b, double a, double bb) {
  if (text == "coordinate")
    return coordinate_band_map(b, a, bb);
  if (text.rfind("lipschitz:", 0) == 0)
    return lipschitz_band_map(b, a, bb, detail::parse_real(text.substr(10), "margin"));
  throw ArgumentError("map spec must be 'coordinate' or 'lipschitz:margin'");
}

/// const:c | ramp:lo,hi (linear over the rows) | file:path (one value per cell)
inline std::vector<double> parse_u_field(const std::string &text, const DiscreteBand &b) {
  std::vector<double> u(b.cell_count());
  if (text.rfind("const:", 0) == 0) {
    std::fill(u.begin(), u.end(), detail::parse_real(text.substr(6), "u"));
  } else if (text.rfind("ramp:", 0) == 0) {
    const auto f = split(text.substr(5), ',');
    if (f.size() != 2)
      throw ArgumentError("ramp u-field is ramp:lo,hi");
    const double lo = detail::parse_real(f[0], "lo"), hi = detail::parse_real(f[1], "hi");
    for (int i = 0; i < b.nu(); ++i)
      for (int j = 0; j < b.nv(); ++j)
        u[b.cell_index(i, j)] = lo + (hi - lo) * i / (b.nu() - 1.0);
  } else if (text.rfind("file:", 0) == 0) {
    std::ifstream in(text.substr(5));
    if (!in)
      throw warpband::ParseError("cannot open " + text.substr(5));
    for (double &x : u)
      if (!(in >> x))
        throw warpband::ParseError("u-field file needs " + std::to_string(u.size()) + " values");
  } else {
    throw ArgumentError("u-field spec must be const:c, ramp:lo,hi or file:path");
  }
  for (double x : u)
    if (!(x > 0.0) || !std::isfinite(x))
      throw ArgumentError("u-field must be positive");
  return u;
}

// ---------------------------------------------------------------------------
// Envelope

struct CommandResult {
  Json payload;
  std::vector<std::string> warnings;
  int exit_code = Success;
  std::optional<std::string> table; // CSV printed instead of the envelope (--format csv)
};

inline Json envelope(const std::string &command, const std::vector<std::string> &args,
                     const CommandResult &r, const Tolerances &tol, double seconds) {
  Json e;
  e["tool"] = "warpband";
  e["version"] = tool_version;
  e["spec_grammar"] = spec_grammar_version;
  e["command"] = command;
  e["arguments"] = args;
  e["tolerances"] = tol.to_json();
  e["wall_clock_seconds"] = seconds;
  e["payload"] = r.payload;
  e["warnings"] = r.warnings;
  e["exit_code"] = r.exit_code;
  return e;
}

// ---------------------------------------------------------------------------
// Commands

struct ModelArgs {
  std::string family;
  int n = 2;
  std::optional<double> l_minus, l_plus;
  int points = 201;
  std::string csv;
};

inline CommandResult cmd_model(const ModelArgs &a, const Tolerances &tol, const OutputContext &ctx,
                               bool csv_to_stdout) {
  const auto &entry = catalog_entry(a.family);
  if (a.points < 2 || a.points > 10'000'000)
    throw ArgumentError("--points must be in [2, 1e7]");
  const ModelSpace m = entry.make(a.n, a.l_minus.value_or(entry.default_l_minus),
                                  a.l_plus.value_or(entry.default_l_plus));
  const auto p = curvature_profile(m, static_cast<std::size_t>(a.points));
  std::ostringstream csv;
  csv << "t,phi,h,Sc,identity_residual\n";
  double sc_min = INFINITY, sc_max = -INFINITY, worst = 0.0;
  for (std::size_t i = 0; i < p.t.size(); ++i) {
    csv << format_real(p.t[i]) << ',' << format_real(p.phi[i]) << ',' << format_real(p.mean[i])
        << ',' << format_real(p.scalar[i]) << ',' << format_real(p.residual[i]) << '\n';
    sc_min = std::min(sc_min, p.scalar[i]);
    sc_max = std::max(sc_max, p.scalar[i]);
    worst = std::max(worst, std::abs(p.residual[i]));
  }
  CommandResult r;
  r.payload = Json{{"family", entry.name},
                   {"n", m.n()},
                   {"base_scalar", m.base_scalar()},
                   {"interval", {m.lower(), m.upper()}},
                   {"points", a.points},
                   {"H_minus", p.H_minus},
                   {"H_plus", p.H_plus},
                   {"scalar_min", sc_min},
                   {"scalar_max", sc_max},
                   {"max_abs_identity_residual", worst},
                   {"identity_holds", worst < tol.identity},
                   {"log_concavity", to_string(log_concavity_classify(m.warp()))},
                   {"is_model_space", is_model_space(m)}};
  if (!a.csv.empty()) {
    const auto path = ctx.resolve(a.csv);
    write_atomic(path, csv.str());
    r.payload["csv"] = path.string();
  }
  if (csv_to_stdout)
    r.table = csv.str();
  return r;
}

struct WidthArgs {
  int n = 2;
  double sigma = 0.0;
  std::string h_minus = "0";
  double h_plus = 0.0;
  double tolerance = 1e-11;
  std::string emit_profile;
};

inline CommandResult cmd_width(const WidthArgs &a, const Tolerances &tol, const OutputContext &ctx,
                               bool csv_to_stdout) {
  ComparisonProblem p{a.n, a.sigma, detail::parse_real(a.h_minus, "--h-minus"), a.h_plus};
  p.validate();
  if (!(a.tolerance > 0.0))
    throw ArgumentError("--tolerance must be positive");
  WidthOptions opt;
  opt.tolerance = a.tolerance;
  const auto v = width_bound(p, opt);
  CommandResult r;
  r.payload = Json{{"problem",
                    {{"n", p.n}, {"sigma", p.sigma}, {"H_minus", number(p.H_minus)}, {"H_plus", p.H_plus}}},
                   {"kind", to_string(v.kind)},
                   {"width", v.kind == WidthKind::Finite ? Json(v.width) : Json(nullptr)},
                   {"tag", to_string(v.tag)},
                   {"certificate", v.certificate},
                   {"step", v.step}};
  const ModelFamily family =
      p.sigma > 0 ? ModelFamily::Cos : p.sigma == 0 ? ModelFamily::Power : ModelFamily::Sinh;
  const auto cf = closed_form_width(family, p.n, p.sigma, p.H_minus, p.H_plus);
  Json closed{{"family", to_string(family)}, {"in_range", cf.in_range}};
  if (cf.in_range) {
    closed["width"] = cf.width;
    if (v.kind == WidthKind::Finite) {
      closed["difference"] = std::abs(cf.width - v.width);
      closed["agrees"] = std::abs(cf.width - v.width) <= tol.width_agreement;
    }
  }
  r.payload["closed_form"] = closed;

  if (!a.emit_profile.empty() || csv_to_stdout) {
    std::ostringstream csv;
    csv << "t,h\n";
    if (v.kind == WidthKind::Finite && v.width > 0.0) {
      const auto sol = solve_riccati(p.n, p.sigma, -p.H_minus, v.width, v.width / 2000.0);
      for (std::size_t i = 0; i < sol.t.size(); ++i)
        csv << format_real(sol.t[i]) << ',' << format_real(sol.h[i]) << '\n';
    } else {
      r.warnings.push_back("no extremal profile for a " + std::string(to_string(v.kind)) +
                           (v.kind == WidthKind::Finite ? " zero" : "") + " verdict");
    }
    if (!a.emit_profile.empty()) {
      const auto path = ctx.resolve(a.emit_profile);
      write_atomic(path, csv.str());
      r.payload["profile_csv"] = path.string();
    }
    if (csv_to_stdout)
      r.table = csv.str();
  }
  return r;
}

struct CompareArgs {
  std::string m1, m2;
  double tol = 1e-8;
  int points = 2001;
};

inline CommandResult cmd_compare(const CompareArgs &a) {
  if (a.points < 3 || a.points > 10'000'000)
    throw ArgumentError("--points must be in [3, 1e7]");
  if (!(a.tol > 0.0))
    throw ArgumentError("--tol must be positive");
  const ModelSpace m1 = parse_model(a.m1), m2 = parse_model(a.m2);
  const auto c = compare_warped_products(m1, m2, a.tol, static_cast<std::size_t>(a.points));
  CommandResult r;
  r.payload = Json{{"m1", a.m1},
                   {"m2", a.m2},
                   {"outcome", to_string(c.outcome)},
                   {"failed_hypothesis", to_string(c.failed)},
                   {"case", c.case_name},
                   {"max_deviation", number(c.max_deviation)},
                   {"equality_verified", c.equality_verified}};
  if (c.outcome == WarpedComparisonOutcome::EqualityForced && !c.equality_verified) {
    r.exit_code = VerificationFailure;
    r.warnings.push_back("hypotheses force equality but the profiles differ beyond tolerance");
  }
  return r;
}

struct BubbleArgs {
  std::string band;
  std::string h;
  std::string map;
  std::string u_field;
  std::string oracle = "none";
  std::string perimeter = "cc";
  int anchor_row = 0;
  std::optional<double> first_variation_tol;
  std::optional<double> stability_tol;
  std::string plot;
  std::string save_band;
};

inline Json region_rle(const DiscreteBand &b, const Region &r) {
  Json rows = Json::array();
  for (int i = 0; i < b.nu(); ++i) {
    Json runs = Json::array();
    for (int j = 0; j < b.nv();) {
      if (!r.contains(b.cell_index(i, j))) {
        ++j;
        continue;
      }
      int k = j;
      while (k < b.nv() && r.contains(b.cell_index(i, k)))
        ++k;
      runs.push_back({j, k - j});
      j = k;
    }
    if (!runs.empty())
      rows.push_back({i, runs});
  }
  return rows;
}

inline CommandResult cmd_bubble(const BubbleArgs &a, const Tolerances &tol, const OutputContext &ctx) {
  BandSpec spec = parse_band(a.band, ctx);
  const DiscreteBand &b = spec.band;
  PerimeterModel model;
  if (a.perimeter == "cc")
    model = PerimeterModel::CauchyCrofton;
  else if (a.perimeter == "face")
    model = PerimeterModel::FaceLength;
  else
    throw ArgumentError("--perimeter must be cc or face");

  // Prescription.
  std::optional<ModelSpace> h_model;
  std::optional<BandMap> map;
  PrescriptionField h;
  if (a.h.rfind("const:", 0) == 0) {
    h = constant_prescription(b, detail::parse_real(a.h.substr(6), "h"));
  } else if (a.h.rfind("tan:", 0) == 0) {
    h = tan_prescription(b, detail::parse_real(a.h.substr(4), "ell"));
  } else if (a.h.rfind("model:", 0) == 0) {
    h_model = parse_model(a.h.substr(6));
    const std::string map_spec =
        !a.map.empty() ? a.map : spec.model ? std::string("coordinate") : std::string("lipschitz:0.25");
    map = parse_map(map_spec, b, h_model->lower(), h_model->upper());
    h = model_prescription(b, *h_model, *map);
  } else {
    throw ArgumentError("h spec must be const:c, tan:ell or model:family,...");
  }
  if (!a.map.empty() && !h_model)
    throw ArgumentError("--map needs a model prescription");
  if (a.anchor_row < 0 || a.anchor_row >= b.nu() - 1)
    throw ArgumentError("--anchor-row must lie in [0, nu-2]");

  CommandResult r;
  MinimizerReport rep;
  std::optional<std::vector<double>> u;
  const Region anchor = Region::rows(b, a.anchor_row);
  if (!a.u_field.empty()) {
    u = parse_u_field(a.u_field, b);
    rep = minimize_warped(b, *u, h, anchor, {model});
  } else {
    rep = minimize(b, h, {model});
  }

  bool pass = true;
  Json checks = Json::object();
  const bool separates = separation_check(b, rep.region);
  checks["separation"] = separates;
  pass = pass && separates;

  const double fv_tol = a.first_variation_tol.value_or(tol.first_variation);
  const bool fv = first_variation_check(rep, fv_tol);
  checks["first_variation"] = {{"max_abs_residual", rep.max_abs_residual}, {"tolerance", fv_tol}, {"pass", fv}};
  pass = pass && fv;

  // Oracle.
  if (a.oracle != "none") {
    const std::vector<double> *up = u ? &*u : nullptr;
    const Region *ap = u ? &anchor : nullptr;
    double oracle_value;
    bool global;
    if (a.oracle == "exhaustive") {
      oracle_value = exhaustive_minimum(b, h, model, up, ap);
      global = true;
    } else if (a.oracle == "monotone" || a.oracle == "exhaustive-monotone") {
      oracle_value = monotone_cut_minimum(b, h, model, up, ap);
      global = false;
    } else {
      throw ArgumentError("--oracle must be none, exhaustive, monotone or exhaustive-monotone");
    }
    const double slack = tol.oracle_relative * std::max(1.0, std::abs(oracle_value));
    const bool agree = global ? std::abs(rep.value - oracle_value) <= slack
                              : rep.value <= oracle_value + slack;
    checks["oracle"] = {{"kind", a.oracle},
                        {"value", oracle_value},
                        {"cut_value", rep.value},
                        {"equal", std::abs(rep.value - oracle_value) <= slack},
                        {"pass", agree}};
    pass = pass && agree;
  }

  // Spectral step on the main boundary loop.
  Json spectral = nullptr;
  if (rep.main_loop >= 0) {
    const auto &segs = main_segments(rep);
    double grid = 0.0;
    for (const auto &s : segs)
      grid = std::max(grid, s.geometry.length);
    DiscreteClosedCurve curve;
    std::string operator_name;
    std::optional<StructuralReport> structural;
    if (h_model) {
      curve = stability_curve(b, rep, *h_model, *map);
      operator_name = "structural";
      try {
        structural = structural_check(b, *map, *h_model, rep.loops[rep.main_loop].curve, grid);
      } catch (const ArgumentError &e) {
        r.warnings.push_back(std::string("structural check skipped: ") + e.what());
      }
    } else {
      curve = midpoint_curve(segment_lengths(segs), second_variation_potential(segs));
      operator_name = "second_variation";
    }
    const auto sp = lambda1(curve);
    const double verdict_tol = tol.verdict_relative * sp.operator_norm;
    spectral = Json{{"operator", operator_name},
                    {"vertices", curve.size()},
                    {"lambda1", sp.lambda1},
                    {"lambda2", sp.lambda2},
                    {"residual", std::max(sp.residual1, sp.residual2)},
                    {"operator_norm", sp.operator_norm},
                    {"verdict", to_string(conformal_verdict(sp, verdict_tol))},
                    {"grid", grid},
                    {"eigenfunction", sp.eigenfunction}};
    if (structural) {
      spectral["structural"] = {{"holds", structural->holds},
                                {"worst_margin", number(structural->worst_margin)},
                                {"curves_checked", structural->curves_checked},
                                {"segments_checked", structural->segments_checked}};
      // Contract: a structural map forces lambda1 >= -tol.
      const double st_tol = a.stability_tol.value_or(tol.stability_grid_factor * grid);
      const bool stable = !structural->holds || sp.lambda1 >= -st_tol;
      checks["stability"] = {{"lambda1", sp.lambda1}, {"tolerance", st_tol}, {"applies", structural->holds}, {"pass", stable}};
      pass = pass && stable;
    }
  } else {
    r.warnings.push_back("minimizer boundary has no closed loop around the band; spectral step skipped");
  }

  Json loops = Json::array();
  for (const auto &loop : rep.loops) {
    Json vs = Json::array();
    for (const auto &v : loop.curve.vertices)
      vs.push_back({v.i, v.j});
    loops.push_back({{"closed", loop.curve.closed}, {"wraps", loop.wraps}, {"vertices", vs}});
  }
  Json segments = Json::array();
  if (rep.main_loop >= 0)
    for (const auto &seg : main_segments(rep))
      segments.push_back({{"u", seg.geometry.mid_u},
                          {"v", seg.geometry.mid_v},
                          {"length", seg.geometry.length},
                          {"curvature", seg.geometry.curvature},
                          {"h", seg.h},
                          {"residual", seg.residual()},
                          {"interior", seg.interior}});
  Json sv = Json::object();
  for (const auto &[name, value] : rep.second_variation)
    sv[name] = value;

  r.payload = Json{{"band",
                    {{"spec", a.band},
                     {"nu", b.nu()},
                     {"nv", b.nv()},
                     {"topology", to_string(b.topology())},
                     {"width", band_width(b)},
                     {"area", b.total_area()}}},
                   {"prescription", {{"spec", a.h}, {"kind", to_string(h.kind)}, {"parameter", h.parameter}}},
                   {"map", map ? Json{{"kind", map->kind}, {"lipschitz", map->lipschitz}, {"smoothed", map->smoothed}} : Json(nullptr)},
                   {"warped", rep.warped},
                   {"perimeter_model", to_string(model)},
                   {"perimeter_tolerance", rep.perimeter_tolerance},
                   {"value", rep.value},
                   {"perimeter", rep.perimeter},
                   {"bulk", rep.bulk},
                   {"cut_value", rep.cut_value},
                   {"region_cells", rep.region.size()},
                   {"region_rle", region_rle(b, rep.region)},
                   {"loops", loops},
                   {"main_loop", rep.main_loop},
                   {"main_loop_segments", segments},
                   {"second_variation", sv},
                   {"spectral", spectral},
                   {"checks", checks},
                   {"pass", pass}};

  if (!a.plot.empty()) {
    std::ostringstream csv;
    csv << "x,y,tag\n";
    const double corners[5][2] = {{0, 0}, {double(b.nv()), 0}, {double(b.nv()), double(b.nu())}, {0, double(b.nu())}, {0, 0}};
    for (const auto &c : corners)
      csv << c[0] << ',' << c[1] << ",outline\n";
    for (const auto &loop : rep.loops)
      for (const auto &v : loop.curve.vertices)
        csv << v.j << ',' << v.i << ",minimizer\n";
    for (int i = 0; i < b.nu(); ++i)
      for (int j = 0; j < b.nv(); ++j) {
        const double here = h[b.cell_index(i, j)];
        if (i + 1 < b.nu() && (here > 0) != (h[b.cell_index(i + 1, j)] > 0))
          csv << j + 0.5 << ',' << i + 1 << ",h_contour\n";
        if (b.has_cell(i, b.wrap_cell(j + 1)) && (j + 1 < b.nv() || b.periodic()) &&
            (here > 0) != (h[b.cell_index(i, b.wrap_cell(j + 1))] > 0))
          csv << j + 1 << ',' << i + 0.5 << ",h_contour\n";
      }
    const auto path = ctx.resolve(a.plot);
    write_atomic(path, csv.str());
    r.payload["plot_csv"] = path.string();
  }
  if (!a.save_band.empty()) {
    std::ostringstream text;
    write_band(text, b);
    const auto path = ctx.resolve(a.save_band);
    write_atomic(path, text.str());
    r.payload["band_file"] = path.string();
  }
  if (!pass)
    r.exit_code = VerificationFailure;
  return r;
}

// ---------------------------------------------------------------------------
// Verification suites

struct VerifyRow {
  std::string suite;
  std::string name;
  double value;
  double tolerance;
  bool pass;
};

inline std::vector<VerifyRow> suite_identities(const Tolerances &tol) {
  std::vector<VerifyRow> rows;
  for (const auto &entry : model_catalog()) {
    for (int n : {3, 7}) {
      const ModelSpace m = entry.make(n, entry.default_l_minus, entry.default_l_plus);
      double worst = 0.0;
      for (int i = 0; i < 10000; ++i)
        worst = std::max(worst, std::abs(warped_identity_residual(m, m.lower() + m.width() * i / 9999.0)));
      rows.push_back({"identities", entry.name + " n=" + std::to_string(n), worst, tol.identity, worst < tol.identity});
    }
  }
  return rows;
}

inline std::vector<VerifyRow> suite_widths(const Tolerances &tol) {
  std::vector<VerifyRow> rows;
  auto agree = [&](const std::string &name, ModelFamily f, int n, double sigma, double hm, double hp) {
    const auto cf = closed_form_width(f, n, sigma, hm, hp);
    const auto v = width_bound({n, sigma, hm, hp});
    const double diff = cf.in_range && v.kind == WidthKind::Finite ? std::abs(cf.width - v.width) : INFINITY;
    rows.push_back({"widths", name, diff, tol.width_agreement, diff <= tol.width_agreement});
  };
  for (int n = 2; n <= 7; ++n) {
    const double sigma = n * (n - 1.0);
    const auto m = cos_model(n, -0.3 / n * 2, 0.25 / n * 2);
    const auto [hm, hp] = boundary_mean_curvatures(m);
    agree("cos n=" + std::to_string(n), ModelFamily::Cos, n, sigma, hm, hp);
    const auto pm = power_model(n, 0.3, 1.7);
    const auto [pm_m, pm_p] = boundary_mean_curvatures(pm);
    agree("power n=" + std::to_string(n), ModelFamily::Power, n, 0.0, pm_m, pm_p);
    const auto sm = sinh_model(n, 0.4, 1.1);
    const auto [sm_m, sm_p] = boundary_mean_curvatures(sm);
    agree("sinh n=" + std::to_string(n), ModelFamily::Sinh, n, -sigma, sm_m, sm_p);
    agree("hyperbolic corollary n=" + std::to_string(n), ModelFamily::Sinh, n, -sigma, -INFINITY, n + 1.0);

    // Supremum over boundary data approaches 2 pi / n from below.
    const auto sup = width_bound({n, sigma, -1e6, -1e6});
    const double gap = 2.0 * M_PI / n - sup.width;
    rows.push_back({"widths", "supremum 2pi/n n=" + std::to_string(n), gap, 1e-4,
                    sup.kind == WidthKind::Finite && gap >= 0.0 && gap <= 1e-4});
  }
  return rows;
}

inline std::vector<VerifyRow> suite_bubbles(const Tolerances &tol, int max_cells) {
  constexpr int nv = 4;
  const int nu = std::min(max_cells / nv, 2 + 20 / nv);
  if (nu < 3)
    throw ArgumentError("--max-cells must be at least 12");
  std::vector<VerifyRow> rows;
  std::mt19937_64 rng(20240607);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const auto topology = trial % 2 ? Topology::Rectangle : Topology::CylinderPeriodicInV;
    std::vector<CellMetric> g;
    for (int c = 0; c < nu * nv; ++c) {
      const double g11 = 0.3 + unit(rng), g22 = 0.3 + unit(rng);
      const double g12 = 0.5 * (unit(rng) - 0.5) * std::sqrt(g11 * g22);
      g.push_back({g11, g12, g22});
    }
    const DiscreteBand b(nu, nv, topology, g);
    std::vector<double> hv(b.cell_count());
    for (double &x : hv)
      x = 6.0 * (unit(rng) - 0.5);
    const auto h = custom_prescription(b, hv);
    for (auto model : {PerimeterModel::FaceLength, PerimeterModel::CauchyCrofton}) {
      const auto rep = minimize(b, h, {model});
      const double ex = exhaustive_minimum(b, h, model);
      const double diff = std::abs(rep.value - ex);
      const double t = tol.oracle_relative * std::max(1.0, std::abs(ex));
      rows.push_back({"bubbles",
                      std::to_string(nu) + "x" + std::to_string(nv) + " " + to_string(topology) + " " +
                          to_string(model) + " #" + std::to_string(trial),
                      diff, t, diff <= t && separation_check(b, rep.region)});
    }
  }
  return rows;
}

struct VerifyArgs {
  std::string suite = "all";
  int max_cells = 16;
};

inline CommandResult cmd_verify(const VerifyArgs &a, const Tolerances &tol) {
  std::vector<VerifyRow> rows;
  const bool all = a.suite == "all";
  if (!all && a.suite != "identities" && a.suite != "widths" && a.suite != "bubbles")
    throw ArgumentError("--suite must be identities, widths, bubbles or all");
  if (all || a.suite == "identities")
    for (auto &row : suite_identities(tol))
      rows.push_back(row);
  if (all || a.suite == "widths")
    for (auto &row : suite_widths(tol))
      rows.push_back(row);
  if (all || a.suite == "bubbles")
    for (auto &row : suite_bubbles(tol, a.max_cells))
      rows.push_back(row);
  CommandResult r;
  Json table = Json::array();
  int failed = 0;
  for (const auto &row : rows) {
    table.push_back({{"suite", row.suite}, {"name", row.name}, {"value", number(row.value)}, {"tolerance", row.tolerance}, {"pass", row.pass}});
    failed += row.pass ? 0 : 1;
  }
  r.payload = Json{{"suite", a.suite}, {"rows", table}, {"passed", static_cast<int>(rows.size()) - failed}, {"failed", failed}};
  if (failed)
    r.exit_code = VerificationFailure;
  return r;
}

struct SweepArgs {
  std::string config;
  int jobs = 1;
  std::string csv;
};

inline CommandResult cmd_sweep(const SweepArgs &a, const OutputContext &ctx, bool csv_to_stdout) {
  const auto config = read_sweep_config(a.config);
  if (config.size() > 1'000'000)
    throw ArgumentError("sweep grid too large (more than 1e6 points)");
  const auto rows = run_sweep(config, a.jobs);
  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  CommandResult r;
  Json table = Json::array();
  int counts[3] = {0, 0, 0};
  for (const auto &row : rows) {
    ++counts[static_cast<int>(row.verdict.kind)];
    table.push_back({{"n", row.problem.n},
                     {"sigma", row.problem.sigma},
                     {"H_minus", number(row.problem.H_minus)},
                     {"H_plus", row.problem.H_plus},
                     {"verdict", to_string(row.verdict.kind)},
                     {"width", row.verdict.kind == WidthKind::Finite ? Json(row.verdict.width) : Json(nullptr)}});
  }
  r.payload = Json{{"config", a.config},
                   {"count", rows.size()},
                   {"finite", counts[0]},
                   {"infinite", counts[1]},
                   {"infeasible", counts[2]},
                   {"rows", table}};
  if (!a.csv.empty()) {
    const auto path = ctx.resolve(a.csv);
    write_atomic(path, csv.str());
    r.payload["csv"] = path.string();
  }
  if (csv_to_stdout)
    r.table = csv.str();
  return r;
}

// ---------------------------------------------------------------------------
// Entry point

/// Runs one command line; returns the process exit code. The envelope (or a
/// CSV table with --format csv) goes to `out`, diagnostics to `err`.
inline int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  const auto started = std::chrono::steady_clock::now();
  CLI::App app{"warpband: curvature comparison for Riemannian bands"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version);

  std::string out_dir, json_path, format = "json";
  app.add_option("--out-dir", out_dir,
                 std::string("directory for relative output paths (default $") + output_dir_env + ")");
  app.add_option("--json", json_path, "also write the envelope to this file");
  app.add_option("--format", format, "stdout format")->check(CLI::IsMember({"json", "csv"}));

  ModelArgs model_args;
  auto *model = app.add_subcommand("model", "curvature profile of a catalog model");
  model->add_option("--family", model_args.family, "cos, power, sinh, const, exp, sphere, euclidean, hyperbolic")->required();
  model->add_option("--n", model_args.n, "dimension")->required();
  model->add_option("--l-minus", model_args.l_minus, "left end of the interval");
  model->add_option("--l-plus", model_args.l_plus, "right end of the interval");
  model->add_option("--points", model_args.points, "grid points");
  model->add_option("--csv", model_args.csv, "write the profile table");

  WidthArgs width_args;
  auto *width = app.add_subcommand("width", "maximal band width from curvature bounds");
  width->add_option("--n", width_args.n)->required();
  width->add_option("--sigma", width_args.sigma)->required();
  width->add_option("--h-minus", width_args.h_minus, "lower bound for H on the lower boundary (-inf allowed)")->required();
  width->add_option("--h-plus", width_args.h_plus)->required();
  width->add_option("--tolerance", width_args.tolerance, "step-halving agreement")->check(CLI::PositiveNumber);
  width->add_option("--emit-profile", width_args.emit_profile, "write the extremal profile (t,h)");

  CompareArgs compare_args;
  auto *compare = app.add_subcommand("compare", "compare two warped products");
  compare->add_option("--m1", compare_args.m1, "family,n=..,a=..,b=..")->required();
  compare->add_option("--m2", compare_args.m2, "family,n=..,a=..,b=..")->required();
  compare->add_option("--tol", compare_args.tol)->check(CLI::PositiveNumber);
  compare->add_option("--points", compare_args.points);

  BubbleArgs bubble_args;
  auto *bubble = app.add_subcommand("bubble", "minimize the prescribed-mean-curvature functional");
  bubble->set_help_flag("--help", "Print this help message and exit");
  bubble->add_option("--band", bubble_args.band, "cylinder:L,r,nu,nv | warped:family,... | file:path")->required();
  bubble->add_option("--h", bubble_args.h, "const:c | tan:ell | model:family,...")->required();
  bubble->add_option("--map", bubble_args.map, "coordinate | lipschitz:margin");
  bubble->add_option("--u-field", bubble_args.u_field, "const:c | ramp:lo,hi | file:path");
  bubble->add_option("--anchor-row", bubble_args.anchor_row, "anchor region rows 0..k for --u-field");
  bubble->add_option("--oracle", bubble_args.oracle, "none | exhaustive | monotone | exhaustive-monotone");
  bubble->add_option("--perimeter", bubble_args.perimeter, "cc | face");
  bubble->add_option("--first-variation-tol", bubble_args.first_variation_tol)->check(CLI::PositiveNumber);
  bubble->add_option("--stability-tol", bubble_args.stability_tol)->check(CLI::PositiveNumber);
  bubble->add_option("--plot", bubble_args.plot, "write plot CSV (x,y,tag)");
  bubble->add_option("--save-band", bubble_args.save_band, "write the band in file: format");

  VerifyArgs verify_args;
  auto *verify = app.add_subcommand("verify", "run verification suites");
  verify->add_option("--suite", verify_args.suite, "identities | widths | bubbles | all");
  verify->add_option("--max-cells", verify_args.max_cells, "cells of the exhaustive-oracle bands");

  SweepArgs sweep_args;
  auto *sweep = app.add_subcommand("sweep", "width verdicts over a parameter grid");
  sweep->add_option("--config", sweep_args.config, "key-value config file")->required();
  sweep->add_option("--jobs", sweep_args.jobs, "worker threads")->check(CLI::Range(1, 256));
  sweep->add_option("--csv", sweep_args.csv, "write the result table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &) {
    out << app.help();
    return Success;
  } catch (const CLI::CallForAllHelp &) {
    out << app.help("", CLI::AppFormatMode::All);
    return Success;
  } catch (const CLI::CallForVersion &) {
    out << tool_version << '\n';
    return Success;
  } catch (const CLI::ParseError &e) {
    err << "error: " << e.what() << '\n';
    return ArgumentFailure;
  }

  const Tolerances tol;
  std::vector<std::string> args(argv + 1, argv + argc);
  CLI::App *chosen = app.get_subcommands().front();
  const bool csv = format == "csv";
  try {
    OutputContext ctx;
    if (!out_dir.empty())
      ctx.directory = out_dir;
    else if (const char *env = std::getenv(output_dir_env); env && *env)
      ctx.directory = env;
    if (!ctx.directory.empty())
      require_writable_directory(ctx.directory);

    CommandResult r;
    if (chosen == model)
      r = cmd_model(model_args, tol, ctx, csv);
    else if (chosen == width)
      r = cmd_width(width_args, tol, ctx, csv);
    else if (chosen == compare)
      r = cmd_compare(compare_args);
    else if (chosen == bubble)
      r = cmd_bubble(bubble_args, tol, ctx);
    else if (chosen == verify)
      r = cmd_verify(verify_args, tol);
    else
      r = cmd_sweep(sweep_args, ctx, csv);
    if (csv && !r.table)
      throw ArgumentError("--format csv is supported by model, width and sweep");

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const Json e = envelope(chosen->get_name(), args, r, tol, seconds);
    if (!json_path.empty())
      write_atomic(ctx.resolve(json_path), e.dump(2) + "\n");
    if (csv)
      out << *r.table;
    else
      out << e.dump(2) << '\n';
    for (const auto &w : r.warnings)
      err << "warning: " << w << '\n';
    return r.exit_code;
  } catch (const NumericalError &e) {
    err << "numerical failure: " << e.what() << '\n';
    return InternalError;
  } catch (const Error &e) {
    err << "error: " << e.what() << '\n';
    return ArgumentFailure;
  }
}

} // namespace warpband::cli
