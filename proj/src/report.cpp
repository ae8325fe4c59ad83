#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "radau_hp/harness.hpp"

namespace radau_hp {

using nlohmann::json;

namespace {

std::string g17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double num_from(const json & j) { return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>(); }

SweepAxis axis_from(const std::string & s)
{
  if (s == "h") { return SweepAxis::MeshSize; }
  if (s == "N") { return SweepAxis::Degree; }
  if (s == "interp") { return SweepAxis::Interpolation; }
  throw std::invalid_argument("unknown sweep axis: " + s);
}

json to_json(const RateReport & r)
{
  json j;
  j["problem"]        = r.problem;
  j["axis"]           = to_string(r.axis);
  j["abscissa"]       = r.abscissa;
  j["degree"]         = r.degree;
  j["mesh"]           = r.mesh;
  j["tol"]            = r.tol;
  j["accuracy_floor"] = r.accuracy_floor;
  j["samples"]        = json::array();
  for (const auto & s : r.samples) {
    j["samples"].push_back({{"axis_value", s.axis_value},
                            {"h", s.h},
                            {"err_state", num(s.err_state)},
                            {"err_control", num(s.err_control)},
                            {"err_costate", num(s.err_costate)},
                            {"solver_iters", s.solver_iters},
                            {"converged", s.converged},
                            {"status", s.status}});
  }
  if (r.fits.empty()) {
    j["fits"] = nullptr;
  } else {
    j["fits"] = json::object();
    for (const auto & [k, f] : r.fits) {
      j["fits"][k] = f ? json{{"slope", f->slope}, {"intercept", f->intercept}, {"r2", f->r2}, {"used", f->used}}
                       : json(nullptr);
    }
  }
  j["theory_expected"] = r.theory_expected;
  j["notes"]           = r.notes;
  return j;
}

}  // namespace

void emit_report(const RateReport & r, ReportFormat format, std::ostream & out)
{
  if (format == ReportFormat::Json) {
    out << to_json(r).dump(2) << '\n';
    return;
  }
  out << "axis_value,h,err_state,err_control,err_costate,solver_iters,converged\n";
  if (r.samples.empty()) { return; }
  for (const auto & s : r.samples) {
    out << g17(s.axis_value) << ',' << g17(s.h) << ',' << g17(s.err_state) << ',' << g17(s.err_control) << ','
        << g17(s.err_costate) << ',' << s.solver_iters << ',' << (s.converged ? 1 : 0) << '\n';
  }
  out << "# abscissa " << r.abscissa << " accuracy_floor " << g17(r.accuracy_floor) << '\n';
  for (const auto & [k, f] : r.fits) {
    out << "# fit " << k;
    if (f) {
      out << " slope " << g17(f->slope) << " intercept " << g17(f->intercept) << " r2 " << g17(f->r2) << " used "
          << f->used << '\n';
    } else {
      out << " null\n";
    }
  }
  for (const auto & [k, v] : r.theory_expected) { out << "# theory " << k << ' ' << g17(v) << '\n'; }
  for (const auto & n : r.notes) { out << "# note " << n << '\n'; }
}

void emit_report(const RateReport & r, ReportFormat format, const std::string & path)
{
  std::ofstream f(path, std::ios::binary);
  if (!f) { throw std::runtime_error("cannot open " + path + " for writing"); }
  emit_report(r, format, f);
  f.flush();
  if (!f) { throw std::runtime_error("write to " + path + " failed"); }
}

RateReport parse_json_report(const std::string & text)
{
  const json j = json::parse(text);
  RateReport r;
  r.problem        = j.at("problem").get<std::string>();
  r.axis           = axis_from(j.at("axis").get<std::string>());
  r.abscissa       = j.at("abscissa").get<std::string>();
  r.degree         = j.at("degree").get<int>();
  r.mesh           = j.at("mesh").get<std::vector<double>>();
  r.tol            = j.at("tol").get<double>();
  r.accuracy_floor = j.at("accuracy_floor").get<double>();
  for (const auto & s : j.at("samples")) {
    ErrorSample e;
    e.axis_value   = s.at("axis_value").get<double>();
    e.h            = s.at("h").get<double>();
    e.err_state    = num_from(s.at("err_state"));
    e.err_control  = num_from(s.at("err_control"));
    e.err_costate  = num_from(s.at("err_costate"));
    e.solver_iters = s.at("solver_iters").get<int>();
    e.converged    = s.at("converged").get<bool>();
    e.status       = s.at("status").get<std::string>();
    r.samples.push_back(e);
  }
  if (!j.at("fits").is_null()) {
    for (const auto & [k, f] : j.at("fits").items()) {
      if (f.is_null()) {
        r.fits[k] = std::nullopt;
      } else {
        r.fits[k] = FitResult{f.at("slope").get<double>(), f.at("intercept").get<double>(), f.at("r2").get<double>(),
                              f.at("used").get<int>()};
      }
    }
  }
  r.theory_expected = j.at("theory_expected").get<std::map<std::string, double>>();
  r.notes           = j.at("notes").get<std::vector<std::string>>();
  return r;
}

void emit_table(const std::vector<PropertyReport> & rows, ReportFormat format, std::ostream & out)
{
  if (format == ReportFormat::Json) {
    json j = json::array();
    for (const auto & r : rows) {
      j.push_back({{"N", r.degree},
                   {"diff_inv_norm", r.p1_norm},
                   {"diff_inv_row_norm", r.p2_max_row_norm},
                   {"dddag_inv_norm", r.p3_norm},
                   {"dddag_inv_row_norm", r.p4_max_row_norm}});
    }
    out << j.dump(2) << '\n';
    return;
  }
  out << "N,diff_inv_norm,diff_inv_row_norm,dddag_inv_norm,dddag_inv_row_norm\n";
  for (const auto & r : rows) {
    out << r.degree << ',' << g17(r.p1_norm) << ',' << g17(r.p2_max_row_norm) << ',' << g17(r.p3_norm) << ','
        << g17(r.p4_max_row_norm) << '\n';
  }
}

std::vector<int> parse_int_list(const std::string & text)
{
  std::vector<int> out;
  bool pending_ellipsis = false;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) { continue; }
    if (tok == "...") {
      if (out.size() < 2) { throw std::invalid_argument("'...' needs two preceding values: " + text); }
      pending_ellipsis = true;
      continue;
    }
    const auto dots = tok.find("..");
    if (dots != std::string::npos) {
      const int a = std::stoi(tok.substr(0, dots)), b = std::stoi(tok.substr(dots + 2));
      if (b < a) { throw std::invalid_argument("empty range: " + tok); }
      for (int v = a; v <= b; ++v) { out.push_back(v); }
      continue;
    }
    const int v = std::stoi(tok);
    if (pending_ellipsis) {
      const int step = out[out.size() - 1] - out[out.size() - 2];
      if (step <= 0 || (v - out.back()) % step != 0) { throw std::invalid_argument("inconsistent progression: " + text); }
      for (int x = out.back() + step; x < v; x += step) { out.push_back(x); }
      pending_ellipsis = false;
    }
    out.push_back(v);
  }
  if (pending_ellipsis || out.empty()) { throw std::invalid_argument("malformed integer list: " + text); }
  return out;
}

std::vector<double> parse_double_list(const std::string & text)
{
  std::vector<double> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) { out.push_back(std::stod(tok)); }
  }
  if (out.empty()) { throw std::invalid_argument("empty list"); }
  return out;
}

}  // namespace radau_hp
