#pragma once

// Report assembly. JSON uses insertion-ordered objects and carries no
// timestamps or machine identifiers, so identical runs serialize to
// identical bytes. Non-finite doubles map to null; requested N values
// keep infinity readable as the string "inf".

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "json.hpp"

#include "flab/bounds.hpp"
#include "flab/mesh.hpp"
#include "flab/scan.hpp"
#include "flab/spectral.hpp"

namespace flab {

using ReportJson = nlohmann::ordered_json;

inline ReportJson report_number(double v) {
  if (!std::isfinite(v)) return nullptr;
  return ReportJson(v);
}

inline ReportJson report_vector(const std::vector<double>& v) {
  ReportJson a = ReportJson::array();
  for (double x : v) a.push_back(report_number(x));
  return a;
}

inline ReportJson report_vector(const Vecd& v) {
  ReportJson a = ReportJson::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(report_number(v[i]));
  return a;
}

inline ReportJson report_N(double N) {
  if (std::isinf(N)) return ReportJson("inf");
  return ReportJson(N);
}

inline ReportJson witness_json(const ScanWitness& w) {
  ReportJson j;
  j["vertex"] = w.vertex;
  j["x"] = report_vector(w.x);
  j["y"] = report_vector(w.y);
  j["value"] = report_number(w.value);
  return j;
}

inline ReportJson mesh_json(const Mesh& mesh) {
  ReportJson j;
  j["kind"] = mesh_kind_name(mesh.kind);
  j["dim"] = mesh.dim;
  j["resolution"] = mesh.resolution;
  if (mesh.kind == MeshKind::FlatTorus) {
    j["period"] = ReportJson::array({mesh.period[0], mesh.period[1]});
  } else {
    j["radius"] = mesh.radius;
  }
  j["vertices"] = mesh.num_verts();
  j["cells"] = mesh.num_cells();
  ReportJson verts = ReportJson::array();
  for (const Vecd& p : mesh.verts) verts.push_back(report_vector(p));
  j["verts"] = std::move(verts);
  ReportJson cells = ReportJson::array();
  for (const auto& c : mesh.cells) {
    ReportJson row = ReportJson::array({c[0], c[1]});
    if (c[2] >= 0) row.push_back(c[2]);
    cells.push_back(std::move(row));
  }
  j["cells"] = std::move(cells);
  return j;
}

inline ReportJson scan_json(const CurvatureScan& s) {
  ReportJson j;
  j["directions_per_vertex"] = s.directions_per_vertex;
  j["sample_count"] = s.sample_count;
  j["inf_ric_over_nminus1"] = report_number(s.inf_ric_over_nminus1);
  j["sup_ric_over_nminus1"] = report_number(s.sup_ric_over_nminus1);
  j["mean_ric_over_nminus1"] = report_number(s.mean_ric_over_nminus1);
  j["inf_ric_infty"] = report_number(s.inf_ric_infty);
  j["sup_ric_infty"] = report_number(s.sup_ric_infty);
  ReportJson per_n = ReportJson::array();
  for (std::size_t i = 0; i < s.requested_N.size(); ++i) {
    ReportJson e;
    e["N"] = report_N(s.requested_N[i]);
    e["inf_ric"] = report_number(s.inf_ric_N[i]);
    e["mean_ric"] = report_number(s.mean_ric_N[i]);
    per_n.push_back(std::move(e));
  }
  j["weighted_ricci"] = std::move(per_n);
  j["sup_s_dot"] = report_number(s.sup_s_dot);
  j["sup_abs_s"] = report_number(s.sup_abs_s);
  j["s_zero_threshold"] = report_number(s.s_zero_threshold);
  j["s_identically_zero"] = s.s_identically_zero;
  j["s_constant_multiple_of_F"] = s.s_constant_multiple_of_F;
  if (s.s_constant_multiple_of_F) j["s_constant_c"] = report_number(s.s_constant_c);
  ReportJson w;
  w["ric_argmin"] = witness_json(s.ric_argmin);
  w["ric_infty_argmin"] = witness_json(s.ric_infty_argmin);
  w["s_dot_argmax"] = witness_json(s.s_dot_argmax);
  w["abs_s_argmax"] = witness_json(s.abs_s_argmax);
  j["witnesses"] = std::move(w);
  return j;
}

inline ReportJson bounds_json(const BoundsReport& rep) {
  ReportJson j;
  j["diameter"] = report_number(rep.diameter);
  j["lambda1"] = report_number(rep.lambda1);
  ReportJson entries = ReportJson::array();
  for (const BoundEntry& e : rep.entries) {
    ReportJson row;
    row["theorem"] = e.theorem;
    row["bound"] = report_number(e.bound);
    row["equality_diameter"] = report_number(e.equality_diameter);
    row["verdict"] = verdict_name(e.verdict);
    entries.push_back(std::move(row));
  }
  j["entries"] = std::move(entries);
  j["best_bound"] = report_number(rep.best_bound());
  return j;
}

inline ReportJson eigen_json(const SpectralResult& res) {
  ReportJson j;
  j["lambda1"] = report_number(res.lambda1);
  j["residual"] = report_number(res.residual);
  j["iterations"] = res.iterations;
  j["monotone"] = res.monotone;
  j["history"] = report_vector(res.history);
  return j;
}

inline ReportJson volume_comparison_json(const VolumeComparisonReport& r) {
  ReportJson j;
  j["k"] = report_number(r.k);
  j["lambda"] = report_number(r.lambda);
  j["radii"] = report_vector(r.radii);
  j["ball_volumes"] = report_vector(r.ball_volumes);
  j["model_volumes"] = report_vector(r.model_volumes);
  j["ratios"] = report_vector(r.ratios);
  j["non_increasing"] = r.non_increasing;
  return j;
}

// one row per certified bound: case, theorem, bound, lambda1, diameter, verdict
inline std::string report_csv(const std::string& name, const BoundsReport& rep) {
  auto cell = [](double v) {
    if (!std::isfinite(v)) return std::string();
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::string(buf);
  };
  std::string out = "case,theorem,bound,lambda1,diameter,verdict\n";
  for (const BoundEntry& e : rep.entries) {
    out += name;
    out += ',';
    out += e.theorem;
    out += ',';
    out += cell(e.bound);
    out += ',';
    out += cell(rep.lambda1);
    out += ',';
    out += cell(rep.diameter);
    out += ',';
    out += verdict_name(e.verdict);
    out += '\n';
  }
  return out;
}

}  // namespace flab
