#pragma once

// Pipeline driver: executes the configured stages in canonical order and
// assembles the report. A stage failure stops the pipeline, records the
// error, and yields exit code 1 with the partial report intact; a certified
// bound that the computed eigenvalue violates yields exit code 2.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "flab/bounds.hpp"
#include "flab/config.hpp"
#include "flab/report.hpp"
#include "flab/scan.hpp"
#include "flab/spectral.hpp"

namespace flab {

struct ExperimentResult {
  int exit_code = 0;
  ReportJson report;
  std::string csv;
  Mesh mesh;
  std::optional<CurvatureScan> scan;
  std::optional<DiameterResult> diam;
  std::optional<BoundsReport> bounds;
  std::optional<SpectralResult> eigen;
};

namespace detail {

// lower-bound floor check at a small fixed parameter grid
inline ReportJson zhong_yang_check_json() {
  ReportJson rows = ReportJson::array();
  for (double a : {0.0, 0.5, 0.9}) {
    for (double delta : {0.01, 0.1}) {
      double val = zhong_yang_integral(a, delta);
      double floor = M_PI - 2.0 * delta;
      ReportJson row;
      row["a"] = a;
      row["delta"] = delta;
      row["integral"] = report_number(val);
      row["lower_bound"] = report_number(floor);
      row["satisfied"] = val >= floor - 1e-8;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::vector<double> default_comparison_radii(const CurvatureScan& scan, double diam) {
  double cap = diam;
  double k = scan.inf_ric_over_nminus1;
  if (k > 0.0) cap = std::min(cap, M_PI / std::sqrt(k));
  return {0.25 * cap, 0.5 * cap, 0.75 * cap};
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  ExperimentResult out;
  ReportJson& rep = out.report;

  rep["case"] = cfg.name;
  out.mesh = build_mesh(cfg.domain, cfg.resolution);
  const Mesh& mesh = out.mesh;
  const MetricDescriptor& metric = cfg.domain.metric;

  {
    ReportJson d;
    d["kind"] = mesh_kind_name(mesh.kind);
    d["dim"] = mesh.dim;
    d["resolution"] = mesh.resolution;
    if (mesh.kind == MeshKind::FlatTorus)
      d["period"] = ReportJson::array({mesh.period[0], mesh.period[1]});
    else
      d["radius"] = mesh.radius;
    d["vertices"] = mesh.num_verts();
    rep["domain"] = std::move(d);
    rep["metric"] = ReportJson{{"kind", cfg.metric_kind}};
    ReportJson v{{"kind", cfg.volume_kind}};
    if (!cfg.phi_text.empty()) v["phi_expr"] = cfg.phi_text;
    rep["volume"] = std::move(v);
    rep["stages"] = cfg.stages;
  }

  std::string stage;
  try {
    for (const std::string& st : cfg.stages) {
      stage = st;
      if (st == "scan") {
        out.scan = curvature_scan(metric, cfg.volume, mesh, cfg.scan_directions, cfg.N_list);
        rep["scan"] = scan_json(*out.scan);
      } else if (st == "diameter") {
        out.diam = diameter(mesh, metric);
        ReportJson d;
        d["value"] = report_number(out.diam->value);
        d["source_vertex"] = out.diam->source;
        d["target_vertex"] = out.diam->target;
        rep["diameter"] = std::move(d);
      } else if (st == "bounds") {
        out.bounds = theorem_bounds(*out.scan, out.diam->value, mesh.dim);
      } else if (st == "eigensolve") {
        out.eigen = first_eigenpair(metric, mesh, cfg.volume, cfg.solver);
        rep["eigensolve"] = eigen_json(*out.eigen);
      } else if (st == "checks") {
        ReportJson checks;
        checks["zhong_yang"] = detail::zhong_yang_check_json();
        std::vector<double> radii = cfg.comparison_radii.empty()
                                        ? detail::default_comparison_radii(*out.scan, out.diam->value)
                                        : cfg.comparison_radii;
        VolumeComparisonReport vc =
            volume_comparison_check(mesh, metric, cfg.volume, mesh.verts[0],
                                    out.scan->inf_ric_over_nminus1, out.scan->sup_abs_s, radii,
                                    cfg.scan_directions);
        if (!vc.non_increasing) out.exit_code = 2;
        checks["volume_comparison"] = volume_comparison_json(vc);
        rep["checks"] = std::move(checks);
      }
    }
  } catch (const Error& e) {
    ReportJson err;
    err["stage"] = stage;
    err["kind"] = error_kind_name(e.kind());
    err["message"] = e.message();
    rep["error"] = std::move(err);
    out.exit_code = 1;
  }

  // verdicts attach only when both a certificate and an eigenvalue exist
  if (out.bounds) {
    if (out.eigen) apply_verdicts(*out.bounds, out.eigen->lambda1);
    rep["bounds"] = bounds_json(*out.bounds);
    for (const BoundEntry& e : out.bounds->entries)
      if (e.verdict == Verdict::Violated && out.exit_code == 0) out.exit_code = 2;
    out.csv = report_csv(cfg.name, *out.bounds);
  } else {
    out.csv = "case,theorem,bound,lambda1,diameter,verdict\n";
  }
  rep["exit_code"] = out.exit_code;
  return out;
}

inline void write_report_files(const ExperimentResult& res, const std::string& dir) {
  std::string base = dir.empty() || dir == "." ? std::string() : dir + "/";
  {
    std::ofstream os(base + "report.json");
    if (!os)
      throw Error(ErrorKind::InvalidInput, "cannot write report.json under '" + dir + "'");
    os << res.report.dump(2) << "\n";
  }
  {
    std::ofstream os(base + "report.csv");
    if (!os) throw Error(ErrorKind::InvalidInput, "cannot write report.csv under '" + dir + "'");
    os << res.csv;
  }
}

}  // namespace flab
