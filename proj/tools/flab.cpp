// Command line front end. Subcommands:
//   run           full pipeline; writes report.json/report.csv
//   scan          curvature scan only, JSON on stdout
//   eigen         eigensolve only (or evaluate a loaded field)
//   check-bochner pointwise identity/inequality residuals for a test field
//   psi           comparison profile integral at one (a, delta)
// Exit codes: 0 success, 1 error, 2 a certified bound was violated.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "flab/config.hpp"
#include "flab/fields.hpp"
#include "flab/report.hpp"
#include "flab/runner.hpp"

namespace {

using namespace flab;

struct GlobalOpts {
  std::string dump_mesh;
  std::string dump_field;
  std::string load_field;
  int threads = 1;
};

void dump_mesh_if_asked(const GlobalOpts& g, const Mesh& mesh) {
  if (g.dump_mesh.empty()) return;
  std::ofstream os(g.dump_mesh);
  if (!os) throw Error(ErrorKind::InvalidInput, "cannot write mesh file: " + g.dump_mesh);
  os << mesh_json(mesh).dump(2) << "\n";
}

// default probe field: lowest nontrivial harmonic of the domain
ScalarField default_field(const Mesh& mesh) {
  ScalarField u;
  u.values.resize(std::size_t(mesh.num_verts()));
  for (int v = 0; v < mesh.num_verts(); ++v) {
    const Vecd& p = mesh.verts[std::size_t(v)];
    double s = 0.0;
    switch (mesh.kind) {
      case MeshKind::Circle: s = std::sin(p[0] / mesh.radius); break;
      case MeshKind::FlatTorus: s = std::sin(2.0 * M_PI * p[0] / mesh.period[0]); break;
      case MeshKind::Sphere: s = p[2] / mesh.radius; break;
    }
    u.values[std::size_t(v)] = s;
  }
  return u;
}

int cmd_run(const std::string& config_path, const std::string& out_dir, const GlobalOpts& g) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  ExperimentResult res = run_experiment(cfg);
  dump_mesh_if_asked(g, res.mesh);
  if (!g.dump_field.empty()) {
    if (!res.eigen)
      throw Error(ErrorKind::InvalidInput, "no eigenfield to dump; include the eigensolve stage");
    export_field(g.dump_field, res.eigen->eigenfield);
  }
  write_report_files(res, out_dir);

  std::printf("case %s\n", cfg.name.c_str());
  if (res.eigen) std::printf("lambda1 %.12g\n", res.eigen->lambda1);
  if (res.diam) std::printf("diameter %.12g\n", res.diam->value);
  if (res.bounds)
    for (const BoundEntry& e : res.bounds->entries)
      std::printf("bound %s %.12g %s\n", e.theorem.c_str(), e.bound, verdict_name(e.verdict));
  if (res.report.contains("error"))
    std::printf("error at stage %s: %s\n", res.report["error"]["stage"].get<std::string>().c_str(),
                res.report["error"]["message"].get<std::string>().c_str());
  std::printf("report.json and report.csv written under %s\n",
              out_dir.empty() ? "." : out_dir.c_str());
  std::printf("exit %d\n", res.exit_code);
  return res.exit_code;
}

int cmd_scan(const std::string& config_path, const GlobalOpts& g) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  cfg.stages = {"scan"};
  ExperimentResult res = run_experiment(cfg);
  dump_mesh_if_asked(g, res.mesh);
  if (res.report.contains("error")) {
    std::cerr << res.report["error"].dump(2) << "\n";
    return 1;
  }
  std::cout << res.report["scan"].dump(2) << "\n";
  return res.exit_code;
}

int cmd_eigen(const std::string& config_path, const GlobalOpts& g) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  Mesh mesh = build_mesh(cfg.domain, cfg.resolution);
  dump_mesh_if_asked(g, mesh);
  ReportJson out;
  out["case"] = cfg.name;
  if (!g.load_field.empty()) {
    // evaluate the supplied field instead of solving
    ScalarField u = import_field(g.load_field);
    double lambda = rayleigh_quotient(cfg.domain.metric, mesh, cfg.volume, u);
    ScalarField lap = finsler_laplacian(cfg.domain.metric, mesh, cfg.volume, u);
    double rmax = 0.0;
    for (int v = 0; v < mesh.num_verts(); ++v)
      rmax = std::max(rmax, std::abs(lap.values[std::size_t(v)] +
                                     lambda * u.values[std::size_t(v)]));
    out["field"] = g.load_field;
    out["rayleigh_quotient"] = report_number(lambda);
    out["residual"] = report_number(rmax);
    if (!g.dump_field.empty()) export_field(g.dump_field, u);
  } else {
    SpectralResult res = first_eigenpair(cfg.domain.metric, mesh, cfg.volume, cfg.solver);
    out["eigensolve"] = eigen_json(res);
    if (!g.dump_field.empty()) export_field(g.dump_field, res.eigenfield);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_check_bochner(const std::string& config_path, const GlobalOpts& g) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  Mesh mesh = build_mesh(cfg.domain, cfg.resolution);
  dump_mesh_if_asked(g, mesh);
  ScalarField u = g.load_field.empty() ? default_field(mesh) : import_field(g.load_field);
  if (!g.dump_field.empty()) export_field(g.dump_field, u);

  std::vector<double> Ns = cfg.N_list;
  if (Ns.empty())
    Ns = {double(mesh.dim), double(mesh.dim) + 1.0, std::numeric_limits<double>::infinity()};

  ReportJson out;
  out["case"] = cfg.name;
  out["field"] = g.load_field.empty() ? "default" : g.load_field;
  ReportJson rows = ReportJson::array();
  PolynomialReconstructor recon(mesh);
  for (double N : Ns) {
    BochnerReport rep = bochner_residual(cfg.domain.metric, mesh, cfg.volume, u, N, recon);
    ReportJson row;
    row["N"] = report_N(N);
    row["max_equality_residual"] = report_number(rep.max_equality_residual);
    row["min_inequality_slack"] = report_number(rep.min_inequality_slack);
    row["max_equality_near_mask"] = report_number(rep.max_equality_near_mask);
    row["clean_count"] = rep.clean_count;
    row["masked_count"] = rep.masked_count;
    row["near_mask_count"] = rep.near_mask_count;
    rows.push_back(std::move(row));
  }
  out["entries"] = std::move(rows);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_psi(double a, double delta) {
  double val = zhong_yang_integral(a, delta);
  double floor = M_PI - 2.0 * delta;
  ReportJson out;
  out["a"] = a;
  out["delta"] = delta;
  out["integral"] = report_number(val);
  out["lower_bound"] = report_number(floor);
  out["satisfied"] = val >= floor - 1e-8;
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finsler eigenvalue laboratory"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--dump-mesh", g.dump_mesh, "write the mesh as JSON to this path");
  app.add_option("--dump-field", g.dump_field, "write the active scalar field to this path");
  app.add_option("--load-field", g.load_field,
                 "read the field to evaluate from this path (eigen, check-bochner)");
  app.add_option("--threads", g.threads, "reserved; kernels currently run single threaded")
      ->check(CLI::PositiveNumber);

  std::string config_path, out_dir = ".";
  CLI::App* run = app.add_subcommand("run", "full pipeline with report files");
  run->add_option("config", config_path, "experiment config JSON")->required();
  run->add_option("--out", out_dir, "directory for report.json/report.csv");

  CLI::App* scan = app.add_subcommand("scan", "curvature scan, JSON on stdout");
  scan->add_option("config", config_path, "experiment config JSON")->required();

  CLI::App* eigen = app.add_subcommand("eigen", "first eigenpair, JSON on stdout");
  eigen->add_option("config", config_path, "experiment config JSON")->required();

  CLI::App* bochner = app.add_subcommand("check-bochner", "pointwise residuals, JSON on stdout");
  bochner->add_option("config", config_path, "experiment config JSON")->required();

  double a = 0.0, delta = 0.01;
  CLI::App* psi = app.add_subcommand("psi", "comparison profile integral");
  psi->add_option("--a", a, "asymmetry parameter in [0,1)")->required();
  psi->add_option("--delta", delta, "boundary inset in [0, pi/2)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir, g);
    if (scan->parsed()) return cmd_scan(config_path, g);
    if (eigen->parsed()) return cmd_eigen(config_path, g);
    if (bochner->parsed()) return cmd_check_bochner(config_path, g);
    if (psi->parsed()) return cmd_psi(a, delta);
  } catch (const flab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
