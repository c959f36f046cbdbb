#pragma once

// Experiment configuration: a JSON file selecting domain, metric, volume,
// solver, scan, and pipeline stages. Parsing is strict: unknown keys,
// unknown kinds, and type mismatches raise config errors naming the field.

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "flab/domain.hpp"
#include "flab/errors.hpp"
#include "flab/expr.hpp"
#include "flab/metric.hpp"
#include "flab/spectral.hpp"
#include "flab/volume.hpp"

namespace flab {

struct ExperimentConfig {
  std::string name = "experiment";
  DomainSpec domain = DomainSpec::circle(1.0);
  int resolution = 64;

  VolumeDescriptor volume = VolumeDescriptor::riemannian();
  std::string volume_kind = "riemannian";
  std::string phi_text;  // explicit profiles only
  std::string metric_kind = "euclidean";

  SolverOptions solver;
  int scan_directions = 32;
  std::vector<double> N_list;

  // canonical order; configs select a subset
  std::vector<std::string> stages = {"scan", "diameter", "bounds", "eigensolve", "checks"};
  std::vector<double> comparison_radii;  // empty: derived from the diameter

  bool stage(const std::string& s) const {
    for (const auto& t : stages)
      if (t == s) return true;
    return false;
  }
};

namespace cfg {

using nlohmann::json;

[[noreturn]] inline void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorKind::ConfigError, "config field '" + field + "': " + why);
}

inline void check_keys(const json& j, const std::string& where,
                       std::initializer_list<const char*> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw Error(ErrorKind::ConfigError,
                  "unknown config field '" + (where.empty() ? it.key() : where + "." + it.key()) +
                      "'");
  }
}

inline double num(const json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  return j.get<double>();
}

inline int integer(const json& j, const std::string& field) {
  if (!j.is_number_integer()) bad(field, "expected an integer");
  return j.get<int>();
}

inline std::string str(const json& j, const std::string& field) {
  if (!j.is_string()) bad(field, "expected a string");
  return j.get<std::string>();
}

inline Matd matrix_from(const json& j, int n, const std::string& field) {
  if (!j.is_array() || int(j.size()) != n) bad(field, "expected an n x n array of rows");
  Matd a(n);
  for (int r = 0; r < n; ++r) {
    const json& row = j[std::size_t(r)];
    if (!row.is_array() || int(row.size()) != n) bad(field, "expected an n x n array of rows");
    for (int c = 0; c < n; ++c) a(r, c) = num(row[std::size_t(c)], field);
  }
  return a;
}

inline MetricDescriptor metric_from(const json* jm, MeshKind domain_kind, int dim,
                                    const DomainSpec& spec, std::string& kind_out) {
  bool curved = domain_kind != MeshKind::FlatTorus;
  std::string kind = curved ? "round" : "euclidean";
  if (jm) {
    check_keys(*jm, "metric", {"kind", "b", "a"});
    if (jm->contains("kind")) kind = str((*jm)["kind"], "metric.kind");
  }
  bool known = false;
  for (const char* k : {"round", "euclidean", "randers", "riemannian"})
    if (kind == k) known = true;
  if (!known) bad("metric.kind", "unknown metric kind '" + kind + "'");
  kind_out = kind;

  // circles and spheres carry their intrinsic chart metric
  if (curved) {
    if (kind != "round")
      bad("metric.kind", std::string(domain_kind == MeshKind::Sphere ? "sphere" : "circle") +
                             " domains support only the round metric");
    return spec.metric;
  }
  if (kind == "round") bad("metric.kind", "flat domains have no round metric");
  if (kind == "euclidean") return MetricDescriptor::euclidean(dim);
  if (kind == "randers") {
    if (!jm || !jm->contains("b")) bad("metric.b", "randers metric needs a drift covector");
    const json& jb = (*jm)["b"];
    if (!jb.is_array() || int(jb.size()) != dim)
      bad("metric.b", "expected an array matching the dimension");
    Vecd b(dim);
    for (int i = 0; i < dim; ++i) b[i] = num(jb[std::size_t(i)], "metric.b");
    std::shared_ptr<const MatrixMap> a;
    if (jm->contains("a")) a = constant_matrix_map(matrix_from((*jm)["a"], dim, "metric.a"));
    return MetricDescriptor::randers(dim, constant_covector_map(b), a);
  }
  if (!jm || !jm->contains("a")) bad("metric.a", "riemannian metric needs a coefficient matrix");
  return MetricDescriptor::riemannian(dim,
                                      constant_matrix_map(matrix_from((*jm)["a"], dim, "metric.a")));
}

inline VolumeDescriptor volume_from(const json* jv, int dim, ExperimentConfig& out) {
  std::string kind = "riemannian";
  if (jv) {
    check_keys(*jv, "volume", {"kind", "phi_expr", "samples"});
    if (jv->contains("kind")) kind = str((*jv)["kind"], "volume.kind");
  }
  out.volume_kind = kind;
  if (kind == "riemannian") return VolumeDescriptor::riemannian();
  if (kind == "busemann_hausdorff") {
    int samples = 512;
    if (jv && jv->contains("samples")) samples = integer((*jv)["samples"], "volume.samples");
    if (samples < 16) bad("volume.samples", "needs at least 16 direction samples");
    return VolumeDescriptor::busemann_hausdorff(samples);
  }
  if (kind == "explicit") {
    if (!jv || !jv->contains("phi_expr"))
      bad("volume.phi_expr", "explicit volume needs a log-density expression");
    out.phi_text = str((*jv)["phi_expr"], "volume.phi_expr");
    PhiExpr e = PhiExpr::parse(out.phi_text, dim);
    return VolumeDescriptor::explicit_phi(make_phi_map(std::move(e)));
  }
  bad("volume.kind", "unknown volume kind '" + kind + "'");
}

}  // namespace cfg

inline ExperimentConfig parse_experiment_config(const nlohmann::json& j,
                                                const std::string& default_name) {
  using cfg::bad;
  using cfg::check_keys;
  using cfg::integer;
  using cfg::num;
  using cfg::str;

  if (!j.is_object()) throw Error(ErrorKind::ConfigError, "config root must be an object");
  check_keys(j, "", {"name", "domain", "metric", "volume", "solver", "scan", "stages", "checks"});

  ExperimentConfig out;
  out.name = j.contains("name") ? str(j["name"], "name") : default_name;

  if (!j.contains("domain")) bad("domain", "missing");
  const nlohmann::json& jd = j["domain"];
  check_keys(jd, "domain", {"kind", "size", "resolution"});
  if (!jd.contains("kind")) bad("domain.kind", "missing");
  std::string dkind = str(jd["kind"], "domain.kind");
  out.resolution = jd.contains("resolution") ? integer(jd["resolution"], "domain.resolution") : 64;
  if (out.resolution < 2) bad("domain.resolution", "must be at least 2");

  int dim = 0;
  if (dkind == "circle" || dkind == "sphere") {
    double radius = 1.0;
    if (jd.contains("size")) radius = num(jd["size"], "domain.size");
    if (!(radius > 0.0)) bad("domain.size", "radius must be positive");
    dim = dkind == "circle" ? 1 : 2;
    out.domain = dkind == "circle" ? DomainSpec::circle(radius) : DomainSpec::sphere(radius);
  } else if (dkind == "flat_torus") {
    double l1 = 2.0 * M_PI, l2 = 2.0 * M_PI;
    if (jd.contains("size")) {
      const nlohmann::json& js = jd["size"];
      if (js.is_number()) {
        l1 = l2 = num(js, "domain.size");
      } else if (js.is_array() && js.size() == 2) {
        l1 = num(js[0], "domain.size");
        l2 = num(js[1], "domain.size");
      } else {
        bad("domain.size", "expected a period or a pair of periods");
      }
    }
    dim = 2;
    out.domain = DomainSpec::flat_torus(l1, l2, MetricDescriptor::euclidean(2));
  } else {
    bad("domain.kind", "unknown domain kind '" + dkind + "'");
  }

  const nlohmann::json* jm = j.contains("metric") ? &j["metric"] : nullptr;
  MetricDescriptor metric = cfg::metric_from(jm, out.domain.kind, dim, out.domain, out.metric_kind);
  if (out.domain.kind == MeshKind::FlatTorus)
    out.domain = DomainSpec::flat_torus(out.domain.period[0], out.domain.period[1], std::move(metric));

  const nlohmann::json* jv = j.contains("volume") ? &j["volume"] : nullptr;
  out.volume = cfg::volume_from(jv, dim, out);

  if (j.contains("solver")) {
    const nlohmann::json& js = j["solver"];
    check_keys(js, "solver", {"tol", "max_outer", "seed", "damping"});
    if (js.contains("tol")) out.solver.tol_lambda = num(js["tol"], "solver.tol");
    if (js.contains("max_outer")) out.solver.max_outer = integer(js["max_outer"], "solver.max_outer");
    if (js.contains("seed")) out.solver.seed = std::uint64_t(integer(js["seed"], "solver.seed"));
    if (js.contains("damping")) out.solver.damping = num(js["damping"], "solver.damping");
  }

  if (j.contains("scan")) {
    const nlohmann::json& js = j["scan"];
    check_keys(js, "scan", {"directions_per_vertex", "N_list"});
    if (js.contains("directions_per_vertex"))
      out.scan_directions = integer(js["directions_per_vertex"], "scan.directions_per_vertex");
    if (js.contains("N_list")) {
      const nlohmann::json& jn = js["N_list"];
      if (!jn.is_array()) bad("scan.N_list", "expected an array");
      for (const auto& e : jn) {
        if (e.is_string()) {
          std::string s = e.get<std::string>();
          if (s != "inf" && s != "infinity") bad("scan.N_list", "unknown entry '" + s + "'");
          out.N_list.push_back(std::numeric_limits<double>::infinity());
        } else {
          out.N_list.push_back(num(e, "scan.N_list"));
        }
      }
    }
  }

  if (j.contains("stages")) {
    const nlohmann::json& js = j["stages"];
    if (!js.is_array()) bad("stages", "expected an array of stage names");
    std::vector<std::string> requested;
    for (const auto& e : js) {
      std::string s = str(e, "stages");
      bool known = false;
      for (const char* k : {"scan", "diameter", "bounds", "eigensolve", "checks"})
        if (s == k) known = true;
      if (!known) bad("stages", "unknown stage '" + s + "'");
      requested.push_back(s);
    }
    // canonical execution order regardless of listing order
    out.stages.clear();
    for (const char* k : {"scan", "diameter", "bounds", "eigensolve", "checks"})
      for (const auto& s : requested)
        if (s == k && !out.stage(k)) out.stages.push_back(k);
    for (const char* pre : {"scan", "diameter"}) {
      for (const char* dependent : {"bounds", "checks"})
        if (out.stage(dependent) && !out.stage(pre))
          bad("stages", std::string("stage '") + dependent + "' requires stage '" + pre + "'");
    }
  }

  if (j.contains("checks")) {
    const nlohmann::json& jc = j["checks"];
    check_keys(jc, "checks", {"comparison_radii"});
    if (jc.contains("comparison_radii")) {
      const nlohmann::json& jr = jc["comparison_radii"];
      if (!jr.is_array() || jr.empty()) bad("checks.comparison_radii", "expected radii");
      for (const auto& e : jr) out.comparison_radii.push_back(num(e, "checks.comparison_radii"));
    }
  }

  return out;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorKind::ConfigError, "cannot open config file: " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(is);
  } catch (const std::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("config parse error: ") + e.what());
  }
  std::string stem = path;
  if (std::size_t slash = stem.find_last_of('/'); slash != std::string::npos)
    stem = stem.substr(slash + 1);
  if (std::size_t dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return parse_experiment_config(j, stem);
}

}  // namespace flab
