#include "hmfem/report.hpp"

#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hmfem/error.hpp"

#ifndef HMFEM_VERSION
#define HMFEM_VERSION "unknown"
#endif

namespace hmfem {

namespace {

using nlohmann::json;

void reject_unknown(const json& object, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : object.items())
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
T get(const json& object, const char* key, T fallback) {
  const auto it = object.find(key);
  if (it == object.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

MeshMode parse_mesh_mode(const std::string& s) {
  if (s == "uniform") return MeshMode::uniform;
  if (s == "perturbed") return MeshMode::perturbed;
  throw ConfigError("unknown mesh mode '" + s + "'");
}

KktMethod parse_method(const std::string& s) {
  if (s == "direct") return KktMethod::direct;
  if (s == "iterative" || s == "gmres") return KktMethod::iterative;
  throw ConfigError("unknown solver method '" + s + "'");
}

DualPairing parse_pairing(const std::string& s) {
  if (s == "lumped") return DualPairing::lumped;
  if (s == "consistent") return DualPairing::consistent;
  throw ConfigError("unknown hm1_pairing '" + s + "'");
}

std::string rule_label(RhoRule rule) {
  switch (rule) {
    case RhoRule::zero:
      return "0";
    case RhoRule::h:
      return "h";
    case RhoRule::h34:
      return "h^3/4";
    case RhoRule::h12:
      return "h^1/2";
    case RhoRule::h14:
      return "h^1/4";
    case RhoRule::one:
      return "h^0";
  }
  return "?";
}

json spec_json(const ExperimentSpec& spec) {
  json rules = json::array();
  for (RhoRule r : spec.rho_rules) rules.push_back(rule_label(r));
  json solver = {{"method", to_string(spec.kkt.method)},
                 {"tolerance", spec.kkt.tolerance},
                 {"max_krylov_iterations", spec.kkt.max_krylov_iterations},
                 {"gmres_restart", spec.kkt.gmres_restart},
                 {"iterative_from_level", nullptr}};
  if (spec.iterative_from_level) solver["iterative_from_level"] = *spec.iterative_from_level;
  return {{"example", to_string(spec.example)},
          {"manifold", spec.manifold},
          {"semi_axes", spec.semi_axes},
          {"levels", {spec.level_min, spec.level_max}},
          {"mesh", {{"mode", to_string(spec.mesh_mode)}, {"seed", spec.seed}, {"perturbation", spec.mesh_perturbation}}},
          {"noise", {{"frequency", spec.frequency}, {"rho", rule_label(spec.rho)}, {"rho_rules", rules}}},
          {"eps_stop", spec.eps_stop},
          {"max_iter", spec.max_iter},
          {"solver", solver},
          {"hm1_pairing", to_string(spec.pairing)},
          {"allow_large_levels", spec.allow_large_levels},
          {"allow_nonquadratic_3d", spec.allow_nonquadratic_3d}};
}

json trace_json(const NewtonTrace& trace) {
  json steps = json::array();
  for (const auto& s : trace.steps)
    steps.push_back({{"step", s.step},
                     {"correction_norm", s.correction_norm},
                     {"residual_norm", s.residual_norm},
                     {"seconds", s.seconds}});
  return {{"status", to_string(trace.status)},
          {"iterations", trace.iterations()},
          {"final_residual", trace.final_residual},
          {"seconds", trace.total_seconds},
          {"message", trace.message},
          {"steps", steps}};
}

json record_json(const ErrorRecord& r) {
  return {{"level", r.level},
          {"n_vertices", r.n_vertices},
          {"h", r.h},
          {"h_max", r.h_max},
          {"e_u_h1", r.e_u_h1},
          {"e_lambda_l2", r.e_lambda_l2},
          {"e_lambda_l2_interior", r.e_lambda_l2_interior},
          {"e_lambda_hm1", r.e_lambda_hm1},
          {"e_X", r.e_X},
          {"eoc_lambda_l2", r.eoc_lambda_l2},
          {"eoc_lambda_hm1", r.eoc_lambda_hm1},
          {"eoc_e_X", r.eoc_X}};
}

// Keeps doubles round-trippable in the CSV output.
class PrecisionGuard {
 public:
  explicit PrecisionGuard(std::ostream& out) : out_(out), old_(out.precision(17)) {}
  ~PrecisionGuard() { out_.precision(old_); }
  PrecisionGuard(const PrecisionGuard&) = delete;
  PrecisionGuard& operator=(const PrecisionGuard&) = delete;

 private:
  std::ostream& out_;
  std::streamsize old_;
};

}  // namespace

std::string to_string(MeshMode mode) { return mode == MeshMode::uniform ? "uniform" : "perturbed"; }
std::string to_string(KktMethod method) { return method == KktMethod::direct ? "direct" : "iterative"; }
std::string to_string(DualPairing pairing) { return pairing == DualPairing::lumped ? "lumped" : "consistent"; }

std::string version() { return HMFEM_VERSION; }

ExperimentSpec parse_spec(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("configuration must be a JSON object");
  reject_unknown(root,
                 {"example", "manifold", "semi_axes", "levels", "mesh", "noise", "eps_stop", "max_iter", "solver",
                  "hm1_pairing", "allow_large_levels", "allow_nonquadratic_3d", "output"},
                 "configuration");

  ExperimentSpec spec;
  if (!root.contains("example")) throw ConfigError("configuration needs an 'example'");
  spec.example = parse_example(get<std::string>(root, "example", ""));
  spec.manifold = get<std::string>(root, "manifold", "");
  spec.semi_axes = get<std::vector<double>>(root, "semi_axes", {});

  if (root.contains("levels")) {
    const auto levels = get<std::vector<int>>(root, "levels", {});
    if (levels.size() == 1) {
      spec.level_min = spec.level_max = levels[0];
    } else if (levels.size() == 2) {
      spec.level_min = levels[0];
      spec.level_max = levels[1];
    } else {
      throw ConfigError("'levels' must be [level] or [min, max]");
    }
  }

  if (root.contains("mesh")) {
    const json& mesh = root["mesh"];
    reject_unknown(mesh, {"mode", "seed", "perturbation"}, "mesh");
    spec.mesh_mode = parse_mesh_mode(get<std::string>(mesh, "mode", "uniform"));
    spec.seed = get<std::uint64_t>(mesh, "seed", spec.seed);
    spec.mesh_perturbation = get<double>(mesh, "perturbation", spec.mesh_perturbation);
  }

  if (root.contains("noise")) {
    const json& noise = root["noise"];
    reject_unknown(noise, {"frequency", "rho", "rho_rules"}, "noise");
    spec.frequency = get<double>(noise, "frequency", spec.frequency);
    spec.rho = parse_rho_rule(get<std::string>(noise, "rho", "0"));
    if (noise.contains("rho_rules")) {
      spec.rho_rules.clear();
      for (const auto& r : get<std::vector<std::string>>(noise, "rho_rules", {}))
        spec.rho_rules.push_back(parse_rho_rule(r));
    }
  }

  spec.eps_stop = get<double>(root, "eps_stop", spec.eps_stop);
  spec.max_iter = get<int>(root, "max_iter", spec.max_iter);

  if (root.contains("solver")) {
    const json& solver = root["solver"];
    reject_unknown(solver, {"method", "tolerance", "max_krylov_iterations", "gmres_restart", "iterative_from_level"},
                   "solver");
    spec.kkt.method = parse_method(get<std::string>(solver, "method", "direct"));
    spec.kkt.tolerance = get<double>(solver, "tolerance", spec.kkt.tolerance);
    spec.kkt.max_krylov_iterations = get<int>(solver, "max_krylov_iterations", spec.kkt.max_krylov_iterations);
    spec.kkt.gmres_restart = get<int>(solver, "gmres_restart", spec.kkt.gmres_restart);
    if (solver.contains("iterative_from_level") && !solver["iterative_from_level"].is_null())
      spec.iterative_from_level = get<int>(solver, "iterative_from_level", 0);
  }

  spec.pairing = parse_pairing(get<std::string>(root, "hm1_pairing", "lumped"));
  spec.allow_large_levels = get<bool>(root, "allow_large_levels", false);
  spec.allow_nonquadratic_3d = get<bool>(root, "allow_nonquadratic_3d", false);
  spec.validate();
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open configuration " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_spec(text.str());
}

std::string spec_to_json(const ExperimentSpec& spec) { return spec_json(spec).dump(2); }

void write_convergence_csv(std::ostream& out, const ConvergenceReport& report) {
  write_error_csv(out, report.records);
}

void write_basin_csv(std::ostream& out, const BasinReport& report) {
  const PrecisionGuard guard(out);
  const auto& rules = report.spec.rho_rules;
  out << "level";
  for (RhoRule r : rules) out << ',' << column_name(r);
  out << '\n';
  for (int level = report.spec.level_min; level <= report.spec.level_max; ++level) {
    out << level;
    for (RhoRule r : rules) {
      const BasinCell* cell = report.find(level, r);
      out << ',';
      if (cell && cell->converged())
        out << cell->iterations;
      else
        out << kNoConvergence;
    }
    out << '\n';
  }
}

std::string convergence_report_json(const ConvergenceReport& report) {
  json levels = json::array();
  json seeds = json::object();
  for (const auto& run : report.runs) {
    json entry = {{"level", run.level},
                  {"n_vertices", run.n_vertices},
                  {"h", run.h},
                  {"h_max", run.h_max},
                  {"rho", run.rho},
                  {"energy", run.energy},
                  {"constraint_violation", run.constraint_violation},
                  {"seconds", run.seconds},
                  {"converged", run.ok()},
                  {"failure", run.failure},
                  {"trace", trace_json(run.trace)},
                  {"errors", nullptr}};
    if (run.errors) entry["errors"] = record_json(*run.errors);
    levels.push_back(entry);
    seeds[std::to_string(run.level)] = run.mesh_seeds;
  }
  json records = json::array();
  for (const auto& r : report.records) records.push_back(record_json(r));
  const json root = {{"kind", "convergence"},
                     {"version", version()},
                     {"spec", spec_json(report.spec)},
                     {"levels", levels},
                     {"records", records},
                     {"seeds", seeds},
                     {"all_converged", report.all_converged()},
                     {"total_seconds", report.total_seconds}};
  return root.dump(2);
}

std::string basin_report_json(const BasinReport& report) {
  json cells = json::array();
  for (const auto& c : report.cells)
    cells.push_back({{"level", c.level},
                     {"rule", column_name(c.rule)},
                     {"rho", c.rho},
                     {"status", to_string(c.status)},
                     {"iterations", c.iterations},
                     {"seconds", c.seconds},
                     {"message", c.message}});
  json seeds = json::object();
  if (report.spec.mesh_mode == MeshMode::perturbed)
    for (int level = report.spec.level_min; level <= report.spec.level_max; ++level) {
      json s = json::array();
      for (int k = 0; k < level; ++k) s.push_back(report.spec.seed + static_cast<std::uint64_t>(k));
      seeds[std::to_string(level)] = s;
    }
  const json root = {{"kind", "basin"},
                     {"version", version()},
                     {"spec", spec_json(report.spec)},
                     {"cells", cells},
                     {"seeds", seeds},
                     {"all_converged", report.all_converged()},
                     {"total_seconds", report.total_seconds}};
  return root.dump(2);
}

}  // namespace hmfem
