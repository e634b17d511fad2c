#include "report.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <fstream>
#include <ostream>

namespace momentsos::cli {

namespace {

using nlohmann::json;

struct Flags {
  std::string file;
  std::string json_out;
  double tol = 1e-8;
  int order_max = 0;
  int order = 0;
  bool extract = false;
  bool stokes = false;
  bool sos = false;
  std::uint64_t seed = HierarchyOptions{}.seed;
  int threads = 1;
  std::string out;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool solved(conic::SolveStatus s) { return s == conic::SolveStatus::Optimal; }

bool solver_gave_up(conic::SolveStatus s) {
  return s == conic::SolveStatus::MaxIter || s == conic::SolveStatus::NumericalFailure;
}

conic::SolverOptions solver_options(const Flags& f) {
  conic::SolverOptions o;
  o.tol = f.tol;
  return o;
}

template <typename T>
const T& expect(const ProblemFile& pf, const char* command) {
  const T* data = std::get_if<T>(&pf.data);
  if (!data) throw UsageError(std::string(command) + " does not accept problems of kind '" + pf.kind + "'");
  return *data;
}

int order_max_or(const Flags& f, int fallback) { return f.order_max > 0 ? f.order_max : fallback; }

json header(const char* command, const ProblemFile& pf) {
  return {{"report_version", kReportVersion}, {"command", command}, {"kind", pf.kind}, {"variables", pf.variables}};
}

int solve_pop(const PopProblem& p, const ProblemFile& pf, const Flags& f, std::ostream& out, json& report) {
  HierarchyOptions opt;
  opt.solver = solver_options(f);
  opt.extract = f.extract;
  opt.seed = f.seed;
  opt.threads = f.threads;
  const HierarchyResult r = solve_hierarchy(p, order_max_or(f, min_order(p) + 2), opt);
  json levels = json::array();
  for (const auto& level : r.levels) {
    print(out, level, pf.variables);
    levels.push_back(to_json(level));
  }
  report["levels"] = levels;
  report["converged_order"] = r.converged_order ? json(*r.converged_order) : json(nullptr);
  if (r.converged_order) {
    out << "converged at order " << *r.converged_order << '\n';
    return kSuccess;
  }
  if (r.levels.empty() || solver_gave_up(r.levels.back().primal_status)) {
    out << "solver failed\n";
    return kSolverFailure;
  }
  out << "not certified up to order " << r.levels.back().d << '\n';
  return kNotCertified;
}

int solve_general(const GpmProblem& g, const ProblemFile& pf, const Flags& f, std::ostream& out, json& report) {
  const int dmin = gpm_min_order(g);
  const int dmax = order_max_or(f, dmin + 2);
  if (dmax < dmin) throw OrderError("maximum order is below the minimal order " + std::to_string(dmin));
  json levels = json::array();
  bool ok = true;
  for (int d = dmin; d <= dmax; ++d) {
    const GpmResult r = solve_gpm(g, d, solver_options(f));
    BoundEntry e;
    e.d = d;
    e.bound = r.bound;
    e.status = r.status;
    e.note = r.note;
    print(out, e, pf.variables);
    levels.push_back(to_json(e));
    ok = ok && solved(r.status);
  }
  report["levels"] = levels;
  return ok ? kSuccess : kSolverFailure;
}

int sequence_report(const BoundSequence& seq, const ProblemFile& pf, std::ostream& out, json& report) {
  json levels = json::array();
  bool ok = true;
  for (const auto& e : seq.entries) {
    print(out, e, pf.variables);
    levels.push_back(to_json(e));
    ok = ok && solved(e.status);
  }
  report["levels"] = levels;
  report["monotone"] = seq.monotone();
  return ok ? kSuccess : kSolverFailure;
}

int cmd_solve(const ProblemFile& pf, const Flags& f, std::ostream& out, json& report) {
  if (const auto* p = std::get_if<PopProblem>(&pf.data)) return solve_pop(*p, pf, f, out, report);
  return solve_general(expect<GpmProblem>(pf, "solve"), pf, f, out, report);
}

int cmd_sos_check(const ProblemFile& pf, const Flags& f, std::ostream& out, json& report) {
  const Polynomial* poly = nullptr;
  if (const auto* s = std::get_if<SosCheckProblem>(&pf.data)) poly = &s->f;
  if (const auto* p = std::get_if<PopProblem>(&pf.data)) poly = &p->f;
  if (!poly) throw UsageError("sos-check does not accept problems of kind '" + pf.kind + "'");
  const SosMembership m = sos_membership(*poly, solver_options(f));
  print(out, m);
  report["result"] = to_json(m);
  return std::holds_alternative<SosCertificate>(m) ? kSuccess : kNotCertified;
}

int cmd_volume(const ProblemFile& pf, const Flags& f, std::ostream& out, json& report) {
  const auto& v = expect<VolumeSpec>(pf, "volume");
  int dhat = 1;
  for (const auto& g : v.set.all_constraints()) dhat = std::max(dhat, half_degree(g));
  report["stokes"] = f.stokes;
  return sequence_report(volume_sequence(v.set, v.box, order_max_or(f, dhat + 4), f.stokes, solver_options(f)), pf,
                         out, report);
}

int cmd_prob_bound(const ProblemFile& pf, const Flags& f, std::ostream& out, json& report) {
  const auto& p = expect<ProbBoundSpec>(pf, "prob-bound");
  const int dmin = gpm_min_order(probability_problem(p.moments, p.omega1, p.omega2, p.direction));
  const int dmax = order_max_or(f, dmin + 2);
  if (dmax < dmin) throw OrderError("maximum order is below the minimal order " + std::to_string(dmin));
  BoundSequence seq;
  seq.direction = p.direction;
  for (int d = dmin; d <= dmax; ++d) {
    seq.entries.push_back(probability_bound(p.moments, p.omega1, p.omega2, d, p.direction, solver_options(f)));
  }
  report["direction"] = p.direction == Direction::Upper ? "upper" : "lower";
  return sequence_report(seq, pf, out, report);
}

int cmd_superres(const ProblemFile& pf, const Flags& f, std::ostream& out, json& report) {
  const auto& s = expect<SuperResSpec>(pf, "superres");
  const int d = f.order > 0 ? f.order : std::max(1, (s.t + 1) / 2);
  const SuperResolutionResult r = super_resolution(s.moments, s.t, s.omega, d, solver_options(f));
  print(out, r, pf.variables);
  report["result"] = to_json(r);
  if (!solved(r.status)) return kSolverFailure;
  return r.measure ? kSuccess : kNotCertified;
}

int cmd_export(const ProblemFile& pf, const Flags& f, std::ostream& out, json& report) {
  conic::ConicProgram program;
  if (const auto* p = std::get_if<PopProblem>(&pf.data)) {
    program = f.sos ? build_dual_sos(*p, f.order).program : build_primal_relaxation(*p, f.order).program;
  } else if (const auto* g = std::get_if<GpmProblem>(&pf.data)) {
    program = build_gpm_relaxation(*g, f.order).program;
  } else if (const auto* v = std::get_if<VolumeSpec>(&pf.data)) {
    program = build_gpm_relaxation(volume_problem(v->set, v->box, f.order, f.stokes).problem, f.order).program;
  } else if (const auto* pb = std::get_if<ProbBoundSpec>(&pf.data)) {
    program = build_gpm_relaxation(probability_problem(pb->moments, pb->omega1, pb->omega2, pb->direction), f.order)
                  .program;
  } else if (const auto* s = std::get_if<SuperResSpec>(&pf.data)) {
    program = build_gpm_relaxation(super_resolution_problem(s->moments, s->omega), f.order).program;
  } else {
    throw UsageError("export-sdpa does not accept problems of kind '" + pf.kind + "'");
  }
  std::ofstream file(f.out, std::ios::binary);
  if (!file) throw UsageError("cannot write " + f.out);
  file << export_sdpa(program);
  if (!file) throw UsageError("cannot write " + f.out);
  out << "wrote " << f.out << ": " << program.num_constraints() << " constraints, " << program.blocks().size()
      << " blocks\n";
  report["out"] = f.out;
  report["constraints"] = program.num_constraints();
  report["blocks"] = program.blocks().size();
  return kSuccess;
}

using Command = int (*)(const ProblemFile&, const Flags&, std::ostream&, json&);

int dispatch(const char* name, Command command, const Flags& f, std::ostream& out, std::ostream& err) {
  ProblemFile pf;
  try {
    pf = parse_problem_file(f.file);
  } catch (const ProblemFileError& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    return kParse;
  }
  json report = header(name, pf);
  int code = kSuccess;
  const auto start = std::chrono::steady_clock::now();
  try {
    code = command(pf, f, out, report);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const OrderError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const ModelError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  } catch (const DimensionError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  } catch (const DegreeError& e) {
    err << "error: " << e.what() << '\n';
    return kParse;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  out << "total time " << human(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count())
      << " s\n";
  report["exit_code"] = code;
  if (!f.json_out.empty()) {
    std::ofstream file(f.json_out, std::ios::binary);
    file << report.dump(2) << '\n';
    if (!file) {
      err << "error: cannot write " << f.json_out << '\n';
      return kUsage;
    }
  }
  if (code == kSolverFailure) err << "solver failure\n";
  if (code == kNotCertified) err << "not certified\n";
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Moment-SOS hierarchy toolkit", "momentsos"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&](CLI::App* sub) {
    sub->add_option("file", f.file, "Problem file (JSON)")->required();
    sub->add_option("--json", f.json_out, "Write the machine-readable report to this path");
    sub->add_option("--tol", f.tol, "Solver tolerance")->check(CLI::PositiveNumber);
  };
  auto* solve = app.add_subcommand("solve", "Run the moment hierarchy on a pop or gpm problem");
  common(solve);
  solve->add_option("--order-max", f.order_max, "Highest relaxation order")->check(CLI::PositiveNumber);
  solve->add_flag("--extract", f.extract, "Extract minimizers when the rank test passes");
  solve->add_option("--seed", f.seed, "Seed for the extraction's random combination");
  solve->add_option("--threads", f.threads, "Solve levels in parallel")->check(CLI::PositiveNumber);
  auto* sos = app.add_subcommand("sos-check", "Decide whether a polynomial is a sum of squares");
  common(sos);
  auto* vol = app.add_subcommand("volume", "Upper bounds on the volume of a set inside a box");
  common(vol);
  vol->add_option("--order-max", f.order_max, "Highest relaxation order")->check(CLI::PositiveNumber);
  vol->add_flag("--stokes", f.stokes, "Add Stokes constraints");
  auto* prob = app.add_subcommand("prob-bound", "Bounds on a probability from known moments");
  common(prob);
  prob->add_option("--order-max", f.order_max, "Highest relaxation order")->check(CLI::PositiveNumber);
  auto* sr = app.add_subcommand("superres", "Minimum total variation measure with given moments");
  common(sr);
  sr->add_option("--order", f.order, "Relaxation order (default ceil(t/2))")->check(CLI::PositiveNumber);
  auto* ex = app.add_subcommand("export-sdpa", "Write a relaxation in SDPA sparse format");
  common(ex);
  ex->add_option("--order", f.order, "Relaxation order")->required()->check(CLI::PositiveNumber);
  ex->add_option("--out", f.out, "Output path")->required();
  ex->add_flag("--sos", f.sos, "Export the SOS program of a pop instead of the moment relaxation");
  ex->add_flag("--stokes", f.stokes, "Add Stokes constraints to a volume relaxation");

  std::vector<const char*> argv{"momentsos"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kSuccess;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  if (solve->parsed()) return dispatch("solve", cmd_solve, f, out, err);
  if (sos->parsed()) return dispatch("sos-check", cmd_sos_check, f, out, err);
  if (vol->parsed()) return dispatch("volume", cmd_volume, f, out, err);
  if (prob->parsed()) return dispatch("prob-bound", cmd_prob_bound, f, out, err);
  if (sr->parsed()) return dispatch("superres", cmd_superres, f, out, err);
  return dispatch("export-sdpa", cmd_export, f, out, err);
}

}  // namespace momentsos::cli
