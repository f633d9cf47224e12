// Command line front end: reproduce the worked 2-D study end to end.
//
// Subcommands
//   maxset    compute the maximal contractive set, save it as an M=1 sequence
//   terminal  synthesize the configured terminal sequence + all ingredients
//   verify    audit a stored sequence against the contraction conditions
//   mpc-sim   closed-loop run, writes trajectory.csv / diagnostics.csv
//   doa       feasibility map over the state-constraint grid, writes doa.csv
//   lp-dims   built program sizes next to the closed-form counts, N = 1..20
//
// Exit codes: 0 success, 2 infeasibility (empty set, failed synthesis,
// infeasible start, failed verification), 1 anything else.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tmpc/contractive.hpp"
#include "tmpc/doa.hpp"
#include "tmpc/errors.hpp"
#include "tmpc/io.hpp"
#include "tmpc/simulate.hpp"
#include "tmpc/terminal_cost.hpp"
#include "tmpc/tube_mpc.hpp"

namespace fs = std::filesystem;
using namespace tmpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

std::string join(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

// Build the terminal sequence the config asks for.  Returns the verified
// sequence with vertex controls attached.
ContractiveSequence make_sequence(const ProblemSetup& setup) {
  if (setup.terminal_kind == "maxset") {
    ContractiveSequence seq = maximal_set_sequence(setup.sys, setup.lambda);
    VerifyReport rep = verify_sequence(setup.sys, seq);
    if (!rep.ok) throw NumericalError("maximal set failed verification");
    seq.controls = rep.controls;
    return seq;
  }
  const Polytope omega = maximal_contractive_set(setup.sys, setup.lambda);
  const Polytope seed = select_inner_shape(omega, setup.seed_vertices);
  SynthesisResult syn = forward_propagation_synthesis(setup.sys, seed,
                                                      setup.lambda,
                                                      setup.m_max);
  if (syn.status != SynthesisStatus::Success)
    throw InfeasibleStartError("forward propagation found no contractive "
                               "sequence within m_max steps");
  return syn.sequence;
}

MpcConfig make_config(const ProblemSetup& setup,
                      const ContractiveSequence& seq) {
  MpcConfig config;
  config.sys = setup.sys;
  config.ingredients =
      make_terminal_ingredients(setup.sys, seq, setup.q, setup.r);
  config.horizon = setup.horizon;
  config.q = setup.q;
  config.r = setup.r;
  config.scheduling = setup.scheduling;
  config.validate();
  return config;
}

int run_maxset(const std::string& config_path, double lambda_override,
               const std::string& out_dir) {
  ProblemSetup setup = load_setup(config_path);
  if (lambda_override > 0.0) setup.lambda = lambda_override;
  ContractiveSequence seq = maximal_set_sequence(setup.sys, setup.lambda);
  seq.controls = verify_sequence(setup.sys, seq).controls;
  fs::create_directories(out_dir);
  const std::string path = join(out_dir, "maxset_sequence.json");
  save_sequence(seq, path);
  std::printf("maximal %.6g-contractive set: %zu vertices -> %s\n",
              setup.lambda, seq.sets[0].vertices().size(), path.c_str());
  return kExitOk;
}

int run_terminal(const std::string& config_path, double lambda_override,
                 int m_max_override, const std::string& out_dir) {
  ProblemSetup setup = load_setup(config_path);
  if (lambda_override > 0.0) setup.lambda = lambda_override;
  if (m_max_override > 0) setup.m_max = m_max_override;
  ContractiveSequence seq = make_sequence(setup);
  TerminalIngredients ing =
      make_terminal_ingredients(setup.sys, seq, setup.q, setup.r);
  fs::create_directories(out_dir);
  const std::string path = join(out_dir, "terminal_ingredients.json");
  save_ingredients(ing, path);
  std::printf("terminal sequence (%s): M=%d, vertex counts",
              setup.terminal_kind.c_str(), ing.period());
  for (const auto& s : ing.seq.sets)
    std::printf(" %zu", s.vertices().size());
  std::printf("\n  ell_bar=%.9g  rho=%.9g  -> %s\n", ing.ell_bar, ing.rho,
              path.c_str());
  return kExitOk;
}

int run_verify(const std::string& config_path,
               const std::string& sequence_path) {
  ProblemSetup setup = load_setup(config_path);
  ContractiveSequence seq = load_sequence(sequence_path);
  VerifyReport rep = verify_sequence(setup.sys, seq);
  if (rep.ok) {
    std::printf("sequence verifies: M=%d, lambda=%.6g\n",
                static_cast<int>(seq.sets.size()), seq.lambda);
    return kExitOk;
  }
  std::printf("sequence FAILS verification (%zu violations)\n",
              rep.violations.size());
  for (const auto& v : rep.violations)
    std::printf("  set %d vertex %d theta-vertex %d: %s (margin %.3g)\n",
                v.set, v.vertex, v.theta_vertex, v.reason.c_str(), v.margin);
  return kExitInfeasible;
}

int run_sim(const std::string& config_path, std::uint64_t seed, int steps,
            const std::string& out_dir) {
  ProblemSetup setup = load_setup(config_path);
  MpcConfig config = make_config(setup, make_sequence(setup));
  const ThetaPolicy policy = ThetaPolicy::random_mixture_from(setup.theta0);
  SimulationRun run = simulate(config, setup.x0, policy, steps, seed);
  fs::create_directories(out_dir);
  write_trajectory_csv(run, join(out_dir, "trajectory.csv"));
  write_diagnostics_csv(run, join(out_dir, "diagnostics.csv"));
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g",
                run.x_final.lpNorm<Eigen::Infinity>());
  save_run_meta(join(out_dir, "run_meta.json"),
                {{"config", config_path},
                 {"seed", std::to_string(seed)},
                 {"steps", std::to_string(steps)},
                 {"terminal", setup.terminal_kind},
                 {"period", std::to_string(config.ingredients.period())},
                 {"completed", run.completed ? "true" : "false"},
                 {"fail_step", std::to_string(run.fail_step)},
                 {"final_state_norm", buf}});
  std::printf("%d steps from (%s), seed %llu: %s, |x(end)| = %s\n", steps,
              config_path.c_str(),
              static_cast<unsigned long long>(seed),
              run.completed ? "completed" : "FAILED", buf);
  return run.completed ? kExitOk : kExitInfeasible;
}

int run_doa(const std::string& config_path, const std::string& out_dir) {
  ProblemSetup setup = load_setup(config_path);
  MpcConfig config = make_config(setup, make_sequence(setup));
  const DoaGridSpec spec = default_grid(setup.sys);
  DoaGrid grid = doa_map(config, spec, setup.theta0);
  fs::create_directories(out_dir);
  const std::string path = join(out_dir, "doa.csv");
  write_doa_csv(grid, path);
  std::printf("feasible cells: %d / %d -> %s\n", grid.feasible_count(),
              spec.total(), path.c_str());
  return kExitOk;
}

int run_lp_dims(const std::string& config_path) {
  ProblemSetup setup = load_setup(config_path);
  MpcConfig config = make_config(setup, make_sequence(setup));
  const int m = config.ingredients.period();
  std::printf("# built counts from the compiled program, formula counts from\n"
              "# the closed-form expressions; ranges span k mod M\n");
  std::printf("%4s  %-23s  %-23s\n", "N", "built vars/ineq",
              "formula vars/ineq");
  for (int n = 1; n <= 20; ++n) {
    config.horizon = n;
    int bv_lo = 0, bv_hi = 0, bi_lo = 0, bi_hi = 0;
    int fv_lo = 0, fv_hi = 0, fi_lo = 0, fi_hi = 0;
    for (int k = 0; k < m; ++k) {
      const LpDimensions d = lp_dimensions(config, k);
      if (k == 0 || d.built_vars < bv_lo) bv_lo = d.built_vars;
      if (k == 0 || d.built_vars > bv_hi) bv_hi = d.built_vars;
      if (k == 0 || d.built_ineq < bi_lo) bi_lo = d.built_ineq;
      if (k == 0 || d.built_ineq > bi_hi) bi_hi = d.built_ineq;
      if (k == 0 || d.formula_vars < fv_lo) fv_lo = d.formula_vars;
      if (k == 0 || d.formula_vars > fv_hi) fv_hi = d.formula_vars;
      if (k == 0 || d.formula_ineq < fi_lo) fi_lo = d.formula_ineq;
      if (k == 0 || d.formula_ineq > fi_hi) fi_hi = d.formula_ineq;
    }
    char built[32], formula[32];
    if (m == 1) {
      std::snprintf(built, sizeof(built), "%d/%d", bv_lo, bi_lo);
      std::snprintf(formula, sizeof(formula), "%d/%d", fv_lo, fi_lo);
    } else {
      std::snprintf(built, sizeof(built), "%d-%d/%d-%d", bv_lo, bv_hi, bi_lo,
                    bi_hi);
      std::snprintf(formula, sizeof(formula), "%d-%d/%d-%d", fv_lo, fv_hi,
                    fi_lo, fi_hi);
    }
    std::printf("%4d  %-23s  %-23s\n", n, built, formula);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tube MPC for scheduled linear systems"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::string sequence_path;
  double lambda_override = -1.0;
  int m_max_override = -1;
  std::uint64_t seed = 1;
  int steps = 60;

  const auto add_config = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "problem setup file")
        ->required()
        ->check(CLI::ExistingFile);
  };

  CLI::App* maxset = app.add_subcommand(
      "maxset", "compute the maximal contractive set");
  add_config(maxset);
  maxset->add_option("--lambda", lambda_override, "contraction factor");
  maxset->add_option("--out", out_dir, "output directory");

  CLI::App* terminal = app.add_subcommand(
      "terminal", "synthesize terminal sequence and ingredients");
  add_config(terminal);
  terminal->add_option("--lambda", lambda_override, "contraction factor");
  terminal->add_option("--m-max", m_max_override, "synthesis step cap");
  terminal->add_option("--out", out_dir, "output directory");

  CLI::App* verify = app.add_subcommand(
      "verify", "audit a stored sequence");
  add_config(verify);
  verify->add_option("sequence", sequence_path, "sequence file to audit")
      ->required()
      ->check(CLI::ExistingFile);

  CLI::App* sim = app.add_subcommand("mpc-sim", "closed-loop simulation");
  add_config(sim);
  sim->add_option("--seed", seed, "scheduling RNG seed");
  sim->add_option("--steps", steps, "number of controller samples");
  sim->add_option("--out", out_dir, "output directory");

  CLI::App* doa = app.add_subcommand("doa", "domain-of-attraction grid map");
  add_config(doa);
  doa->add_option("--out", out_dir, "output directory");

  CLI::App* dims = app.add_subcommand("lp-dims", "program size table");
  add_config(dims);

  CLI11_PARSE(app, argc, argv);

  try {
    if (maxset->parsed())
      return run_maxset(config_path, lambda_override, out_dir);
    if (terminal->parsed())
      return run_terminal(config_path, lambda_override, m_max_override,
                          out_dir);
    if (verify->parsed()) return run_verify(config_path, sequence_path);
    if (sim->parsed()) return run_sim(config_path, seed, steps, out_dir);
    if (doa->parsed()) return run_doa(config_path, out_dir);
    if (dims->parsed()) return run_lp_dims(config_path);
  } catch (const InfeasibleStartError& ex) {
    std::fprintf(stderr, "infeasible: %s\n", ex.what());
    return kExitInfeasible;
  } catch (const EmptySetError& ex) {
    std::fprintf(stderr, "infeasible: %s\n", ex.what());
    return kExitInfeasible;
  } catch (const Error& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kExitError;
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return kExitError;
  }
  return kExitError;
}
