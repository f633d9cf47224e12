#include "tmpc/simulate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <utility>

#include "tmpc/errors.hpp"

namespace tmpc {
namespace {

// Uniform draw in (0,1) from raw engine words: 53 significant bits, offset
// by half a ulp so 0 is never produced (the value feeds a logarithm).
double uniform01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

void append_num(std::string& line, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  line += buf;
}

}  // namespace

ThetaPolicy ThetaPolicy::random_mixture() { return {}; }

ThetaPolicy ThetaPolicy::random_mixture_from(Vec theta0) {
  ThetaPolicy p;
  p.pinned_first = std::move(theta0);
  return p;
}

ThetaPolicy ThetaPolicy::held_at(Vec value) {
  ThetaPolicy p;
  p.kind = ThetaPolicyKind::Held;
  p.held = std::move(value);
  return p;
}

ThetaPolicy ThetaPolicy::scripted(std::vector<Vec> values) {
  ThetaPolicy p;
  p.kind = ThetaPolicyKind::Scripted;
  p.script = std::move(values);
  return p;
}

Vec random_theta(const std::vector<Vec>& vertices, std::mt19937_64& rng) {
  if (vertices.empty()) throw EmptySetError("no scheduling vertices");
  // Flat Dirichlet = normalized unit exponentials.
  Vec w(vertices.size());
  for (int l = 0; l < w.size(); ++l) w(l) = -std::log(uniform01(rng));
  w /= w.sum();
  Vec theta = w(0) * vertices[0];
  for (int l = 1; l < w.size(); ++l) theta += w(l) * vertices[l];
  return theta;
}

SimulationRun simulate(const MpcConfig& config, const Vec& x0,
                       const ThetaPolicy& policy, int steps,
                       std::uint64_t seed) {
  config.validate();
  if (steps < 1) throw ConfigError("step count must be positive");
  if (x0.size() != config.sys.state_dim())
    throw DimensionError("initial state has wrong dimension");
  if (!contains_point(config.sys.state_constraints, x0, 1e-9))
    throw InfeasibleStartError("initial state violates the state constraints");
  if (policy.kind == ThetaPolicyKind::Scripted &&
      static_cast<int>(policy.script.size()) < steps)
    throw ConfigError("scheduling script shorter than the run");
  if (policy.kind == ThetaPolicyKind::Held &&
      !theta_admissible(config.sys, policy.held))
    throw ThetaRangeError("held scheduling value escapes its set");
  if (policy.kind == ThetaPolicyKind::RandomMixture &&
      policy.pinned_first.size() > 0 &&
      !theta_admissible(config.sys, policy.pinned_first))
    throw ThetaRangeError("pinned initial scheduling value escapes its set");

  std::mt19937_64 rng(seed);
  const auto& tverts = config.sys.theta.vertices();
  TubeController controller(config);

  // Program sizes vary only with k mod M; compute each residue once.
  std::map<int, std::pair<int, int>> dims;
  const auto dims_at = [&](int k) {
    const int res = config.ingredients.seq.shape_index(k);
    auto it = dims.find(res);
    if (it == dims.end()) {
      const LpDimensions d = lp_dimensions(config, res);
      it = dims.emplace(res, std::make_pair(d.built_vars, d.built_ineq)).first;
    }
    return it->second;
  };

  SimulationRun run;
  run.seed = seed;
  run.completed = true;
  Vec x = x0;
  for (int k = 0; k < steps; ++k) {
    Vec theta;
    switch (policy.kind) {
      case ThetaPolicyKind::RandomMixture:
        theta = (k == 0 && policy.pinned_first.size() > 0)
                    ? policy.pinned_first
                    : random_theta(tverts, rng);
        break;
      case ThetaPolicyKind::Held:
        theta = policy.held;
        break;
      case ThetaPolicyKind::Scripted:
        theta = policy.script[k];
        break;
    }
    const StepResult res = controller.step(k, x, theta);

    SimStep rec;
    rec.k = k;
    rec.x = x;
    rec.theta = theta;
    rec.status = res.status;
    rec.iterations = res.iterations;
    const auto [nd, nineq] = dims_at(k);
    rec.n_d = nd;
    rec.n_ineq = nineq;
    if (res.status == StepStatus::Optimal) {
      rec.u = res.u;
      rec.value = res.sol.value;
      rec.alpha = res.sol.alpha;
      rec.gamma = res.sol.gamma;
      rec.max_violation = res.max_violation;
    } else {
      rec.u = Vec::Zero(config.sys.input_dim());
      rec.alpha = Vec::Zero(config.horizon + 1);
    }
    run.steps.push_back(std::move(rec));

    if (res.status != StepStatus::Optimal) {
      if (k == 0 && res.status == StepStatus::Infeasible)
        throw InfeasibleStartError(
            "initial state lies outside the controller's feasible domain");
      run.completed = false;
      run.fail_step = k;
      break;
    }
    x = a_of_theta(config.sys, theta) * x + config.sys.b * res.u;
  }
  run.x_final = x;
  return run;
}

void write_trajectory_csv(const SimulationRun& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  if (run.steps.empty()) throw ConfigError("run holds no steps");
  const int n_x = static_cast<int>(run.steps.front().x.size());
  const int n_u = static_cast<int>(run.steps.front().u.size());
  const int n_t = static_cast<int>(run.steps.front().theta.size());
  std::string line = "k";
  for (int c = 0; c < n_x; ++c) line += ",x" + std::to_string(c + 1);
  for (int c = 0; c < n_u; ++c) line += ",u" + std::to_string(c + 1);
  for (int c = 0; c < n_t; ++c) line += ",theta" + std::to_string(c + 1);
  line += ",V,n_d,n_ineq,status\n";
  out << line;
  for (const SimStep& s : run.steps) {
    line = std::to_string(s.k);
    for (int c = 0; c < n_x; ++c) {
      line += ',';
      append_num(line, s.x(c));
    }
    for (int c = 0; c < n_u; ++c) {
      line += ',';
      append_num(line, s.u(c));
    }
    for (int c = 0; c < n_t; ++c) {
      line += ',';
      append_num(line, s.theta(c));
    }
    line += ',';
    append_num(line, s.value);
    line += ',' + std::to_string(s.n_d) + ',' + std::to_string(s.n_ineq) +
            ',' + to_string(s.status) + '\n';
    out << line;
  }
}

void write_diagnostics_csv(const SimulationRun& run, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  if (run.steps.empty()) throw ConfigError("run holds no steps");
  const int n_alpha = static_cast<int>(run.steps.front().alpha.size());
  std::string line = "k,status,iterations,max_violation,gamma";
  for (int i = 0; i < n_alpha; ++i) line += ",alpha" + std::to_string(i);
  line += '\n';
  out << line;
  for (const SimStep& s : run.steps) {
    line = std::to_string(s.k);
    line += ',';
    line += to_string(s.status);
    line += ',' + std::to_string(s.iterations) + ',';
    append_num(line, s.max_violation);
    line += ',';
    append_num(line, s.gamma);
    for (int i = 0; i < n_alpha; ++i) {
      line += ',';
      append_num(line, s.alpha(i));
    }
    line += '\n';
    out << line;
  }
}

}  // namespace tmpc
