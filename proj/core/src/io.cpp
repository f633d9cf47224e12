#include "tmpc/io.hpp"

#include <fstream>

#include <json.hpp>

#include "tmpc/errors.hpp"

namespace tmpc {
namespace {

using nlohmann::json;

json to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Vec vec_from(const json& a) {
  if (!a.is_array()) throw ConfigError("expected a numeric array");
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) throw ConfigError("expected a numeric array");
    v(static_cast<int>(i)) = a[i].get<double>();
  }
  return v;
}

Mat mat_from(const json& rows) {
  if (!rows.is_array() || rows.empty())
    throw ConfigError("expected a non-empty array of rows");
  const std::size_t cols = rows[0].size();
  Mat m(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (!rows[i].is_array() || rows[i].size() != cols)
      throw ConfigError("matrix rows have inconsistent lengths");
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<int>(i), static_cast<int>(j)) = rows[i][j].get<double>();
  }
  return m;
}

json poly_to_json(const Polytope& p) {
  json obj;
  json verts = json::array();
  for (const Vec& v : p.vertices()) verts.push_back(to_json(v));
  obj["vertices"] = std::move(verts);
  return obj;
}

Polytope poly_from_json(const json& obj) {
  if (!obj.contains("vertices"))
    throw ConfigError("polytope entry lacks a vertex list");
  std::vector<Vec> verts;
  for (const auto& v : obj["vertices"]) verts.push_back(vec_from(v));
  if (verts.empty()) throw ConfigError("polytope entry has no vertices");
  if (verts.size() == 1) {
    // Pinched sets are stored by their single point.
    const int n = static_cast<int>(verts[0].size());
    return Polytope::homothety(verts[0], 0.0, Polytope::box(Vec::Ones(n)));
  }
  return Polytope::from_vertices(verts);
}

json controls_to_json(const std::vector<std::vector<std::vector<Vec>>>& c) {
  json sets = json::array();
  for (const auto& per_vertex : c) {
    json jv = json::array();
    for (const auto& per_theta : per_vertex) {
      json jt = json::array();
      for (const Vec& u : per_theta) jt.push_back(to_json(u));
      jv.push_back(std::move(jt));
    }
    sets.push_back(std::move(jv));
  }
  return sets;
}

std::vector<std::vector<std::vector<Vec>>> controls_from_json(const json& sets) {
  std::vector<std::vector<std::vector<Vec>>> c;
  for (const auto& jv : sets) {
    std::vector<std::vector<Vec>> per_vertex;
    for (const auto& jt : jv) {
      std::vector<Vec> per_theta;
      for (const auto& u : jt) per_theta.push_back(vec_from(u));
      per_vertex.push_back(std::move(per_theta));
    }
    c.push_back(std::move(per_vertex));
  }
  return c;
}

json seq_to_json(const ContractiveSequence& seq) {
  json obj;
  obj["lambda"] = seq.lambda;
  json sets = json::array();
  for (const Polytope& s : seq.sets) sets.push_back(poly_to_json(s));
  obj["sets"] = std::move(sets);
  if (!seq.controls.empty()) obj["controls"] = controls_to_json(seq.controls);
  return obj;
}

ContractiveSequence seq_from_json(const json& obj) {
  ContractiveSequence seq;
  if (!obj.contains("lambda") || !obj.contains("sets"))
    throw ConfigError("sequence entry lacks lambda or sets");
  seq.lambda = obj["lambda"].get<double>();
  for (const auto& s : obj["sets"]) seq.sets.push_back(poly_from_json(s));
  if (obj.contains("controls")) seq.controls = controls_from_json(obj["controls"]);
  return seq;
}

json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& ex) {
    throw ConfigError(path + ": " + ex.what());
  }
}

void dump_file(const json& obj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot open " + path + " for writing");
  out << obj.dump(2) << '\n';
}

std::vector<double> doubles_from(const json& a) {
  std::vector<double> v;
  for (const auto& x : a) v.push_back(x.get<double>());
  return v;
}

}  // namespace

ProblemSetup load_setup(const std::string& path) {
  const json root = load_file(path);
  ProblemSetup setup;
  try {
    if (!root.contains("system")) throw ConfigError("config lacks a system");
    const json& sys = root["system"];
    setup.sys.a0 = mat_from(sys.at("a0"));
    for (const auto& ai : sys.at("ai")) setup.sys.ai.push_back(mat_from(ai));
    setup.sys.b = mat_from(sys.at("b"));
    if (sys.contains("bi")) {
      for (const auto& bi : sys["bi"])
        if (mat_from(bi).cwiseAbs().maxCoeff() > 0.0)
          throw UnsupportedError(
              "parameter-dependent input matrices are not supported");
    }
    setup.sys.theta = poly_from_json(sys.at("theta"));
    setup.sys.state_constraints = poly_from_json(sys.at("state_constraints"));
    setup.sys.input_constraints = poly_from_json(sys.at("input_constraints"));
    setup.sys.validate();

    setup.horizon = root.at("horizon").get<int>();
    setup.q = mat_from(root.at("q"));
    setup.r = mat_from(root.at("r"));
    setup.lambda = root.at("lambda").get<double>();
    if (root.contains("m_max")) setup.m_max = root["m_max"].get<int>();
    if (root.contains("scheduling")) {
      const json& sched = root["scheduling"];
      const std::string mode = sched.value("mode", "measured-then-full");
      if (mode == "measured-then-full")
        setup.scheduling.mode = SchedulingMode::MeasuredThenFull;
      else if (mode == "rate-bounded")
        setup.scheduling.mode = SchedulingMode::RateBounded;
      else
        throw ConfigError("unknown scheduling mode: " + mode);
      setup.scheduling.rate = sched.value("rate", 0.0);
    }
    setup.x0 = root.contains("x0") ? vec_from(root["x0"])
                                   : Vec(Vec::Zero(setup.sys.state_dim()));
    setup.theta0 = root.contains("theta0")
                       ? vec_from(root["theta0"])
                       : Vec(setup.sys.theta.vertices().front());
    setup.terminal_kind = root.value("terminal", "maxset");
    if (setup.terminal_kind != "maxset" && setup.terminal_kind != "finite-step")
      throw ConfigError("unknown terminal kind: " + setup.terminal_kind);
    if (root.contains("seed_vertices"))
      setup.seed_vertices = root["seed_vertices"].get<int>();
  } catch (const json::exception& ex) {
    throw ConfigError(path + ": " + ex.what());
  }
  return setup;
}

void save_polytope(const Polytope& p, const std::string& path) {
  dump_file(poly_to_json(p), path);
}

Polytope load_polytope(const std::string& path) {
  return poly_from_json(load_file(path));
}

void save_sequence(const ContractiveSequence& seq, const std::string& path) {
  dump_file(seq_to_json(seq), path);
}

ContractiveSequence load_sequence(const std::string& path) {
  try {
    return seq_from_json(load_file(path));
  } catch (const json::exception& ex) {
    throw ConfigError(path + ": " + ex.what());
  }
}

void save_ingredients(const TerminalIngredients& ing, const std::string& path) {
  json obj;
  obj["sequence"] = seq_to_json(ing.seq);
  obj["ell_bar_i"] = ing.ell_bar_i;
  obj["ell_bar"] = ing.ell_bar;
  obj["ell_epi_i"] = ing.ell_epi_i;
  obj["ell_epi"] = ing.ell_epi;
  obj["rho_k"] = ing.rho_k;
  obj["rho"] = ing.rho;
  obj["terminal_controls"] = controls_to_json(ing.terminal_controls);
  obj["q"] = to_json(ing.q);
  obj["r"] = to_json(ing.r);
  dump_file(obj, path);
}

TerminalIngredients load_ingredients(const std::string& path) {
  const json root = load_file(path);
  TerminalIngredients ing;
  try {
    ing.seq = seq_from_json(root.at("sequence"));
    ing.ell_bar_i = doubles_from(root.at("ell_bar_i"));
    ing.ell_bar = root.at("ell_bar").get<double>();
    ing.ell_epi_i = doubles_from(root.at("ell_epi_i"));
    ing.ell_epi = root.at("ell_epi").get<double>();
    ing.rho_k = doubles_from(root.at("rho_k"));
    ing.rho = root.at("rho").get<double>();
    ing.terminal_controls = controls_from_json(root.at("terminal_controls"));
    ing.q = mat_from(root.at("q"));
    ing.r = mat_from(root.at("r"));
  } catch (const json::exception& ex) {
    throw ConfigError(path + ": " + ex.what());
  }
  return ing;
}

void save_run_meta(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& fields) {
  json obj;
  for (const auto& [key, value] : fields) obj[key] = value;
  dump_file(obj, path);
}

}  // namespace tmpc
