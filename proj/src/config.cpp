#include "levy_sigkernel/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "levy_sigkernel/errors.hpp"

namespace levy_sigkernel {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string index(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path.empty() ? "<root>" : path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(join(path, key), "required field is missing");
  return *it;
}

const json* optional(const json& j, const std::string& key) {
  const auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "must be finite");
  return x;
}

std::int64_t integer(const json& j, const std::string& path, std::int64_t min_value) {
  if (!j.is_number_integer()) throw ConfigError(path, "expected an integer");
  const auto x = j.get<std::int64_t>();
  if (x < min_value) throw ConfigError(path, "must be >= " + std::to_string(min_value));
  return x;
}

std::vector<double> numbers(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], index(path, i)));
  return out;
}

Eigen::VectorXd vec(const json& j, const std::string& path, int dim) {
  const auto v = numbers(j, path);
  if (static_cast<int>(v.size()) != dim) {
    throw ConfigError(path, "expected " + std::to_string(dim) + " entries");
  }
  return Eigen::Map<const Eigen::VectorXd>(v.data(), dim);
}

Eigen::MatrixXd mat(const json& j, const std::string& path, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim) {
    throw ConfigError(path, "expected a " + std::to_string(dim) + "x" + std::to_string(dim) + " matrix");
  }
  Eigen::MatrixXd m(dim, dim);
  for (int r = 0; r < dim; ++r) m.row(r) = vec(j[static_cast<std::size_t>(r)], index(path, static_cast<std::size_t>(r)), dim);
  return m;
}

std::vector<double> time_grid(const json& j, const std::string& path) {
  auto g = numbers(j, path);
  if (g.size() < 2 || g.front() != 0.0) throw ConfigError(path, "must start at 0 and have >= 2 points");
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    if (!(g[i + 1] > g[i])) throw ConfigError(path, "must be strictly increasing");
  }
  return g;
}

// Level-1 vector plus optional antisymmetric area into a state-depth tensor.
TruncatedTensor lie_element(const json& j, const std::string& vec_key, const std::string& path,
                            int dim, int state_depth) {
  TruncatedTensor x(dim, state_depth);
  if (const json* v = optional(j, vec_key)) {
    const auto b = vec(*v, join(path, vec_key), dim);
    for (int k = 0; k < dim; ++k) x.level(1)[static_cast<std::size_t>(k)] = b[k];
  }
  if (const json* a = optional(j, "area")) {
    const auto m = mat(*a, join(path, "area"), dim);
    if ((m + m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
      throw ConfigError(join(path, "area"), "must be antisymmetric");
    }
    for (int r = 0; r < dim; ++r) {
      for (int c = 0; c < dim; ++c) x.level(2)[static_cast<std::size_t>(r * dim + c)] = m(r, c);
    }
  }
  return x;
}

bool mentions_area(const json& j) {
  if (j.is_object()) {
    if (j.contains("area")) return true;
    for (const auto& [k, v] : j.items()) {
      if (mentions_area(v)) return true;
    }
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (mentions_area(v)) return true;
    }
  }
  return false;
}

JumpSpec parse_jumps(const json& j, const std::string& path, int dim, int state_depth) {
  JumpSpec s;
  const auto& kind = require(j, "kind", path);
  if (!kind.is_string()) throw ConfigError(join(path, "kind"), "expected a string");
  const auto k = kind.get<std::string>();
  if (k == "none") return s;
  if (k == "atomic") {
    s.kind = JumpKind::Atomic;
    const auto& atoms = require(j, "atoms", path);
    const std::string ap = join(path, "atoms");
    if (!atoms.is_array()) throw ConfigError(ap, "expected an array");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      const std::string p = index(ap, i);
      Atom atom;
      atom.weight = number(require(atoms[i], "weight", p), join(p, "weight"));
      if (atom.weight < 0.0) throw ConfigError(join(p, "weight"), "must be >= 0");
      require(atoms[i], "x", p);
      atom.x = lie_element(atoms[i], "x", p, dim, state_depth);
      s.atoms.push_back(atom);
    }
  } else if (k == "gaussian") {
    s.kind = JumpKind::GaussianCP;
    s.intensity = number(require(j, "intensity", path), join(path, "intensity"));
    if (s.intensity < 0.0) throw ConfigError(join(path, "intensity"), "must be >= 0");
    s.covariance = mat(require(j, "covariance", path), join(path, "covariance"), dim);
  } else {
    throw ConfigError(join(path, "kind"), "must be one of none, atomic, gaussian");
  }
  return s;
}

GridConfig parse_grid(const json& j) {
  GridConfig g;
  g.s_points = static_cast<int>(integer(require(j, "s_points", "grid"), "grid.s_points", 2));
  g.t_points = static_cast<int>(integer(require(j, "t_points", "grid"), "grid.t_points", 2));
  g.T = number(require(j, "T", "grid"), "grid.T");
  if (!(g.T > 0.0)) throw ConfigError("grid.T", "must be > 0");
  if (const json* r = optional(j, "richardson")) {
    if (!r->is_boolean()) throw ConfigError("grid.richardson", "expected true or false");
    g.richardson = r->get<bool>();
  }
  return g;
}

LevelsConfig parse_levels(const json& j) {
  LevelsConfig l;
  l.M = static_cast<int>(integer(require(j, "M", "levels"), "levels.M", 1));
  l.N = static_cast<int>(integer(require(j, "N", "levels"), "levels.N", 1));
  l.velocity_depth = std::max(l.M, l.N) + 4;
  if (const json* v = optional(j, "velocity_depth")) {
    l.velocity_depth = static_cast<int>(integer(*v, "levels.velocity_depth", std::max(l.M, l.N)));
  }
  return l;
}

McConfig parse_mc(const json& j) {
  McConfig m;
  if (const json* v = optional(j, "n_paths")) m.n_paths = static_cast<std::size_t>(integer(*v, "mc.n_paths", 1));
  if (const json* v = optional(j, "steps")) m.steps = static_cast<int>(integer(*v, "mc.steps", 1));
  if (const json* v = optional(j, "seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      throw ConfigError("mc.seed", "expected a non-negative integer");
    }
    m.seed = v->get<std::uint64_t>();
  }
  return m;
}

AugmentedPathEnsemble parse_ensemble(const json& j) {
  AugmentedPathEnsemble e;
  e.dim = static_cast<int>(integer(require(j, "dim", "ensemble"), "ensemble.dim", 1));
  e.time_grid = time_grid(require(j, "time_grid", "ensemble"), "ensemble.time_grid");
  const std::size_t n = e.time_grid.size() - 1;
  const auto& paths = require(j, "paths", "ensemble");
  if (!paths.is_array() || paths.empty()) throw ConfigError("ensemble.paths", "expected a non-empty array");
  for (std::size_t k = 0; k < paths.size(); ++k) {
    const std::string p = index("ensemble.paths", k);
    AugmentedPath path;
    const auto& b = require(paths[k], "b", p);
    if (!b.is_array() || b.size() != n) throw ConfigError(join(p, "b"), "expected one vector per interval");
    for (std::size_t i = 0; i < n; ++i) path.b.push_back(vec(b[i], index(join(p, "b"), i), e.dim));
    if (const json* a = optional(paths[k], "area")) {
      if (!a->is_array() || a->size() != n) throw ConfigError(join(p, "area"), "expected one matrix per interval");
      for (std::size_t i = 0; i < n; ++i) {
        const std::string ap = index(join(p, "area"), i);
        const auto m = mat((*a)[i], ap, e.dim);
        if ((m + m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, m.cwiseAbs().maxCoeff())) {
          throw ConfigError(ap, "must be antisymmetric");
        }
        path.area.push_back(m);
      }
    } else {
      path.area.assign(n, Eigen::MatrixXd::Zero(e.dim, e.dim));
    }
    e.paths.push_back(std::move(path));
  }
  return e;
}

WienerSpec parse_wiener(const json& j, int dim) {
  WienerSpec w;
  w.dim = dim;
  w.time_grid = time_grid(require(j, "time_grid", "wiener"), "wiener.time_grid");
  const std::size_t n = w.time_grid.size() - 1;
  const json* cov = optional(j, "covariance");
  const json* fac = optional(j, "factors");
  if ((cov == nullptr) == (fac == nullptr)) {
    throw ConfigError("wiener.covariance", "give exactly one of covariance or factors");
  }
  const std::string key = cov ? "wiener.covariance" : "wiener.factors";
  const json& arr = cov ? *cov : *fac;
  if (!arr.is_array() || arr.size() != n) throw ConfigError(key, "expected one entry per interval");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string p = index(key, i);
    if (cov) {
      w.covariance.push_back(mat(arr[i], p, dim));
    } else {
      if (!arr[i].is_array()) throw ConfigError(p, "expected a list of vectors");
      std::vector<Eigen::VectorXd> f;
      for (std::size_t k = 0; k < arr[i].size(); ++k) f.push_back(vec(arr[i][k], index(p, k), dim));
      w.covariance.push_back(f.empty() ? Eigen::MatrixXd::Zero(dim, dim) : covariance_from_factors(f));
    }
  }
  try {
    w.validate();
  } catch (const Error& err) {
    throw ConfigError(key, err.what());
  }
  return w;
}

BoundsConfig parse_bounds(const json& j) {
  BoundsConfig b;
  if (const json* v = optional(j, "max_depth")) b.max_depth = static_cast<int>(integer(*v, "bounds.max_depth", 1));
  if (const json* v = optional(j, "rho_factorial")) b.rho_factorial = numbers(*v, "bounds.rho_factorial");
  if (const json* v = optional(j, "rho_geometric")) b.rho_geometric = numbers(*v, "bounds.rho_geometric");
  if (const json* v = optional(j, "remainder_m")) {
    b.remainder_m.clear();
    for (std::size_t i = 0; i < v->size(); ++i) {
      b.remainder_m.push_back(static_cast<int>(integer((*v)[i], index("bounds.remainder_m", i), 1)));
    }
  }
  return b;
}

}  // namespace

LevyTriplet parse_triplet(const json& j, const std::string& path, double default_horizon) {
  LevyTriplet t;
  t.dim = static_cast<int>(integer(require(j, "dim", path), join(path, "dim"), 1));
  t.state_depth = mentions_area(j) ? 2 : 1;
  if (const json* sd = optional(j, "state_depth")) {
    t.state_depth = static_cast<int>(integer(*sd, join(path, "state_depth"), 1));
    if (t.state_depth > 2) throw ConfigError(join(path, "state_depth"), "must be 1 or 2");
    if (t.state_depth == 1 && mentions_area(j)) throw ConfigError(join(path, "state_depth"), "area requires state_depth 2");
  }
  const auto& ivs = require(j, "intervals", path);
  const std::string ip = join(path, "intervals");
  if (!ivs.is_array() || ivs.empty()) throw ConfigError(ip, "expected a non-empty array");
  if (const json* g = optional(j, "time_grid")) {
    t.time_grid = time_grid(*g, join(path, "time_grid"));
  } else {
    if (!(default_horizon > 0.0)) throw ConfigError(join(path, "time_grid"), "required when grid.T is absent");
    t.time_grid.push_back(0.0);
    for (std::size_t i = 1; i <= ivs.size(); ++i) t.time_grid.push_back(default_horizon * static_cast<double>(i) / static_cast<double>(ivs.size()));
  }
  if (ivs.size() + 1 != t.time_grid.size()) throw ConfigError(ip, "expected one entry per time-grid interval");
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    const std::string p = index(ip, i);
    TripletInterval iv;
    iv.drift = lie_element(ivs[i], "drift", p, t.dim, t.state_depth);
    if (const json* a = optional(ivs[i], "diffusion")) {
      iv.diffusion = mat(*a, join(p, "diffusion"), t.dim);
    } else if (const json* f = optional(ivs[i], "factors")) {
      std::vector<Eigen::VectorXd> fs;
      if (!f->is_array()) throw ConfigError(join(p, "factors"), "expected a list of vectors");
      for (std::size_t k = 0; k < f->size(); ++k) fs.push_back(vec((*f)[k], index(join(p, "factors"), k), t.dim));
      iv.diffusion = fs.empty() ? Eigen::MatrixXd::Zero(t.dim, t.dim) : covariance_from_factors(fs);
    } else {
      iv.diffusion = Eigen::MatrixXd::Zero(t.dim, t.dim);
    }
    if (const json* jp = optional(ivs[i], "jumps")) iv.jumps = parse_jumps(*jp, join(p, "jumps"), t.dim, t.state_depth);
    t.intervals.push_back(std::move(iv));
  }
  try {
    t.validate();
  } catch (const Error& err) {
    throw ConfigError(path, err.what());
  }
  return t;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
  ExperimentConfig c;
  const auto& e = require(j, "experiment", "");
  if (!e.is_string()) throw ConfigError("experiment", "expected a string");
  c.experiment = e.get<std::string>();
  if (c.experiment != "kernel" && c.experiment != "mmd" && c.experiment != "validate" && c.experiment != "bounds") {
    throw ConfigError("experiment", "must be one of kernel, mmd, validate, bounds");
  }
  const bool needs_grid = c.experiment != "bounds";
  if (const json* g = optional(j, "grid")) {
    c.grid = parse_grid(*g);
  } else if (needs_grid) {
    require(j, "grid", "");
  }
  const double horizon = c.grid ? c.grid->T : 0.0;

  if (c.experiment == "mmd") {
    c.ensemble = parse_ensemble(require(j, "ensemble", ""));
    c.wiener = parse_wiener(require(j, "wiener", ""), c.ensemble->dim);
  } else {
    const auto& ts = require(j, "triplets", "");
    if (!ts.is_array() || ts.empty()) throw ConfigError("triplets", "expected a non-empty array");
    for (std::size_t i = 0; i < ts.size(); ++i) c.triplets.push_back(parse_triplet(ts[i], index("triplets", i), horizon));
    for (std::size_t i = 1; i < c.triplets.size() && c.experiment != "bounds"; ++i) {
      if (c.triplets[i].dim != c.triplets[0].dim) throw ConfigError(index("triplets", i) + ".dim", "dimensions differ");
    }
    c.levels = parse_levels(require(j, "levels", ""));
    for (std::size_t i = 0; i < c.triplets.size(); ++i) {
      if (c.triplets[i].state_depth > std::min(c.levels->M, c.levels->N)) {
        throw ConfigError("levels", "M and N must be >= the state depth of every triplet");
      }
      if (c.grid && c.triplets[i].horizon() + 1e-12 < c.grid->T) {
        throw ConfigError(index("triplets", i) + ".time_grid", "ends before grid.T");
      }
    }
  }
  if (const json* m = optional(j, "mc")) c.mc = parse_mc(*m);
  if (const json* o = optional(j, "output_dir")) {
    if (!o->is_string()) throw ConfigError("output_dir", "expected a string");
    c.output_dir = o->get<std::string>();
  }
  if (const json* b = optional(j, "bounds")) c.bounds = parse_bounds(*b);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& err) {
    throw ConfigError("<file>", std::string("invalid JSON: ") + err.what());
  }
  return parse_config(j);
}

}  // namespace levy_sigkernel
