#include "config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace mfl::cli {

namespace {

const char* kWhere = "cli.config";

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::configuration, kWhere, what); }

/// Reads an object while recording the keys consumed; finish() rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_ + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    try {
      check_type<T>(v);
      out = v.get<T>();
    } catch (const json::exception&) {
      fail(path_ + "." + key + " has the wrong type");
    }
  }

  Reader child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    return Reader(j_.contains(key) ? j_.at(key) : empty, path_ + "." + key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail("unknown key '" + it.key() + "' in " + path_);
  }

 private:
  template <class T>
  static void check_type(const json& v) {
    using U = std::decay_t<T>;
    bool ok = true;
    if constexpr (std::is_same_v<U, bool>)
      ok = v.is_boolean();
    else if constexpr (std::is_same_v<U, std::string>)
      ok = v.is_string();
    else if constexpr (std::is_integral_v<U> && std::is_unsigned_v<U>)
      ok = v.is_number_unsigned();
    else if constexpr (std::is_integral_v<U>)
      ok = v.is_number_integer();
    else if constexpr (std::is_floating_point_v<U>)
      ok = v.is_number();
    if (!ok) throw json::type_error::create(302, "type", &v);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) fail(what);
}

void read_potential(Reader r, PotentialConfig& p) {
  r.get("kind", p.kind);
  if (p.kind == "quadratic") {
    r.get("kappa", p.kappa);
    r.get("d", p.d);
  } else if (p.kind == "quartic1d") {
    r.get("kappa", p.kappa);
    p.d = 1;
  } else if (p.kind == "pca") {
    r.get("kappa", p.kappa);
    r.get("M", p.M);
    r.get("c", p.c);
    require(!p.M.empty(), "potential.M is required for kind pca");
  } else if (p.kind == "curie_weiss") {
    r.get("sigma2", p.sigma2);
    r.get("kappa0", p.kappa0);
  } else {
    fail("potential.kind must be one of quadratic, quartic1d, pca, curie_weiss");
  }
  r.finish();
  p.build();
}

json potential_json(const PotentialConfig& p) {
  json j;
  j["kind"] = p.kind;
  if (p.kind == "quadratic") {
    j["kappa"] = p.kappa;
    j["d"] = p.d;
  } else if (p.kind == "quartic1d") {
    j["kappa"] = p.kappa;
  } else if (p.kind == "pca") {
    j["kappa"] = p.kappa;
    j["M"] = p.M;
    j["c"] = p.c;
  } else {
    j["sigma2"] = p.sigma2;
    j["kappa0"] = p.kappa0;
  }
  return j;
}

bool needs_potential(const std::string& cmd) { return cmd != "curie-weiss"; }

}  // namespace

PotentialSpec<double> PotentialConfig::build() const {
  try {
    PotentialSpec<double> s;
    if (kind == "quadratic") {
      if (d < 1) fail("potential.d must be at least 1");
      s = make_quadratic<double>(kappa, d);
    } else if (kind == "quartic1d") {
      s = make_quartic1d<double>(kappa);
    } else if (kind == "pca") {
      const int n = int(M.size());
      MatX m(n, n);
      for (int i = 0; i < n; ++i) {
        if (int(M[i].size()) != n) fail("potential.M must be square");
        for (int k = 0; k < n; ++k) m(i, k) = M[i][k];
      }
      s = make_pca<double>(m, kappa, c);
    } else if (kind == "curie_weiss") {
      s = make_curie_weiss<double>(sigma2, kappa0);
    } else {
      fail("potential.kind must be one of quadratic, quartic1d, pca, curie_weiss");
    }
    validate(s);
    return s;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::configuration) throw;
    fail(std::string("potential: ") + e.what());
  }
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Reader top(j, "config");
  top.get("schema", c.schema);
  require(top.has("schema"), "config.schema is required");
  require(c.schema == kSchema, std::string("config.schema must be ") + kSchema);
  top.get("command", c.command);
  require(top.has("command"), "config.command is required");
  top.get("seed", c.seed);
  top.get("workers", c.workers);
  require(c.workers >= 1, "config.workers must be at least 1");
  top.get("output", c.output);
  const std::string& cmd = c.command;
  if (needs_potential(cmd)) {
    require(top.has("potential"), "config.potential is required for " + cmd);
    c.has_potential = true;
    read_potential(top.child("potential"), c.potential);
  }
  Reader r = top.child(cmd.c_str());
  if (cmd == "potential-report") {
    auto& p = c.potential_report;
    r.get("points", p.points);
    if (p.points.empty()) p.points.push_back(std::vector<double>(c.potential.build().d, 0.0));
    for (const auto& pt : p.points)
      require(int(pt.size()) == c.potential.build().d, "potential-report.points entries must have dimension d");
  } else if (cmd == "critical-points") {
    auto& p = c.critical_points;
    r.get("box_half_width", p.box_half_width);
    r.get("grid_per_axis", p.grid_per_axis);
    require(p.box_half_width > 0, "critical-points.box_half_width must be positive");
    require(p.grid_per_axis >= 2, "critical-points.grid_per_axis must be at least 2");
  } else if (cmd == "gibbs") {
    auto& p = c.gibbs;
    r.get("omega_lo", p.omega_lo);
    r.get("omega_hi", p.omega_hi);
    r.get("omega_points", p.omega_points);
    r.get("N", p.N);
    require(c.potential.build().d == 1, "gibbs requires a one-dimensional potential");
    require(p.omega_hi > p.omega_lo && p.omega_points >= 2, "gibbs omega range is empty");
    require(p.N.size() >= 2, "gibbs.N needs at least two values");
    for (double n : p.N) require(n >= 1, "gibbs.N values must be at least 1");
  } else if (cmd == "simulate") {
    auto& p = c.simulate;
    r.get("model", p.model);
    r.get("N", p.N);
    r.get("dt", p.dt);
    r.get("horizon", p.horizon);
    r.get("replicas", p.replicas);
    r.get("reduced", p.reduced);
    r.get("noise", p.noise);
    r.get("thin", p.thin);
    r.get("write_states", p.write_states);
    Reader ri = r.child("init");
    ri.get("kind", p.init.kind);
    ri.get("mean", p.init.mean);
    ri.get("s2", p.init.s2);
    ri.get("center", p.init.center);
    ri.get("path", p.init.path);
    ri.finish();
    const int d = c.potential.build().d;
    if (p.init.mean.empty()) p.init.mean.assign(d, 0.0);
    require(int(p.init.mean.size()) == d, "simulate.init.mean must have dimension d");
    require(p.init.kind == "gaussian" || p.init.kind == "file", "simulate.init.kind must be gaussian or file");
    require(p.init.kind != "file" || !p.init.path.empty(), "simulate.init.path is required for kind file");
    require(p.init.s2 >= 0, "simulate.init.s2 must be nonnegative");
    require(p.model == "toy" || p.model == "curie_weiss", "simulate.model must be toy or curie_weiss");
    require(p.model != "curie_weiss" || c.potential.kind == "curie_weiss",
            "simulate.model curie_weiss needs a curie_weiss potential");
    require(p.N >= 1 && p.dt > 0 && p.horizon > 0 && p.replicas >= 1 && p.thin >= 0,
            "simulate needs N >= 1, dt > 0, horizon > 0, replicas >= 1, thin >= 0");
  } else if (cmd == "pde") {
    auto& p = c.pde;
    r.get("cells", p.cells);
    r.get("dt", p.dt);
    r.get("horizon", p.horizon);
    r.get("half_width", p.half_width);
    r.get("init_mean", p.init_mean);
    r.get("init_s2", p.init_s2);
    r.get("mean_tol_factor", p.mean_tol_factor);
    r.get("w2_tol", p.w2_tol);
    require(c.potential.build().d == 1, "pde requires a one-dimensional potential");
    require(p.cells >= 10 && p.dt > 0 && p.horizon > 0 && p.init_s2 > 0 && p.half_width >= 0,
            "pde needs cells >= 10, dt > 0, horizon > 0, init_s2 > 0, half_width >= 0");
  } else if (cmd == "transition") {
    auto& p = c.transition;
    r.get("x0", p.x0);
    r.get("x1", p.x1);
    r.get("z", p.z);
    r.get("delta", p.delta);
    r.get("N", p.N);
    r.get("replicas", p.replicas);
    r.get("replicas_override", p.replicas_override);
    r.get("dt", p.dt);
    r.get("horizon", p.horizon);
    r.get("horizon_factor", p.horizon_factor);
    r.get("full_particles", p.full_particles);
    r.get("init_s2", p.init_s2);
    r.get("censor_threshold", p.censor_threshold);
    r.get("bias_probe_fraction", p.bias_probe_fraction);
    r.get("exponential_N", p.exponential_N);
    r.get("slope_rel_tol", p.slope_rel_tol);
    r.get("prefactor_lo", p.prefactor_lo);
    r.get("prefactor_hi", p.prefactor_hi);
    r.get("ks_max", p.ks_max);
    const int d = c.potential.build().d;
    require(int(p.x0.size()) == d && int(p.x1.size()) == d && int(p.z.size()) == d,
            "transition.x0, x1 and z must have dimension d");
    require(p.delta > 0 && p.dt > 0 && p.replicas >= 1 && !p.N.empty(),
            "transition needs delta > 0, dt > 0, replicas >= 1 and N values");
    for (const auto& [k, v] : p.replicas_override) {
      require(!k.empty() && k.find_first_not_of("0123456789") == std::string::npos,
              "transition.replicas_override keys must be N values");
      require(v >= 1, "transition.replicas_override values must be at least 1");
    }
  } else if (cmd == "saddle-exit") {
    auto& p = c.saddle_exit;
    r.get("z", p.z);
    r.get("delta", p.delta);
    r.get("N", p.N);
    r.get("replicas", p.replicas);
    r.get("dt", p.dt);
    r.get("horizon", p.horizon);
    r.get("full_particles", p.full_particles);
    r.get("reference_samples", p.reference_samples);
    r.get("ks_max", p.ks_max);
    r.get("side_se", p.side_se);
    require(int(p.z.size()) == c.potential.build().d, "saddle-exit.z must have dimension d");
    require(p.delta > 0 && p.dt > 0 && p.replicas >= 1 && !p.N.empty() && p.reference_samples >= 100,
            "saddle-exit needs delta > 0, dt > 0, replicas >= 1, N values, reference_samples >= 100");
  } else if (cmd == "inequalities") {
    auto& p = c.inequalities;
    r.get("box_half_width", p.box_half_width);
    r.get("grid_per_axis", p.grid_per_axis);
    r.get("r_lo", p.r_lo);
    r.get("r_hi", p.r_hi);
    r.get("per_decade", p.per_decade);
    r.get("pl", p.pl);
    Reader rb = r.child("bundle");
    rb.get("enabled", p.bundle.enabled);
    rb.get("c1", p.bundle.c1);
    rb.get("c2", p.bundle.c2);
    rb.get("beta", p.bundle.beta);
    rb.get("d", p.bundle.d);
    rb.get("N", p.bundle.N);
    rb.get("R", p.bundle.R);
    rb.finish();
    Reader rp = r.child("poincare");
    rp.get("enabled", p.poincare.enabled);
    rp.get("u", p.poincare.u);
    rp.get("N", p.poincare.N);
    rp.get("c2", p.poincare.c2);
    rp.get("beta", p.poincare.beta);
    rp.finish();
    require(p.box_half_width > 0 && p.grid_per_axis >= 2, "inequalities grid is empty");
    require(p.r_lo > 0 && p.r_hi > p.r_lo && p.per_decade >= 1, "inequalities r range is empty");
    require(p.poincare.u == "x4" || p.poincare.u == "x2", "inequalities.poincare.u must be x4 or x2");
    require(p.poincare.N.size() >= 2, "inequalities.poincare.N needs at least two values");
  } else if (cmd == "curie-weiss") {
    auto& p = c.curie_weiss;
    r.get("kappa0", p.kappa0);
    r.get("N", p.N);
    r.get("sigma2_lo", p.sigma2_lo);
    r.get("sigma2_hi", p.sigma2_hi);
    r.get("lsi_exponent", p.lsi_exponent);
    r.get("lsi_tol", p.lsi_tol);
    r.get("entropy_slope", p.entropy_slope);
    r.get("entropy_tol", p.entropy_tol);
    r.get("theta_exponent", p.theta_exponent);
    r.get("theta_tol", p.theta_tol);
    require(p.kappa0 > 0, "curie-weiss.kappa0 must be positive");
    require(p.N.size() >= 2, "curie-weiss.N needs at least two values");
  } else {
    fail("config.command must be one of potential-report, critical-points, gibbs, simulate, pde, transition, "
         "saddle-exit, inequalities, curie-weiss");
  }
  r.finish();
  top.finish();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  json j;
  try {
    j = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    fail(std::string("malformed JSON: ") + e.what());
  }
  return parse_config(j);
}

json echo(const ExperimentConfig& c) {
  json j;
  j["schema"] = c.schema;
  j["command"] = c.command;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["output"] = c.output;
  if (c.has_potential) j["potential"] = potential_json(c.potential);
  json b;
  const std::string& cmd = c.command;
  if (cmd == "potential-report") {
    b["points"] = c.potential_report.points;
  } else if (cmd == "critical-points") {
    b["box_half_width"] = c.critical_points.box_half_width;
    b["grid_per_axis"] = c.critical_points.grid_per_axis;
  } else if (cmd == "gibbs") {
    const auto& p = c.gibbs;
    b["omega_lo"] = p.omega_lo;
    b["omega_hi"] = p.omega_hi;
    b["omega_points"] = p.omega_points;
    b["N"] = p.N;
  } else if (cmd == "simulate") {
    const auto& p = c.simulate;
    b["model"] = p.model;
    b["N"] = p.N;
    b["dt"] = p.dt;
    b["horizon"] = p.horizon;
    b["replicas"] = p.replicas;
    b["reduced"] = p.reduced;
    b["noise"] = p.noise;
    b["thin"] = p.thin;
    b["write_states"] = p.write_states;
    b["init"] = {{"kind", p.init.kind}, {"mean", p.init.mean}, {"s2", p.init.s2}, {"center", p.init.center},
                 {"path", p.init.path}};
  } else if (cmd == "pde") {
    const auto& p = c.pde;
    b["cells"] = p.cells;
    b["dt"] = p.dt;
    b["horizon"] = p.horizon;
    b["half_width"] = p.half_width;
    b["init_mean"] = p.init_mean;
    b["init_s2"] = p.init_s2;
    b["mean_tol_factor"] = p.mean_tol_factor;
    b["w2_tol"] = p.w2_tol;
  } else if (cmd == "transition") {
    const auto& p = c.transition;
    b["x0"] = p.x0;
    b["x1"] = p.x1;
    b["z"] = p.z;
    b["delta"] = p.delta;
    b["N"] = p.N;
    b["replicas"] = p.replicas;
    b["replicas_override"] = p.replicas_override;
    b["dt"] = p.dt;
    b["horizon"] = p.horizon;
    b["horizon_factor"] = p.horizon_factor;
    b["full_particles"] = p.full_particles;
    b["init_s2"] = p.init_s2;
    b["censor_threshold"] = p.censor_threshold;
    b["bias_probe_fraction"] = p.bias_probe_fraction;
    b["exponential_N"] = p.exponential_N;
    b["slope_rel_tol"] = p.slope_rel_tol;
    b["prefactor_lo"] = p.prefactor_lo;
    b["prefactor_hi"] = p.prefactor_hi;
    b["ks_max"] = p.ks_max;
  } else if (cmd == "saddle-exit") {
    const auto& p = c.saddle_exit;
    b["z"] = p.z;
    b["delta"] = p.delta;
    b["N"] = p.N;
    b["replicas"] = p.replicas;
    b["dt"] = p.dt;
    b["horizon"] = p.horizon;
    b["full_particles"] = p.full_particles;
    b["reference_samples"] = p.reference_samples;
    b["ks_max"] = p.ks_max;
    b["side_se"] = p.side_se;
  } else if (cmd == "inequalities") {
    const auto& p = c.inequalities;
    b["box_half_width"] = p.box_half_width;
    b["grid_per_axis"] = p.grid_per_axis;
    b["r_lo"] = p.r_lo;
    b["r_hi"] = p.r_hi;
    b["per_decade"] = p.per_decade;
    b["pl"] = p.pl;
    b["bundle"] = {{"enabled", p.bundle.enabled}, {"c1", p.bundle.c1}, {"c2", p.bundle.c2}, {"beta", p.bundle.beta},
                   {"d", p.bundle.d},             {"N", p.bundle.N},   {"R", p.bundle.R}};
    b["poincare"] = {{"enabled", p.poincare.enabled}, {"u", p.poincare.u}, {"N", p.poincare.N},
                     {"c2", p.poincare.c2},           {"beta", p.poincare.beta}};
  } else if (cmd == "curie-weiss") {
    const auto& p = c.curie_weiss;
    b["kappa0"] = p.kappa0;
    b["N"] = p.N;
    b["sigma2_lo"] = p.sigma2_lo;
    b["sigma2_hi"] = p.sigma2_hi;
    b["lsi_exponent"] = p.lsi_exponent;
    b["lsi_tol"] = p.lsi_tol;
    b["entropy_slope"] = p.entropy_slope;
    b["entropy_tol"] = p.entropy_tol;
    b["theta_exponent"] = p.theta_exponent;
    b["theta_tol"] = p.theta_tol;
  }
  j[cmd] = b;
  return j;
}

}  // namespace mfl::cli
