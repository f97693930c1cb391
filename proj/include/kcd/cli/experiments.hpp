#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kcd/agp/wavefunction.hpp"
#include "kcd/cli/config.hpp"
#include "kcd/cli/output.hpp"
#include "kcd/dynamics/evolve.hpp"
#include "kcd/models/ising.hpp"
#include "kcd/models/norm_fraction.hpp"
#include "kcd/models/stirap.hpp"
#include "kcd/models/tfim.hpp"
#include "kcd/models/toda.hpp"
#include "kcd/models/two_level.hpp"
#include "kcd/models/xx.hpp"

namespace kcd::cli {

enum class Command { Lanczos, Agp, Evolve };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::Lanczos: return "lanczos";
    case Command::Agp: return "agp";
    case Command::Evolve: return "evolve";
  }
  return "?";
}

struct RunOptions {
  int jobs = 1;
  std::optional<std::uint64_t> seed;  // overrides [experiment] seed
};

// Runs f(0..n-1) on a pool of `jobs` threads. Results keep index order, and
// the lowest-index failure is rethrown, so output does not depend on `jobs`.
template <class F>
auto parallel_map(std::size_t n, int jobs, F&& f) -> std::vector<decltype(f(std::size_t{}))> {
  using R = decltype(f(std::size_t{}));
  std::vector<std::optional<R>> slots(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        slots[i].emplace(f(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, n); ++w) pool.emplace_back(worker);
  }
  std::vector<R> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (errors[i]) std::rethrow_exception(errors[i]);
    out.push_back(std::move(*slots[i]));
  }
  return out;
}

namespace detail {

inline const std::vector<std::string> kModels{"stylized", "two_level", "stirap", "tfim", "ising", "xx", "toda"};

// One scan axis given as `key = a, b, c`, `key_grid = from, to, count`
// (inclusive linear) or `key_log = from, to, count` (inclusive logarithmic).
inline std::vector<double> scan_values(const Config& cfg, const std::string& section, const std::string& key) {
  const bool list = cfg.has(section, key), grid = cfg.has(section, key + "_grid"), log = cfg.has(section, key + "_log");
  if (list + grid + log != 1)
    throw Error(ErrorKind::Config, cfg.origin() + ": [" + section + "] needs exactly one of " + key + ", " + key +
                                       "_grid, " + key + "_log");
  if (list) {
    auto v = cfg.get_doubles(section, key);
    return v;
  }
  const std::string name = key + (grid ? "_grid" : "_log");
  const auto spec = cfg.get_doubles(section, name);
  if (spec.size() != 3 || spec[2] < 1 || spec[2] != std::floor(spec[2]))
    throw cfg.invalid(section, name, "expected 'from, to, count' with integer count >= 1");
  const int count = static_cast<int>(spec[2]);
  if (log && (spec[0] <= 0 || spec[1] <= 0)) throw cfg.invalid(section, name, "log grid needs positive ends");
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) {
    const double s = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    v[i] = grid ? spec[0] + (spec[1] - spec[0]) * s : spec[0] * std::pow(spec[1] / spec[0], s);
  }
  return v;
}

inline int positive_int(const Config& cfg, const std::string& section, const std::string& key, long long lo,
                        long long hi, std::optional<long long> fallback = std::nullopt) {
  const long long v = fallback && !cfg.has(section, key) ? *fallback : cfg.get_int(section, key);
  if (v < lo || v > hi)
    throw cfg.invalid(section, key, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

// The [model] section, parsed once per run. Only the fields relevant to the
// model kind (and command) are read.
struct ModelConfig {
  std::string kind;
  Json params = Json::object();
  std::optional<std::uint64_t> seed;

  // stylized
  std::vector<std::string> profiles;
  int d = 0;
  double scale = 1.0;
  // shared
  int n_s = 0;
  double v = 1.0;
  double t_f = 1.0;
  // tfim
  std::string route;
  double g0 = 0.0, g1 = 1.0;
  // two_level
  double h0 = 1.0, a = 0.5;
  // stirap
  StirapPulses pulses;
  // ising
  double h = 1.0, gamma = 1.0;
  // xx / toda
  std::string couplings, backend;
  double v0 = 1.0, x0 = 4.0, theta0 = 0.0;
  int max_steps = 0;
};

inline ModelConfig read_model(const Config& cfg, Command cmd, const RunOptions& run) {
  ModelConfig m;
  const std::string s = "model";
  m.kind = cfg.get_choice(s, "kind", kModels);
  if (cfg.has("experiment", "seed")) m.seed = cfg.get_u64("experiment", "seed");
  if (run.seed) m.seed = run.seed;
  auto num = [&](const char* key, double fallback) {
    const double x = cfg.get_double(s, key, fallback);
    m.params[key] = x;
    return x;
  };
  auto positive = [&](const char* key, double fallback) {
    const double x = num(key, fallback);
    if (x <= 0) throw cfg.invalid(s, key, "must be positive");
    return x;
  };
  if (m.kind == "stylized") {
    if (cmd == Command::Evolve) throw cfg.invalid(s, "kind", "stylized profiles cannot be evolved");
    m.profiles = cfg.get_strings(s, "profiles");
    for (const auto& p : m.profiles)
      if (p != "linear" && p != "sqrt" && p != "su2") throw cfg.invalid(s, "profiles", "unknown profile '" + p + "'");
    m.d = positive_int(cfg, s, "d", 1, 100000);
    m.scale = positive("scale", 1.0);
    m.params["profiles"] = m.profiles;
    m.params["d"] = m.d;
  } else if (m.kind == "two_level") {
    m.h0 = positive("h0", 1.0);
    m.a = num("a", 0.5);
    if (cmd != Command::Evolve) m.t_f = positive("t_f", 1.0);
  } else if (m.kind == "stirap") {
    m.pulses.delta = num("delta", 1.0);
    m.pulses.omega0 = positive("omega0", 4.0);
    const double t1 = num("t1_over_tf", 0.4), t2 = num("t2_over_tf", 0.6), sg = positive("sigma_over_tf", 0.1);
    m.t_f = cmd == Command::Evolve ? 1.0 : positive("t_f", 100.0);
    m.pulses.t_f = m.t_f;
    m.pulses.t1 = t1 * m.t_f;
    m.pulses.t2 = t2 * m.t_f;
    m.pulses.sigma = sg * m.t_f;
  } else if (m.kind == "tfim") {
    m.n_s = positive_int(cfg, s, "n_s", 2, 100000);
    m.params["n_s"] = m.n_s;
    m.v = positive("v", 1.0);
    if (cmd == Command::Evolve) {
      m.route = "pauli";
      m.g0 = num("g0", 0.0);
      m.g1 = num("g1", 1.0);
    } else {
      m.route = cfg.get_choice(s, "route", {"analytic", "pauli"}, "pauli");
      m.params["route"] = m.route;
    }
    if (m.n_s % 2 != 0) throw cfg.invalid(s, "n_s", "TFIM needs an even number of sites");
    if (m.route == "pauli" && m.n_s > 24) throw cfg.invalid(s, "n_s", "Pauli route limited to 24 sites");
  } else if (m.kind == "ising") {
    m.n_s = positive_int(cfg, s, "n_s", 3, 12);
    m.params["n_s"] = m.n_s;
    m.v = num("v", 1.0);
    m.h = num("h", 1.0);
    m.gamma = num("gamma", 1.0);
    if (cmd != Command::Evolve) m.t_f = positive("t_f", 1.0);
  } else if (m.kind == "xx") {
    m.n_s = positive_int(cfg, s, "n_s", 2, 400);
    m.params["n_s"] = m.n_s;
    m.couplings = cfg.get_choice(s, "couplings", {"uniform", "random"});
    m.params["couplings"] = m.couplings;
    if (m.couplings == "random" && !m.seed)
      throw Error(ErrorKind::Config, cfg.origin() + ": random couplings need [experiment] seed (or --seed)");
    m.v0 = positive("v0", 1.0);
    m.h0 = num("h0", 2.0);
    m.x0 = num("x0", 4.0);
    if (cmd != Command::Evolve) m.t_f = positive("t_f", 100.0);
    m.backend = cfg.get_choice(s, "backend", {"pauli", "structured"}, "structured");
    m.params["backend"] = m.backend;
    if (m.backend == "pauli" && m.n_s > 16) throw cfg.invalid(s, "n_s", "Pauli backend limited to 16 sites");
    if (cmd == Command::Evolve && m.n_s > 10) throw cfg.invalid(s, "n_s", "evolution limited to 10 sites");
    m.max_steps = positive_int(cfg, s, "max_steps", 0, 1000000, 0);
    m.params["max_steps"] = m.max_steps;
  } else if (m.kind == "toda") {
    m.n_s = positive_int(cfg, s, "n_s", 2, 400);
    m.params["n_s"] = m.n_s;
    m.h0 = positive("h1", 1.0);
    m.theta0 = num("theta0", 0.0);
    if (std::abs(m.theta0) >= std::numbers::pi / 2) throw cfg.invalid(s, "theta0", "must lie in (-pi/2, pi/2)");
    if (cmd != Command::Evolve) m.t_f = positive("t_f", 1.0);
    if (cmd == Command::Evolve && m.n_s > 10) throw cfg.invalid(s, "n_s", "evolution limited to 10 sites");
  }
  return m;
}

inline std::vector<double> xx_couplings(const ModelConfig& m) {
  return m.couplings == "random" ? xx_random_couplings(m.n_s, m.v0, *m.seed)
                                 : std::vector<double>(m.n_s - 1, m.v0);
}

inline ModelSpec model_spec(const ModelConfig& m) {
  if (m.kind == "two_level") return two_level_spec();
  if (m.kind == "stirap") return stirap_spec();
  if (m.kind == "tfim") return tfim_spec(m.n_s, m.v);
  if (m.kind == "ising") return ising_longitudinal_spec(m.n_s, m.v, m.h, m.gamma);
  if (m.kind == "xx" || m.kind == "toda") return xx_spec(m.n_s);
  throw Error(ErrorKind::InvalidArgument, "model '" + m.kind + "' has no Hamiltonian family");
}

inline DrivingProtocol protocol_for(const ModelConfig& m, double t_f) {
  if (m.kind == "two_level") return two_level_sweep(m.h0, t_f, m.a);
  if (m.kind == "stirap") {
    StirapPulses p = m.pulses;
    const double r = t_f / p.t_f;
    p.t_f = t_f;
    p.t1 *= r;
    p.t2 *= r;
    p.sigma *= r;
    return stirap_protocol(p);
  }
  if (m.kind == "tfim") return linear_ramp("g", m.g0, m.g1, t_f);
  if (m.kind == "ising") return linear_ramp("g", 0.0, 1.0, t_f);
  if (m.kind == "xx") return XxAnnealing{xx_couplings(m), m.h0, m.x0, t_f}.protocol();
  if (m.kind == "toda") return TodaSpecial(m.n_s, m.h0, m.theta0).protocol(t_f);
  throw Error(ErrorKind::InvalidArgument, "model '" + m.kind + "' has no protocol");
}

// Result of one scan point for lanczos/agp.
struct PointResult {
  double x = 0.0;  // scan coordinate (t/t_f or g); unused for stylized
  std::string label;
  std::vector<double> b;
  bool truncated = false;
  std::vector<double> alpha;
  std::vector<Table> extra;  // model-specific tables, merged in scan order
};

inline double nc_norm_from_matrix(const LiouvillianMatrix& l, const ComplexVector& dh) {
  const ComplexVector l1 = l.entries * dh, l2 = l.entries * l1;
  const double n1 = l1.squaredNorm(), n2 = l2.squaredNorm();
  return n2 > 0.0 ? n1 / n2 * std::sqrt(n1) : 0.0;
}

struct Scan {
  std::string key;  // column name
  std::vector<double> values;
};

inline Scan read_scan(const Config& cfg, const ModelConfig& m) {
  if (m.kind == "stylized") return {"profile", std::vector<double>(m.profiles.size(), 0.0)};
  if (m.kind == "tfim") return {"g", scan_values(cfg, "scan", "g")};
  return {"t_over_tf", scan_values(cfg, "scan", "t_over_tf")};
}

inline PointResult run_point(const ModelConfig& m, const Scan& scan, std::size_t i, double g_dot, bool want_alpha) {
  PointResult r;
  r.x = scan.values[i];
  auto finish = [&](const KrylovChain& c) {
    r.b = c.b;
    r.truncated = c.truncated;
    if (want_alpha && !c.truncated) r.alpha = solve_alpha(c.b);
  };

  if (m.kind == "stylized") {
    r.label = m.profiles[i];
    const BProfile p = r.label == "linear" ? BProfile::Linear : r.label == "sqrt" ? BProfile::Sqrt : BProfile::SU2;
    r.b = stylized_profile(p, m.d, m.scale);
    if (want_alpha) r.alpha = solve_alpha(r.b);
    return r;
  }

  if (m.kind == "tfim") {
    const double g = r.x;
    if (m.route == "analytic") {
      r.b = tfim_analytic_b(m.n_s, m.v, g, g_dot);
      if (want_alpha) r.alpha = solve_alpha(r.b);
    } else {
      const ModelSpec spec = tfim_spec(m.n_s, m.v);
      finish(build_krylov_chain(spec.h({{"g", g}}), spec.dh({{"g", g}}, {{"g", g_dot}}), spec.measure));
    }
    if (want_alpha) {
      Table t{"alpha_closed", {"g", "k", "alpha_k", "alpha_k_closed_form"}, {}};
      const auto closed = tfim_closed_form_alpha(m.n_s, m.v, g);
      for (std::size_t k = 0; k < r.alpha.size(); ++k)
        t.add({g, static_cast<long long>(k + 1), r.alpha[k], k < closed.size() ? closed[k] : std::nan("")});
      r.extra.push_back(std::move(t));
    }
    return r;
  }

  const double t = r.x * m.t_f;

  if (m.kind == "stirap") {
    const auto proto = stirap_protocol(m.pulses);
    const Params p = proto.lambda(t), pd = proto.lambda_dot(t);
    const StirapCase c = stirap(param(p, "delta"), param(p, "wp"), param(p, "ws"), param(pd, "delta"),
                                param(pd, "wp"), param(pd, "ws"));
    const KrylovChain chain = build_chain_from_matrix(c.l, c.theta0, {}, c.b0);
    finish(chain);
    if (want_alpha) {
      // a_mu^(k): Y_mu coordinate of the k-th chain term; cumulative sums.
      Table tt{"terms", {"t_over_tf", "t", "mu", "a_k1", "a_k1_2", "a_all", "a_closed_form"}, {}};
      std::vector<RealVector> cum;
      RealVector acc = RealVector::Zero(3);
      for (std::size_t k = 0; k < r.alpha.size(); ++k) {
        std::vector<double> only(r.alpha.size(), 0.0);
        only[k] = r.alpha[k];
        const ComplexVector& co = assemble_cd(chain, only).cd_operator.structured().coords;
        for (int mu = 0; mu < 3; ++mu) acc[mu] += co[5 + mu].real();
        cum.push_back(acc);
      }
      for (int mu = 0; mu < 3; ++mu) {
        auto upto = [&](std::size_t k) { return cum.empty() ? 0.0 : cum[std::min(k, cum.size()) - 1][mu]; };
        tt.add({r.x, t, static_cast<long long>(mu + 1), upto(1), upto(2), upto(cum.size()), c.reference_y[mu]});
      }
      r.extra.push_back(std::move(tt));
    }
    return r;
  }

  if (m.kind == "ising") {
    const ModelSpec spec = model_spec(m);
    const auto proto = protocol_for(m, m.t_f);
    const Params p = proto.lambda(t), pd = proto.lambda_dot(t);
    const auto y = ising_ops::restricted_y(m.n_s);
    const TruncatedCd tc = truncated_cd(spec.h(p), spec.dh(p, pd), {y.begin(), y.end()}, spec.measure);
    finish(tc.chain);
    if (want_alpha) {
      const auto a = ising_display_coefficients(tc.coefficients);
      Table tt{"restricted", {"t_over_tf", "t", "a_1", "a_2", "a_3"}, {}};
      tt.add({r.x, t, a[0], a[1], a[2]});
      r.extra.push_back(std::move(tt));
    }
    return r;
  }

  if (m.kind == "two_level") {
    const ModelSpec spec = model_spec(m);
    const auto proto = protocol_for(m, m.t_f);
    finish(build_krylov_chain(spec.h(proto.lambda(t)), spec.dh(proto.lambda(t), proto.lambda_dot(t)), spec.measure));
    return r;
  }

  // XX family (annealing or Toda flow).
  XxFields f, df;
  if (m.kind == "xx") {
    const XxAnnealing ann{xx_couplings(m), m.h0, m.x0, m.t_f};
    f = ann.fields(t);
    df = ann.derivative(t);
  } else {
    const TodaSpecial toda(m.n_s, m.h0, m.theta0);
    f = toda.fields(t);
    df = toda.derivative(t);
  }
  LanczosOptions opt;
  opt.max_steps = m.max_steps;
  opt.keep_basis = want_alpha;
  const bool pauli = m.kind == "xx" && m.backend == "pauli";
  KrylovChain chain;
  std::optional<LiouvillianMatrix> l;
  ComplexVector th;
  if (pauli) {
    const ModelSpec spec = xx_spec(m.n_s);
    chain = build_krylov_chain(spec.h(xx_params(f)), spec.dh(xx_params(f), xx_params(df)), spec.measure, opt);
  } else {
    const XxLayout lay(m.n_s);
    l = xx_liouvillian(lay, f);
    th = xx_derivative_coordinates(lay, df);
    chain = build_chain_from_matrix(*l, th / th.norm(), opt, th.norm());
  }
  finish(chain);
  if (want_alpha && !chain.truncated) {
    const AgpExpansion e = assemble_cd(chain, r.alpha);
    const BodyRule rule = pauli ? BodyRule::Support : BodyRule::Declared;
    const auto q = norm_fraction(e, chain, rule), qp = norm_fraction_projected(e, chain.measure, rule);
    Table nf{"norm_fraction", {"t_over_tf", "p", "q", "q_projected"}, {}};
    for (int p = 2; p <= m.n_s; ++p) {
      auto at = [p](const std::vector<double>& v) { return p < static_cast<int>(v.size()) ? v[p] : 0.0; };
      nf.add({r.x, static_cast<long long>(p), at(q), at(qp)});
    }
    r.extra.push_back(std::move(nf));

    double a2 = 0.0;
    for (double x : e.alpha) a2 += x * x;
    const auto w = body_weights(e.cd_operator, chain.measure, rule);
    const double two_body = w.size() > 2 ? std::sqrt(w[2]) : 0.0;
    double nc = 0.0;
    if (pauli) {
      const ModelSpec spec = xx_spec(m.n_s);
      const auto fo = first_order_nc_cd(spec.h(xx_params(f)), spec.dh(xx_params(f), xx_params(df)), spec.measure);
      nc = operator_norm(fo.expansion.cd_operator, chain.measure);
    } else {
      nc = nc_norm_from_matrix(*l, th);
    }
    Table nt{"norms", {"t_over_tf", "exact", "two_body", "k1", "variational"}, {}};
    nt.add({r.x, e.b0 * std::sqrt(a2), two_body, e.b0 * std::abs(e.alpha.empty() ? 0.0 : e.alpha[0]), nc});
    r.extra.push_back(std::move(nt));
  }
  return r;
}

inline void merge_extra(std::vector<Table>& into, std::vector<Table>&& from) {
  for (auto& t : from) {
    auto it = std::find_if(into.begin(), into.end(), [&](const Table& x) { return x.name == t.name; });
    if (it == into.end()) {
      into.push_back(std::move(t));
    } else {
      for (auto& row : t.rows) it->rows.push_back(std::move(row));
    }
  }
}

inline Json seed_json(const ModelConfig& m) { return m.seed ? Json(*m.seed) : Json(nullptr); }

inline Report run_chain_command(const Config& cfg, Command cmd, const RunOptions& run, const std::string& stem) {
  const ModelConfig m = read_model(cfg, cmd, run);
  const Scan scan = read_scan(cfg, m);
  const double g_dot = m.kind == "tfim" ? cfg.get_double("scan", "g_dot", 1.0) : 0.0;
  if (m.kind == "stirap" || m.kind == "xx" || m.kind == "toda" || m.kind == "ising" || m.kind == "two_level")
    for (double x : scan.values)
      if (x < 0.0 || x > 1.0) throw cfg.invalid("scan", "t_over_tf", "values must lie in [0, 1]");
  cfg.check_all_used();

  const bool want_alpha = cmd == Command::Agp;
  const auto results =
      parallel_map(scan.values.size(), run.jobs, [&](std::size_t i) { return run_point(m, scan, i, g_dot, want_alpha); });

  Report rep;
  rep.experiment = stem;
  rep.metadata["command"] = to_string(cmd);
  rep.metadata["model"] = m.kind;
  rep.metadata["params"] = m.params;
  rep.metadata["seed"] = seed_json(m);
  if (m.kind == "tfim") rep.metadata["g_dot"] = g_dot;
  const bool by_label = m.kind == "stylized";
  Table bt{"b", {scan.key, "n", "b_n"}, {}};
  Table at{"alpha", {scan.key, "k", "alpha_k"}, {}};
  Json points = Json::array();
  std::vector<Table> extra;
  for (auto r : results) {
    const Table::Cell key = by_label ? Table::Cell{r.label} : Table::Cell{r.x};
    for (std::size_t n = 0; n < r.b.size(); ++n) bt.add({key, static_cast<long long>(n), r.b[n]});
    for (std::size_t k = 0; k < r.alpha.size(); ++k) at.add({key, static_cast<long long>(k + 1), r.alpha[k]});
    Json pt = Json::object();
    if (by_label)
      pt[scan.key] = r.label;
    else
      pt[scan.key] = r.x;
    const int d = static_cast<int>(r.b.size());
    pt["d"] = d;
    pt["parity"] = d % 2 == 0 ? "even" : "odd";
    pt["truncated"] = r.truncated;
    pt["b"] = r.b;
    if (want_alpha) pt["alpha"] = r.alpha;
    points.push_back(std::move(pt));
    merge_extra(extra, std::move(r.extra));
  }
  rep.metadata["points"] = std::move(points);
  rep.tables.push_back(std::move(bt));
  if (want_alpha) {
    rep.tables.push_back(std::move(at));
    for (auto& t : extra) rep.tables.push_back(std::move(t));
  }
  return rep;
}

inline Report run_evolve_command(const Config& cfg, const RunOptions& run, const std::string& stem) {
  const ModelConfig m = read_model(cfg, Command::Evolve, run);
  const std::string s = "evolve";
  const std::vector<double> tfs = scan_values(cfg, s, "t_f");
  for (double x : tfs)
    if (x <= 0.0) throw cfg.invalid(s, "t_f", "durations must be positive");
  const CdKind with = [&] {
    const std::string name =
        cfg.get_choice(s, "with", {"exact", "spectral", "tracked", "truncated", "first_order_nc"}, "exact");
    return parse_cd_kind(name);
  }();
  if (with == CdKind::Truncated && m.kind != "ising")
    throw cfg.invalid(s, "with", "a truncated basis is defined for the ising model only");
  EvolveOptions opt;
  opt.initial_steps = positive_int(cfg, s, "initial_steps", 1, 1 << 24, 256);
  opt.max_doublings = positive_int(cfg, s, "max_doublings", 0, 30, 14);
  opt.refine_tol = cfg.get_double(s, "refine_tol", 1e-8);
  if (opt.refine_tol <= 0) throw cfg.invalid(s, "refine_tol", "must be positive");
  opt.target_level = positive_int(cfg, s, "target_level", 0, 1 << 20, 0);
  const int intervals = positive_int(cfg, s, "intervals", 1, 100000, 1);
  const std::string initial = cfg.get_choice(s, "initial", {"eigenstate", "basis"}, "eigenstate");
  const int initial_index = initial == "basis" ? positive_int(cfg, s, "initial_index", 0, 1 << 20) : 0;
  cfg.check_all_used();

  const ModelSpec spec = model_spec(m);
  CdSource src;
  switch (with) {
    case CdKind::Exact: src = CdSource::exact(); break;
    case CdKind::Spectral: src = CdSource::spectral(); break;
    case CdKind::Tracked: src = CdSource::tracked(opt.target_level); break;
    case CdKind::FirstOrderNc: src = CdSource::first_order_nc(); break;
    case CdKind::Truncated: {
      const auto y = ising_ops::restricted_y(m.n_s);
      src = CdSource::truncated({y.begin(), y.end()});
      break;
    }
    case CdKind::None: break;
  }

  struct Job {
    double t_f;
    bool cd;
  };
  std::vector<Job> jobs;
  for (double t_f : tfs) {
    jobs.push_back({t_f, false});
    jobs.push_back({t_f, true});
  }
  const auto results = parallel_map(jobs.size(), run.jobs, [&](std::size_t i) {
    const DrivingProtocol proto = protocol_for(m, jobs[i].t_f);
    ComplexVector psi0;
    if (initial == "basis") {
      const auto dim = to_dense(spec.h(proto.lambda(0.0))).dense().rows();
      require(initial_index < dim, ErrorKind::InvalidArgument, "initial_index beyond the Hilbert space");
      psi0 = ComplexVector::Zero(dim);
      psi0[initial_index] = 1.0;
    } else {
      psi0 = eigenstate(spec, proto.lambda(0.0), opt.target_level);
    }
    return evolve(spec, proto, jobs[i].cd ? src : CdSource::none(), psi0, uniform_grid(0.0, jobs[i].t_f, intervals),
                  opt);
  });

  Report rep;
  rep.experiment = stem;
  rep.metadata["command"] = "evolve";
  rep.metadata["model"] = m.kind;
  rep.metadata["params"] = m.params;
  rep.metadata["seed"] = seed_json(m);
  rep.metadata["cd_source"] = to_string(with);
  rep.metadata["integrator"] = {{"method", "rk4_fixed_step"},
                                {"initial_steps", opt.initial_steps},
                                {"refine_tol", opt.refine_tol},
                                {"intervals", intervals}};
  Table ft{"fidelity", {"t_f", "f_without", "f_with"}, {}};
  Json runs = Json::array();
  for (std::size_t j = 0; j < tfs.size(); ++j) {
    const EvolutionResult& a = results[2 * j];
    const EvolutionResult& b = results[2 * j + 1];
    ft.add({tfs[j], a.final_fidelity(), b.final_fidelity()});
    for (const EvolutionResult* r : {&a, &b}) {
      runs.push_back({{"t_f", tfs[j]},
                      {"cd", r == &a ? "none" : to_string(with)},
                      {"steps", r->steps},
                      {"step", tfs[j] / r->steps},
                      {"refinement_delta", r->refinement_delta},
                      {"max_norm_error", r->max_norm_error},
                      {"final_fidelity", r->final_fidelity()}});
    }
  }
  rep.metadata["runs"] = std::move(runs);
  rep.tables.push_back(std::move(ft));
  return rep;
}

inline bool valid_stem(const std::string& s) {
  if (s.empty()) return false;
  for (char ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-')) return false;
  return true;
}

// Output stem from the config file name; "experiment" when that is unusable.
inline std::string stem_of(const std::string& path) {
  const auto slash = path.find_last_of('/');
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  const auto dot = base.find_last_of('.');
  if (dot != std::string::npos && dot > 0) base = base.substr(0, dot);
  return valid_stem(base) ? base : "experiment";
}

}  // namespace detail

// Parses and runs one experiment. The config's [experiment] command, when
// present, must match `cmd`.
inline Report run_experiment(const Config& cfg, Command cmd, const RunOptions& run = {}) {
  if (cfg.has("experiment", "command")) {
    const std::string c = cfg.get_choice("experiment", "command", {"lanczos", "agp", "evolve"});
    if (c != to_string(cmd))
      throw cfg.invalid("experiment", "command", "config is for '" + c + "', not '" + to_string(cmd) + "'");
  }
  const std::string stem = cfg.get_string("experiment", "name", detail::stem_of(cfg.origin()));
  if (!detail::valid_stem(stem)) throw cfg.invalid("experiment", "name", "use letters, digits, '_' and '-' only");
  if (cmd == Command::Evolve) return detail::run_evolve_command(cfg, run, stem);
  return detail::run_chain_command(cfg, cmd, run, stem);
}

// Config with the --seed override applied, so the hash covers it.
inline Config effective_config(Config cfg, const RunOptions& run) {
  if (run.seed) cfg.set("experiment", "seed", std::to_string(*run.seed));
  return cfg;
}

}  // namespace kcd::cli
