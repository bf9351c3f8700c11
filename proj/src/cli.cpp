#include <fiq/cli.hpp>
#include <fiq/errors.hpp>
#include <fiq/expr.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

namespace fiq::cli {

namespace {

using io::Json;
using T = OptionType;

const Json kNone = Json(nullptr);

OptionSpec opt(std::string name, T type, Json fallback, std::string help) {
  return {std::move(name), type, std::move(fallback), false, std::move(help)};
}

OptionSpec req(std::string name, T type, std::string help) { return {std::move(name), type, kNone, true, std::move(help)}; }

OptionSpec measure_opt() { return req("measure", T::text, "measure spec, e.g. \"family=cauchy alpha=2 d=1\""); }
OptionSpec manifest_opt() { return opt("manifest", T::text, kNone, "manifest path (default <out>.manifest.json)"); }

const std::set<std::string> kOutputKeys{"out", "summary", "certificate", "check", "manifest"};
const std::set<std::string> kInputKeys{"beta", "constant"};

std::vector<CommandSpec> build_commands() {
  return {
      {"rate",
       "tabulate a weak Poincare rate",
       {measure_opt(),
        opt("method", T::text, "lyapunov", "lyapunov | builtin | local_oscillation"),
        opt("c", T::number, 1.0, "prefactor of the builtin rate"),
        opt("p", T::number, kNone, "convert to the p-weak rate for this p > 2"),
        opt("log_sobolev", T::flag, false, "convert to a weak log-Sobolev rate (c = c' = 1, s0 = 1/4)"),
        opt("out", T::text, kNone, "rate file (.csv or .json); stdout when absent"),
        opt("certificate", T::text, kNone, "write the drift certificate as JSON"),
        manifest_opt()}},
      {"weight",
       "weighted Poincare constant for a measure",
       {measure_opt(),
        opt("method", T::text, "cauchy",
            "cauchy | cauchy_converse | converse_from_direct | lyapunov_converse | phi_lyapunov | from_rate"),
        opt("which", T::text, "direct", "phi_lyapunov output: direct | converse | alternate"),
        opt("k", T::number, kNone, "phi_lyapunov exponent k"),
        opt("eps", T::number, kNone, "phi_lyapunov dissipation eps"),
        opt("beta", T::text, kNone, "from_rate: rate file (default: the drift rate of the measure)"),
        opt("capacity_ratio", T::number, 1.0, "from_rate: C in nu(A) <= C Cap(A)"),
        opt("x0", T::number, 0.0, "from_rate: centre of the tail"),
        opt("out", T::text, kNone, "constant JSON; stdout when absent"),
        manifest_opt()}},
      {"perturb",
       "perturb a constant or a rate by the potential of a perturbed measure",
       {measure_opt(),
        opt("case", T::text, "bounded", "bounded | lipschitz | generator | holley_stroock | lower_bounded | lyapunov"),
        opt("constant", T::text, kNone, "base constant JSON (default: cauchy constant of the base)"),
        opt("beta", T::text, kNone, "base rate file (default: the drift rate of the base)"),
        opt("osc", T::number, kNone, "oscillation of U (bounded, holley_stroock)"),
        opt("eps", T::number, kNone, "lipschitz free parameter (optimized when absent)"),
        opt("out", T::text, kNone, "constant JSON or rate file; stdout when absent"),
        manifest_opt()}},
      {"verify",
       "check an inequality on a family of test functions",
       {measure_opt(),
        req("inequality", T::text,
            "weak_poincare | p_weak_poincare | weak_log_sobolev | weighted_poincare | converse_poincare | "
            "weighted_log_sobolev"),
        opt("beta", T::text, kNone, "rate file for the weak inequalities"),
        opt("constant", T::text, kNone, "constant JSON for the weighted inequalities"),
        opt("p", T::number, kNone, "exponent of the p-weak inequality"),
        opt("s", T::numbers, Json::array({0.1, 0.01, 0.001, 1e-4, 1e-5}), "s grid"),
        opt("family", T::text, "adversarial", "adversarial | threshold | arctan | eigenvector"),
        opt("out", T::text, kNone, "JSON-lines reports; stdout when absent"),
        opt("summary", T::text, kNone, "CSV summary"),
        manifest_opt()}},
      {"spectrum",
       "best constant of a weighted inequality by discretization",
       {measure_opt(),
        opt("weight", T::text, "unit", "unit | cauchy_optimal | cauchy_ls | subbotin_optimal alpha=.. | constant omega2=.. | expr omega2=\"..\""),
        opt("quantity", T::text, "spectral", "spectral | converse | entropy"),
        opt("cells", T::count, 4096, "grid cells"),
        opt("bound", T::number, kNone, "exit 2 if the estimate exceeds this bound"),
        opt("out", T::text, kNone, "result JSON"),
        manifest_opt()}},
      {"capacity",
       "capacity of a set",
       {measure_opt(),
        req("set", T::text, "\"outside r=.. [x0=..]\" or \"interval a=.. b=..\""),
        opt("cells", T::count, 4000, "grid cells"),
        opt("beta", T::text, kNone, "rate file: exit 2 if the capacity is below a/(4 beta(a/4))"),
        opt("out", T::text, kNone, "result JSON"),
        manifest_opt()}},
      {"simulate",
       "variance decay of the weighted Langevin dynamics",
       {measure_opt(),
        opt("weight", T::text, "unit", "weight spec as for spectrum"),
        opt("observable", T::text, "x", "observable expression in x"),
        opt("dt", T::number, 1e-3, "step"),
        opt("horizon", T::number, 1.0, "final time"),
        opt("outer", T::count, 4096, "starting points"),
        opt("inner", T::count, 64, "paths per starting point"),
        opt("seed", T::count, 1, "random seed"),
        opt("taming", T::number, 1e3, "cap on drift and diffusion"),
        opt("records", T::count, 21, "recorded times"),
        opt("bootstrap", T::count, 200, "bootstrap resamples"),
        opt("drop_weight_gradient", T::flag, false, "omit grad omega^2 from the drift"),
        opt("bound", T::number, kNone, "exit 2 unless the decay matches constant C"),
        opt("stationarity", T::flag, false, "also run the KS stationarity test"),
        opt("out", T::text, kNone, "trajectory CSV; stdout when absent"),
        opt("check", T::text, kNone, "decay and stationarity JSON"),
        manifest_opt()}},
  };
}

bool matches(const Json& v, T type) {
  switch (type) {
    case T::text: return v.is_string();
    case T::number: return v.is_number() || (v.is_string() && (v == "inf" || v == "-inf"));
    case T::count: return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
    case T::flag: return v.is_boolean();
    case T::numbers: return v.is_array() && std::all_of(v.begin(), v.end(), [](const Json& x) { return x.is_number(); });
  }
  return false;
}

std::string text(const Json& c, const char* k) { return c.at(k).get<std::string>(); }
double number(const Json& c, const char* k) { return io::json_number(c.at(k)); }
std::size_t count(const Json& c, const char* k) { return c.at(k).get<std::size_t>(); }
bool flag(const Json& c, const char* k) { return c.at(k).get<bool>(); }
bool given(const Json& c, const char* k) { return !c.at(k).is_null(); }
std::optional<double> maybe(const Json& c, const char* k) {
  return given(c, k) ? std::optional<double>(number(c, k)) : std::nullopt;
}

std::vector<double> numbers(const Json& c, const char* k) {
  std::vector<double> v;
  for (const auto& x : c.at(k)) v.push_back(x.get<double>());
  return v;
}

// Collects the files written by a command and the text printed for the user.
class Outputs {
 public:
  explicit Outputs(std::ostream& out) : out_(out) {}

  // Writes to the path, or prints the content when the path is absent.
  void emit(const Json& c, const char* key, const std::string& content) {
    if (!given(c, key)) {
      out_ << content;
      return;
    }
    const auto path = text(c, key);
    io::write_atomic(path, content);
    out_ << "wrote " << path << "\n";
  }
  std::ostream& log() { return out_; }

 private:
  std::ostream& out_;
};

Measure base_of(const Measure& m) {
  if (m.family() != Family::perturbed) throw ConfigError("this command needs a measure spec with a perturb directive");
  return m.base();
}

// The perturbation shifted so that e^{-U} base is a probability.
Potential normalized_perturbation(const Measure& m) {
  const double shift = m.perturbation_log_mass();
  return Potential(shifted(m.perturbation().field(), shift));
}

RateFunction drift_rate(const Measure& m) { return rate_from_lyapunov(default_certificate(m), m); }

void require_cauchy(const Measure& m, const std::string& method) {
  if (m.family() != Family::cauchy) throw ConfigError("method " + method + " needs family=cauchy");
}

std::vector<TestFunction> family_named(const Measure& m, const std::string& name) {
  if (name == "adversarial") return adversarial_family(m);
  if (name == "threshold") return threshold_family(m);
  if (name == "arctan") return arctan_family(m);
  if (name == "eigenvector") return eigenvector_family(m);
  throw ConfigError("unknown test family '" + name + "'");
}

int run_rate(const Json& c, Outputs& o) {
  const Measure m = io::parse_measure(text(c, "measure"));
  const auto method = text(c, "method");
  std::optional<LyapunovCertificate> cert;
  RateFunction beta = [&] {
    if (method == "lyapunov") {
      cert = default_certificate(m);
      return rate_from_lyapunov(*cert, m);
    }
    if (method == "builtin") return builtin_rate(m.family(), m.alpha(), number(c, "c"));
    if (method == "local_oscillation") return rate_from_local_oscillation(m);
    throw ConfigError("unknown rate method '" + method + "'");
  }();
  if (given(c, "certificate")) {
    if (!cert) throw ConfigError("--certificate needs method lyapunov");
    io::write_atomic(text(c, "certificate"), io::dump_json(io::to_json(io::certificate_record(*cert))));
    o.log() << "wrote " << text(c, "certificate") << "\n";
  }
  if (const auto p = maybe(c, "p")) beta = p_weak_rate(beta, *p);
  if (flag(c, "log_sobolev")) beta = wls_from_wp(beta);
  o.emit(c, "out", given(c, "out") ? io::rate_text(beta, text(c, "out")) : io::rate_csv(beta));
  return 0;
}

int run_weight(const Json& c, Outputs& o) {
  const Measure m = io::parse_measure(text(c, "measure"));
  const auto method = text(c, "method");
  const WeightedConstant wc = [&] {
    if (method == "cauchy" || method == "cauchy_converse" || method == "converse_from_direct" ||
        method == "lyapunov_converse") {
      require_cauchy(m, method);
      if (method == "cauchy") return cauchy_weighted_constant(m.alpha(), m.dim());
      if (method == "cauchy_converse") return cauchy_converse_constant(m.alpha(), m.dim());
      if (method == "converse_from_direct") return converse_from_direct(cauchy_weighted_constant(m.alpha(), m.dim()));
      return cauchy_lyapunov_converse(m.alpha(), m.dim());
    }
    if (method == "phi_lyapunov") {
      require_cauchy(m, method);
      const double k = maybe(c, "k").value_or(std::min(1.0, m.alpha() / 2.0));
      const double eps = maybe(c, "eps").value_or((m.alpha() - k) / 2.0);
      const auto ws = weight_from_phi_lyapunov(cauchy_phi_certificate(m, k, eps), m);
      const auto which = text(c, "which");
      if (which == "direct") return ws.direct;
      if (which == "converse") return ws.converse;
      if (which == "alternate") return ws.alternate;
      throw ConfigError("unknown weight output '" + which + "'");
    }
    if (method == "from_rate") {
      const RateFunction beta = given(c, "beta") ? io::load_rate(text(c, "beta")) : drift_rate(m);
      return converse_weighted_from_capacity(explicit_weight_from_rate(beta, m, number(c, "x0")),
                                             number(c, "capacity_ratio"));
    }
    throw ConfigError("unknown weight method '" + method + "'");
  }();
  o.emit(c, "out", io::dump_json(io::to_json(wc)));
  return 0;
}

int run_perturb(const Json& c, Outputs& o) {
  const Measure m = io::parse_measure(text(c, "measure"));
  const Measure nu = base_of(m);
  const Potential U = normalized_perturbation(m);
  const bool radial = nu.reduced_radial();
  const auto which = text(c, "case");
  const auto base_constant = [&] {
    if (given(c, "constant")) return io::constant_from_json(io::parse_json(io::read_file(text(c, "constant"))));
    require_cauchy(nu, "perturb without --constant");
    return cauchy_weighted_constant(nu.alpha(), nu.dim());
  };
  const auto base_rate = [&] { return given(c, "beta") ? io::load_rate(text(c, "beta")) : drift_rate(nu); };
  const auto write_rate = [&](const RateFunction& r) {
    o.emit(c, "out", given(c, "out") ? io::rate_text(r, text(c, "out")) : io::rate_csv(r));
  };
  const auto write_constant = [&](const WeightedConstant& wc) { o.emit(c, "out", io::dump_json(io::to_json(wc))); };

  if (which == "bounded") {
    write_constant(perturb_bounded(base_constant(), U, U.lower_bound(radial).value, maybe(c, "osc")));
  } else if (which == "lipschitz") {
    const auto wc = base_constant();
    const double sup = lipschitz_sup_term(wc.weight, U, nu);
    write_constant(given(c, "eps") ? perturb_weighted_lipschitz(wc, sup, number(c, "eps"))
                                   : perturb_weighted_lipschitz(wc, sup));
  } else if (which == "generator") {
    const auto wc = base_constant();
    write_constant(perturb_weighted_generator(wc, generator_sup_term(wc.weight, U, nu)));
  } else if (which == "holley_stroock") {
    const auto osc = maybe(c, "osc");
    if (!osc) throw ConfigError("holley_stroock needs --osc");
    write_rate(perturb_rate_holley_stroock(base_rate(), *osc, U.lower_bound(radial).value));
  } else if (which == "lower_bounded") {
    write_rate(perturb_rate_lower_bounded(base_rate(), nu, m.perturbation()));
  } else if (which == "lyapunov") {
    write_rate(rate_from_perturbed_lyapunov(default_certificate(nu), m.perturbation(), nu));
  } else {
    throw ConfigError("unknown perturbation case '" + which + "'");
  }
  return 0;
}

int run_verify(const Json& c, Outputs& o) {
  const Measure m = io::parse_measure(text(c, "measure"));
  const auto kind = [&] {
    try {
      return inequality_kind_from_string(text(c, "inequality"));
    } catch (const BadParameter& e) {
      throw ConfigError(e.what());
    }
  }();
  const auto family = family_named(m, text(c, "family"));
  const auto s = numbers(c, "s");
  const auto need = [&](const char* k) {
    if (!given(c, k)) throw ConfigError(to_string(kind) + " needs --" + k);
    return text(c, k);
  };
  std::vector<InequalityReport> reports;
  switch (kind) {
    case InequalityKind::weak_poincare: reports = verify_weak_poincare(m, io::load_rate(need("beta")), s, family); break;
    case InequalityKind::p_weak_poincare: {
      const auto p = maybe(c, "p");
      if (!p) throw ConfigError("p_weak_poincare needs --p");
      reports = verify_p_weak_poincare(m, io::load_rate(need("beta")), *p, s, family);
      break;
    }
    case InequalityKind::weak_log_sobolev:
      reports = verify_weak_log_sobolev(m, io::load_rate(need("beta")), s, family);
      break;
    default: {
      const auto wc = io::constant_from_json(io::parse_json(io::read_file(need("constant"))));
      const ConstantKind expected = kind == InequalityKind::weighted_poincare   ? ConstantKind::direct
                                    : kind == InequalityKind::converse_poincare ? ConstantKind::converse
                                                                                : ConstantKind::log_sobolev;
      if (wc.kind != expected) throw ConfigError("constant kind " + to_string(wc.kind) + " does not match " + to_string(kind));
      reports = verify_weighted(m, wc, family);
    }
  }
  o.emit(c, "out", io::reports_jsonl(reports));
  const auto summary = summarize(reports);
  const auto csv = io::summary_csv(summary);
  if (given(c, "summary")) o.emit(c, "summary", csv);
  else if (given(c, "out")) o.log() << csv;
  const bool ok = std::all_of(reports.begin(), reports.end(), [](const auto& r) { return r.pass; });
  return ok ? 0 : 2;
}

int run_spectrum(const Json& c, Outputs& o) {
  const Measure m = io::parse_measure(text(c, "measure"));
  const Weight w = io::parse_weight(text(c, "weight"));
  const auto q = text(c, "quantity");
  const std::size_t cells = count(c, "cells");
  Json result;
  double value = 0.0, error = 0.0;
  if (q == "spectral" || q == "converse") {
    const auto e = q == "spectral" ? spectral_constant(m, w, cells) : converse_quotient(m, w, cells);
    value = e.value;
    error = e.error;
    result = io::to_json(e);
  } else if (q == "entropy") {
    const auto e = entropy_quotient(m, w);
    value = e.value;
    result = io::to_json(e);
  } else {
    throw ConfigError("unknown quantity '" + q + "'");
  }
  result["quantity"] = q;
  const auto bound = maybe(c, "bound");
  const bool ok = !bound || value <= *bound + error;
  if (bound) {
    result["bound"] = io::number_json(*bound);
    result["pass"] = ok;
  }
  o.log() << q << " " << io::format_number(value) << " error " << io::format_number(error);
  if (bound) o.log() << " bound " << io::format_number(*bound) << (ok ? " pass" : " FAIL");
  o.log() << "\n";
  if (given(c, "out")) o.emit(c, "out", io::dump_json(result));
  return ok ? 0 : 2;
}

CapacitySet parse_set(const Measure& m, const std::string& s) {
  const auto sp = s.find_first_of(" \t");
  const std::string kind = s.substr(0, sp);
  std::map<std::string, double> kv;
  std::string rest = sp == std::string::npos ? "" : s.substr(sp);
  std::size_t pos = 0;
  while ((pos = rest.find_first_not_of(" \t", pos)) != std::string::npos) {
    const auto end = rest.find_first_of(" \t", pos);
    const auto tok = rest.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value in set, got '" + tok + "'");
    if (!kv.emplace(tok.substr(0, eq), io::parse_number(tok.substr(eq + 1))).second)
      throw ConfigError("duplicate set key in '" + s + "'");
    pos = end;
  }
  const auto take = [&](std::set<std::string> allowed, std::set<std::string> needed) {
    for (const auto& [k, v] : kv)
      if (!allowed.count(k)) throw ConfigError("unknown key '" + k + "' for set " + kind);
    for (const auto& k : needed)
      if (!kv.count(k)) throw ConfigError("set " + kind + " needs " + k + "=");
  };
  if (kind == "outside") {
    take({"r", "x0"}, {"r"});
    return CapacitySet::outside(m, kv["r"], kv.count("x0") ? kv["x0"] : 0.0);
  }
  if (kind == "interval") {
    take({"a", "b"}, {"a", "b"});
    return CapacitySet::interval(kv["a"], kv["b"]);
  }
  throw ConfigError("unknown set kind '" + kind + "'");
}

int run_capacity(const Json& c, Outputs& o) {
  const Measure m = io::parse_measure(text(c, "measure"));
  const auto A = parse_set(m, text(c, "set"));
  const auto e = estimate_capacity(m, A, count(c, "cells"));
  Json result = io::to_json(e);
  bool ok = true;
  o.log() << "capacity " << io::format_number(e.value) << " mass " << io::format_number(e.set_mass);
  if (given(c, "beta")) {
    const double lower = capacity_lower_bound(io::load_rate(text(c, "beta")), e.set_mass);
    ok = e.value >= lower * (1.0 - kReportTolerance);
    result["lower_bound"] = io::number_json(lower);
    result["pass"] = ok;
    o.log() << " lower bound " << io::format_number(lower) << (ok ? " pass" : " FAIL");
  }
  o.log() << "\n";
  if (given(c, "out")) o.emit(c, "out", io::dump_json(result));
  return ok ? 0 : 2;
}

int run_simulate(const Json& c, Outputs& o) {
  const Measure m = io::parse_measure(text(c, "measure"));
  const Weight w = io::parse_weight(text(c, "weight"));
  const auto f = PotentialExpr::parse(text(c, "observable"));
  SdeConfig cfg;
  cfg.dt = number(c, "dt");
  cfg.horizon = number(c, "horizon");
  cfg.outer = count(c, "outer");
  cfg.inner = count(c, "inner");
  cfg.seed = count(c, "seed");
  cfg.taming = number(c, "taming");
  cfg.records = count(c, "records");
  cfg.bootstrap = count(c, "bootstrap");
  cfg.drop_weight_gradient = flag(c, "drop_weight_gradient");
  const auto traj = simulate(m, w, [&f](double x) { return f.eval(x); }, cfg);
  o.emit(c, "out", io::trajectory_csv(traj));
  bool ok = true;
  Json check = Json::object();
  if (const auto C = maybe(c, "bound")) {
    const auto d = check_decay(traj, *C);
    ok = d.pass;
    check["decay"] = io::to_json(d);
    o.log() << "fitted rate " << io::format_number(d.fitted_rate) << " predicted " << io::format_number(d.predicted_rate)
            << (d.pass ? " pass" : " FAIL") << "\n";
  }
  if (flag(c, "stationarity")) {
    const auto st = stationarity_check(m, w, cfg);
    ok = ok && st.pass;
    check["stationarity"] = io::to_json(st);
    o.log() << "ks " << io::format_number(st.ks) << " critical " << io::format_number(st.critical)
            << (st.pass ? " pass" : " FAIL") << "\n";
  }
  if (given(c, "check")) o.emit(c, "check", io::dump_json(check));
  return ok ? 0 : 2;
}

std::string manifest_path(const Json& c) {
  if (given(c, "manifest")) return text(c, "manifest");
  if (given(c, "out")) return text(c, "out") + ".manifest.json";
  return {};
}

io::RunManifest make_manifest(const std::string& command, const Json& c) {
  io::RunManifest mf;
  mf.command = command;
  mf.config = c;
  mf.version = kVersion;
  if (c.contains("seed")) mf.seeds.push_back(c.at("seed").get<std::uint64_t>());
  mf.input_hashes["measure"] = io::content_hash(text(c, "measure"));
  for (const auto& k : kInputKeys)
    if (c.contains(k) && given(c, k.c_str())) mf.input_hashes[k] = io::content_hash(io::read_file(text(c, k.c_str())));
  return mf;
}

}  // namespace

const std::vector<CommandSpec>& commands() {
  static const auto specs = build_commands();
  return specs;
}

const CommandSpec& command(const std::string& name) {
  for (const auto& s : commands())
    if (s.name == name) return s;
  throw ConfigError("unknown command '" + name + "'");
}

Json resolve_config(const std::string& name, const Json& config) {
  const auto& spec = command(name);
  if (!config.is_object()) throw ConfigError("config must be an object");
  for (const auto& [k, v] : config.items())
    if (std::none_of(spec.options.begin(), spec.options.end(), [&](const auto& o) { return o.name == k; }))
      throw ConfigError("unknown option '" + k + "' for " + name);
  Json out = Json::object();
  for (const auto& o : spec.options) {
    const bool present = config.contains(o.name) && !config.at(o.name).is_null();
    if (!present) {
      if (o.required) throw ConfigError(name + " needs --" + o.name);
      out[o.name] = o.fallback;
      continue;
    }
    const Json& v = config.at(o.name);
    if (!matches(v, o.type)) throw ConfigError("option '" + o.name + "' has the wrong type: " + v.dump());
    out[o.name] = v;
  }
  out["measure"] = io::MeasureSpec::parse(text(out, "measure")).print();
  return out;
}

int run(const std::string& name, const Json& config, std::ostream& out) {
  const Json c = resolve_config(name, config);
  Outputs o(out);
  int code = 0;
  if (name == "rate") code = run_rate(c, o);
  else if (name == "weight") code = run_weight(c, o);
  else if (name == "perturb") code = run_perturb(c, o);
  else if (name == "verify") code = run_verify(c, o);
  else if (name == "spectrum") code = run_spectrum(c, o);
  else if (name == "capacity") code = run_capacity(c, o);
  else code = run_simulate(c, o);
  if (const auto path = manifest_path(c); !path.empty()) {
    io::write_atomic(path, io::dump_json(io::to_json(make_manifest(name, c))));
    out << "wrote " << path << "\n";
  }
  return code;
}

int replay(const io::RunManifest& manifest, const std::string& dir, std::ostream& out) {
  Json c = resolve_config(manifest.command, manifest.config);
  for (const auto& [k, h] : manifest.input_hashes) {
    const auto now = k == "measure" ? io::content_hash(text(c, "measure")) : io::content_hash(io::read_file(text(c, k.c_str())));
    if (now != h) throw ConfigError("input '" + k + "' changed since the manifest was written");
  }
  for (const auto& k : kOutputKeys)
    if (c.contains(k) && given(c, k.c_str()))
      c[k] = (std::filesystem::path(dir) / std::filesystem::path(text(c, k.c_str())).filename()).string();
  return run(manifest.command, c, out);
}

}  // namespace fiq::cli
