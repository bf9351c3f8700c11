#include <fiq/errors.hpp>
#include <fiq/expr.hpp>
#include <fiq/io.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace fiq::io {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> lines_of(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(std::move(line));
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  return out;
}

// "# a=1 b=2" -> {a: 1, b: 2}
std::map<std::string, std::string> comment_pairs(const std::string& line) {
  std::map<std::string, std::string> out;
  std::istringstream in(line.substr(1));
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError("malformed header token '" + tok + "'");
    out[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return out;
}

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::string string_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_string()) throw ConfigError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

double number_field(const Json& j, const char* key) { return json_number(field(j, key)); }

bool bool_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_boolean()) throw ConfigError(std::string("field '") + key + "' must be a boolean");
  return v.get<bool>();
}

std::size_t count_field(const Json& j, const char* key) {
  const Json& v = field(j, key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw ConfigError(std::string("field '") + key + "' must be a non-negative integer");
  return v.get<std::size_t>();
}

Json params_json(const std::map<std::string, double>& p) {
  Json j = Json::object();
  for (const auto& [k, v] : p) j[k] = number_json(v);
  return j;
}

std::map<std::string, double> params_from(const Json& j) {
  if (!j.is_object()) throw ConfigError("parameters must be an object");
  std::map<std::string, double> p;
  for (const auto& [k, v] : j.items()) p[k] = json_number(v);
  return p;
}

Json vector_json(const std::vector<double>& v) {
  Json j = Json::array();
  for (double x : v) j.push_back(number_json(x));
  return j;
}

std::vector<double> vector_from(const Json& j) {
  if (!j.is_array()) throw ConfigError("expected an array of numbers");
  std::vector<double> v;
  for (const auto& x : j) v.push_back(json_number(x));
  return v;
}

bool scalar(const Json& j) { return !j.is_object() && !j.is_array(); }

void dump(const Json& j, int indent, int depth, std::string& out) {
  const bool pretty = indent >= 0;
  const auto newline = [&](int d) {
    if (pretty) out += '\n' + std::string(std::size_t(indent * d), ' ');
  };
  switch (j.type()) {
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_number(v) : Json(format_number(v)).dump();
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) out += ',';
        first = false;
        newline(depth + 1);
        out += Json(k).dump();
        out += pretty ? ": " : ":";
        dump(v, indent, depth + 1, out);
      }
      newline(depth);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool inline_array = !pretty || std::all_of(j.begin(), j.end(), scalar);
      out += '[';
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += inline_array && pretty ? ", " : ",";
        first = false;
        if (!inline_array) newline(depth + 1);
        dump(v, indent, depth + 1, out);
      }
      if (!inline_array) newline(depth);
      out += ']';
      return;
    }
    default:
      out += j.dump();
  }
}

// Splits on separators outside double quotes; backslash escapes the next character inside quotes.
std::vector<std::pair<std::string, std::size_t>> split_outside_quotes(std::string_view s, std::string_view seps) {
  std::vector<std::pair<std::string, std::size_t>> parts;
  std::string cur;
  std::size_t start = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quoted && c == '\\' && i + 1 < s.size()) {
      cur += c;
      cur += s[++i];
      continue;
    }
    if (c == '"') quoted = !quoted;
    if (!quoted && seps.find(c) != std::string_view::npos) {
      parts.emplace_back(cur, start);
      cur.clear();
      start = i + 1;
      continue;
    }
    cur += c;
  }
  if (quoted) throw ConfigError("unterminated quote in '" + std::string(s) + "'");
  parts.emplace_back(cur, start);
  return parts;
}

std::string unquote(const std::string& v) {
  if (v.empty() || v.front() != '"') return v;
  if (v.size() < 2 || v.back() != '"') throw ConfigError("malformed quoted value " + v);
  std::string out;
  for (std::size_t i = 1; i + 1 < v.size(); ++i) {
    if (v[i] == '\\' && i + 2 < v.size()) ++i;
    else if (v[i] == '"') throw ConfigError("stray quote in " + v);
    out += v[i];
  }
  return out;
}

std::string quote(const std::string& v) {
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + '"';
}

std::string print_value(const std::string& v) {
  const bool plain = !v.empty() && v.find_first_of(" \t\"\\;=\n") == std::string::npos;
  return plain ? v : quote(v);
}

struct KeyValue {
  std::string key;
  std::string value;
};

std::vector<KeyValue> key_values(const std::string& directive) {
  std::vector<KeyValue> out;
  for (const auto& [tok, offset] : split_outside_quotes(directive, " \t")) {
    if (tok.empty()) continue;
    const auto eq = tok.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("expected key=value, got '" + tok + "'");
    out.push_back({tok.substr(0, eq), unquote(tok.substr(eq + 1))});
  }
  return out;
}

const std::map<std::string, std::set<std::string>>& family_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"cauchy", {"alpha", "d"}},
      {"subbotin", {"alpha", "d"}},
      {"gaussian", {"d"}},
      {"uniform_interval", {"a", "b"}},
      {"custom", {"V", "d", "heavy"}},
  };
  return keys;
}

const std::map<std::string, std::set<std::string>>& required_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"cauchy", {"alpha"}}, {"subbotin", {"alpha"}}, {"gaussian", {}}, {"uniform_interval", {"a", "b"}}, {"custom", {"V"}},
  };
  return keys;
}

int integer_value(const std::string& key, const std::string& v) {
  const double x = parse_number(v);
  if (x != std::floor(x) || x < 1 || x > 64) throw ConfigError(key + " must be a positive integer, got " + v);
  return static_cast<int>(x);
}

bool bool_value(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError(key + " must be true/false, got " + v);
}

Weight placeholder_weight(const std::string& tag, const std::map<std::string, double>& params) {
  return Weight(Field::values_only(
                    [tag](double) -> double {
                      throw ConfigError("weight '" + tag + "' cannot be rebuilt from its serialized form");
                    },
                    tag),
                tag, params);
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(std::string_view token) {
  const std::string t = trim(token);
  if (t == "inf" || t == "+inf") return kInf;
  if (t == "-inf") return -kInf;
  if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* b = t.data();
  const char* e = b + t.size();
  if (!t.empty() && *b == '+') ++b;
  const auto [p, ec] = std::from_chars(b, e, v);
  if (t.empty() || ec != std::errc() || p != e) throw ConfigError("not a number: '" + std::string(token) + "'");
  return v;
}

Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(format_number(v)); }

double json_number(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "-inf" || s == "nan") return parse_number(s);
  }
  throw ConfigError("expected a number, got " + j.dump());
}

std::string dump_json(const Json& j) {
  std::string out;
  dump(j, 2, 0, out);
  return out + '\n';
}

std::string dump_json_line(const Json& j) {
  std::string out;
  dump(j, -1, 0, out);
  return out;
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

std::string content_hash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_atomic(const std::string& path, std::string_view content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw ConfigError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw ConfigError("cannot rename onto '" + path + "': " + ec.message());
  }
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') out.back() += '"', ++i;
      else if (c == '"') quoted = false;
      else out.back() += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else {
      out.back() += c;
    }
  }
  if (quoted) throw ConfigError("unterminated quote in CSV line");
  return out;
}

// ---- measure specs ----

MeasureSpec MeasureSpec::parse(std::string_view text) {
  MeasureSpec spec;
  bool have_base = false;
  for (auto [raw, offset] : split_outside_quotes(text, ";\n")) {
    const std::string d = trim(raw);
    if (d.empty() || d.front() == '#') continue;
    const auto sp = d.find_first_of(" \t");
    const std::string head = d.substr(0, sp);
    const std::string rest = sp == std::string::npos ? std::string() : trim(d.substr(sp));
    if (head == "perturb" || head == "convolve" || head == "product") {
      if (!have_base) throw ConfigError("'" + head + "' needs a preceding family directive");
      if (head == "perturb") {
        const auto kv = key_values(rest);
        if (kv.size() != 1 || kv[0].key != "U") throw ConfigError("perturb takes exactly one key U");
        spec.steps.push_back({head, PotentialExpr::parse(kv[0].value).print()});
      } else {
        if (rest.rfind("with=", 0) != 0) throw ConfigError(head + " takes with=<spec>");
        std::string nested = trim(rest.substr(5));
        if (!nested.empty() && nested.front() == '"') nested = unquote(nested);
        spec.steps.push_back({head, MeasureSpec::parse(nested).print()});
      }
      continue;
    }
    if (have_base) throw ConfigError("unknown directive '" + head + "'");
    for (auto& [k, v] : key_values(d)) {
      if (spec.keys.count(k)) throw ConfigError("duplicate key '" + k + "'");
      spec.keys[k] = v;
    }
    have_base = true;
  }
  if (!have_base) throw ConfigError("empty measure spec");
  auto fam = spec.keys.find("family");
  if (fam == spec.keys.end()) throw ConfigError("measure spec needs family=");
  if (fam->second == "uniform") fam->second = "uniform_interval";
  const auto allowed = family_keys().find(fam->second);
  if (allowed == family_keys().end()) throw ConfigError("unknown family '" + fam->second + "'");
  for (const auto& [k, v] : spec.keys) {
    if (k == "family") continue;
    if (!allowed->second.count(k)) throw ConfigError("unknown key '" + k + "' for family " + fam->second);
    if (k == "V") spec.keys[k] = PotentialExpr::parse(v).print();
    else if (k == "d") integer_value(k, v);
    else if (k == "heavy") bool_value(k, v);
    else parse_number(v);
  }
  for (const auto& k : required_keys().at(fam->second))
    if (!spec.keys.count(k)) throw ConfigError("family " + fam->second + " needs " + k + "=");
  return spec;
}

std::string MeasureSpec::print() const {
  std::string out = "family=" + keys.at("family");
  for (const auto& [k, v] : keys)
    if (k != "family") out += " " + k + "=" + (k == "V" ? quote(v) : print_value(v));
  for (const auto& s : steps) out += "; " + s.op + (s.op == "perturb" ? " U=" : " with=") + quote(s.arg);
  return out;
}

Measure MeasureSpec::build() const {
  const std::string& fam = keys.at("family");
  const auto num = [&](const char* k, double def) {
    const auto it = keys.find(k);
    return it == keys.end() ? def : parse_number(it->second);
  };
  const auto d_it = keys.find("d");
  const int d = d_it == keys.end() ? 1 : integer_value("d", d_it->second);
  Measure m = [&] {
    if (fam == "cauchy") return Measure::cauchy(num("alpha", 0.0), d);
    if (fam == "subbotin") return Measure::subbotin(num("alpha", 0.0), d);
    if (fam == "gaussian") return Measure::gaussian(d);
    if (fam == "uniform_interval") return Measure::uniform(num("a", 0.0), num("b", 0.0));
    const auto h = keys.find("heavy");
    return Measure::custom(PotentialExpr::parse(keys.at("V")).potential(), d,
                           h != keys.end() && bool_value("heavy", h->second));
  }();
  for (const auto& s : steps) {
    if (s.op == "perturb") m = Measure::perturbed(m, PotentialExpr::parse(s.arg).potential());
    else if (s.op == "convolve") m = Measure::convolution(m, MeasureSpec::parse(s.arg).build());
    else m = Measure::product({m, MeasureSpec::parse(s.arg).build()});
  }
  return m;
}

Measure parse_measure(std::string_view text) { return MeasureSpec::parse(text).build(); }

// ---- weights ----

Weight parse_weight(std::string_view text) {
  const std::string t = trim(text);
  const auto sp = t.find_first_of(" \t");
  const std::string name = t.substr(0, sp);
  std::map<std::string, std::string> kv;
  if (sp != std::string::npos)
    for (auto& [k, v] : key_values(t.substr(sp))) {
      if (kv.count(k)) throw ConfigError("duplicate key '" + k + "'");
      kv[k] = v;
    }
  const auto expect = [&](std::set<std::string> keys) {
    for (const auto& [k, v] : kv)
      if (!keys.count(k)) throw ConfigError("unknown key '" + k + "' for weight " + name);
    for (const auto& k : keys)
      if (!kv.count(k)) throw ConfigError("weight " + name + " needs " + k + "=");
  };
  if (name == "unit" || name == "cauchy_optimal" || name == "cauchy_ls") {
    expect({});
    return weight_from_tag(name, {});
  }
  if (name == "subbotin_optimal") {
    expect({"alpha"});
    return Weight::subbotin_optimal(parse_number(kv["alpha"]));
  }
  if (name == "constant") {
    expect({"omega2"});
    return Weight::constant(parse_number(kv["omega2"]));
  }
  if (name == "expr") {
    expect({"omega2"});
    return weight_from_tag("expr(" + PotentialExpr::parse(kv["omega2"]).print() + ")", {});
  }
  throw ConfigError("unknown weight '" + name + "'");
}

Weight weight_from_tag(const std::string& tag, const std::map<std::string, double>& params) {
  const auto param = [&](const char* k) {
    const auto it = params.find(k);
    if (it == params.end()) throw ConfigError("weight '" + tag + "' needs parameter " + k);
    return it->second;
  };
  const auto only = [&](std::set<std::string> keys) {
    for (const auto& [k, v] : params)
      if (!keys.count(k)) throw ConfigError("weight '" + tag + "' cannot carry parameter " + k);
  };
  if (tag.size() > 3 && tag.ends_with("^-1")) {
    const Weight w = weight_from_tag(tag.substr(0, tag.size() - 3), params).reciprocal();
    if (w.tag() != tag) throw ConfigError("weight '" + tag + "' cannot be rebuilt");
    return w;
  }
  if (tag == "unit" && params.empty()) return Weight::unit();
  if (tag == "unit" || tag == "constant") {
    only({"omega2"});
    return Weight::constant(param("omega2"));
  }
  if (tag == "cauchy_optimal") {
    only({});
    return Weight::cauchy_optimal();
  }
  if (tag == "cauchy_ls") {
    only({});
    return Weight::cauchy_ls();
  }
  if (tag == "subbotin_optimal") {
    only({"alpha"});
    return Weight::subbotin_optimal(param("alpha"));
  }
  if (tag.starts_with("expr(") && tag.ends_with(")")) {
    only({});
    const auto e = PotentialExpr::parse(tag.substr(5, tag.size() - 6));
    return Weight(e.field(), "expr(" + e.print() + ")");
  }
  throw ConfigError("weight '" + tag + "' is not a named weight");
}

// ---- rates ----

namespace {

RateKind rate_kind_from_string(const std::string& s) {
  if (s == "weak_poincare") return RateKind::weak_poincare;
  if (s == "weak_log_sobolev") return RateKind::weak_log_sobolev;
  throw ConfigError("unknown rate kind '" + s + "'");
}

}  // namespace

std::string rate_csv(const RateFunction& r) {
  std::string out = "# kind=" + to_string(r.kind()) + "\ns,beta,provenance\n";
  const auto s = r.table_s(), b = r.table_beta();
  const std::string prov = csv_field(r.provenance());
  for (std::size_t i = 0; i < s.size(); ++i) out += format_number(s[i]) + "," + format_number(b[i]) + "," + prov + "\n";
  return out;
}

RateFunction read_rate_csv(std::string_view text) {
  RateKind kind = RateKind::weak_poincare;
  std::vector<double> s, b;
  std::string prov;
  bool header = false;
  for (const auto& line : lines_of(text)) {
    if (line.front() == '#') {
      const auto kv = comment_pairs(line);
      if (const auto it = kv.find("kind"); it != kv.end()) kind = rate_kind_from_string(it->second);
      continue;
    }
    const auto f = split_csv_line(line);
    if (!header) {
      if (f.size() < 2 || f[0] != "s" || f[1] != "beta") throw ConfigError("rate CSV needs columns s,beta[,provenance]");
      header = true;
      continue;
    }
    if (f.size() < 2) throw ConfigError("short rate CSV row: " + line);
    s.push_back(parse_number(f[0]));
    b.push_back(parse_number(f[1]));
    if (s.size() == 1 && f.size() > 2) prov = f[2];
  }
  if (!header) throw ConfigError("rate CSV has no header");
  return RateFunction::tabulated(std::move(s), std::move(b), kind, prov);
}

Json rate_json(const RateFunction& r) {
  Json j;
  j["kind"] = to_string(r.kind());
  j["provenance"] = r.provenance();
  if (r.representation() == RateFunction::Representation::closed_form) {
    j["representation"] = "closed_form";
    j["family"] = r.family();
    j["params"] = params_json(r.params());
  } else {
    j["representation"] = "tabulated";
    j["s"] = vector_json(r.table_s());
    j["beta"] = vector_json(r.table_beta());
  }
  return j;
}

RateFunction rate_from_json(const Json& j) {
  const auto kind = rate_kind_from_string(string_field(j, "kind"));
  const auto prov = string_field(j, "provenance");
  const auto rep = string_field(j, "representation");
  if (rep == "tabulated")
    return RateFunction::tabulated(vector_from(field(j, "s")), vector_from(field(j, "beta")), kind, prov);
  if (rep != "closed_form") throw ConfigError("unknown rate representation '" + rep + "'");
  const auto fam = string_field(j, "family");
  const auto p = params_from(field(j, "params"));
  const auto get = [&](const char* k) {
    const auto it = p.find(k);
    if (it == p.end()) throw ConfigError(std::string("closed-form rate needs parameter ") + k);
    return it->second;
  };
  if (fam == "power") return RateFunction::power(get("c"), get("p"), kind).with_provenance(prov);
  if (fam == "constant") return RateFunction::constant(get("c"), kind).with_provenance(prov);
  if (fam == "log_power") return RateFunction::log_power(get("c"), get("q"), kind).with_provenance(prov);
  throw ConfigError("unknown closed-form rate family '" + fam + "'");
}

RateFunction load_rate(const std::string& path) {
  const auto text = read_file(path);
  return path.ends_with(".json") ? rate_from_json(parse_json(text)) : read_rate_csv(text);
}

std::string rate_text(const RateFunction& r, const std::string& path) {
  return path.ends_with(".json") ? dump_json(rate_json(r)) : rate_csv(r);
}

// ---- certificates ----

CertificateRecord certificate_record(const LyapunovCertificate& cert) {
  CertificateRecord c;
  c.label = cert.label;
  c.variant = to_string(cert.variant);
  c.params = cert.params;
  c.b = cert.b;
  c.R = cert.R;
  c.theta = cert.theta;
  c.weight_tag = cert.weight.tag();
  c.weight_params = cert.weight.params();
  c.verified = cert.report.verified;
  c.max_violation = cert.report.max_violation;
  c.witness = cert.report.witness;
  c.min_F = cert.report.min_F;
  c.tolerance = cert.report.tolerance;
  c.points = cert.report.points;
  return c;
}

Json to_json(const CertificateRecord& c) {
  Json j;
  j["fields"] = {{"label", c.label},
                 {"variant", c.variant},
                 {"params", params_json(c.params)},
                 {"b", number_json(c.b)},
                 {"R", number_json(c.R)},
                 {"theta", number_json(c.theta)},
                 {"weight_tag", c.weight_tag},
                 {"weight_params", params_json(c.weight_params)}};
  j["status"] = c.verified ? "verified" : "failed";
  j["max_violation"] = number_json(c.max_violation);
  j["witness"] = number_json(c.witness);
  j["min_F"] = number_json(c.min_F);
  j["tolerance"] = number_json(c.tolerance);
  j["points"] = c.points;
  return j;
}

CertificateRecord certificate_from_json(const Json& j) {
  CertificateRecord c;
  const Json& f = field(j, "fields");
  c.label = string_field(f, "label");
  c.variant = string_field(f, "variant");
  c.params = params_from(field(f, "params"));
  c.b = number_field(f, "b");
  c.R = number_field(f, "R");
  c.theta = number_field(f, "theta");
  c.weight_tag = string_field(f, "weight_tag");
  c.weight_params = params_from(field(f, "weight_params"));
  const auto status = string_field(j, "status");
  if (status != "verified" && status != "failed") throw ConfigError("unknown certificate status '" + status + "'");
  c.verified = status == "verified";
  c.max_violation = number_field(j, "max_violation");
  c.witness = number_field(j, "witness");
  c.min_F = number_field(j, "min_F");
  c.tolerance = number_field(j, "tolerance");
  c.points = count_field(j, "points");
  return c;
}

// ---- weighted constants ----

ConstantKind constant_kind_from_string(const std::string& s) {
  if (s == "direct") return ConstantKind::direct;
  if (s == "converse") return ConstantKind::converse;
  if (s == "log_sobolev") return ConstantKind::log_sobolev;
  throw ConfigError("unknown constant kind '" + s + "'");
}

Json to_json(const WeightedConstant& c) {
  return {{"weight_tag", c.weight.tag()},     {"weight_params", params_json(c.weight.params())},
          {"params", params_json(c.params)},  {"value", number_json(c.value)},
          {"kind", to_string(c.kind)},        {"provenance", c.provenance}};
}

WeightedConstant constant_from_json(const Json& j) {
  WeightedConstant c;
  const auto tag = string_field(j, "weight_tag");
  const auto wp = params_from(field(j, "weight_params"));
  try {
    c.weight = weight_from_tag(tag, wp);
  } catch (const Error&) {
    c.weight = placeholder_weight(tag, wp);
  }
  c.params = params_from(field(j, "params"));
  c.value = number_field(j, "value");
  c.kind = constant_kind_from_string(string_field(j, "kind"));
  c.provenance = string_field(j, "provenance");
  return c;
}

// ---- reports ----

Json to_json(const InequalityReport& r) {
  return {{"kind", to_string(r.kind)},
          {"test_id", r.test_id},
          {"s", r.s ? number_json(*r.s) : Json(nullptr)},
          {"lhs", number_json(r.lhs)},
          {"rhs", number_json(r.rhs)},
          {"margin", number_json(r.margin)},
          {"pass", r.pass}};
}

InequalityReport report_from_json(const Json& j) {
  InequalityReport r;
  try {
    r.kind = inequality_kind_from_string(string_field(j, "kind"));
  } catch (const BadParameter& e) {
    throw ConfigError(e.what());
  }
  r.test_id = string_field(j, "test_id");
  if (!field(j, "s").is_null()) r.s = number_field(j, "s");
  r.lhs = number_field(j, "lhs");
  r.rhs = number_field(j, "rhs");
  r.margin = number_field(j, "margin");
  r.pass = bool_field(j, "pass");
  return r;
}

std::string reports_jsonl(const std::vector<InequalityReport>& reports) {
  std::string out;
  for (const auto& r : reports) out += dump_json_line(to_json(r)) + "\n";
  return out;
}

std::vector<InequalityReport> read_reports_jsonl(std::string_view text) {
  std::vector<InequalityReport> out;
  for (const auto& line : lines_of(text)) out.push_back(report_from_json(parse_json(line)));
  return out;
}

std::string summary_csv(const std::vector<ReportSummary>& summaries) {
  std::string out = "kind,passes,failures,worst_margin\n";
  for (const auto& s : summaries)
    out += to_string(s.kind) + "," + std::to_string(s.passes) + "," + std::to_string(s.failures) + "," +
           format_number(s.worst_margin) + "\n";
  return out;
}

std::vector<ReportSummary> read_summary_csv(std::string_view text) {
  const auto lines = lines_of(text);
  if (lines.empty() || lines[0] != "kind,passes,failures,worst_margin") throw ConfigError("summary CSV header mismatch");
  std::vector<ReportSummary> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = split_csv_line(lines[i]);
    if (f.size() != 4) throw ConfigError("summary CSV row needs 4 fields: " + lines[i]);
    ReportSummary s;
    try {
      s.kind = inequality_kind_from_string(f[0]);
    } catch (const BadParameter& e) {
      throw ConfigError(e.what());
    }
    const double p = parse_number(f[1]), q = parse_number(f[2]);
    if (p < 0 || q < 0 || p != std::floor(p) || q != std::floor(q)) throw ConfigError("summary counts must be integers");
    s.passes = static_cast<std::size_t>(p);
    s.failures = static_cast<std::size_t>(q);
    s.worst_margin = parse_number(f[3]);
    out.push_back(s);
  }
  return out;
}

// ---- trajectories ----

std::string trajectory_csv(const DecayTrajectory& traj) {
  std::string out = "# fitted_rate=" + format_number(traj.fitted_rate) + " fit_t0=" + format_number(traj.fit_t0) +
                    " fit_t1=" + format_number(traj.fit_t1) + " taming_fraction=" +
                    format_number(traj.taming_fraction) + "\nt,var,ci\n";
  for (std::size_t k = 0; k < traj.times.size(); ++k)
    out += format_number(traj.times[k]) + "," + format_number(traj.var[k]) + "," + format_number(traj.ci[k]) + "\n";
  return out;
}

DecayTrajectory read_trajectory_csv(std::string_view text) {
  DecayTrajectory traj;
  bool header = false;
  for (const auto& line : lines_of(text)) {
    if (line.front() == '#') {
      for (const auto& [k, v] : comment_pairs(line)) {
        if (k == "fitted_rate") traj.fitted_rate = parse_number(v);
        else if (k == "fit_t0") traj.fit_t0 = parse_number(v);
        else if (k == "fit_t1") traj.fit_t1 = parse_number(v);
        else if (k == "taming_fraction") traj.taming_fraction = parse_number(v);
        else throw ConfigError("unknown trajectory header key '" + k + "'");
      }
      continue;
    }
    const auto f = split_csv_line(line);
    if (!header) {
      if (f != std::vector<std::string>{"t", "var", "ci"}) throw ConfigError("trajectory CSV needs columns t,var,ci");
      header = true;
      continue;
    }
    if (f.size() != 3) throw ConfigError("trajectory row needs 3 fields: " + line);
    traj.times.push_back(parse_number(f[0]));
    traj.var.push_back(parse_number(f[1]));
    traj.ci.push_back(parse_number(f[2]));
  }
  if (!header) throw ConfigError("trajectory CSV has no header");
  return traj;
}

// ---- result records ----

Json to_json(const SpectralEstimate& e) {
  return {{"value", number_json(e.value)}, {"error", number_json(e.error)}, {"coarse", number_json(e.coarse)},
          {"fine", number_json(e.fine)},   {"cells", e.cells},              {"sector", e.sector}};
}

SpectralEstimate spectral_from_json(const Json& j) {
  SpectralEstimate e;
  e.value = number_field(j, "value");
  e.error = number_field(j, "error");
  e.coarse = number_field(j, "coarse");
  e.fine = number_field(j, "fine");
  e.cells = count_field(j, "cells");
  e.sector = string_field(j, "sector");
  return e;
}

Json to_json(const CapacityEstimate& e) {
  return {{"value", number_json(e.value)},
          {"refined", number_json(e.refined)},
          {"rel_change", number_json(e.rel_change)},
          {"set_mass", number_json(e.set_mass)}};
}

CapacityEstimate capacity_from_json(const Json& j) {
  CapacityEstimate e;
  e.value = number_field(j, "value");
  e.refined = number_field(j, "refined");
  e.rel_change = number_field(j, "rel_change");
  e.set_mass = number_field(j, "set_mass");
  return e;
}

Json to_json(const EntropyQuotient& e) {
  return {{"value", number_json(e.value)},
          {"argmax", e.argmax},
          {"unbounded_trend", e.unbounded_trend},
          {"sweep_r", vector_json(e.sweep_r)},
          {"sweep", vector_json(e.sweep)}};
}

EntropyQuotient entropy_from_json(const Json& j) {
  EntropyQuotient e;
  e.value = number_field(j, "value");
  e.argmax = string_field(j, "argmax");
  e.unbounded_trend = bool_field(j, "unbounded_trend");
  e.sweep_r = vector_from(field(j, "sweep_r"));
  e.sweep = vector_from(field(j, "sweep"));
  return e;
}

Json to_json(const DecayCheck& c) {
  return {{"pass", c.pass},
          {"fitted_rate", number_json(c.fitted_rate)},
          {"predicted_rate", number_json(c.predicted_rate)},
          {"worst_excess", number_json(c.worst_excess)},
          {"worst_time", number_json(c.worst_time)}};
}

DecayCheck decay_check_from_json(const Json& j) {
  DecayCheck c;
  c.pass = bool_field(j, "pass");
  c.fitted_rate = number_field(j, "fitted_rate");
  c.predicted_rate = number_field(j, "predicted_rate");
  c.worst_excess = number_field(j, "worst_excess");
  c.worst_time = number_field(j, "worst_time");
  return c;
}

Json to_json(const StationarityReport& r) {
  return {{"pass", r.pass}, {"ks", number_json(r.ks)}, {"critical", number_json(r.critical)}, {"n", r.n}};
}

StationarityReport stationarity_from_json(const Json& j) {
  StationarityReport r;
  r.pass = bool_field(j, "pass");
  r.ks = number_field(j, "ks");
  r.critical = number_field(j, "critical");
  r.n = count_field(j, "n");
  return r;
}

// ---- manifests ----

Json to_json(const RunManifest& m) {
  Json seeds = Json::array();
  for (auto s : m.seeds) seeds.push_back(s);
  Json hashes = Json::object();
  for (const auto& [k, v] : m.input_hashes) hashes[k] = v;
  return {{"command", m.command}, {"config", m.config}, {"seeds", seeds}, {"version", m.version},
          {"input_hashes", hashes}};
}

RunManifest manifest_from_json(const Json& j) {
  RunManifest m;
  m.command = string_field(j, "command");
  m.config = field(j, "config");
  if (!m.config.is_object()) throw ConfigError("manifest config must be an object");
  for (const auto& s : field(j, "seeds")) {
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0))
      throw ConfigError("seeds must be non-negative integers");
    m.seeds.push_back(s.get<std::uint64_t>());
  }
  m.version = string_field(j, "version");
  for (const auto& [k, v] : field(j, "input_hashes").items()) {
    if (!v.is_string()) throw ConfigError("input hashes must be strings");
    m.input_hashes[k] = v.get<std::string>();
  }
  return m;
}

}  // namespace fiq::io
