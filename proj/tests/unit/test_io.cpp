#include <doctest.h>

#include <fiq/errors.hpp>
#include <fiq/io.hpp>
#include <fiq/random.hpp>

#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>

using namespace fiq;
using io::Json;

namespace {

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "fiq_io_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

std::string random_spec(CounterRng& rng, int depth) {
  const auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
  const auto alpha = [&] { return std::to_string(pick(7) + 1) + "." + std::to_string(pick(10)); };
  std::string s;
  switch (pick(5)) {
    case 0: s = "family=cauchy alpha=" + alpha() + (pick(2) ? " d=" + std::to_string(pick(3) + 1) : ""); break;
    case 1: s = "family=subbotin alpha=0." + std::to_string(pick(9) + 1); break;
    case 2: s = "family=gaussian" + std::string(pick(2) ? " d=2" : ""); break;
    case 3: s = "family=uniform a=-" + alpha() + " b=" + alpha(); break;
    default: s = "family=custom V=\"0.5*ln(1+x^" + std::to_string(2 * (pick(2) + 1)) + ")\" heavy=1"; break;
  }
  if (pick(3) == 0) s += "; perturb U=\"" + std::to_string(pick(3)) + "*ln(1+|x|)\"";
  if (depth > 0 && pick(4) == 0) s += pick(2) ? "\nconvolve with=family=cauchy alpha=1" : "; product with=\"family=gaussian\"";
  return s;
}

}  // namespace

TEST_CASE("numbers round-trip exactly through 17 significant digits") {
  CounterRng rng(5, 0);
  for (int i = 0; i < 20000; ++i) {
    const double v = std::bit_cast<double>(rng());
    if (std::isnan(v)) continue;
    CHECK(std::bit_cast<std::uint64_t>(io::parse_number(io::format_number(v))) == std::bit_cast<std::uint64_t>(v));
    const Json j = io::parse_json(io::dump_json_line(io::number_json(v)));
    CHECK(std::bit_cast<std::uint64_t>(io::json_number(j)) == std::bit_cast<std::uint64_t>(v));
  }
  CHECK(io::format_number(0.1) == "0.10000000000000001");
  CHECK(io::format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::isinf(io::parse_number("-inf")));
  CHECK(std::isnan(io::parse_number("nan")));
  CHECK(io::parse_number("+2.5") == 2.5);
  for (const char* bad : {"", "1x", "x", "1,2", "--1", "0x10"}) CHECK_THROWS_AS(io::parse_number(bad), ConfigError);
}

TEST_CASE("canonical JSON text") {
  const Json j = {{"b", io::number_json(0.1)}, {"a", Json::array({1, 2})}, {"c", io::number_json(-INFINITY)}};
  CHECK(io::dump_json(j) == "{\n  \"a\": [1, 2],\n  \"b\": 0.10000000000000001,\n  \"c\": \"-inf\"\n}\n");
  CHECK(io::dump_json_line(j) == "{\"a\":[1,2],\"b\":0.10000000000000001,\"c\":\"-inf\"}");
  CHECK(io::parse_json(io::dump_json(j)) == j);
  CHECK_THROWS_AS(io::parse_json("{"), ConfigError);
  CHECK(io::content_hash("") == "cbf29ce484222325");
  CHECK(io::content_hash("a") == "af63dc4c8601ec8c");
}

TEST_CASE("CSV fields") {
  for (const std::string s : {"plain", "a,b", "say \"hi\"", "", "x,\"y\",z"}) {
    const auto line = io::csv_field(s) + "," + io::csv_field("tail");
    const auto f = io::split_csv_line(line);
    REQUIRE(f.size() == 2);
    CHECK(f[0] == s);
    CHECK(f[1] == "tail");
  }
  CHECK_THROWS_AS(io::split_csv_line("\"open"), ConfigError);
}

TEST_CASE("atomic writes replace the target and leave no temporaries") {
  const auto p = scratch("atomic/out.txt");
  std::filesystem::remove_all(p.parent_path());
  io::write_atomic(p.string(), "first");
  io::write_atomic(p.string(), "second");
  CHECK(io::read_file(p.string()) == "second");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : std::filesystem::directory_iterator(p.parent_path())) ++files;
  CHECK(files == 1);
  CHECK_THROWS_AS(io::read_file(scratch("missing.txt").string()), ConfigError);
}

TEST_CASE("measure specs") {
  const auto spec = io::MeasureSpec::parse("family=cauchy alpha=2 d=1");
  CHECK(spec.print() == "family=cauchy alpha=2 d=1");
  const Measure m = spec.build();
  CHECK(m.family() == Family::cauchy);
  CHECK(m.alpha() == 2.0);
  for (double t : {0.0, 1.5, -40.0}) CHECK(m.density(t) == doctest::Approx(Measure::cauchy(2.0).density(t)).epsilon(1e-14));

  const auto p = io::MeasureSpec::parse("family=cauchy alpha=2\nperturb U=\"0.5*ln(1+x^2)\"");
  REQUIRE(p.steps.size() == 1);
  const Measure pm = p.build();
  CHECK(pm.family() == Family::perturbed);
  // e^{-U} cauchy(2) with U = ln(1+x^2)/2 is cauchy(3).
  for (double t : {0.0, 2.0}) CHECK(pm.density(t) == doctest::Approx(Measure::cauchy(3.0).density(t)).epsilon(1e-8));

  const auto c = io::MeasureSpec::parse("family=cauchy alpha=1; convolve with=family=cauchy alpha=3");
  CHECK(c.build().family() == Family::convolution);
  CHECK(io::MeasureSpec::parse(c.print()) == c);
  CHECK(io::MeasureSpec::parse("family=uniform a=0 b=1").keys.at("family") == "uniform_interval");
  CHECK(io::parse_measure("family=custom V=\"x^2/2\"").density(0.0) == doctest::Approx(1.0 / std::sqrt(2 * M_PI)));

  for (const char* bad : {"", "alpha=2", "family=cauchy", "family=cauchy alpha=2 bogus=1", "family=levy alpha=1",
                          "family=cauchy alpha=2 alpha=3", "family=cauchy alpha=two", "family=gaussian d=1.5",
                          "perturb U=\"x\"", "family=gaussian; rotate by=1", "family=gaussian; perturb V=\"x\"",
                          "family=gaussian; convolve family=cauchy alpha=1", "family=cauchy alpha=\"2"})
    CHECK_THROWS_AS(io::MeasureSpec::parse(bad), ConfigError);
  CHECK_THROWS_AS(io::MeasureSpec::parse("family=gaussian; perturb U=\"ln(x\""), SyntaxError);
}

TEST_CASE("fuzzed measure specs parse, print and build") {
  CounterRng rng(2024, 0);
  for (int i = 0; i < 1000; ++i) {
    const auto src = random_spec(rng, 1);
    const auto spec = io::MeasureSpec::parse(src);
    const auto again = io::MeasureSpec::parse(spec.print());
    CHECK(again == spec);
    CHECK(again.print() == spec.print());
  }
  // Building is slower; a sample suffices.
  for (int i = 0; i < 40; ++i) {
    const auto m = io::parse_measure(random_spec(rng, 0));
    CHECK(m.density(0.5) > 0.0);
  }
  // Corrupted specs raise ConfigError or SyntaxError and nothing else.
  const std::string alphabet = "=; \"\\familycauchyd0123.xUperturb";
  for (int i = 0; i < 1000; ++i) {
    std::string s = random_spec(rng, 1);
    for (int k = 0; k < 3; ++k) s[rng() % s.size()] = alphabet[rng() % alphabet.size()];
    try {
      (void)io::MeasureSpec::parse(s);
    } catch (const ConfigError&) {
    } catch (const SyntaxError&) {
    }
  }
}

TEST_CASE("weight specs and tags") {
  CHECK(io::parse_weight("unit").is_unit());
  CHECK(io::parse_weight("cauchy_optimal").omega2(3.0) == 10.0);
  CHECK(io::parse_weight("subbotin_optimal alpha=0.5").omega2(3.0) == doctest::Approx(1.0 + 4.0));
  CHECK(io::parse_weight("constant omega2=4").omega2(1.0) == 4.0);
  const Weight e = io::parse_weight("expr omega2=\"1+x^2\"");
  CHECK(e.omega2(2.0) == 5.0);
  CHECK(io::weight_from_tag(e.tag(), e.params()).omega2(2.0) == 5.0);
  const Weight r = io::weight_from_tag("cauchy_optimal^-1", {});
  CHECK(r.omega2(1.0) == 0.5);
  CHECK(r.tag() == "cauchy_optimal^-1");
  for (const char* bad : {"", "cauchy_optimal alpha=1", "subbotin_optimal", "wobbly", "constant omega2=x"})
    CHECK_THROWS_AS(io::parse_weight(bad), ConfigError);
  CHECK_THROWS_AS(io::weight_from_tag("constructed_from_rate", {{"x0", 0.0}}), ConfigError);
}

TEST_CASE("rates round-trip through CSV and JSON") {
  const auto closed = RateFunction::power(2.5, 1.0);
  const auto logp = RateFunction::log_power(1.5, 2.0, RateKind::weak_log_sobolev);
  const auto comp = rate_scale(closed, 2.0);
  const auto tab = RateFunction::tabulate([](double s) { return 1.0 / std::sqrt(s); }, RateKind::weak_poincare, "a, \"quoted\" table");
  for (const auto& r : {closed, logp, comp, tab}) {
    const auto csv = io::rate_csv(r);
    const auto back = io::read_rate_csv(csv);
    CHECK(io::content_hash(io::rate_csv(back)) == io::content_hash(csv));
    CHECK(back.kind() == r.kind());
    CHECK(back.provenance() == r.provenance());
    const auto nodes = r.table_s();
    for (std::size_t i = 0; i < nodes.size(); i += 17) CHECK(back(nodes[i]) == doctest::Approx(r(nodes[i])).epsilon(1e-14));

    const auto json = io::dump_json(io::rate_json(r));
    const auto jback = io::rate_from_json(io::parse_json(json));
    CHECK(io::dump_json(io::rate_json(jback)) == json);
    CHECK(jback(0.01) == doctest::Approx(r(0.01)).epsilon(1e-14));
  }
  CHECK(io::rate_from_json(io::rate_json(closed)).representation() == RateFunction::Representation::closed_form);
  CHECK(io::rate_from_json(io::rate_json(closed))(0.2) == closed(0.2));
  CHECK_THROWS_AS(io::read_rate_csv("x,y\n1,2\n"), ConfigError);
  CHECK_THROWS_AS(io::read_rate_csv("s,beta\n0.1,1\n0.2,2\n"), NotMonotone);
}

TEST_CASE("certificates, constants and reports round-trip") {
  const Measure m = Measure::cauchy(2.0);
  const auto rec = io::certificate_record(default_certificate(m));
  CHECK(rec.verified);
  const auto jr = io::to_json(rec);
  CHECK(jr.at("status") == "verified");
  CHECK(io::certificate_from_json(io::parse_json(io::dump_json(jr))) == rec);

  for (const auto& wc : {cauchy_weighted_constant(4.0, 1), cauchy_converse_constant(5.0, 3),
                         converse_weighted_from_capacity(explicit_weight_from_rate(builtin_rate(Family::cauchy, 4.0), Measure::cauchy(4.0)), 1.0)}) {
    const auto text = io::dump_json(io::to_json(wc));
    const auto back = io::constant_from_json(io::parse_json(text));
    CHECK(io::dump_json(io::to_json(back)) == text);
    CHECK(back.value == wc.value);
    if (wc.weight.tag().starts_with("cauchy")) CHECK(back.weight.omega2(2.0) == wc.weight.omega2(2.0));
    else CHECK_THROWS_AS(back.weight.omega2(2.0), ConfigError);
  }

  std::vector<InequalityReport> reports{make_report(InequalityKind::weak_poincare, "f, \"g\"", 0.1, 1.0, 2.0),
                                        make_report(InequalityKind::converse_poincare, "h", std::nullopt, 3.0, 2.0)};
  const auto jl = io::reports_jsonl(reports);
  const auto rback = io::read_reports_jsonl(jl);
  REQUIRE(rback.size() == 2);
  CHECK(io::reports_jsonl(rback) == jl);
  CHECK_FALSE(rback[1].s.has_value());
  CHECK_FALSE(rback[1].pass);
  const auto sm = io::summary_csv(summarize(reports));
  CHECK(io::summary_csv(io::read_summary_csv(sm)) == sm);
  CHECK_THROWS_AS(io::read_reports_jsonl("{\"kind\":\"weak_poincare\"}\n"), ConfigError);
}

TEST_CASE("trajectories, estimates and manifests round-trip") {
  DecayTrajectory t;
  t.times = {0.0, 0.5, 1.0};
  t.var = {1.0, 0.3678794411714423, 0.1353352832366127};
  t.ci = {0.01, 0.02, 0.003};
  t.fitted_rate = 2.0000000000000004;
  t.fit_t1 = 1.0;
  t.taming_fraction = 1e-7;
  const auto csv = io::trajectory_csv(t);
  const auto tb = io::read_trajectory_csv(csv);
  CHECK(tb.var == t.var);
  CHECK(tb.fitted_rate == t.fitted_rate);
  CHECK(io::trajectory_csv(tb) == csv);

  const auto same = [](const Json& j, auto reader) { CHECK(io::to_json(reader(io::parse_json(io::dump_json(j)))) == j); };
  same(io::to_json(SpectralEstimate{0.4052847, 1e-9, 0.40528, 0.405284, 4096, "line"}), io::spectral_from_json);
  same(io::to_json(CapacityEstimate{4.0, 4.0000001, 2.5e-8, 0.25}), io::capacity_from_json);
  same(io::to_json(EntropyQuotient{2.0, "tilt", true, {1.0, 1.7}, {0.5, INFINITY}}), io::entropy_from_json);
  same(io::to_json(DecayCheck{true, 6.1, 6.0, -0.01, 0.05}), io::decay_check_from_json);
  same(io::to_json(StationarityReport{true, 0.01, 0.025, 4096}), io::stationarity_from_json);

  io::RunManifest mf{"simulate", Json{{"seed", 7}, {"dt", 0.001}}, {7}, "0.1.0", {{"measure", "00ff"}}};
  const auto text = io::dump_json(io::to_json(mf));
  CHECK(io::manifest_from_json(io::parse_json(text)) == mf);
  CHECK(io::dump_json(io::to_json(io::manifest_from_json(io::parse_json(text)))) == text);
}
