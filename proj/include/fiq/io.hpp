#pragma once

#include <fiq/dynamics.hpp>
#include <fiq/empirical.hpp>
#include <fiq/lyapunov.hpp>
#include <fiq/measures.hpp>
#include <fiq/rates.hpp>
#include <fiq/weight.hpp>
#include <fiq/weights.hpp>

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace fiq::io {

using Json = nlohmann::json;

// 17 significant digits; non-finite values as inf, -inf, nan.
std::string format_number(double v);
// Strict: the whole token must be a number (or inf, -inf, nan). ConfigError otherwise.
double parse_number(std::string_view token);

// Finite numbers become JSON numbers, the rest the strings of format_number.
Json number_json(double v);
double json_number(const Json& j);
// Canonical text: sorted keys, two-space indent, numbers with 17 significant digits, trailing newline.
std::string dump_json(const Json& j);
// Single line, no trailing newline.
std::string dump_json_line(const Json& j);
Json parse_json(std::string_view text);

// 64-bit FNV-1a as 16 hex digits.
std::string content_hash(std::string_view bytes);

std::string read_file(const std::string& path);
// Writes a sibling temporary file and renames it over the target.
void write_atomic(const std::string& path, std::string_view content);

// CSV fields, quoted when they contain a comma, quote or newline.
std::string csv_field(std::string_view s);
std::vector<std::string> split_csv_line(std::string_view line);

// Measure-spec text: directives separated by newlines or ';'. The first directive names the family
// (family=cauchy alpha=2 d=1); later ones modify it: perturb U="<expr>", convolve with="<spec>",
// product with="<spec>". Values may be double-quoted with backslash escapes.
struct MeasureSpec {
  struct Step {
    std::string op;   // perturb, convolve or product
    std::string arg;  // the potential expression, or the nested spec in canonical form
    bool operator==(const Step&) const = default;
  };
  std::map<std::string, std::string> keys;
  std::vector<Step> steps;

  static MeasureSpec parse(std::string_view text);
  // Canonical single-line text that parses back to an equal spec.
  std::string print() const;
  Measure build() const;
  bool operator==(const MeasureSpec&) const = default;
};

Measure parse_measure(std::string_view text);

// Weight text: a name followed by key=value pairs, e.g. "subbotin_optimal alpha=0.5" or
// "expr omega2=\"1+x^2\"".
Weight parse_weight(std::string_view text);
// Rebuilds one of the named weights from its tag and parameters; ConfigError for other tags.
Weight weight_from_tag(const std::string& tag, const std::map<std::string, double>& params);

// Rates. CSV: a "# kind=..." line, then columns s, beta, provenance on the tabulation nodes.
// JSON: closed forms keep their family and parameters, everything else is written as its table.
std::string rate_csv(const RateFunction& r);
RateFunction read_rate_csv(std::string_view text);
Json rate_json(const RateFunction& r);
RateFunction rate_from_json(const Json& j);
// Dispatches on the extension (.json or CSV otherwise).
RateFunction load_rate(const std::string& path);
std::string rate_text(const RateFunction& r, const std::string& path);

// Lyapunov certificates: the data and the verification outcome.
struct CertificateRecord {
  std::string label;
  std::string variant;
  std::map<std::string, double> params;
  double b = 0.0;
  double R = 0.0;
  double theta = 0.0;
  std::string weight_tag;
  std::map<std::string, double> weight_params;
  bool verified = false;
  double max_violation = 0.0;
  double witness = 0.0;
  double min_F = 0.0;
  double tolerance = 0.0;
  std::size_t points = 0;
  bool operator==(const CertificateRecord&) const = default;
};
CertificateRecord certificate_record(const LyapunovCertificate& cert);
Json to_json(const CertificateRecord& c);
CertificateRecord certificate_from_json(const Json& j);

// WeightedConstant as {weight_tag, weight_params, params, value, kind, provenance}. Named weights are
// rebuilt; other tags are kept with a weight that raises ConfigError when evaluated.
Json to_json(const WeightedConstant& c);
WeightedConstant constant_from_json(const Json& j);
ConstantKind constant_kind_from_string(const std::string& s);

// Inequality reports as JSON lines, summaries as CSV (kind, passes, failures, worst_margin).
Json to_json(const InequalityReport& r);
InequalityReport report_from_json(const Json& j);
std::string reports_jsonl(const std::vector<InequalityReport>& reports);
std::vector<InequalityReport> read_reports_jsonl(std::string_view text);
std::string summary_csv(const std::vector<ReportSummary>& summaries);
std::vector<ReportSummary> read_summary_csv(std::string_view text);

// Trajectories as CSV (t, var, ci) after a "# key=value" line with the fit data.
std::string trajectory_csv(const DecayTrajectory& traj);
DecayTrajectory read_trajectory_csv(std::string_view text);

Json to_json(const SpectralEstimate& e);
SpectralEstimate spectral_from_json(const Json& j);
Json to_json(const CapacityEstimate& e);
CapacityEstimate capacity_from_json(const Json& j);
Json to_json(const EntropyQuotient& e);
EntropyQuotient entropy_from_json(const Json& j);
Json to_json(const DecayCheck& c);
DecayCheck decay_check_from_json(const Json& j);
Json to_json(const StationarityReport& r);
StationarityReport stationarity_from_json(const Json& j);

struct RunManifest {
  std::string command;
  Json config;  // every option of the command, defaults resolved
  std::vector<std::uint64_t> seeds;
  std::string version;
  std::map<std::string, std::string> input_hashes;
  bool operator==(const RunManifest&) const = default;
};
Json to_json(const RunManifest& m);
RunManifest manifest_from_json(const Json& j);

}  // namespace fiq::io
