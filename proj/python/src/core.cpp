#include <fiq/cli.hpp>
#include <fiq/empirical.hpp>
#include <fiq/errors.hpp>
#include <fiq/io.hpp>
#include <fiq/weights.hpp>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>
#include <string>
#include <utility>

namespace py = pybind11;
using fiq::io::Json;

namespace {

// JSON crosses the boundary as text in the tool's canonical form.
std::string dump(const Json& j) { return fiq::io::dump_json(j); }

std::pair<int, std::string> run(const std::string& command, const std::string& config) {
  std::ostringstream out;
  const int code = fiq::cli::run(command, fiq::io::parse_json(config), out);
  return {code, out.str()};
}

std::string resolve_config(const std::string& command, const std::string& config) {
  return dump(fiq::cli::resolve_config(command, fiq::io::parse_json(config)));
}

std::string canonical_measure(const std::string& spec) { return fiq::io::MeasureSpec::parse(spec).print(); }

std::string spectral_constant(const std::string& measure, const std::string& weight, std::size_t cells) {
  return dump(fiq::io::to_json(
      fiq::spectral_constant(fiq::io::parse_measure(measure), fiq::io::parse_weight(weight), cells)));
}

std::string cauchy_weighted_constant(double alpha, int d) {
  return dump(fiq::io::to_json(fiq::cauchy_weighted_constant(alpha, d)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Weak and weighted functional inequality toolkit";
  // Translators run newest first, so the derived error is registered last.
  py::register_exception<fiq::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<fiq::ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("version", [] { return std::string(fiq::cli::kVersion); });
  m.def("run", &run, py::arg("command"), py::arg("config"),
        "Run a tool command with a JSON config; returns (exit code, printed report).");
  m.def("resolve_config", &resolve_config, py::arg("command"), py::arg("config"));
  m.def("canonical_measure", &canonical_measure, py::arg("spec"));
  m.def("spectral_constant", &spectral_constant, py::arg("measure"), py::arg("weight") = "unit",
        py::arg("cells") = 4096);
  m.def("cauchy_weighted_constant", &cauchy_weighted_constant, py::arg("alpha"), py::arg("d") = 1);
}
