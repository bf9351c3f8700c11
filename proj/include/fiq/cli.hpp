#pragma once

#include <fiq/io.hpp>

#include <ostream>
#include <string>
#include <vector>

namespace fiq::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class OptionType { text, number, count, flag, numbers };

struct OptionSpec {
  std::string name;
  OptionType type = OptionType::text;
  io::Json fallback;  // null: optional with no default
  bool required = false;
  std::string help;
};

struct CommandSpec {
  std::string name;
  std::string help;
  std::vector<OptionSpec> options;
};

const std::vector<CommandSpec>& commands();
const CommandSpec& command(const std::string& name);

// Checks option names and types, fills defaults and canonicalizes the measure spec.
io::Json resolve_config(const std::string& command, const io::Json& config);

// Runs a command: writes its outputs and the manifest, prints a short report to out. Returns 0, or 2
// when a mathematical check failed (outputs are still written). Errors are thrown.
int run(const std::string& command, const io::Json& config, std::ostream& out);

// Reruns a manifest with every output path moved into dir. Inputs must match the recorded hashes.
int replay(const io::RunManifest& manifest, const std::string& dir, std::ostream& out);

}  // namespace fiq::cli
