#include <fiq/cli.hpp>
#include <fiq/errors.hpp>

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

using fiq::io::Json;

struct Slot {
  std::string raw;
  bool on = false;
  std::vector<double> list;
};

std::string alias(const std::string& name) {
  std::string dashed = name;
  for (char& c : dashed)
    if (c == '_') c = '-';
  return dashed == name ? "--" + name : "--" + name + ",--" + dashed;
}

Json value_of(const fiq::cli::OptionSpec& o, const Slot& s) {
  using T = fiq::cli::OptionType;
  switch (o.type) {
    case T::text: return s.raw;
    case T::number: return fiq::io::number_json(fiq::io::parse_number(s.raw));
    case T::count: {
      const double v = fiq::io::parse_number(s.raw);
      if (!(v >= 0) || v != std::floor(v) || v > 1e18) throw fiq::ConfigError("--" + o.name + " must be a count");
      return static_cast<std::uint64_t>(v);
    }
    case T::flag: return s.on;
    case T::numbers: return s.list;
  }
  return nullptr;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fiq: weak and weighted functional inequalities"};
  app.set_version_flag("--version", fiq::cli::kVersion);
  app.require_subcommand(1);

  std::map<std::string, std::map<std::string, Slot>> slots;
  std::map<std::string, CLI::Option*> handles;
  for (const auto& cmd : fiq::cli::commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    for (const auto& o : cmd.options) {
      auto& s = slots[cmd.name][o.name];
      CLI::Option* h = nullptr;
      if (o.type == fiq::cli::OptionType::flag) h = sub->add_flag(alias(o.name), s.on, o.help);
      else if (o.type == fiq::cli::OptionType::numbers) h = sub->add_option(alias(o.name), s.list, o.help)->delimiter(',');
      else h = sub->add_option(alias(o.name), s.raw, o.help);
      if (o.required) h->required();
      handles[cmd.name + "/" + o.name] = h;
    }
  }
  std::string manifest_path, replay_dir;
  auto* replay = app.add_subcommand("replay", "rerun a manifest, writing every output into a directory");
  replay->add_option("manifest", manifest_path, "manifest JSON")->required();
  replay->add_option("--dir", replay_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (replay->parsed()) {
      const auto m = fiq::io::manifest_from_json(fiq::io::parse_json(fiq::io::read_file(manifest_path)));
      return fiq::cli::replay(m, replay_dir, std::cout);
    }
    for (const auto& cmd : fiq::cli::commands()) {
      if (!app.got_subcommand(cmd.name)) continue;
      Json config = Json::object();
      for (const auto& o : cmd.options)
        if (handles[cmd.name + "/" + o.name]->count() > 0) config[o.name] = value_of(o, slots[cmd.name][o.name]);
      return fiq::cli::run(cmd.name, config, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
