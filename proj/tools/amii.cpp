// SPDX-License-Identifier: Apache-2.0
//
// amii: synth | preprocess | train | infer | eval | ablate
//
// Every key of a subcommand can come from --config <file> (key=value lines)
// or from a --<key> flag; flags win.

#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "amii/cli/commands.hpp"

namespace {

using amii::cli::Settings;

int run(const std::string& name, const std::string& config_path, const Settings& flags) {
  const Settings file = config_path.empty() ? Settings{} : amii::cli::load_settings(config_path);
  std::ostream* log = &std::cerr;
  if (name == "synth") {
    amii::cli::cmd_synth(amii::cli::resolve(amii::cli::synth_spec(), file, flags), log);
  } else if (name == "preprocess") {
    amii::cli::cmd_preprocess(amii::cli::resolve(amii::cli::preprocess_spec(), file, flags), log);
  } else if (name == "train") {
    std::cout << amii::cli::cmd_train(amii::cli::resolve(amii::cli::train_spec(), file, flags), log).string() << '\n';
  } else if (name == "infer") {
    std::cout << amii::cli::cmd_infer(amii::cli::resolve(amii::cli::infer_spec(), file, flags), log).string() << '\n';
  } else if (name == "eval") {
    std::cout << amii::metrics::report_summary(
        amii::cli::cmd_eval(amii::cli::resolve(amii::cli::eval_spec(), file, flags), nullptr));
  } else if (name == "ablate") {
    std::cout << amii::cli::cmd_ablate(amii::cli::resolve(amii::cli::ablate_spec(), file, flags), log).table;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AMII: dyadic facial gesture synthesis"};
  app.require_subcommand(1);
  std::map<std::string, std::string> config_paths;
  std::map<std::string, std::map<std::string, std::string>> values;
  for (const auto* spec : amii::cli::all_commands()) {
    auto* sub = app.add_subcommand(spec->name, spec->summary);
    sub->add_option("--config", config_paths[spec->name], "key=value config file");
    for (const auto& key : spec->keys) {
      std::string help = key.help;
      if (!key.fallback.empty()) help += " [" + key.fallback + "]";
      sub->add_option("--" + key.key, values[spec->name][key.key], help);
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Bad flags are configuration errors; --help exits cleanly.
    return app.exit(e) == 0 ? 0 : amii::exit_code_for(amii::ErrorKind::kConfig);
  }

  const std::string name = app.get_subcommands().front()->get_name();
  Settings flags;
  auto* sub = app.get_subcommand(name);
  for (const auto& [key, value] : values[name])
    if (sub->count("--" + key) > 0) flags[key] = value;

  try {
    return run(name, config_paths[name], flags);
  } catch (const amii::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return amii::exit_code_for(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
