#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chemdist/runner.hpp"

using nlohmann::json;

namespace {

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

json parse_point(const std::string& text) {
  json out = json::array();
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find(',', start);
    const auto part = text.substr(start, end == std::string::npos ? std::string::npos : end - start);
    out.push_back(std::stoi(part));
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return out;
}

struct Inline {
  std::string config_file;
  std::vector<std::string> sets;
  std::optional<int> d, L, threads;
  std::optional<double> p;
  std::optional<std::string> seed, out, source, target;
  bool verbose = false;
};

void add_common(CLI::App* sub, Inline& opt) {
  sub->add_option("--config", opt.config_file, "JSON config file")->check(CLI::ExistingFile);
  sub->add_option("--set", opt.sets, "Override a config entry, key=value (value parsed as JSON when possible)");
  sub->add_option("--d", opt.d, "Dimension");
  sub->add_option("--L", opt.L, "Half-side of the box [-L, L]^d");
  sub->add_option("--p", opt.p, "Edge-open probability");
  sub->add_option("--seed", opt.seed, "Master seed (64-bit)");
  sub->add_option("--out", opt.out, "Output directory");
  sub->add_option("--threads", opt.threads, "Worker threads (default: CHEMDIST_THREADS or hardware)");
  sub->add_flag("--verbose", opt.verbose, "Write audit files where available");
}

json build_config(const Inline& opt) {
  json config = json::object();
  if (!opt.config_file.empty()) {
    std::ifstream in(opt.config_file);
    config = json::parse(in);
    if (!config.is_object()) throw std::invalid_argument("config file must hold a JSON object");
  }
  if (opt.d) config["d"] = *opt.d;
  if (opt.L) config["L"] = *opt.L;
  if (opt.p) config["p"] = *opt.p;
  if (opt.seed) config["seed"] = parse_value(*opt.seed);
  if (opt.out) config["out"] = *opt.out;
  if (opt.threads) config["threads"] = *opt.threads;
  if (opt.verbose) config["verbose"] = true;
  if (opt.source) config["source"] = parse_point(*opt.source);
  if (opt.target) config["target"] = parse_point(*opt.target);
  for (const auto& kv : opt.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    config[kv.substr(0, eq)] = parse_value(kv.substr(eq + 1));
  }
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Supercritical bond percolation: chemical distance experiments"};
  app.set_version_flag("--version", std::string(CHEMDIST_VERSION));
  app.require_subcommand(1);

  Inline opt;
  std::string chosen;
  for (const auto& name : chemdist::experiment_names()) {
    auto* sub = app.add_subcommand(name);
    add_common(sub, opt);
    if (name == "dist") {
      sub->add_option("--source", opt.source, "Source vertex, comma separated (default origin)");
      sub->add_option("--target", opt.target, "Target vertex, comma separated");
    }
    sub->callback([&chosen, name] { chosen = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : chemdist::kExitInvalid;
  }

  json config;
  try {
    config = build_config(opt);
  } catch (const std::exception& e) {
    std::cerr << "chemdist " << chosen << ": invalid configuration: " << e.what() << '\n';
    return chemdist::kExitInvalid;
  }
  return chemdist::run(chosen, config, std::cout, std::cerr);
}
