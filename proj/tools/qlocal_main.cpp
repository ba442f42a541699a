// Command-line front end: run and validate experiment configs, browse the
// model registry. Exit codes: 0 success, 1 failed physics assertion,
// 2 config or usage error.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qlocal/experiment.hpp"
#include "qlocal/models.hpp"

namespace {

void print_card(const qlocal::models::ModelCard& c) {
  std::printf("%s\n  %s\n", c.name.c_str(), c.summary.c_str());
  if (!c.params.empty()) {
    std::printf("  parameters:\n");
    for (const auto& p : c.params)
      std::printf("    %-8s = %-10g %s\n", p.name.c_str(), p.value,
                  p.doc.c_str());
  }
  std::printf("  volumes: %s\n", c.volume_note.c_str());
  if (!c.facts.empty()) std::printf("  facts: %s\n", c.facts.c_str());
  if (!c.stresses.empty()) std::printf("  stresses: %s\n", c.stresses.c_str());
}

int do_run(const std::string& config, const qlocal::experiment::Overrides& ov) {
  auto oc = qlocal::experiment::run_file(config, ov);
  if (oc.cache_hit) std::printf("cache hit, artifacts restored\n");
  std::printf("artifacts: %s\n", oc.out_dir.c_str());
  if (oc.ok) {
    std::printf("overall: PASS\n");
    return 0;
  }
  std::printf("overall: FAIL\n");
  for (const auto& f : oc.failures) std::printf("  FAIL %s\n", f.c_str());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"certified finite-volume dynamics of dissipative lattice models"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  int threads = 0;
  std::uint64_t seed = 0;
  bool has_seed = false;

  CLI::App* run = app.add_subcommand("run", "execute an experiment config");
  run->add_option("--config", config, "JSON experiment config")->required();
  run->add_option("--out", out, "output directory override");
  run->add_option("--threads", threads, "worker thread override");
  run->add_option("--seed-override", seed, "RNG seed override")
      ->each([&](const std::string&) { has_seed = true; });

  CLI::App* val = app.add_subcommand("validate", "check a config without running");
  val->add_option("--config", config, "JSON experiment config")->required();
  val->add_option("--out", out, "output directory override");
  val->add_option("--threads", threads, "worker thread override");
  val->add_option("--seed-override", seed, "RNG seed override")
      ->each([&](const std::string&) { has_seed = true; });

  CLI::App* mod = app.add_subcommand("models", "model registry");
  CLI::App* mod_list = mod->add_subcommand("list", "list model names");
  std::string name;
  CLI::App* mod_show = mod->add_subcommand("show", "print one model card");
  mod_show->add_option("name", name, "model name")->required();
  mod->require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  qlocal::experiment::Overrides ov;
  if (!out.empty()) ov.out = out;
  if (threads > 0) ov.threads = threads;
  if (has_seed) ov.seed = seed;

  try {
    if (run->parsed()) return do_run(config, ov);
    if (val->parsed()) {
      auto oc = qlocal::experiment::validate_file(config, ov);
      std::printf("ok: config is valid (artifacts would go to %s)\n",
                  oc.out_dir.c_str());
      return 0;
    }
    if (mod_list->parsed()) {
      for (const auto& c : qlocal::models::cards())
        std::printf("%-18s %s\n", c.name.c_str(), c.summary.c_str());
      return 0;
    }
    if (mod_show->parsed()) {
      print_card(qlocal::models::card(name));
      return 0;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
