// Command-line front end. All functionality lives behind the C API in
// libslak; this binary only parses arguments and forwards.

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

#include "slak/slak.h"

namespace {

int check(slak_status status) {
  if (status == SLAK_OK) return 0;
  std::fprintf(stderr, "error (%s): %s\n", slak_status_name(status), slak_last_error());
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SLAK: location-based knowledge graph learning with agent-chosen meta-paths"};
  app.require_subcommand(1);
  app.set_version_flag("--version", slak_version());

  // gen-synth
  std::string spec_path, gen_out;
  CLI::App* gen = app.add_subcommand("gen-synth", "Generate a synthetic planted-signal dataset");
  gen->add_option("--spec", spec_path, "Synthetic spec JSON")->required();
  gen->add_option("--out", gen_out, "Output dataset directory")->required();

  // run
  std::string run_config, run_data, run_out, round = "all";
  bool mock_agents = false;
  std::vector<std::string> ablate;
  CLI::App* run = app.add_subcommand("run", "Train round 1 and/or round 2 on a dataset");
  run->add_option("--config", run_config, "Experiment config JSON")->required();
  run->add_option("--data", run_data, "Dataset directory")->required();
  run->add_option("--out", run_out, "Run output directory (e.g. runs/demo)")->required();
  run->add_option("--round", round, "Which rounds to run: 1, 2 or all")
      ->check(CLI::IsMember({"1", "2", "all"}));
  run->add_flag("--mock-agents", mock_agents, "Use deterministic fixture-driven agents");
  run->add_option("--ablate", ablate,
                  "Ablation flags (no_self_update, no_rec, no_trans, no_attn)")
      ->delimiter(',');

  // search
  std::string algo, search_config, search_data, search_out;
  CLI::App* search = app.add_subcommand("search", "Meta-path search baselines");
  search->add_option("--algo", algo, "ga or random")
      ->required()
      ->check(CLI::IsMember({"ga", "random"}));
  search->add_option("--config", search_config, "Experiment config JSON")->required();
  search->add_option("--data", search_data, "Dataset directory")->required();
  search->add_option("--out", search_out, "Output directory (default runs/search-<algo>)");

  // report
  std::string report_run;
  CLI::App* report = app.add_subcommand("report", "Aggregate a finished run into tables");
  report->add_option("--run", report_run, "Run directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) return check(slak_gen_synth(spec_path.c_str(), gen_out.c_str()));
  if (run->parsed()) {
    std::string ablate_csv;
    for (size_t i = 0; i < ablate.size(); ++i) {
      if (i) ablate_csv += ',';
      ablate_csv += ablate[i];
    }
    return check(slak_run(run_config.c_str(), run_data.c_str(), run_out.c_str(), round.c_str(),
                          mock_agents ? 1 : 0, ablate_csv.c_str()));
  }
  if (search->parsed()) {
    if (search_out.empty()) search_out = "runs/search-" + algo;
    return check(
        slak_search(algo.c_str(), search_config.c_str(), search_data.c_str(), search_out.c_str()));
  }
  if (report->parsed()) return check(slak_report(report_run.c_str()));
  return 1;
}
