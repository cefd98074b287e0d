#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "slak/agents.hpp"
#include "slak/dataio.hpp"
#include "slak/model.hpp"
#include "slak/search.hpp"

namespace slak {

extern const char* kVersion;

// Experiment configuration: the SLAK model settings plus runner plumbing.
// JSON keys mirror the field names; relative paths are resolved against the
// config file's directory.
struct RunnerConfig {
  SlakConfig model;
  std::string fixtures_dir;            // mock-agent fixtures
  std::string task_descriptions_path;  // optional TSV `indicator<TAB>text`
  int workers = 0;                     // 0 = one per task

  struct SearchConfig {
    std::string indicator = "user_activity";
    uint64_t seed = 7;
    int generations = 6;
    int population = 5;
    double mutation_rate = 0.10;
    int iterations = 6;  // random search
    int per_iter = 5;
  } search;

  static RunnerConfig load(const std::string& path);
};

// Built-in one-sentence task descriptions, overridable via the config's
// task_descriptions file.
std::map<std::string, std::string> default_task_descriptions();

enum class RoundSelection { One, Two, All };
RoundSelection round_selection_from_string(const std::string& s);

// `gen-synth`: synthetic dataset generation into a directory.
void cmd_gen_synth(const std::string& spec_path, const std::string& out_dir);

// `run`: Round 1 and/or Round 2 of the training algorithm, per task, with
// mock or remote agents. Writes per-task metrics, embeddings, transcripts,
// attention reports, and a replayable manifest under `out_dir`.
void cmd_run(const std::string& config_path, const std::string& data_dir,
             const std::string& out_dir, RoundSelection rounds, bool mock_agents,
             const std::vector<std::string>& ablate_flags);

// `search`: meta-path search baselines with model-R^2 fitness.
void cmd_search(const std::string& algo, const std::string& config_path,
                const std::string& data_dir, const std::string& out_dir);

// `report`: aggregates a finished run directory into tables; a pure function
// of the run directory.
void cmd_report(const std::string& run_dir);

// Region-embedding files saved per task at the best epoch (consumed by
// round 2): binary, region ids + row-major float64 matrix.
void save_embeddings(const std::string& path, const std::vector<std::string>& region_ids,
                     const Tensor& embeddings);
Tensor load_embeddings(const std::string& path, const std::vector<std::string>& region_ids);

}  // namespace slak
