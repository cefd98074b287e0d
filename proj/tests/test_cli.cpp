#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"

using namespace slak;
using namespace slak::testing;

namespace {

int run_cli(const std::string& args) {
  std::string cmd = std::string(SLAK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

// Small synthetic spec + config pair for fast end-to-end CLI checks.
void write_mini_spec(const std::string& path) {
  std::ostringstream spec;
  spec << R"({
  "name": "mini", "seed": 5, "split_seed": 2,
  "schema": ")" << default_schema_path() << R"(",
  "entities": {"Region": 30, "POI": 120, "Category1": 4, "Category2": 8, "Category3": 12,
               "Brand": 16, "BusinessArea": 5},
  "default_degree": [1, 2],
  "degrees": {"Has": [4, 4], "HasBrandOf": [0, 2], "Competitive": [0, 2], "Contain": [3, 6]},
  "planted": {
    "population": [{"path": "Region -[Has]-> POI -[HasBrandOf]-> Brand", "weight": 2.0}],
    "user_activity": [{"path": "Region -[Has]-> POI -[Competitive]-> POI", "weight": 2.0}]
  },
  "noise_std": {"population": 1.0, "user_activity": 1.0}
})";
  write_file(path, spec.str());
}

void write_mini_config(const std::string& path) {
  std::ostringstream config;
  config << R"({
  "d_h": 8, "L": 2, "lr": 0.01, "weight_decay": 0.001, "embed_lr_scale": 0.01,
  "max_epochs": 25, "patience": 24, "n_p": 3, "seed": 9,
  "normalization": "none", "global_normalization": "mean",
  "fixtures_dir": ")" << source_dir() << R"(/fixtures/agents",
  "task_descriptions": ")" << source_dir() << R"(/fixtures/task_descriptions.tsv",
  "workers": 2,
  "search": {"indicator": "population", "seed": 3, "generations": 2, "population": 5,
             "mutation_rate": 0.1, "iterations": 2, "per_iter": 3}
})";
  write_file(path, config.str());
}

}  // namespace

TEST_CASE("cli: the whole surface on a miniature dataset") {
  TempDir tmp("cli");
  write_mini_spec(tmp.file("spec.json"));
  write_mini_config(tmp.file("config.json"));

  SUBCASE("bad invocations exit nonzero") {
    CHECK(run_cli("") != 0);
    CHECK(run_cli("frobnicate") != 0);
    CHECK(run_cli("gen-synth --spec /nonexistent.json --out " + tmp.file("x")) != 0);
    CHECK(run_cli("report --run /nonexistent_run_dir") != 0);

    // a spec whose planted path can have no instances is rejected
    std::string broken = read_file(tmp.file("spec.json"));
    size_t pos = broken.find("\"HasBrandOf\": [0, 2]");
    REQUIRE(pos != std::string::npos);
    broken.replace(pos, std::strlen("\"HasBrandOf\": [0, 2]"), "\"HasBrandOf\": [0, 0]");
    write_file(tmp.file("broken_spec.json"), broken);
    CHECK(run_cli("gen-synth --spec " + tmp.file("broken_spec.json") + " --out " +
                  tmp.file("broken_ds")) != 0);
  }

  SUBCASE("gen-synth is deterministic; run and report complete; round 2 needs round 1") {
    REQUIRE(run_cli("gen-synth --spec " + tmp.file("spec.json") + " --out " + tmp.file("ds")) ==
            0);
    CHECK(file_exists(tmp.file("ds/manifest.json")));
    REQUIRE(run_cli("gen-synth --spec " + tmp.file("spec.json") + " --out " + tmp.file("ds2")) ==
            0);
    for (const char* name : {"entities.tsv", "facts.tsv", "indicators.csv", "manifest.json"})
      CHECK(sha256_file_hex(tmp.file("ds/") + name) == sha256_file_hex(tmp.file("ds2/") + name));

    // round 2 before round 1: nonzero exit naming the missing artifact
    CHECK(run_cli("run --config " + tmp.file("config.json") + " --data " + tmp.file("ds") +
                  " --out " + tmp.file("run") + " --round 2 --mock-agents") != 0);

    REQUIRE(run_cli("run --config " + tmp.file("config.json") + " --data " + tmp.file("ds") +
                    " --out " + tmp.file("run") + " --round 1 --mock-agents") == 0);
    for (const char* task : {"population", "user_activity"}) {
      CHECK(file_exists(tmp.file("run/round1/") + task + "/metrics.json"));
      CHECK(file_exists(tmp.file("run/round1/") + task + "/embeddings.bin"));
      CHECK(file_exists(tmp.file("run/round1/") + task + "/metapaths.txt"));
      CHECK(file_exists(tmp.file("run/round1/") + task + "/attention.csv"));
      CHECK(file_exists(tmp.file("run/round1/") + task + "/checkpoint.bin"));
    }

    REQUIRE(run_cli("run --config " + tmp.file("config.json") + " --data " + tmp.file("ds") +
                    " --out " + tmp.file("run") + " --round 2 --mock-agents") == 0);
    CHECK(file_exists(tmp.file("run/round2/population/metrics.json")));
    CHECK(file_exists(tmp.file("run/manifest.json")));

    REQUIRE(run_cli("report --run " + tmp.file("run")) == 0);
    CHECK(file_exists(tmp.file("run/report/report.csv")));
    CHECK(file_exists(tmp.file("run/report/report.txt")));
    CHECK(file_exists(tmp.file("run/report/per_region_errors.csv")));
    std::string first = read_file(tmp.file("run/report/report.csv"));
    REQUIRE(run_cli("report --run " + tmp.file("run")) == 0);
    CHECK(read_file(tmp.file("run/report/report.csv")) == first);  // idempotent

    // ablation flag lands in the manifest and removes the cross-task report rows
    REQUIRE(run_cli("run --config " + tmp.file("config.json") + " --data " + tmp.file("ds") +
                    " --out " + tmp.file("run_ablate") +
                    " --round all --mock-agents --ablate no_trans") == 0);
    std::string manifest = read_file(tmp.file("run_ablate/manifest.json"));
    CHECK(manifest.find("\"no_trans\": true") != std::string::npos);
    std::string attention = read_file(tmp.file("run_ablate/round2/population/attention.csv"));
    CHECK(attention.find("crosstask") == std::string::npos);
    std::string attention_full = read_file(tmp.file("run/round2/population/attention.csv"));
    CHECK(attention_full.find("crosstask") != std::string::npos);
  }

  SUBCASE("search subcommand writes history and best individual") {
    REQUIRE(run_cli("gen-synth --spec " + tmp.file("spec.json") + " --out " + tmp.file("sds")) ==
            0);
    REQUIRE(run_cli("search --algo ga --config " + tmp.file("config.json") + " --data " +
                    tmp.file("sds") + " --out " + tmp.file("ga_out")) == 0);
    CHECK(file_exists(tmp.file("ga_out/history.csv")));
    REQUIRE(run_cli("search --algo random --config " + tmp.file("config.json") + " --data " +
                    tmp.file("sds") + " --out " + tmp.file("search_out")) == 0);
    std::string history = read_file(tmp.file("search_out/history.csv"));
    size_t records = 0;
    std::istringstream in(history);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#' && line.rfind("generation", 0) != 0) ++records;
    CHECK(records == 2 * 3);  // iterations x per_iter from the mini config
    CHECK(file_exists(tmp.file("search_out/best.txt")));
    CHECK(file_exists(tmp.file("search_out/manifest.json")));
  }
}
