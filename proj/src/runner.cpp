#include "slak/runner.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>
#include <thread>

#include "slak/optim.hpp"

namespace slak {

using nlohmann::json;
namespace fs = std::filesystem;

const char* kVersion = "0.1.0";

namespace {

std::string resolve_relative(const std::string& base_file, const std::string& path) {
  if (path.empty()) return path;
  fs::path p(path);
  if (p.is_absolute()) return path;
  return (fs::path(base_file).parent_path() / p).string();
}

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

RunnerConfig RunnerConfig::load(const std::string& path) {
  RunnerConfig c;
  c.model = SlakConfig::from_json_text(read_file(path));
  json doc = json::parse(read_file(path), nullptr, true, /*ignore_comments=*/true);
  c.fixtures_dir = resolve_relative(path, doc.value("fixtures_dir", ""));
  c.task_descriptions_path = resolve_relative(path, doc.value("task_descriptions", ""));
  c.workers = doc.value("workers", 0);
  if (doc.contains("search")) {
    const json& s = doc["search"];
    c.search.indicator = s.value("indicator", c.search.indicator);
    c.search.seed = s.value("seed", c.search.seed);
    c.search.generations = s.value("generations", c.search.generations);
    c.search.population = s.value("population", c.search.population);
    c.search.mutation_rate = s.value("mutation_rate", c.search.mutation_rate);
    c.search.iterations = s.value("iterations", c.search.iterations);
    c.search.per_iter = s.value("per_iter", c.search.per_iter);
  }
  return c;
}

std::map<std::string, std::string> default_task_descriptions() {
  return {
      {"population", "Predict the resident population of an urban region."},
      {"commercial",
       "Predict the commercial activity of an urban region, reflected by the number of firms."},
      {"user_activity",
       "Predict the user activity of an urban region, reflected by the total number of reviews "
       "of its restaurants."},
      {"rating", "Predict the average user rating of restaurants in an urban region."},
  };
}

RoundSelection round_selection_from_string(const std::string& s) {
  if (s == "1") return RoundSelection::One;
  if (s == "2") return RoundSelection::Two;
  if (s == "all") return RoundSelection::All;
  fail(ErrorKind::Invalid, "unknown round selection `" + s + "` (expected 1|2|all)");
}

void cmd_gen_synth(const std::string& spec_path, const std::string& out_dir) {
  SyntheticSpec spec = SyntheticSpec::load(spec_path);
  SyntheticDataset dataset = generate_synthetic(spec);
  write_synthetic_dataset(spec, dataset, out_dir);
}

namespace {

constexpr char kEmbeddingsMagic[] = "SLAKEMB1";

std::map<std::string, std::string> load_task_descriptions(const RunnerConfig& config) {
  std::map<std::string, std::string> out = default_task_descriptions();
  if (config.task_descriptions_path.empty()) return out;
  std::istringstream in(read_file(config.task_descriptions_path));
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto fields = split(t, '\t');
    if (fields.size() != 2)
      fail(ErrorKind::Parse, config.task_descriptions_path +
                                 ": expected `indicator<TAB>description`");
    out[trim(fields[0])] = trim(fields[1]);
  }
  return out;
}

struct TaskArtifacts {
  std::string dir;  // runs/<name>/round<k>/<task>
  TrainResult result;
  std::vector<MetaPathSchema> metapaths;
};

void write_predictions_csv(const std::string& path, const LoadedDataset& data,
                           const Split& split, const std::vector<double>& truth,
                           const std::vector<double>& pred) {
  std::vector<std::string> split_of(data.region_ids.size(), "train");
  for (int i : split.val) split_of[static_cast<size_t>(i)] = "val";
  for (int i : split.test) split_of[static_cast<size_t>(i)] = "test";
  std::ostringstream out;
  out.precision(17);
  out << "region_id,split,y_true,y_pred,abs_error\n";
  for (size_t i = 0; i < data.region_ids.size(); ++i)
    out << data.region_ids[i] << ',' << split_of[i] << ',' << truth[i] << ',' << pred[i] << ','
        << std::fabs(pred[i] - truth[i]) << '\n';
  write_file(path, out.str());
}

void write_attention_csv(const std::string& path, const std::vector<MetaPathSchema>& paths,
                         const Tensor& alpha, const std::vector<std::string>& other_tasks,
                         const Tensor& cross_alpha) {
  std::ostringstream out;
  out.precision(17);
  out << "kind,index,label,path,mean,min,max\n";
  auto emit = [&out](const std::string& kind, size_t i, const std::string& label,
                     const std::string& text, const Tensor& a) {
    double mn = 1.0, mx = 0.0, sum = 0.0;
    for (size_t j = 0; j < a.rows(); ++j) {
      double v = a.at(j, i);
      mn = std::min(mn, v);
      mx = std::max(mx, v);
      sum += v;
    }
    out << kind << ',' << i << ',' << label << ',' << text << ','
        << sum / static_cast<double>(a.rows()) << ',' << mn << ',' << mx << '\n';
  };
  for (size_t i = 0; i < paths.size(); ++i) {
    MetaPathSchema bare = paths[i];
    bare.label.clear();
    emit("metapath", i, paths[i].label, format_metapath(bare), alpha);
  }
  if (cross_alpha.rows() > 0)
    for (size_t i = 0; i < other_tasks.size(); ++i)
      emit("crosstask", i, other_tasks[i], "", cross_alpha);
  write_file(path, out.str());
}

void write_metrics_json(const std::string& path, const std::string& indicator, int round,
                        const TrainResult& result, const std::vector<MetaPathSchema>& paths,
                        const Split& split) {
  json doc;
  doc["indicator"] = indicator;
  doc["round"] = round;
  doc["best_epoch"] = result.best_epoch;
  doc["epochs_run"] = result.epochs_run;
  doc["best_val_mse_z"] = result.best_val_mse;
  doc["val"] = {{"mae", result.val.mae}, {"rmse", result.val.rmse}, {"r2", result.val.r2}};
  doc["test"] = {{"mae", result.test.mae}, {"rmse", result.test.rmse}, {"r2", result.test.r2}};
  doc["n_train"] = split.train.size();
  doc["n_val"] = split.val.size();
  doc["n_test"] = split.test.size();
  json mp = json::array();
  for (const auto& p : paths) {
    MetaPathSchema bare = p;
    bare.label.clear();
    mp.push_back(format_metapath(bare));
  }
  doc["metapaths"] = mp;
  write_file(path, doc.dump(2) + "\n");
}

void write_task_artifacts(const std::string& dir, const std::string& indicator, int round,
                          const LoadedDataset& data, const Split& split,
                          const std::vector<double>& truth, const TrainResult& result,
                          const std::vector<MetaPathSchema>& paths,
                          const std::vector<std::string>& other_tasks) {
  ensure_dir(dir);
  write_metrics_json(dir + "/metrics.json", indicator, round, result, paths, split);
  save_metapath_file(dir + "/metapaths.txt", paths);
  write_predictions_csv(dir + "/predictions.csv", data, split, truth, result.all_pred);
  write_attention_csv(dir + "/attention.csv", paths, result.alpha, other_tasks,
                      result.cross_alpha);
  save_embeddings(dir + "/embeddings.bin", data.region_ids, result.region_embeddings);
  ParameterSet best;
  for (const auto& [name, value] : result.parameters) best.add(name, value);
  save_checkpoint(dir + "/checkpoint.bin", best);
}

// Runs one job per task on a small worker pool; rethrows the first failure.
void run_parallel(const std::vector<std::function<void()>>& jobs, int workers) {
  if (workers <= 0) workers = static_cast<int>(jobs.size());
  workers = std::min<int>(workers, static_cast<int>(jobs.size()));
  if (workers <= 1) {
    for (const auto& job : jobs) job();
    return;
  }
  std::vector<std::future<void>> futures;
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      jobs[i]();
    }
  };
  for (int w = 0; w < workers; ++w) futures.push_back(std::async(std::launch::async, worker));
  std::exception_ptr first_error;
  for (auto& f : futures) {
    try {
      f.get();
    } catch (...) {
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

void save_embeddings(const std::string& path, const std::vector<std::string>& region_ids,
                     const Tensor& embeddings) {
  if (embeddings.rows() != region_ids.size())
    fail(ErrorKind::Invalid, "save_embeddings: row count != region count");
  std::string out;
  out.append(kEmbeddingsMagic, 8);
  put_u32(out, static_cast<uint32_t>(embeddings.rows()));
  put_u32(out, static_cast<uint32_t>(embeddings.cols()));
  for (const std::string& id : region_ids) {
    put_u16(out, static_cast<uint16_t>(id.size()));
    out += id;
  }
  for (double v : embeddings.data()) put_f64(out, v);
  write_file(path, out);
}

Tensor load_embeddings(const std::string& path, const std::vector<std::string>& region_ids) {
  if (!file_exists(path)) fail(ErrorKind::Io, "missing embeddings file: " + path);
  std::string blob = read_file(path);
  ByteReader r(blob, path);
  if (r.bytes(8) != kEmbeddingsMagic)
    fail(ErrorKind::Io, path + ": not an embeddings file (bad magic)");
  uint32_t n = r.u32();
  uint32_t d = r.u32();
  if (n != region_ids.size())
    fail(ErrorKind::Validation, path + ": region count " + std::to_string(n) +
                                    " != dataset regions " + std::to_string(region_ids.size()));
  for (uint32_t i = 0; i < n; ++i) {
    std::string id = r.bytes(r.u16());
    if (id != region_ids[i])
      fail(ErrorKind::Validation,
           path + ": region order mismatch at row " + std::to_string(i) + " (`" + id +
               "` vs `" + region_ids[i] + "`)");
  }
  Tensor t(n, d);
  for (double& v : t.data()) v = r.f64();
  return t;
}

void cmd_run(const std::string& config_path, const std::string& data_dir,
             const std::string& out_dir, RoundSelection rounds, bool mock_agents,
             const std::vector<std::string>& ablate_flags) {
  auto t_start = std::chrono::steady_clock::now();
  RunnerConfig config = RunnerConfig::load(config_path);
  for (const std::string& flag : ablate_flags) {
    if (flag == "no_self_update") config.model.ablation.no_self_update = true;
    else if (flag == "no_rec") config.model.ablation.no_rec = true;
    else if (flag == "no_trans") config.model.ablation.no_trans = true;
    else if (flag == "no_attn") config.model.ablation.no_attn = true;
    else fail(ErrorKind::Invalid, "unknown ablation flag `" + flag + "`");
  }

  LoadedDataset data = load_dataset_dir(data_dir);
  std::vector<std::string> tasks = data.indicators.indicators();
  if (tasks.empty()) fail(ErrorKind::Invalid, "dataset has no indicators");
  std::map<std::string, std::string> descriptions = load_task_descriptions(config);

  std::unique_ptr<ChatClient> chat;
  if (mock_agents || !RemoteChatClient::env_configured()) {
    if (!mock_agents && !RemoteChatClient::env_configured())
      fail(ErrorKind::Invalid,
           "LLM_ENDPOINT is not set: pass --mock-agents (mock mode is mandatory without "
           "remote credentials)");
    if (config.fixtures_dir.empty())
      fail(ErrorKind::Invalid, "mock agents require `fixtures_dir` in the config");
    chat = std::make_unique<MockChatClient>(config.fixtures_dir);
  } else {
    chat = RemoteChatClient::from_env();
  }
  EmbeddingProvider provider = EmbeddingProvider::from_env(out_dir + "/cache/embeddings");

  ensure_dir(out_dir);
  Split split = split_regions(data.region_ids.size(),
                              SplitSpec{0.6, 0.2, 0.2, Rng::fanout(config.model.seed, "split")
                                                           .next_u64()});

  json timings = json::object();
  bool run_round1 = rounds != RoundSelection::Two;
  bool run_round2 = rounds != RoundSelection::One;

  if (run_round1) {
    auto t_round = std::chrono::steady_clock::now();
    // Agent proposals are sequential (one conversation each); training runs
    // in parallel workers.
    std::map<std::string, std::vector<MetaPathSchema>> proposals;
    for (const std::string& task : tasks) {
      std::string desc = descriptions.count(task) ? descriptions[task] : task;
      AgentTranscript t = propose_metapaths(*chat, data.schema, task, desc, config.model.n_p);
      std::string task_dir = out_dir + "/round1/" + task;
      ensure_dir(task_dir + "/transcripts");
      save_transcript(task_dir + "/transcripts/propose.txt", t);
      proposals[task] = t.accepted;
    }
    std::vector<std::function<void()>> jobs;
    for (const std::string& task : tasks) {
      jobs.push_back([&, task]() {
        TaskContext ctx;
        ctx.indicator = task;
        ctx.metapaths = proposals.at(task);
        ctx.description = descriptions.count(task) ? descriptions.at(task) : task;
        std::vector<double> truth = data.indicators.values(task, data.region_ids);
        SlakConfig task_config = config.model;
        task_config.seed = Rng::fanout(config.model.seed, "train:round1:" + task).next_u64();
        TrainResult result =
            train_single(ctx, data.kg, data.region_ids, truth, split, task_config, provider);
        write_task_artifacts(out_dir + "/round1/" + task, task, 1, data, split, truth, result,
                             ctx.metapaths, {});
      });
    }
    run_parallel(jobs, config.workers);
    timings["round1_ms"] = ms_since(t_round);
  }

  if (run_round2) {
    auto t_round = std::chrono::steady_clock::now();
    // Round 2 consumes round-1 artifacts from disk, whether this invocation
    // produced them or an earlier one did.
    std::map<std::string, std::vector<MetaPathSchema>> round1_paths;
    std::map<std::string, TaskContext> contexts;
    for (const std::string& task : tasks) {
      std::string base = out_dir + "/round1/" + task;
      for (const char* artifact : {"/metapaths.txt", "/embeddings.bin"})
        if (!file_exists(base + artifact))
          fail(ErrorKind::Io, "round 2 requires round-1 artifact " + base + artifact +
                                  " (run --round 1 first)");
      round1_paths[task] = load_metapath_file(base + "/metapaths.txt", data.schema);
      TaskContext ctx;
      ctx.indicator = task;
      ctx.description = descriptions.count(task) ? descriptions[task] : task;
      ctx.saved_embeddings = load_embeddings(base + "/embeddings.bin", data.region_ids);
      ctx.has_saved_embeddings = true;
      contexts[task] = std::move(ctx);
    }

    CommunicationFlags flags{config.model.ablation.no_self_update, config.model.ablation.no_rec};
    CommunicationResult comm = run_communication_round(*chat, data.schema, round1_paths,
                                                       descriptions, config.model.n_p, flags);
    ensure_dir(out_dir + "/round2");
    {
      std::string notes;
      for (const std::string& note : comm.notes) notes += note + "\n";
      write_file(out_dir + "/round2/communication_notes.txt", notes);
      for (const AgentTranscript& t : comm.transcripts) {
        std::string dir = out_dir + "/round2/transcripts";
        ensure_dir(dir);
        save_transcript(dir + "/" + MockChatClient::sanitize_key(t.kind + ":" + t.task) + ".txt",
                        t);
      }
    }

    std::vector<std::function<void()>> jobs;
    for (const std::string& task : tasks) {
      jobs.push_back([&, task]() {
        TaskContext ctx;
        ctx.indicator = task;
        ctx.metapaths = comm.paths.at(task);
        ctx.description = descriptions.count(task) ? descriptions.at(task) : task;
        std::vector<const TaskContext*> others;
        std::vector<std::string> other_names;
        for (const std::string& other : tasks) {
          if (other == task) continue;
          others.push_back(&contexts.at(other));
          other_names.push_back(other);
        }
        std::vector<double> truth = data.indicators.values(task, data.region_ids);
        SlakConfig task_config = config.model;
        task_config.seed = Rng::fanout(config.model.seed, "train:round2:" + task).next_u64();
        TrainResult result = train_round2_task(ctx, others, data.kg, data.region_ids, truth,
                                               split, task_config, provider);
        write_task_artifacts(out_dir + "/round2/" + task, task, 2, data, split, truth, result,
                             ctx.metapaths,
                             config.model.ablation.no_trans ? std::vector<std::string>{}
                                                            : other_names);
      });
    }
    run_parallel(jobs, config.workers);
    timings["round2_ms"] = ms_since(t_round);
  }

  json manifest;
  manifest["version"] = kVersion;
  manifest["command"] = "run";
  manifest["round"] = rounds == RoundSelection::One ? "1"
                      : rounds == RoundSelection::Two ? "2"
                                                      : "all";
  manifest["mock_agents"] = mock_agents;
  manifest["chat_mode"] = chat->mode_name();
  manifest["embed_mode"] = provider.mode_name();
  manifest["config"] = json::parse(config.model.to_json_text());
  manifest["root_seed"] = config.model.seed;
  manifest["tasks"] = tasks;
  manifest["data_dir"] = data_dir;
  manifest["data_hashes"] = {{"schema", sha256_file_hex(data_dir + "/schema.tsv")},
                             {"entities", sha256_file_hex(data_dir + "/entities.tsv")},
                             {"facts", sha256_file_hex(data_dir + "/facts.tsv")},
                             {"indicators", sha256_file_hex(data_dir + "/indicators.csv")}};
  manifest["timings_ms"] = timings;
  manifest["total_ms"] = ms_since(t_start);
  write_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

void cmd_search(const std::string& algo, const std::string& config_path,
                const std::string& data_dir, const std::string& out_dir) {
  if (algo != "ga" && algo != "random")
    fail(ErrorKind::Invalid, "unknown search algorithm `" + algo + "` (expected ga|random)");
  RunnerConfig config = RunnerConfig::load(config_path);
  LoadedDataset data = load_dataset_dir(data_dir);
  const std::string& indicator = config.search.indicator;
  std::vector<double> truth = data.indicators.values(indicator, data.region_ids);
  Split split = split_regions(data.region_ids.size(),
                              SplitSpec{0.6, 0.2, 0.2, Rng::fanout(config.model.seed, "split")
                                                           .next_u64()});
  ensure_dir(out_dir);
  EmbeddingProvider provider = EmbeddingProvider::from_env(out_dir + "/cache/embeddings");

  // Fitness: validation R^2 of a single-task training run with the
  // individual's 6 meta-paths, no cross-task transfer.
  uint64_t fitness_seed = Rng::fanout(config.model.seed, "search.fitness").next_u64();
  FitnessFn fitness = [&](const Individual& ind) -> double {
    TaskContext ctx;
    ctx.indicator = indicator;
    ctx.metapaths = ind.genes;
    SlakConfig fit_config = config.model;
    fit_config.seed = fitness_seed;
    TrainResult r = train_single(ctx, data.kg, data.region_ids, truth, split, fit_config,
                                 provider);
    return r.val.r2;
  };

  History history;
  Individual best;
  std::string failure;
  try {
    if (algo == "ga") {
      GaConfig ga{config.search.population, 2, config.search.mutation_rate,
                  config.search.generations, config.search.seed};
      best = genetic_search(ga, data.schema, fitness, history);
    } else {
      best = random_search(config.search.iterations, config.search.per_iter, config.search.seed,
                           data.schema, fitness, history);
    }
  } catch (...) {
    save_history(out_dir + "/history.csv", algo, history);  // preserved on failure
    throw;
  }
  save_history(out_dir + "/history.csv", algo, history);

  double best_fitness = -1e300;
  for (const Evaluation& e : history) best_fitness = std::max(best_fitness, e.fitness);
  std::ostringstream best_out;
  best_out.precision(17);
  best_out << "# best individual (" << algo << "), fitness " << best_fitness << "\n";
  for (const MetaPathSchema& p : best.genes) best_out << format_metapath(p) << "\n";
  write_file(out_dir + "/best.txt", best_out.str());

  json manifest;
  manifest["version"] = kVersion;
  manifest["command"] = "search";
  manifest["algorithm"] = algo;
  manifest["indicator"] = indicator;
  manifest["evaluations"] = history.size();
  manifest["best_fitness"] = best_fitness;
  manifest["config"] = json::parse(config.model.to_json_text());
  manifest["search_seed"] = config.search.seed;
  write_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
}

namespace {

struct TaskMetricsRow {
  int round;
  std::string indicator;
  json metrics;
};

std::vector<TaskMetricsRow> collect_metrics(const std::string& run_dir) {
  std::vector<TaskMetricsRow> rows;
  for (int round : {1, 2}) {
    fs::path round_dir = fs::path(run_dir) / ("round" + std::to_string(round));
    if (!fs::exists(round_dir)) continue;
    std::vector<std::string> tasks;
    for (const auto& entry : fs::directory_iterator(round_dir))
      if (entry.is_directory() && fs::exists(entry.path() / "metrics.json"))
        tasks.push_back(entry.path().filename().string());
    std::sort(tasks.begin(), tasks.end());
    for (const std::string& task : tasks) {
      TaskMetricsRow row;
      row.round = round;
      row.indicator = task;
      row.metrics = json::parse(read_file((round_dir / task / "metrics.json").string()));
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

void cmd_report(const std::string& run_dir) {
  if (!fs::exists(run_dir)) fail(ErrorKind::Io, "unknown run directory: " + run_dir);
  std::vector<TaskMetricsRow> rows = collect_metrics(run_dir);
  if (rows.empty()) fail(ErrorKind::Io, "no metrics found under " + run_dir);
  std::string report_dir = run_dir + "/report";
  ensure_dir(report_dir);

  {
    std::ostringstream csv;
    csv.precision(17);
    csv << "round,indicator,split,mae,rmse,r2\n";
    for (const auto& row : rows)
      for (const char* split : {"val", "test"})
        csv << row.round << ',' << row.indicator << ',' << split << ','
            << row.metrics[split]["mae"].get<double>() << ','
            << row.metrics[split]["rmse"].get<double>() << ','
            << row.metrics[split]["r2"].get<double>() << '\n';
    write_file(report_dir + "/report.csv", csv.str());
  }

  {
    std::ostringstream txt;
    txt.setf(std::ios::fixed);
    txt.precision(4);
    for (int round : {1, 2}) {
      bool any = false;
      for (const auto& row : rows) any |= row.round == round;
      if (!any) continue;
      txt << "Round " << round << (round == 1 ? " (single-task)" : " (cross-task)") << "\n";
      txt << "  indicator        test MAE    test RMSE   test R2\n";
      for (const auto& row : rows) {
        if (row.round != round) continue;
        char buf[160];
        std::snprintf(buf, sizeof buf, "  %-16s %9.4f  %9.4f  %8.4f\n", row.indicator.c_str(),
                      row.metrics["test"]["mae"].get<double>(),
                      row.metrics["test"]["rmse"].get<double>(),
                      row.metrics["test"]["r2"].get<double>());
        txt << buf;
      }
      txt << "\n";
    }
    // Round-1 vs round-2 comparison when both are present.
    bool has1 = false, has2 = false;
    for (const auto& row : rows) (row.round == 1 ? has1 : has2) = true;
    if (has1 && has2) {
      txt << "Round 2 vs round 1 (test R2)\n";
      for (const auto& r1 : rows) {
        if (r1.round != 1) continue;
        for (const auto& r2 : rows) {
          if (r2.round != 2 || r2.indicator != r1.indicator) continue;
          double a = r1.metrics["test"]["r2"].get<double>();
          double b = r2.metrics["test"]["r2"].get<double>();
          char buf[160];
          std::snprintf(buf, sizeof buf, "  %-16s %8.4f -> %8.4f (%+.4f)\n",
                        r1.indicator.c_str(), a, b, b - a);
          txt << buf;
        }
      }
    }
    write_file(report_dir + "/report.txt", txt.str());
  }

  {
    std::ostringstream csv;
    csv << "round,indicator,region_id,split,y_true,y_pred,abs_error\n";
    for (const auto& row : rows) {
      std::istringstream in(read_file(run_dir + "/round" + std::to_string(row.round) + "/" +
                                      row.indicator + "/predictions.csv"));
      std::string line;
      std::getline(in, line);  // header
      while (std::getline(in, line))
        if (!trim(line).empty())
          csv << row.round << ',' << row.indicator << ',' << line << '\n';
    }
    write_file(report_dir + "/per_region_errors.csv", csv.str());
  }

  {
    std::ostringstream txt;
    for (const auto& row : rows) {
      txt << "round " << row.round << " / " << row.indicator << "\n";
      txt << read_file(run_dir + "/round" + std::to_string(row.round) + "/" + row.indicator +
                       "/attention.csv");
      txt << "\n";
    }
    write_file(report_dir + "/attention_summary.txt", txt.str());
  }
}

}  // namespace slak
