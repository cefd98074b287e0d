#pragma once

#include <functional>
#include <string>
#include <vector>

#include "slak/metapath.hpp"

namespace slak {

// A chromosome: a fixed set of 6 meta-paths.
struct Individual {
  std::vector<MetaPathSchema> genes;
};

inline constexpr size_t kGenesPerIndividual = 6;

struct GaConfig {
  int population = 5;
  int parents = 2;
  double mutation_rate = 0.10;
  int generations = 6;
  uint64_t seed = 0;

  void validate() const;
};

// Uniform random meta-path starting at Region with length (hop count) drawn
// uniformly from [min_len, max_len]; each hop is sampled uniformly among the
// relations whose head type matches the current tail type. A dead end (no
// outgoing relation) restarts the whole path, capped at 100 attempts.
MetaPathSchema random_metapath(Rng& rng, const Schema& schema, int min_len = 2, int max_len = 4);

Individual random_individual(Rng& rng, const Schema& schema, int min_len = 2, int max_len = 4);

// Single-gene exchange: children equal their parents except at one uniformly
// chosen index, where the genes are swapped.
std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b, Rng& rng);

// Each gene is independently replaced with probability `rate` by a fresh
// random meta-path. `replaced` (when given) receives the replaced indices.
Individual mutate(const Individual& individual, double rate, Rng& rng, const Schema& schema,
                  std::vector<size_t>* replaced = nullptr);

struct Evaluation {
  int generation = 0;  // iteration index for random search
  int index = 0;       // position within the generation
  Individual individual;
  double fitness = 0.0;
  double wall_ms = 0.0;
};

using History = std::vector<Evaluation>;
using FitnessFn = std::function<double(const Individual&)>;

// Generational GA: evaluate `population` individuals, pick the top
// `parents` (ties broken by lower index), and produce the next generation by
// repeated crossover+mutation of the two parents, with the best parent
// carried over unchanged. Returns the best individual over all evaluations.
// `history` is an out-parameter so it survives a fitness failure.
Individual genetic_search(const GaConfig& config, const Schema& schema, const FitnessFn& fitness,
                          History& history);

// `iterations` x `per_iter` independent random individuals; returns the best.
Individual random_search(int iterations, int per_iter, uint64_t seed, const Schema& schema,
                         const FitnessFn& fitness, History& history);

// History file: one record per evaluation (generation, genes as DSL strings,
// fitness, wall time), with the child-production scheme documented in the
// header comment.
void save_history(const std::string& path, const std::string& algorithm, const History& history);

}  // namespace slak
