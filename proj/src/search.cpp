#include "slak/search.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

namespace slak {

void GaConfig::validate() const {
  if (population < parents || parents < 2)
    fail(ErrorKind::Invalid, "ga config: need population >= parents >= 2");
  if (mutation_rate < 0.0 || mutation_rate > 1.0)
    fail(ErrorKind::Invalid, "ga config: mutation rate must be in [0, 1]");
  if (generations < 1) fail(ErrorKind::Invalid, "ga config: generations must be >= 1");
}

MetaPathSchema random_metapath(Rng& rng, const Schema& schema, int min_len, int max_len) {
  if (min_len < 1 || max_len < min_len)
    fail(ErrorKind::Invalid, "random_metapath: bad length range");
  // Relations grouped by head type, in schema order.
  auto outgoing = [&schema](const std::string& etype) {
    std::vector<const RelationType*> out;
    for (const RelationType& rel : schema.relations())
      if (rel.head_type == etype) out.push_back(&rel);
    return out;
  };
  if (outgoing("Region").empty())
    fail(ErrorKind::Invalid, "random_metapath: schema has no relation with head Region");

  for (int attempt = 0; attempt < 100; ++attempt) {
    int len = rng.uniform_int(min_len, max_len);
    MetaPathSchema path;
    path.start_type = "Region";
    std::string current = "Region";
    bool dead_end = false;
    for (int hop = 0; hop < len; ++hop) {
      auto candidates = outgoing(current);
      if (candidates.empty()) {
        dead_end = true;
        break;
      }
      const RelationType* rel = candidates[rng.index(candidates.size())];
      path.hops.push_back({rel->name, rel->tail_type});
      current = rel->tail_type;
    }
    if (!dead_end) return path;
  }
  fail(ErrorKind::Runtime, "random_metapath: no complete path after 100 attempts");
}

Individual random_individual(Rng& rng, const Schema& schema, int min_len, int max_len) {
  Individual ind;
  for (size_t i = 0; i < kGenesPerIndividual; ++i)
    ind.genes.push_back(random_metapath(rng, schema, min_len, max_len));
  return ind;
}

std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b, Rng& rng) {
  if (a.genes.size() != kGenesPerIndividual || b.genes.size() != kGenesPerIndividual)
    fail(ErrorKind::Invalid, "crossover: parents must have exactly 6 genes");
  Individual ca = a, cb = b;
  size_t k = rng.index(kGenesPerIndividual);
  std::swap(ca.genes[k], cb.genes[k]);
  return {std::move(ca), std::move(cb)};
}

Individual mutate(const Individual& individual, double rate, Rng& rng, const Schema& schema,
                  std::vector<size_t>* replaced) {
  Individual out = individual;
  for (size_t i = 0; i < out.genes.size(); ++i) {
    if (rng.chance(rate)) {
      out.genes[i] = random_metapath(rng, schema);
      if (replaced) replaced->push_back(i);
    }
  }
  return out;
}

namespace {

double timed_fitness(const FitnessFn& fitness, const Individual& ind, double& wall_ms) {
  auto start = std::chrono::steady_clock::now();
  double f = fitness(ind);
  wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                .count();
  return f;
}

const Evaluation& best_of(const History& history) {
  size_t best = 0;
  for (size_t i = 1; i < history.size(); ++i)
    if (history[i].fitness > history[best].fitness) best = i;
  return history[best];
}

}  // namespace

Individual genetic_search(const GaConfig& config, const Schema& schema, const FitnessFn& fitness,
                          History& history) {
  config.validate();
  Rng rng(config.seed);
  std::vector<Individual> population;
  for (int i = 0; i < config.population; ++i) population.push_back(random_individual(rng, schema));

  for (int gen = 0; gen < config.generations; ++gen) {
    std::vector<double> scores;
    for (int i = 0; i < config.population; ++i) {
      Evaluation eval;
      eval.generation = gen;
      eval.index = i;
      eval.individual = population[static_cast<size_t>(i)];
      eval.fitness = timed_fitness(fitness, eval.individual, eval.wall_ms);
      scores.push_back(eval.fitness);
      history.push_back(std::move(eval));
    }
    if (gen + 1 == config.generations) break;

    // Top two by fitness, ties broken by lower index.
    std::vector<int> order(static_cast<size_t>(config.population));
    for (int i = 0; i < config.population; ++i) order[static_cast<size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&scores](int a, int b) {
      return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
    });
    const Individual& parent_a = population[static_cast<size_t>(order[0])];
    const Individual& parent_b = population[static_cast<size_t>(order[1])];

    // Elitism: the best parent survives; the rest of the generation comes
    // from crossover + mutation of the two parents.
    std::vector<Individual> next;
    next.push_back(parent_a);
    while (static_cast<int>(next.size()) < config.population) {
      auto [ca, cb] = crossover(parent_a, parent_b, rng);
      next.push_back(mutate(ca, config.mutation_rate, rng, schema));
      if (static_cast<int>(next.size()) < config.population)
        next.push_back(mutate(cb, config.mutation_rate, rng, schema));
    }
    population = std::move(next);
  }
  return best_of(history).individual;
}

Individual random_search(int iterations, int per_iter, uint64_t seed, const Schema& schema,
                         const FitnessFn& fitness, History& history) {
  if (iterations < 1 || per_iter < 1)
    fail(ErrorKind::Invalid, "random_search: iterations and per_iter must be >= 1");
  Rng rng(seed);
  for (int it = 0; it < iterations; ++it) {
    for (int i = 0; i < per_iter; ++i) {
      Evaluation eval;
      eval.generation = it;
      eval.index = i;
      eval.individual = random_individual(rng, schema);
      eval.fitness = timed_fitness(fitness, eval.individual, eval.wall_ms);
      history.push_back(std::move(eval));
    }
  }
  return best_of(history).individual;
}

void save_history(const std::string& path, const std::string& algorithm,
                  const History& history) {
  std::ostringstream out;
  out << "# algorithm: " << algorithm << "\n";
  out << "# ga scheme: top-2 parents by fitness (ties by lower index); best parent carried\n";
  out << "# over unchanged; remaining slots filled by single-gene crossover of the two\n";
  out << "# parents followed by per-gene mutation.\n";
  out << "generation,index,fitness,wall_ms,genes\n";
  out.precision(17);
  for (const Evaluation& e : history) {
    out << e.generation << ',' << e.index << ',' << e.fitness << ',' << e.wall_ms << ',';
    for (size_t i = 0; i < e.individual.genes.size(); ++i) {
      if (i) out << ';';
      MetaPathSchema bare = e.individual.genes[i];
      bare.label.clear();
      out << format_metapath(bare);
    }
    out << '\n';
  }
  write_file(path, out.str());
}

}  // namespace slak
