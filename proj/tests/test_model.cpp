#include <doctest.h>

#include <cmath>

#include "slak/model.hpp"
#include "slak/optim.hpp"
#include "test_support.hpp"

using namespace slak;
using namespace slak::testing;

namespace {

// Region + POI + Brand micro-graph with a few of each relation. The default
// sizing (10 entities) keeps finite-difference checks fast.
KnowledgeGraph micro_kg(int regions = 3, int pois = 5, int brands = 2) {
  KnowledgeGraphBuilder b(mini_schema());
  for (int i = 0; i < regions; ++i) b.add_entity("r" + std::to_string(i), "Region");
  for (int i = 0; i < pois; ++i) b.add_entity("p" + std::to_string(i), "POI");
  for (int i = 0; i < brands; ++i) b.add_entity("b" + std::to_string(i), "Brand");
  auto poi = [&](int i) { return "p" + std::to_string(i % pois); };
  for (int i = 0; i < regions; ++i) {
    b.add_fact("r" + std::to_string(i), "Has", poi(i));
    b.add_fact("r" + std::to_string(i), "Has", poi(i + 2));
  }
  for (int j = 0; j < pois; j += 2)
    b.add_fact(poi(j), "HasBrandOf", "b" + std::to_string(j % brands));
  b.add_fact("p0", "Competitive", "p2");
  b.add_fact("p1", "LocateAt", "r0");
  b.add_fact(poi(4), "LocateAt", "r" + std::to_string(regions - 1));
  b.add_fact("r0", "PopulationFlowTo", "r1");
  b.add_fact("r" + std::to_string(regions - 1), "PopulationFlowTo", "r0");
  return b.build();
}

// Seven regions so the 3/2/2 split below keeps every metric well defined.
KnowledgeGraph train_kg() { return micro_kg(7, 6, 2); }

const Split kSmallSplit{{0, 1, 2}, {3, 4}, {5, 6}};
const std::vector<double> kSmallTruth = {1.0, 4.0, 2.5, 3.0, 0.5, 2.0, 5.0};

std::vector<std::string> region_ids_of(const KnowledgeGraph& kg) {
  std::vector<std::string> out;
  for (int idx : kg.entities_of_type("Region")) out.push_back(kg.entity(idx).id);
  return out;
}

SlakConfig small_config() {
  SlakConfig c;
  c.d_h = 6;
  c.L = 2;
  c.lr = 0.01;
  c.max_epochs = 50;
  c.patience = 10;
  c.n_p = 1;
  c.seed = 77;
  return c;
}

}  // namespace

TEST_CASE("evaluate: delegated metric formulas") {
  Metrics m = evaluate({1.0, 2.0, 4.0}, {1.0, 2.0, 3.0});
  CHECK(std::fabs(m.mae - 1.0 / 3.0) < 1e-12);
  CHECK(std::fabs(m.rmse - 1.0 / std::sqrt(3.0)) < 1e-12);
  CHECK(std::fabs(m.r2 - 0.5) < 1e-12);
  CHECK_THROWS_AS(evaluate({1.0, 2.0}, {3.0, 3.0}), Error);
}

TEST_CASE("target scaler: round-trip identity within 1e-12, both transforms") {
  std::vector<double> train = {3.0, 8.0, 1.0, 14.0, 6.0};
  for (TargetTransform t : {TargetTransform::ZScore, TargetTransform::LogZScore}) {
    TargetScaler s = TargetScaler::fit(train, t);
    for (double y : {0.0, 0.5, 3.0, 27.5, 101.0}) {
      CHECK(std::fabs(s.inverse(s.transform(y)) - y) < 1e-12);
    }
  }
  CHECK_THROWS_WITH_AS(TargetScaler::fit({2.0, 2.0, 2.0}, TargetTransform::ZScore),
                       doctest::Contains("constant"), Error);
  CHECK_THROWS_AS(TargetScaler::fit({-1.0, 2.0}, TargetTransform::LogZScore), Error);
}

TEST_CASE("config json: round-trip mirrors field names, validation") {
  SlakConfig c;
  c.d_h = 32;
  c.lr = 0.02;
  c.ablation.no_trans = true;
  c.target_transform = TargetTransform::LogZScore;
  SlakConfig back = SlakConfig::from_json_text(c.to_json_text());
  CHECK(back.d_h == 32);
  CHECK(back.lr == 0.02);
  CHECK(back.ablation.no_trans);
  CHECK_FALSE(back.ablation.no_rec);
  CHECK(back.target_transform == TargetTransform::LogZScore);

  CHECK_THROWS_AS(SlakConfig::from_json_text("{\"n_p\": 0}"), Error);
  CHECK_THROWS_AS(SlakConfig::from_json_text("{\"patience\": 600, \"max_epochs\": 500}"), Error);
}

TEST_CASE("residual isolation: an instance-free meta-path contributes zero") {
  KnowledgeGraph kg = micro_kg();
  auto regions = region_ids_of(kg);
  Schema schema = kg.schema();
  // no POI -> POI -> Region chain completes for this relation order
  std::vector<MetaPathSchema> paths = {
      parse_metapath("Region -[PopulationFlowTo]-> Region -[Has]-> POI -[Competitive]-> POI "
                     "-[LocateAt]-> Region",
                     schema)};
  SubKG sub = extract_subkg(kg, paths[0]);
  REQUIRE(sub.facts.empty());  // the fixture graph breaks this chain

  SlakConfig c = small_config();
  Rng erng(1);
  Tensor emb = Tensor::gaussian(1, kSemanticDim, 1.0, erng);
  SlakModel m = SlakModel::build(kg, regions, paths, emb, c, std::nullopt);
  m.graph().forward();

  // fused representation equals the global branch: the single source is zero
  CHECK(m.graph().value(m.fused_node()).max_abs_diff(m.graph().value(m.global_node())) == 0.0);

  // prediction equals the MLP applied to the fused representation by hand
  const Tensor& fused = m.graph().value(m.fused_node());
  ParameterSet& ps = m.params();
  Tensor h1;
  matmul_into(h1, fused, ps.get("head.W1").value, false, false, false);
  for (size_t r = 0; r < h1.rows(); ++r)
    for (size_t col = 0; col < h1.cols(); ++col) {
      h1.at(r, col) += ps.get("head.b1").value.at(0, col);
      h1.at(r, col) = std::max(0.0, h1.at(r, col));
    }
  Tensor out;
  matmul_into(out, h1, ps.get("head.W2").value, false, false, false);
  std::vector<double> pred = m.predictions();
  for (size_t r = 0; r < out.rows(); ++r)
    CHECK(std::fabs(pred[r] - (out.at(r, 0) + ps.get("head.b2").value.at(0, 0))) < 1e-12);
}

TEST_CASE("meta-path order permutation leaves predictions unchanged") {
  KnowledgeGraph kg = micro_kg();
  auto regions = region_ids_of(kg);
  Schema schema = kg.schema();
  std::vector<MetaPathSchema> paths = {
      parse_metapath("Region -[Has]-> POI -[HasBrandOf]-> Brand", schema),
      parse_metapath("Region -[Has]-> POI -[Competitive]-> POI", schema),
      parse_metapath("Region -[PopulationFlowTo]-> Region", schema),
  };
  SlakConfig c = small_config();
  EmbeddingProvider provider = EmbeddingProvider::fallback();

  auto predict = [&](const std::vector<MetaPathSchema>& ordered) {
    std::vector<std::string> sentences;
    for (const auto& p : ordered) sentences.push_back(to_natural_language(p));
    Tensor emb = provider.embed_all(sentences);
    SlakModel m = SlakModel::build(kg, regions, ordered, emb, c, std::nullopt);
    m.graph().forward();
    return m.predictions();
  };

  std::vector<double> base = predict(paths);
  std::vector<MetaPathSchema> shuffled = {paths[2], paths[0], paths[1]};
  std::vector<double> permuted = predict(shuffled);
  REQUIRE(base.size() == permuted.size());
  for (size_t i = 0; i < base.size(); ++i) CHECK(std::fabs(base[i] - permuted[i]) <= 1e-12);
}

TEST_CASE("gradient check: full forward with fusion, cross-task transfer and MSE") {
  KnowledgeGraph kg = micro_kg();  // 10 entities
  auto regions = region_ids_of(kg);
  Schema schema = kg.schema();
  std::vector<MetaPathSchema> paths = {
      parse_metapath("Region -[Has]-> POI -[HasBrandOf]-> Brand", schema),
      parse_metapath("Region -[Has]-> POI -[Competitive]-> POI", schema),
  };
  SlakConfig c = small_config();
  c.d_h = 4;

  Rng erng(3);
  Tensor emb = Tensor::gaussian(2, kSemanticDim, 1.0, erng);
  CrossTaskInputs ct;
  ct.task_queries = Tensor::gaussian(2, kSemanticDim, 1.0, erng);
  ct.embeddings = {Tensor::gaussian(regions.size(), 4, 0.8, erng),
                   Tensor::gaussian(regions.size(), 4, 0.8, erng)};
  SlakModel m = SlakModel::build(kg, regions, paths, emb, c, ct);
  m.attach_loss({0, 1, 2}, {0.4, -1.0, 1.3});

  auto report = grad_check(m.graph(), m.loss_node(), m.params(), 1e-5);
  CAPTURE(report.worst_param);
  CAPTURE(report.max_rel_err);
  CHECK(report.checked < 10000);
  CHECK(report.pass(1e-4));
}

TEST_CASE("training on the planted-signal dataset reaches validation R^2 >= 0.8") {
  TempDir tmp("model_planted");
  SyntheticSpec spec = SyntheticSpec::load(source_dir() + "/data/synth_lite.json");
  SyntheticDataset ds = generate_synthetic(spec);
  write_synthetic_dataset(spec, ds, tmp.path());
  LoadedDataset data = load_dataset_dir(tmp.path());

  SlakConfig c;
  c.d_h = 48;
  c.L = 2;
  c.lr = 0.01;
  c.weight_decay = 0.001;
  c.embed_lr_scale = 0.01;
  c.max_epochs = 500;
  c.patience = 60;
  c.seed = 42;
  c.normalization = Normalization::None;

  Split split = split_regions(data.region_ids.size(),
                              SplitSpec{0.6, 0.2, 0.2, Rng::fanout(c.seed, "split").next_u64()});
  std::vector<double> truth = data.indicators.values("population", data.region_ids);
  EmbeddingProvider provider = EmbeddingProvider::fallback();

  TaskContext task;
  task.indicator = "population";
  task.metapaths = {parse_metapath("Region -[Has]-> POI -[HasBrandOf]-> Brand", data.schema)};
  TrainResult r = train_single(task, data.kg, data.region_ids, truth, split, c, provider);
  CAPTURE(r.val.r2);
  CHECK(r.val.r2 >= 0.8);
  CHECK(task.has_saved_embeddings);
  CHECK(task.saved_embeddings.rows() == data.region_ids.size());
  CHECK(task.saved_embeddings.cols() == c.d_h);
  // reported validation MSE is the minimum over trained epochs
  double min_val = *std::min_element(r.val_mse_history.begin(), r.val_mse_history.end());
  CHECK(r.best_val_mse == min_val);
  CHECK(r.best_epoch >= 0);
}

TEST_CASE("identical seed and data give identical training trajectories") {
  KnowledgeGraph kg = train_kg();
  auto regions = region_ids_of(kg);
  Schema schema = kg.schema();
  SlakConfig c = small_config();
  c.max_epochs = 30;
  c.patience = 29;
  EmbeddingProvider provider = EmbeddingProvider::fallback();
  const Split& split = kSmallSplit;
  const std::vector<double>& truth = kSmallTruth;

  auto run = [&]() {
    TaskContext task;
    task.indicator = "population";
    task.metapaths = {parse_metapath("Region -[Has]-> POI -[HasBrandOf]-> Brand", schema)};
    return train_single(task, kg, regions, truth, split, c, provider);
  };
  TrainResult a = run();
  TrainResult b = run();
  REQUIRE(a.val_mse_history.size() == b.val_mse_history.size());
  for (size_t i = 0; i < a.val_mse_history.size(); ++i)
    CHECK(a.val_mse_history[i] == b.val_mse_history[i]);
  for (const auto& [name, value] : a.parameters)
    CHECK(value.max_abs_diff(b.parameters.at(name)) == 0.0);
}

TEST_CASE("round 2: no_trans equals training against zeroed other-task embeddings") {
  KnowledgeGraph kg = train_kg();
  auto regions = region_ids_of(kg);
  Schema schema = kg.schema();
  SlakConfig c = small_config();
  c.max_epochs = 25;
  c.patience = 24;
  EmbeddingProvider provider = EmbeddingProvider::fallback();
  const Split& split = kSmallSplit;
  const std::vector<double>& truth = kSmallTruth;
  std::vector<MetaPathSchema> paths = {
      parse_metapath("Region -[Has]-> POI -[HasBrandOf]-> Brand", schema)};

  TaskContext other;
  other.indicator = "rating";
  other.description = "Predict the average user rating of restaurants in an urban region.";
  other.saved_embeddings = Tensor::zeros(regions.size(), c.d_h);
  other.has_saved_embeddings = true;
  std::vector<const TaskContext*> others = {&other};

  TaskContext t1;
  t1.indicator = "population";
  t1.metapaths = paths;
  SlakConfig c1 = c;
  c1.ablation.no_trans = true;
  TrainResult no_trans = train_round2_task(t1, others, kg, regions, truth, split, c1, provider);

  TaskContext t2;
  t2.indicator = "population";
  t2.metapaths = paths;
  TrainResult zeroed = train_round2_task(t2, others, kg, regions, truth, split, c, provider);

  REQUIRE(no_trans.val_mse_history.size() == zeroed.val_mse_history.size());
  for (size_t i = 0; i < no_trans.val_mse_history.size(); ++i)
    CHECK(no_trans.val_mse_history[i] == doctest::Approx(zeroed.val_mse_history[i]).epsilon(1e-12));
  // the ablated model must not even contain the cross-task pathway
  CHECK(no_trans.cross_alpha.size() == 0);
  CHECK(zeroed.cross_alpha.size() > 0);
}

TEST_CASE("round 2 degenerates to single-task training when alone (N_I = 1)") {
  KnowledgeGraph kg = train_kg();
  auto regions = region_ids_of(kg);
  Schema schema = kg.schema();
  SlakConfig c = small_config();
  c.max_epochs = 25;
  c.patience = 24;
  EmbeddingProvider provider = EmbeddingProvider::fallback();
  const Split& split = kSmallSplit;
  const std::vector<double>& truth = kSmallTruth;
  std::vector<MetaPathSchema> paths = {
      parse_metapath("Region -[Has]-> POI -[HasBrandOf]-> Brand", schema)};

  TaskContext single;
  single.indicator = "population";
  single.metapaths = paths;
  TrainResult a = train_single(single, kg, regions, truth, split, c, provider);

  TaskContext alone;
  alone.indicator = "population";
  alone.metapaths = paths;
  TrainResult b = train_round2_task(alone, {}, kg, regions, truth, split, c, provider);

  REQUIRE(a.val_mse_history.size() == b.val_mse_history.size());
  for (size_t i = 0; i < a.val_mse_history.size(); ++i)
    CHECK(a.val_mse_history[i] == b.val_mse_history[i]);
}

TEST_CASE("round 2 rejects a task whose saved embeddings are missing") {
  KnowledgeGraph kg = train_kg();
  auto regions = region_ids_of(kg);
  Schema schema = kg.schema();
  SlakConfig c = small_config();
  EmbeddingProvider provider = EmbeddingProvider::fallback();
  const Split& split = kSmallSplit;
  const std::vector<double>& truth = kSmallTruth;

  TaskContext other;
  other.indicator = "rating";
  other.has_saved_embeddings = false;
  std::vector<const TaskContext*> others = {&other};
  TaskContext t;
  t.indicator = "population";
  t.metapaths = {parse_metapath("Region -[Has]-> POI", schema)};
  CHECK_THROWS_WITH_AS(train_round2_task(t, others, kg, regions, truth, split, c, provider),
                       doctest::Contains("missing saved embeddings"), Error);
}

TEST_CASE("divergence aborts with a diagnostic instead of producing NaNs") {
  KnowledgeGraph kg = train_kg();
  auto regions = region_ids_of(kg);
  Schema schema = kg.schema();
  SlakConfig c = small_config();
  c.lr = 1e100;  // guaranteed blow-up
  c.max_epochs = 30;
  c.patience = 29;
  EmbeddingProvider provider = EmbeddingProvider::fallback();
  const Split& split = kSmallSplit;
  const std::vector<double>& truth = kSmallTruth;
  TaskContext t;
  t.indicator = "population";
  t.metapaths = {parse_metapath("Region -[Has]-> POI", schema)};
  CHECK_THROWS_WITH_AS(train_single(t, kg, regions, truth, split, c, provider),
                       doctest::Contains("non-finite"), Error);
}

TEST_CASE("no_attn replaces the semantic queries with free parameters") {
  KnowledgeGraph kg = micro_kg();
  auto regions = region_ids_of(kg);
  Schema schema = kg.schema();
  std::vector<MetaPathSchema> paths = {
      parse_metapath("Region -[Has]-> POI -[HasBrandOf]-> Brand", schema),
      parse_metapath("Region -[Has]-> POI -[Competitive]-> POI", schema),
  };
  SlakConfig c = small_config();
  c.ablation.no_attn = true;
  Rng erng(5);
  Tensor emb = Tensor::gaussian(2, kSemanticDim, 1.0, erng);
  SlakModel m = SlakModel::build(kg, regions, paths, emb, c, std::nullopt);
  CHECK(m.params().contains("fusion.free_query"));
  CHECK_FALSE(m.params().contains("fusion.W_Q"));
  CHECK_FALSE(m.graph().has_node("fusion.E_MP"));
  m.graph().forward();

  // changing the semantic embeddings cannot change anything under no_attn
  Tensor emb2 = Tensor::gaussian(2, kSemanticDim, 1.0, erng);
  SlakModel m2 = SlakModel::build(kg, regions, paths, emb2, c, std::nullopt);
  m2.graph().forward();
  std::vector<double> a = m.predictions(), b = m2.predictions();
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}
