#include <doctest.h>

#include <set>

#include "slak/metapath.hpp"
#include "slak/search.hpp"
#include "test_support.hpp"

using namespace slak;
using namespace slak::testing;

TEST_CASE("parse: known-good paths against the default schema") {
  Schema schema = default_schema();
  auto p1 = parse_metapath(
      "Region -[HasStoreOf]-> Brand -[BrandExistIn]-> POI -[LocateAt]-> Region", schema);
  CHECK(p1.hop_count() == 3);
  auto p2 = parse_metapath(
      "Region -[Has]-> POI -[Competitive]-> POI -[LocateAt]-> Region", schema);
  CHECK(p2.hop_count() == 3);
  CHECK(p2.hops[1].relation == "Competitive");
}

TEST_CASE("parse: error cases") {
  Schema schema = default_schema();
  CHECK_THROWS_WITH_AS(parse_metapath("POI -[LocateAt]-> Region", schema),
                       doctest::Contains("start type must be Region"), Error);
  CHECK_THROWS_WITH_AS(parse_metapath("Region -[Ghost]-> POI", schema),
                       doctest::Contains("unknown relation"), Error);
  CHECK_THROWS_WITH_AS(parse_metapath("Region -[Has]-> Brand", schema),
                       doctest::Contains("type-chain mismatch"), Error);
  CHECK_THROWS_WITH_AS(parse_metapath("Region -[LocateAt]-> Region", schema),
                       doctest::Contains("type-chain mismatch"), Error);
  CHECK_THROWS_WITH_AS(parse_metapath("City -[Has]-> POI", schema),
                       doctest::Contains("unknown entity type"), Error);
  CHECK_THROWS_WITH_AS(parse_metapath("Region", schema), doctest::Contains("syntax error"),
                       Error);
  CHECK_THROWS_WITH_AS(parse_metapath("Region -[Has]> POI", schema),
                       doctest::Contains("position"), Error);
  // 7 hops exceed the cap
  std::string too_long = "Region";
  for (int i = 0; i < 7; ++i) too_long += " -[NearBy]-> Region";
  CHECK_THROWS_WITH_AS(parse_metapath(too_long, schema), doctest::Contains("exceeds"), Error);
}

TEST_CASE("format: canonical text, labels, parse/format fixpoint") {
  Schema schema = default_schema();
  std::string text = "Region -[Has]-> POI -[Competitive]-> POI -[LocateAt]-> Region";
  auto p = parse_metapath(text, schema);
  CHECK(format_metapath(p) == text);
  CHECK(format_metapath(parse_metapath(format_metapath(p), schema)) == format_metapath(p));

  auto labeled = parse_metapath(text + " # competition", schema);
  CHECK(labeled.label == "competition");
  CHECK(format_metapath(labeled) == text + " # competition");

  auto one_hop = parse_metapath("Region -[Has]-> POI", schema);
  CHECK(format_metapath(one_hop) == "Region -[Has]-> POI");
}

TEST_CASE("natural-language rendering") {
  Schema schema = default_schema();
  auto p = parse_metapath("Region -[Has]-> POI -[Competitive]-> POI -[LocateAt]-> Region",
                          schema);
  CHECK(to_natural_language(p) == "Region THAT Has POI THAT Competitive POI THAT LocateAt Region");
  CHECK(to_natural_language(parse_metapath("Region -[Has]-> POI", schema)) ==
        "Region THAT Has POI");
  // determinism + injectivity over a sample of distinct schemas
  Rng rng(3);
  std::set<std::string> sentences;
  std::set<std::string> canon;
  for (int i = 0; i < 50; ++i) {
    MetaPathSchema mp = random_metapath(rng, schema, 1, 4);
    CHECK(to_natural_language(mp) == to_natural_language(mp));
    mp.label.clear();
    canon.insert(format_metapath(mp));
    sentences.insert(to_natural_language(mp));
  }
  CHECK(sentences.size() == canon.size());
}

TEST_CASE("match_paths: three-fact chain and broken chain") {
  Schema schema = mini_schema();
  KnowledgeGraphBuilder b(schema);
  b.add_entity("r1", "Region");
  b.add_entity("r2", "Region");
  b.add_entity("p1", "POI");
  b.add_entity("p2", "POI");
  b.add_fact("r1", "Has", "p1");
  b.add_fact("p1", "Competitive", "p2");
  b.add_fact("p2", "LocateAt", "r2");
  KnowledgeGraph kg = b.build();
  auto path = parse_metapath("Region -[Has]-> POI -[Competitive]-> POI -[LocateAt]-> Region",
                             schema);

  auto matches = match_paths(kg, path);
  REQUIRE(matches.size() == 1);
  CHECK(matches[0] == std::vector<std::string>{"r1", "p1", "p2", "r2"});

  // remove the closing hop: no complete instance remains
  KnowledgeGraphBuilder b2(schema);
  b2.add_entity("r1", "Region");
  b2.add_entity("r2", "Region");
  b2.add_entity("p1", "POI");
  b2.add_entity("p2", "POI");
  b2.add_fact("r1", "Has", "p1");
  b2.add_fact("p1", "Competitive", "p2");
  CHECK(match_paths(b2.build(), path).empty());
}

TEST_CASE("match_paths equals brute-force enumeration on random graphs") {
  Schema schema = default_schema();
  Rng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    KnowledgeGraph kg = random_kg(schema, rng, 3, 60 + trial);
    for (int p = 0; p < 4; ++p) {
      MetaPathSchema mp = random_metapath(rng, schema, 1, 4);
      auto fast = match_paths(kg, mp);
      auto slow = brute_force_match(kg, mp);
      std::multiset<std::vector<std::string>> a(fast.begin(), fast.end());
      std::multiset<std::vector<std::string>> b(slow.begin(), slow.end());
      CHECK(a == b);
    }
  }
}

TEST_CASE("match_paths honors the limit") {
  Schema schema = default_schema();
  Rng rng(7);
  KnowledgeGraph kg = random_kg(schema, rng, 4, 150);
  MetaPathSchema mp = random_metapath(rng, schema, 2, 3);
  auto all = match_paths(kg, mp);
  if (all.size() > 1) {
    auto limited = match_paths(kg, mp, all.size() - 1);
    CHECK(limited.size() == all.size() - 1);
  }
}

TEST_CASE("extract_subkg: exact facts, emptiness, subset and minimality") {
  Schema schema = mini_schema();
  KnowledgeGraphBuilder b(schema);
  b.add_entity("r1", "Region");
  b.add_entity("r2", "Region");
  b.add_entity("p1", "POI");
  b.add_entity("p2", "POI");
  b.add_entity("p3", "POI");
  b.add_fact("r1", "Has", "p1");
  b.add_fact("p1", "Competitive", "p2");
  b.add_fact("p2", "LocateAt", "r2");
  b.add_fact("r2", "Has", "p3");  // dangling: p3 has no Competitive edge
  KnowledgeGraph kg = b.build();
  auto path = parse_metapath("Region -[Has]-> POI -[Competitive]-> POI -[LocateAt]-> Region",
                             schema);

  SubKG sub = extract_subkg(kg, path);
  CHECK(sub.facts.size() == 3);
  CHECK(sub.entities.size() == 4);

  auto nothing = parse_metapath("Region -[PopulationFlowTo]-> Region", schema);
  SubKG empty = extract_subkg(kg, nothing);
  CHECK(empty.facts.empty());
  CHECK(empty.entities.empty());
}

TEST_CASE("extract_subkg properties on random graphs") {
  Schema schema = default_schema();
  Rng rng(123);
  for (int trial = 0; trial < 10; ++trial) {
    KnowledgeGraph kg = random_kg(schema, rng, 3, 80);
    MetaPathSchema mp = random_metapath(rng, schema, 1, 3);
    SubKG sub = extract_subkg(kg, mp);

    // subset of parent facts
    for (const Fact& f : sub.facts)
      CHECK(std::find(kg.facts().begin(), kg.facts().end(), f) != kg.facts().end());

    // every sub-KG fact lies on at least one enumerated instance
    auto matches = brute_force_match(kg, mp);
    std::set<std::tuple<std::string, std::string, std::string>> on_paths;
    for (const auto& inst : matches)
      for (size_t h = 0; h < mp.hop_count(); ++h)
        on_paths.insert({inst[h], mp.hops[h].relation, inst[h + 1]});
    CHECK(sub.facts.size() == on_paths.size());
    for (const Fact& f : sub.facts) {
      auto key = std::make_tuple(kg.entity(f.head).id,
                                 kg.schema().relations()[static_cast<size_t>(f.rel)].name,
                                 kg.entity(f.tail).id);
      CHECK(on_paths.count(key) == 1);
    }
  }
}

TEST_CASE("count_instances: direct, zero, and partition over regions") {
  Schema schema = mini_schema();
  KnowledgeGraphBuilder b(schema);
  b.add_entity("r1", "Region");
  b.add_entity("r2", "Region");
  b.add_entity("p1", "POI");
  b.add_entity("p2", "POI");
  b.add_fact("r1", "Has", "p1");
  b.add_fact("p1", "Competitive", "p2");
  b.add_fact("p2", "LocateAt", "r2");
  KnowledgeGraph kg = b.build();
  auto path = parse_metapath("Region -[Has]-> POI -[Competitive]-> POI -[LocateAt]-> Region",
                             schema);
  CHECK(count_instances(kg, path, "r1") == 1);
  CHECK(count_instances(kg, path, "r2") == 0);
  CHECK_THROWS_AS(count_instances(kg, path, "ghost"), Error);
  CHECK_THROWS_AS(count_instances(kg, path, "p1"), Error);

  // sum over regions == total number of matches, on random graphs
  Schema full = default_schema();
  Rng rng(42);
  for (int trial = 0; trial < 8; ++trial) {
    KnowledgeGraph rkg = random_kg(full, rng, 3, 70);
    MetaPathSchema mp = random_metapath(rng, full, 1, 3);
    uint64_t total = 0;
    for (const auto& [_, c] : count_instances_all(rkg, mp)) total += c;
    CHECK(total == match_paths(rkg, mp).size());
  }
}

TEST_CASE("metapath list file round-trip") {
  TempDir tmp("mp");
  Schema schema = default_schema();
  std::vector<MetaPathSchema> paths = {
      parse_metapath("Region -[Has]-> POI -[Competitive]-> POI -[LocateAt]-> Region # comp",
                     schema),
      parse_metapath("Region -[ServedBy]-> BusinessArea -[Contain]-> POI", schema),
  };
  save_metapath_file(tmp.file("paths.mp"), paths);
  auto loaded = load_metapath_file(tmp.file("paths.mp"), schema);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0] == paths[0]);
  CHECK(loaded[0].label == "comp");
  CHECK(loaded[1] == paths[1]);
}
