#include <doctest.h>

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "slak/agents.hpp"
#include "test_support.hpp"

using namespace slak;
using namespace slak::testing;

namespace {

void write_fixture(const TempDir& dir, const std::string& key, const std::string& content) {
  write_file(dir.file(MockChatClient::sanitize_key(key) + ".txt"), content);
}

const char* kThreeValid =
    "Here are my suggestions.\n"
    "\n"
    "Region -[Has]-> POI -[HasBrandOf]-> Brand\n"
    "name: branded supply\n"
    "reason: store density tracks the target\n"
    "\n"
    "Region -[ServedBy]-> BusinessArea -[Contain]-> POI\n"
    "name: coverage\n"
    "reason: business areas concentrate activity\n"
    "\n"
    "Region -[Has]-> POI -[Competitive]-> POI\n"
    "name: rivalry\n"
    "reason: competition marks demand\n";

}  // namespace

TEST_CASE("schema prompt lists every entity type and relation") {
  Schema schema = default_schema();
  std::string prompt = render_schema_prompt(schema);
  for (const char* etype : entity_types::kNames)
    CHECK(prompt.find(etype) != std::string::npos);
  for (const RelationType& rel : schema.relations()) {
    CHECK(prompt.find(rel.name + "(") != std::string::npos);
    if (!rel.description.empty()) CHECK(prompt.find(rel.description) != std::string::npos);
  }
  CHECK(prompt == render_schema_prompt(schema));

  Schema one = mini_schema();
  std::string small = render_schema_prompt(one);
  CHECK(small.find("Has(Region, POI): Region contains POI") != std::string::npos);
}

TEST_CASE("response parser: DSL extraction from prose, fences and labels") {
  Schema schema = default_schema();
  std::string response =
      "Reasoning first: competitive venues matter a lot.\n"
      "```\n"
      "1. Region -[Has]-> POI -[Competitive]-> POI\n"
      "```\n"
      "name: rivalry\n"
      "reason: stated above\n"
      "- Region -[ServedBy]-> BusinessArea\n";
  ParsedResponse parsed = parse_agent_response(response, schema);
  REQUIRE(parsed.paths.size() == 2);
  CHECK(parsed.errors.empty());
  CHECK(parsed.paths[0].label == "rivalry");
  CHECK(parsed.reasons[0] == "stated above");
  CHECK(parsed.paths[1].hop_count() == 1);

  ParsedResponse bad = parse_agent_response("Region -[Ghost]-> POI\n", schema);
  CHECK(bad.paths.empty());
  REQUIRE(bad.errors.size() == 1);
  CHECK(bad.errors[0].find("unknown relation") != std::string::npos);
}

TEST_CASE("propose: mock passthrough of three valid paths") {
  TempDir fixtures("agents_ok");
  write_fixture(fixtures, "propose:population", kThreeValid);
  MockChatClient client(fixtures.path());
  Schema schema = default_schema();
  AgentTranscript t = propose_metapaths(client, schema, "population", "Predict population.", 3);
  REQUIRE(t.accepted.size() == 3);
  CHECK(t.turns.size() == 1);
  CHECK(format_metapath(t.accepted[0]).rfind("Region -[Has]-> POI -[HasBrandOf]-> Brand", 0) ==
        0);
  CHECK(t.accepted[0].label == "branded supply");
  CHECK(t.reasons[0] == "store density tracks the target");
  for (const auto& p : t.accepted) CHECK(p.start_type == "Region");
  CHECK(t.turns[0].prompt.find("35 relation types") != std::string::npos);
}

TEST_CASE("propose: invalid line triggers a repair re-prompt quoting the error") {
  TempDir fixtures("agents_repair");
  write_fixture(fixtures, "propose:population",
                std::string("Region -[Ghost]-> POI\n") + "---\n" + kThreeValid);
  MockChatClient client(fixtures.path());
  Schema schema = default_schema();
  AgentTranscript t = propose_metapaths(client, schema, "population", "Predict population.", 3);
  REQUIRE(t.turns.size() == 2);
  CHECK(t.turns[1].prompt.find("unknown relation") != std::string::npos);
  CHECK(t.accepted.size() == 3);
}

TEST_CASE("propose: persistent invalid output fails after 3 attempts with the transcript") {
  TempDir fixtures("agents_fail");
  write_fixture(fixtures, "propose:population", "no meta-paths here, ever\n");
  MockChatClient client(fixtures.path());
  Schema schema = default_schema();
  CHECK_THROWS_WITH_AS(propose_metapaths(client, schema, "population", "Predict population.", 3),
                       doctest::Contains("after 3 attempts"), Error);
}

TEST_CASE("self_update: fixpoint allowed, size pinned to n") {
  TempDir fixtures("agents_update");
  write_fixture(fixtures, "self_update:population", kThreeValid);
  MockChatClient client(fixtures.path());
  Schema schema = default_schema();
  std::vector<MetaPathSchema> own = {
      parse_metapath("Region -[Has]-> POI -[HasBrandOf]-> Brand", schema),
      parse_metapath("Region -[ServedBy]-> BusinessArea -[Contain]-> POI", schema),
      parse_metapath("Region -[Has]-> POI -[Competitive]-> POI", schema),
  };
  std::map<std::string, std::vector<MetaPathSchema>> all = {{"population", own}};
  AgentTranscript t =
      self_update(client, schema, "population", "Predict population.", own, all, 3);
  REQUIRE(t.accepted.size() == 3);
  for (size_t i = 0; i < 3; ++i) CHECK(t.accepted[i] == own[i]);
}

TEST_CASE("self_update with the shipped fixtures includes the 5-hop brand/category path") {
  MockChatClient client(source_dir() + "/fixtures/agents");
  Schema schema = default_schema();
  std::vector<MetaPathSchema> own = {
      parse_metapath("Region -[Has]-> POI -[Competitive]-> POI", schema)};
  std::map<std::string, std::vector<MetaPathSchema>> all = {{"user_activity", own}};
  AgentTranscript t =
      self_update(client, schema, "user_activity", "Predict user activity.", own, all, 3);
  REQUIRE(t.accepted.size() == 3);
  bool has_five_hop = false;
  for (const auto& p : t.accepted) {
    bool touches_brand = false, touches_category = false;
    for (const auto& hop : p.hops) {
      touches_brand |= hop.next_type == "Brand";
      touches_category |= hop.next_type == "Category1";
    }
    has_five_hop |= p.hop_count() == 5 && touches_brand && touches_category;
  }
  CHECK(has_five_hop);
}

TEST_CASE("recommend: validates, records reasoning, rejects self-recommendation") {
  MockChatClient client(source_dir() + "/fixtures/agents");
  Schema schema = default_schema();
  std::map<std::string, std::vector<MetaPathSchema>> all = {
      {"population", {parse_metapath("Region -[Has]-> POI", schema)}},
      {"user_activity", {parse_metapath("Region -[Has]-> POI", schema)}},
  };
  AgentTranscript t = recommend(client, schema, "population", "user_activity", all);
  REQUIRE(t.accepted.size() == 1);
  CHECK(t.accepted[0].hop_count() == 5);
  CHECK(t.accepted[0].hops[0].relation == "PopulationFlowTo");
  CHECK(t.turns[0].prompt.find("step by step") != std::string::npos);

  CHECK_THROWS_AS(recommend(client, schema, "population", "population", all), Error);
}

TEST_CASE("communication round: sizes, dedup, ablation flags") {
  Schema schema = default_schema();
  auto path = [&schema](const std::string& text) { return parse_metapath(text, schema); };

  TempDir fixtures("agents_round");
  // Two tasks; self-updates return the task's own paths, recommendations are fixed.
  write_fixture(fixtures, "self_update:a",
                "Region -[Has]-> POI\nRegion -[ServedBy]-> BusinessArea\nRegion -[HasStoreOf]-> "
                "Brand\n");
  write_fixture(fixtures, "self_update:b",
                "Region -[NearBy]-> Region\nRegion -[BorderBy]-> Region\nRegion "
                "-[SimilarFunction]-> Region\n");
  write_fixture(fixtures, "recommend:a:b", "Region -[PopulationFlowTo]-> Region\n");
  write_fixture(fixtures, "recommend:b:a", "Region -[Has]-> POI -[Competitive]-> POI\n");
  MockChatClient client(fixtures.path());

  std::map<std::string, std::vector<MetaPathSchema>> round1 = {
      {"a",
       {path("Region -[Has]-> POI"), path("Region -[ServedBy]-> BusinessArea"),
        path("Region -[HasStoreOf]-> Brand")}},
      {"b",
       {path("Region -[NearBy]-> Region"), path("Region -[BorderBy]-> Region"),
        path("Region -[SimilarFunction]-> Region")}},
  };
  std::map<std::string, std::string> descriptions = {{"a", "Task a."}, {"b", "Task b."}};

  SUBCASE("full round: |P_new| = n_p + (N_I - 1)") {
    CommunicationResult r = run_communication_round(client, schema, round1, descriptions, 3);
    CHECK(r.paths.at("a").size() == 4);
    CHECK(r.paths.at("b").size() == 4);
    CHECK(r.notes.empty());
    CHECK(r.transcripts.size() == 4);  // 2 self-updates + 2 recommendations
  }
  SUBCASE("duplicate recommendation is deduplicated and logged") {
    write_fixture(fixtures, "recommend:b:a", "Region -[Has]-> POI\n");  // already in a's set
    MockChatClient dup_client(fixtures.path());
    CommunicationResult r = run_communication_round(dup_client, schema, round1, descriptions, 3);
    CHECK(r.paths.at("a").size() == 3);
    REQUIRE(r.notes.size() == 1);
    CHECK(r.notes[0].find("duplicate") != std::string::npos);
  }
  SUBCASE("no_self_update keeps only recommendations") {
    CommunicationResult r = run_communication_round(client, schema, round1, descriptions, 3,
                                                    {true, false});
    CHECK(r.paths.at("a").size() == 1);
    CHECK(r.paths.at("a")[0] == path("Region -[Has]-> POI -[Competitive]-> POI"));
  }
  SUBCASE("no_rec keeps only self-updates") {
    CommunicationResult r = run_communication_round(client, schema, round1, descriptions, 3,
                                                    {false, true});
    CHECK(r.paths.at("a").size() == 3);
    CHECK(r.paths.at("a") == round1.at("a"));
  }
}

TEST_CASE("mock transcripts are byte-identical across runs and replayable") {
  TempDir fixtures("agents_replay");
  TempDir out("agents_out");
  write_fixture(fixtures, "propose:population", kThreeValid);
  Schema schema = default_schema();

  auto run_once = [&](const std::string& name) {
    MockChatClient client(fixtures.path());
    AgentTranscript t = propose_metapaths(client, schema, "population", "Predict population.", 3);
    save_transcript(out.file(name), t);
    return t;
  };
  AgentTranscript a = run_once("a.txt");
  run_once("b.txt");
  CHECK(read_file(out.file("a.txt")) == read_file(out.file("b.txt")));

  // Offline replay: parsing the stored response reproduces the accepted paths.
  ParsedResponse parsed = parse_agent_response(a.turns[0].response, schema);
  REQUIRE(parsed.paths.size() == a.accepted.size());
  for (size_t i = 0; i < parsed.paths.size(); ++i) CHECK(parsed.paths[i] == a.accepted[i]);
}

TEST_CASE("every shipped fixture parses against the default schema") {
  Schema schema = default_schema();
  MockChatClient client(source_dir() + "/fixtures/agents");
  std::map<std::string, std::vector<MetaPathSchema>> round1;
  std::map<std::string, std::string> descriptions;
  for (const std::string& task : {"population", "commercial", "user_activity", "rating"}) {
    AgentTranscript t = propose_metapaths(client, schema, task, "Predict " + task + ".", 3);
    CHECK(t.accepted.size() == 3);
    round1[task] = t.accepted;
    descriptions[task] = "Predict " + task + ".";
  }
  CommunicationResult r = run_communication_round(client, schema, round1, descriptions, 3);
  for (const auto& [task, paths] : r.paths) {
    CAPTURE(task);
    CHECK(paths.size() >= 3);
    CHECK(paths.size() <= 6);
  }
}

TEST_CASE("remote chat client speaks the minimal HTTP contract") {
  httplib::Server server;
  server.Post("/chat", [](const httplib::Request& req, httplib::Response& res) {
    auto body = nlohmann::json::parse(req.body);
    REQUIRE(body["temperature"].get<double>() == 0.0);
    REQUIRE(body["messages"].size() == 1);
    std::string prompt = body["messages"][0]["content"].get<std::string>();
    nlohmann::json out = {{"content", "Region -[Has]-> POI\nname: echo\nreason: prompt had " +
                                          std::to_string(prompt.size()) + " chars\n"}};
    res.set_content(out.dump(), "application/json");
  });
  int port = server.bind_to_any_port("127.0.0.1");
  if (port <= 0) {
    MESSAGE("cannot bind a loopback port in this environment; skipping");
    return;
  }
  std::thread t([&server]() { server.listen_after_bind(); });
  server.wait_until_ready();

  RemoteChatClient client("http://127.0.0.1:" + std::to_string(port) + "/chat", "test-model",
                          "secret");
  Schema schema = default_schema();
  AgentTranscript transcript =
      propose_metapaths(client, schema, "population", "Predict population.", 1);
  REQUIRE(transcript.accepted.size() == 1);
  CHECK(format_metapath(transcript.accepted[0]).rfind("Region -[Has]-> POI", 0) == 0);

  server.stop();
  t.join();
}
