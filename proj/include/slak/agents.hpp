#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "slak/metapath.hpp"

namespace slak {

// One prompt/response exchange.
struct ChatTurn {
  std::string prompt;
  std::string response;
};

// Everything recorded for one agent call: the conversation plus the meta-paths
// that were accepted from it.
struct AgentTranscript {
  std::string task;
  std::string kind;  // propose | self_update | recommend
  std::vector<ChatTurn> turns;
  std::vector<MetaPathSchema> accepted;  // labels carried on the schemas
  std::vector<std::string> reasons;      // aligned with accepted
};

// Chat backend. `key` names the call site (e.g. "propose:population") so the
// mock can route to its fixtures; remote mode ignores it.
class ChatClient {
 public:
  virtual ~ChatClient() = default;
  virtual std::string complete(const std::string& key, const std::string& prompt) = 0;
  virtual const char* mode_name() const = 0;
};

// Fixture-file driven, fully deterministic. A call with key K reads
// `<dir>/<sanitized K>.txt`; multiple responses for successive turns of the
// same key are separated by a line containing only `---`.
class MockChatClient : public ChatClient {
 public:
  explicit MockChatClient(std::string fixture_dir);
  std::string complete(const std::string& key, const std::string& prompt) override;
  const char* mode_name() const override { return "mock"; }

  static std::string sanitize_key(const std::string& key);

 private:
  std::string dir_;
  std::map<std::string, size_t> cursor_;
};

// Minimal HTTP chat contract: POST {"model", "messages": [{role, content}],
// "temperature": 0} -> {"content": "..."}. Endpoint/model/key come from
// LLM_ENDPOINT / LLM_MODEL / LLM_API_KEY.
class RemoteChatClient : public ChatClient {
 public:
  RemoteChatClient(std::string endpoint, std::string model, std::string api_key);
  static bool env_configured();
  static std::unique_ptr<RemoteChatClient> from_env();
  std::string complete(const std::string& key, const std::string& prompt) override;
  const char* mode_name() const override { return "remote"; }

 private:
  std::string endpoint_, model_, api_key_;
};

// Natural-language description of the LBKG schema: entity types plus every
// relation with head/tail types and its meaning.
std::string render_schema_prompt(const Schema& schema);

// Parses meta-path DSL lines out of an agent response, tolerating surrounding
// prose and code fences. `name:` / `reason:` lines following a path are
// attached to it. Invalid DSL-looking lines are reported in `errors`.
struct ParsedResponse {
  std::vector<MetaPathSchema> paths;
  std::vector<std::string> reasons;
  std::vector<std::string> errors;
};
ParsedResponse parse_agent_response(const std::string& response, const Schema& schema);

// Asks the agent for `n` meta-paths for a task; invalid output triggers a
// repair re-prompt quoting the validation error, up to 3 attempts in total.
AgentTranscript propose_metapaths(ChatClient& client, const Schema& schema,
                                  const std::string& task, const std::string& task_description,
                                  int n);

// Round-2 self-update: the agent revises its own meta-paths given every
// task's round-1 paths. Returns exactly n paths (repetition allowed).
AgentTranscript self_update(ChatClient& client, const Schema& schema, const std::string& task,
                            const std::string& task_description,
                            const std::vector<MetaPathSchema>& own_paths,
                            const std::map<std::string, std::vector<MetaPathSchema>>& all_paths,
                            int n);

// Round-2 recommendation of a single meta-path from one task's agent to
// another task, with the stated reasoning kept in the transcript.
AgentTranscript recommend(ChatClient& client, const Schema& schema, const std::string& from_task,
                          const std::string& to_task,
                          const std::map<std::string, std::vector<MetaPathSchema>>& all_paths);

struct CommunicationResult {
  std::map<std::string, std::vector<MetaPathSchema>> paths;  // task -> P_new
  std::vector<AgentTranscript> transcripts;
  std::vector<std::string> notes;  // e.g. dedup events
};

struct CommunicationFlags {
  bool no_self_update = false;
  bool no_rec = false;
};

// Algorithm round 2, meta-path update phase: per task, self-updated paths
// plus one recommendation from every other task's agent, deduplicated.
CommunicationResult run_communication_round(
    ChatClient& client, const Schema& schema,
    const std::map<std::string, std::vector<MetaPathSchema>>& round1_paths,
    const std::map<std::string, std::string>& task_descriptions, int n_p,
    CommunicationFlags flags = {});

// Transcript file: prompt/response pairs delimited by markers, replayable
// offline.
void save_transcript(const std::string& path, const AgentTranscript& transcript);

}  // namespace slak
