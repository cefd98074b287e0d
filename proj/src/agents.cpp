#include "slak/agents.hpp"

#include <json.hpp>

#include <cstdlib>
#include <sstream>

#include <httplib.h>

namespace slak {

using nlohmann::json;

MockChatClient::MockChatClient(std::string fixture_dir) : dir_(std::move(fixture_dir)) {}

std::string MockChatClient::sanitize_key(const std::string& key) {
  std::string out;
  for (char c : key)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  return out;
}

std::string MockChatClient::complete(const std::string& key, const std::string& prompt) {
  (void)prompt;
  std::string path = dir_ + "/" + sanitize_key(key) + ".txt";
  if (!file_exists(path))
    fail(ErrorKind::Io, "mock agent fixture missing: " + path);
  // Responses for successive turns are separated by a `---` line.
  std::vector<std::string> responses;
  std::istringstream in(read_file(path));
  std::string line, current;
  while (std::getline(in, line)) {
    if (trim(line) == "---") {
      responses.push_back(current);
      current.clear();
    } else {
      current += line;
      current += '\n';
    }
  }
  responses.push_back(current);
  size_t turn = cursor_[key]++;
  if (turn >= responses.size()) turn = responses.size() - 1;  // repeat the last response
  return responses[turn];
}

RemoteChatClient::RemoteChatClient(std::string endpoint, std::string model, std::string api_key)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), api_key_(std::move(api_key)) {}

bool RemoteChatClient::env_configured() {
  const char* e = std::getenv("LLM_ENDPOINT");
  return e && *e;
}

std::unique_ptr<RemoteChatClient> RemoteChatClient::from_env() {
  if (!env_configured()) fail(ErrorKind::Invalid, "LLM_ENDPOINT is not set; use mock mode");
  const char* model = std::getenv("LLM_MODEL");
  const char* key = std::getenv("LLM_API_KEY");
  return std::make_unique<RemoteChatClient>(std::getenv("LLM_ENDPOINT"), model ? model : "",
                                            key ? key : "");
}

std::string RemoteChatClient::complete(const std::string& key, const std::string& prompt) {
  (void)key;
  std::string rest = endpoint_;
  if (rest.rfind("http://", 0) == 0) rest = rest.substr(7);
  size_t slash = rest.find('/');
  std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
  std::string path = slash == std::string::npos ? "/" : rest.substr(slash);

  httplib::Client client(host);
  client.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  json body = {{"model", model_},
               {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
               {"temperature", 0}};
  std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt < 3; ++attempt) {
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "status " + std::to_string(res->status);
      continue;
    }
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.contains("content"))
      fail(ErrorKind::Runtime, "malformed chat response from " + endpoint_);
    return parsed["content"].get<std::string>();
  }
  fail(ErrorKind::Runtime,
       "chat request to " + endpoint_ + " failed after 3 attempts (" + last_error + ")");
}

std::string render_schema_prompt(const Schema& schema) {
  std::ostringstream out;
  out << "The location-based knowledge graph has the following entity types:\n";
  for (const std::string& t : schema.entity_types()) out << "- " << t << "\n";
  out << "\nIt has " << schema.relation_count()
      << " relation types, listed as `Relation(HeadType, TailType): meaning`:\n";
  for (const RelationType& rel : schema.relations()) {
    out << "- " << rel.name << "(" << rel.head_type << ", " << rel.tail_type << ")";
    if (!rel.description.empty()) out << ": " << rel.description;
    out << "\n";
  }
  return out.str();
}

namespace {

const char* kFormatInstructions =
    "Write each meta-path on its own line in exactly this form:\n"
    "EntityType -[RelationName]-> EntityType -[RelationName]-> EntityType\n"
    "Every meta-path must start from Region. After each meta-path, add a\n"
    "`name:` line naming it and a `reason:` line explaining why it helps.\n";

bool looks_like_path(const std::string& line) {
  return line.find("-[") != std::string::npos;
}

std::string strip_decorations(const std::string& raw) {
  std::string line = trim(raw);
  // Tolerate list markers and code fences around the DSL.
  while (!line.empty() && (line[0] == '-' || line[0] == '*' || line[0] == '`' ||
                           std::isdigit(static_cast<unsigned char>(line[0])) || line[0] == '.' ||
                           line[0] == ')' || line[0] == ' ')) {
    if (line[0] == '-' && line.size() > 1 && line[1] == '[') break;  // start of a hop
    line.erase(line.begin());
  }
  while (!line.empty() && line.back() == '`') line.pop_back();
  return trim(line);
}

}  // namespace

ParsedResponse parse_agent_response(const std::string& response, const Schema& schema) {
  ParsedResponse out;
  std::istringstream in(response);
  std::string raw;
  std::string pending_name, pending_reason;
  auto flush_pending = [&]() {
    if (!out.paths.empty()) {
      if (!pending_name.empty() && out.paths.back().label.empty())
        out.paths.back().label = pending_name;
      if (out.reasons.size() < out.paths.size()) out.reasons.resize(out.paths.size());
      if (!pending_reason.empty()) out.reasons[out.paths.size() - 1] = pending_reason;
    }
    pending_name.clear();
    pending_reason.clear();
  };
  while (std::getline(in, raw)) {
    std::string line = trim(raw);
    if (line.rfind("```", 0) == 0) continue;
    std::string lower;
    for (char c : line) lower.push_back(static_cast<char>(std::tolower(c)));
    if (lower.rfind("name:", 0) == 0) {
      pending_name = trim(line.substr(5));
      flush_pending();
      continue;
    }
    if (lower.rfind("reason:", 0) == 0) {
      pending_reason = trim(line.substr(7));
      flush_pending();
      continue;
    }
    std::string candidate = strip_decorations(line);
    if (!looks_like_path(candidate)) continue;
    try {
      out.paths.push_back(parse_metapath(candidate, schema));
      out.reasons.resize(out.paths.size());
    } catch (const Error& e) {
      out.errors.push_back("`" + candidate + "`: " + e.what());
    }
  }
  return out;
}

namespace {

std::string format_path_block(const std::vector<MetaPathSchema>& paths) {
  std::string out;
  for (const auto& p : paths) {
    MetaPathSchema bare = p;
    bare.label.clear();
    out += "  " + format_metapath(bare) + "\n";
  }
  return out;
}

std::string all_tasks_block(const std::map<std::string, std::vector<MetaPathSchema>>& all) {
  std::string out;
  for (const auto& [task, paths] : all) {
    out += "Task `" + task + "` currently uses:\n";
    out += format_path_block(paths);
  }
  return out;
}

// Shared repair loop: prompt, parse, and re-prompt quoting the validation
// error until `n` valid paths arrive or attempts run out.
AgentTranscript converse(ChatClient& client, const Schema& schema, const std::string& key,
                         const std::string& task, const std::string& kind,
                         const std::string& initial_prompt, int n) {
  AgentTranscript transcript;
  transcript.task = task;
  transcript.kind = kind;
  std::string prompt = initial_prompt;
  for (int attempt = 0; attempt < 3; ++attempt) {
    std::string response = client.complete(key, prompt);
    transcript.turns.push_back({prompt, response});
    ParsedResponse parsed = parse_agent_response(response, schema);
    if (parsed.errors.empty() && static_cast<int>(parsed.paths.size()) >= n) {
      transcript.accepted.assign(parsed.paths.begin(), parsed.paths.begin() + n);
      transcript.reasons.assign(parsed.reasons.begin(), parsed.reasons.begin() + n);
      return transcript;
    }
    std::string problem;
    if (!parsed.errors.empty())
      problem = "These meta-paths failed validation:\n- " + parsed.errors[0];
    else
      problem = "Only " + std::to_string(parsed.paths.size()) + " valid meta-paths were found, " +
                std::to_string(n) + " are required.";
    prompt = initial_prompt + "\nYour previous answer had a problem. " + problem +
             "\nPlease answer again with exactly " + std::to_string(n) +
             " valid meta-paths in the required format.\n";
  }
  std::string dump;
  for (const auto& turn : transcript.turns)
    dump += "--- prompt ---\n" + turn.prompt + "--- response ---\n" + turn.response + "\n";
  fail(ErrorKind::Runtime, kind + " for task `" + task +
                               "` failed validation after 3 attempts; transcript:\n" + dump);
}

}  // namespace

AgentTranscript propose_metapaths(ChatClient& client, const Schema& schema,
                                  const std::string& task, const std::string& task_description,
                                  int n) {
  if (n < 1) fail(ErrorKind::Invalid, "propose_metapaths: n must be >= 1");
  std::ostringstream prompt;
  prompt << render_schema_prompt(schema) << "\n"
         << "You are an analyst for the task: " << task_description << "\n"
         << "Find " << n
         << " meta-paths in this knowledge graph whose instances are most useful for "
            "predicting this indicator of a region.\n"
         << kFormatInstructions;
  return converse(client, schema, "propose:" + task, task, "propose", prompt.str(), n);
}

AgentTranscript self_update(ChatClient& client, const Schema& schema, const std::string& task,
                            const std::string& task_description,
                            const std::vector<MetaPathSchema>& own_paths,
                            const std::map<std::string, std::vector<MetaPathSchema>>& all_paths,
                            int n) {
  std::ostringstream prompt;
  prompt << render_schema_prompt(schema) << "\n"
         << "You are an analyst for the task: " << task_description << "\n"
         << "Your task currently uses these meta-paths:\n"
         << format_path_block(own_paths) << "\nAll tasks chose the following meta-paths:\n"
         << all_tasks_block(all_paths) << "\nUpdate your own selection: reply with " << n
         << " meta-paths for your task, improving on your previous choice using ideas from the "
            "other tasks. Keeping a previous meta-path is allowed.\n"
         << kFormatInstructions;
  return converse(client, schema, "self_update:" + task, task, "self_update", prompt.str(), n);
}

AgentTranscript recommend(ChatClient& client, const Schema& schema, const std::string& from_task,
                          const std::string& to_task,
                          const std::map<std::string, std::vector<MetaPathSchema>>& all_paths) {
  if (from_task == to_task)
    fail(ErrorKind::Invalid, "recommend: from_task and to_task must differ");
  std::ostringstream prompt;
  prompt << render_schema_prompt(schema) << "\n"
         << "You are the analyst responsible for predicting `" << from_task << "`.\n"
         << "All tasks chose the following meta-paths:\n"
         << all_tasks_block(all_paths) << "\nRecommend exactly one new meta-path to the analyst "
         << "predicting `" << to_task << "`, from your own task's perspective.\n"
         << "Think step by step: first describe how `" << from_task << "` relates to `" << to_task
         << "` and why your recommendation helps, then give the meta-path.\n"
         << kFormatInstructions;
  AgentTranscript t = converse(client, schema, "recommend:" + from_task + ":" + to_task,
                               from_task, "recommend", prompt.str(), 1);
  t.task = from_task + "->" + to_task;
  return t;
}

CommunicationResult run_communication_round(
    ChatClient& client, const Schema& schema,
    const std::map<std::string, std::vector<MetaPathSchema>>& round1_paths,
    const std::map<std::string, std::string>& task_descriptions, int n_p,
    CommunicationFlags flags) {
  CommunicationResult result;
  std::map<std::string, std::vector<MetaPathSchema>> updated;
  std::map<std::string, std::vector<MetaPathSchema>> recommended;

  for (const auto& [task, own_paths] : round1_paths) {
    if (!flags.no_self_update) {
      auto it = task_descriptions.find(task);
      std::string description = it == task_descriptions.end() ? task : it->second;
      AgentTranscript t =
          self_update(client, schema, task, description, own_paths, round1_paths, n_p);
      updated[task] = t.accepted;
      result.transcripts.push_back(std::move(t));
    }
    if (!flags.no_rec) {
      for (const auto& [other, _] : round1_paths) {
        if (other == task) continue;
        AgentTranscript t = recommend(client, schema, task, other, round1_paths);
        recommended[other].push_back(t.accepted.at(0));
        result.transcripts.push_back(std::move(t));
      }
    }
  }

  for (const auto& [task, round1] : round1_paths) {
    std::vector<MetaPathSchema> merged;
    if (!flags.no_self_update) merged = updated[task];
    for (const MetaPathSchema& rec : recommended[task]) merged.push_back(rec);
    // Dedup on the canonical unlabeled form.
    std::vector<MetaPathSchema> unique;
    for (const MetaPathSchema& p : merged) {
      bool dup = false;
      for (const MetaPathSchema& q : unique)
        if (p == q) {
          dup = true;
          break;
        }
      if (dup) {
        MetaPathSchema bare = p;
        bare.label.clear();
        result.notes.push_back("task " + task + ": dropped duplicate meta-path " +
                               format_metapath(bare));
      } else {
        unique.push_back(p);
      }
    }
    if (unique.empty())
      fail(ErrorKind::Runtime, "communication round left task `" + task + "` with no meta-paths");
    result.paths[task] = std::move(unique);
  }
  return result;
}

void save_transcript(const std::string& path, const AgentTranscript& transcript) {
  std::string out;
  out += "# task: " + transcript.task + "\n";
  out += "# kind: " + transcript.kind + "\n";
  for (const auto& turn : transcript.turns) {
    out += "=== PROMPT ===\n";
    out += turn.prompt;
    if (out.back() != '\n') out += '\n';
    out += "=== RESPONSE ===\n";
    out += turn.response;
    if (out.back() != '\n') out += '\n';
  }
  out += "=== ACCEPTED ===\n";
  for (const auto& p : transcript.accepted) out += format_metapath(p) + "\n";
  write_file(path, out);
}

}  // namespace slak
