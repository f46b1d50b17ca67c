#include "medverify/gateway.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <thread>

#include <httplib.h>

#include "medverify/hash.hpp"
#include "medverify/http_util.hpp"
#include "medverify/verdict.hpp"

namespace medv::gateway {

ChatRequest make_request(std::string model, const prompts::PromptPair& prompt, double temperature) {
  return ChatRequest{std::move(model), prompt.system, prompt.user, temperature};
}

json chat_completions_body(const ChatRequest& req) {
  json messages = json::array();
  if (!req.system.empty()) messages.push_back({{"role", "system"}, {"content", req.system}});
  messages.push_back({{"role", "user"}, {"content", req.user}});
  return json{{"model", req.model}, {"messages", std::move(messages)}, {"temperature", req.temperature}};
}

std::string chat_completions_content(const json& body) {
  const json* content = nullptr;
  if (body.is_object() && body.contains("choices") && body["choices"].is_array() &&
      !body["choices"].empty()) {
    const json& first = body["choices"][0];
    if (first.is_object() && first.contains("message") && first["message"].is_object() &&
        first["message"].contains("content")) {
      content = &first["message"]["content"];
    }
  }
  if (content == nullptr || !content->is_string() || trim(content->get<std::string>()).empty()) {
    throw BackendError(ErrorCode::EmptyResponse, "response has no choices[0].message.content", false);
  }
  return content->get<std::string>();
}

std::optional<BackendError> error_for_status(int status, std::string_view body) {
  if (status >= 200 && status < 300) return std::nullopt;
  const std::string detail = "HTTP " + std::to_string(status) + ": " +
                             std::string(body.substr(0, std::min<std::size_t>(body.size(), 200)));
  if (status == 401 || status == 403) return BackendError(ErrorCode::Auth, detail, false, status);
  if (status == 429) return BackendError(ErrorCode::RateLimit, detail, true, status);
  if (status >= 500) return BackendError(ErrorCode::Transport, detail, true, status);
  return BackendError(ErrorCode::Transport, detail, false, status);
}

// ---------------------------------------------------------------------------

HttpChatBackend::HttpChatBackend(HttpSettings settings) : settings_(std::move(settings)) {
  split_base_url(settings_.base_url);  // validates early
}

std::string HttpChatBackend::send(const ChatRequest& req) {
  const SplitUrl url = split_base_url(settings_.base_url);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(settings_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(settings_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  httplib::Headers headers;
  if (!settings_.api_key.empty()) headers.emplace("Authorization", "Bearer " + settings_.api_key);

  const std::string body = dump_line(chat_completions_body(req));
  auto res = client.Post(url.path_prefix + "/chat/completions", headers, body, "application/json");
  if (!res) {
    throw BackendError(ErrorCode::Transport, "request failed: " + httplib::to_string(res.error()), true);
  }
  if (auto err = error_for_status(res->status, res->body)) throw *err;

  json parsed = json::parse(res->body, nullptr, false);
  if (parsed.is_discarded()) {
    throw BackendError(ErrorCode::Transport, "response body is not JSON", false, res->status);
  }
  return chat_completions_content(parsed);
}

// ---------------------------------------------------------------------------

namespace {

std::optional<std::string> optional_string(const json& obj, const char* key) {
  if (!obj.contains(key)) return std::nullopt;
  if (!obj[key].is_string()) throw Error(ErrorCode::Schema, "expected a string", key);
  return obj[key].get<std::string>();
}

std::string field_value(std::string_view user, std::string_view name) {
  const std::string prefix = std::string(name) + ": ";
  std::size_t pos = 0;
  while (pos <= user.size()) {
    const std::size_t eol = std::min(user.find('\n', pos), user.size());
    const std::string_view line = user.substr(pos, eol - pos);
    if (line.substr(0, prefix.size()) == prefix) return std::string(trim(line.substr(prefix.size())));
    pos = eol + 1;
  }
  return {};
}

std::string after_marker(std::string_view user, std::string_view marker) {
  std::size_t pos = 0;
  while (pos <= user.size()) {
    const std::size_t eol = std::min(user.find('\n', pos), user.size());
    if (trim(user.substr(pos, eol - pos)) == marker) {
      return eol >= user.size() ? std::string() : std::string(trim(user.substr(eol + 1)));
    }
    pos = eol + 1;
  }
  return {};
}

}  // namespace

std::string expand_mock_template(std::string_view content, const ChatRequest& req) {
  std::string out;
  std::size_t pos = 0;
  while (pos < content.size()) {
    const std::size_t open = content.find("{{", pos);
    if (open == std::string_view::npos) break;
    const std::size_t close = content.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(content.substr(pos, open - pos));
    const std::string_view expr = content.substr(open + 2, close - open - 2);
    const std::size_t colon = expr.find(':');
    const std::string_view op = expr.substr(0, colon);
    const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : expr.substr(colon + 1);
    if (op == "field") {
      out += field_value(req.user, arg);
    } else if (op == "after") {
      out += after_marker(req.user, arg);
    } else if (op == "pick") {
      std::vector<std::string_view> options;
      std::size_t start = 0;
      while (true) {
        const std::size_t bar = arg.find('|', start);
        options.push_back(arg.substr(start, bar == std::string_view::npos ? arg.npos : bar - start));
        if (bar == std::string_view::npos) break;
        start = bar + 1;
      }
      const std::uint64_t h = hash_fields(req.model, req.system, req.user);
      out += options[h % options.size()];
    } else {
      out.append(content.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  out.append(content.substr(std::min(pos, content.size())));
  return out;
}

MockChatBackend::MockChatBackend(json script) {
  if (!script.is_object()) throw Error(ErrorCode::Schema, "mock script must be a JSON object");
  if (script.contains("exact")) {
    for (const json& e : script["exact"]) {
      exact_.emplace_back(hash_fields(require_string(e, "system"), require_string(e, "user")),
                          require_string(e, "content"));
    }
  }
  if (script.contains("rules")) {
    for (const json& r : script["rules"]) {
      Rule rule;
      rule.model = optional_string(r, "model");
      rule.system_contains = optional_string(r, "system_contains");
      rule.user_contains = optional_string(r, "user_contains");
      rule.content = r.contains("content") ? require_string(r, "content") : std::string();
      if (r.contains("status")) rule.status = static_cast<int>(require_int(r, "status"));
      rules_.push_back(std::move(rule));
    }
  }
  fallback_ = optional_string(script, "default");
}

std::shared_ptr<MockChatBackend> MockChatBackend::from_file(const std::filesystem::path& path) {
  return std::make_shared<MockChatBackend>(read_json_file(path));
}

std::string MockChatBackend::send(const ChatRequest& req) {
  calls_.fetch_add(1);
  const std::uint64_t key = hash_fields(req.system, req.user);
  for (const auto& [k, content] : exact_) {
    if (k == key) return content;
  }
  for (const Rule& rule : rules_) {
    if (rule.model && *rule.model != req.model) continue;
    if (rule.system_contains && req.system.find(*rule.system_contains) == std::string::npos) continue;
    if (rule.user_contains && req.user.find(*rule.user_contains) == std::string::npos) continue;
    if (auto err = error_for_status(rule.status, "scripted failure")) throw *err;
    std::string content = expand_mock_template(rule.content, req);
    if (trim(content).empty()) throw BackendError(ErrorCode::EmptyResponse, "mock returned empty content", false);
    return content;
  }
  if (fallback_) {
    std::string content = expand_mock_template(*fallback_, req);
    if (trim(content).empty()) throw BackendError(ErrorCode::EmptyResponse, "mock returned empty content", false);
    return content;
  }
  throw BackendError(ErrorCode::EmptyResponse, "mock script has no response for this request", false);
}

// ---------------------------------------------------------------------------

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, RetryPolicy policy, std::uint64_t jitter_seed)
    : backend_(std::move(backend)),
      policy_(policy),
      sleeper_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }),
      rng_state_(jitter_seed) {
  if (!backend_) throw Error(ErrorCode::Config, "gateway has no backend configured", "gateway");
  if (policy_.max_attempts < 1) throw Error(ErrorCode::Config, "max_attempts must be >= 1", "gateway.max_attempts");
}

std::chrono::milliseconds Gateway::backoff(int attempt) const {
  // Full jitter: uniform in [0, min(cap, base * 2^(attempt-1))].
  const auto base = policy_.base_delay.count();
  long long ceiling = base;
  for (int i = 1; i < attempt && ceiling < policy_.max_delay.count(); ++i) ceiling *= 2;
  ceiling = std::min<long long>(ceiling, policy_.max_delay.count());
  if (ceiling <= 0) return std::chrono::milliseconds(0);
  std::uint64_t r;
  {
    std::lock_guard lock(rng_mutex_);
    // splitmix64
    std::uint64_t z = (rng_state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    r = z ^ (z >> 31);
  }
  return std::chrono::milliseconds(static_cast<long long>(r % static_cast<std::uint64_t>(ceiling + 1)));
}

ChatResponse Gateway::complete(const ChatRequest& req) const {
  if (req.user.empty()) throw Error(ErrorCode::InvalidArgument, "chat request has an empty user message");
  if (req.temperature < 0) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
  for (int attempt = 1;; ++attempt) {
    attempts_.fetch_add(1);
    const auto start = std::chrono::steady_clock::now();
    try {
      std::string content = backend_->send(req);
      const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
          std::chrono::steady_clock::now() - start);
      return ChatResponse{std::move(content), req.model, elapsed.count()};
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= policy_.max_attempts) throw;
    }
    sleeper_(backoff(attempt));
  }
}

std::string request_key(const ChatRequest& req) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(hash_fields(req.model, req.system, req.user)));
  return buf;
}

namespace {

std::map<std::size_t, std::string> load_checkpoint(const std::filesystem::path& path,
                                                   std::span<const ChatRequest> reqs) {
  std::map<std::size_t, std::string> done;
  std::ifstream in(path);
  if (!in) return done;
  std::string line;
  while (std::getline(in, line)) {
    const json rec = json::parse(line, nullptr, false);
    // A torn final line from an interrupted run is ignored; that item is re-sent.
    if (rec.is_discarded() || !rec.is_object() || !rec.contains("index") || !rec.contains("content")) continue;
    const auto index = rec["index"].get<std::size_t>();
    if (index >= reqs.size()) {
      throw Error(ErrorCode::Checkpoint, "record index " + std::to_string(index) + " is out of range",
                  path.string());
    }
    if (rec.contains("key") && rec["key"].get<std::string>() != request_key(reqs[index])) {
      throw Error(ErrorCode::Checkpoint,
                  "record " + std::to_string(index) + " was written for a different request", path.string());
    }
    done[index] = rec["content"].get<std::string>();
  }
  return done;
}

}  // namespace

std::vector<BatchResult> Gateway::complete_batch(std::span<const ChatRequest> reqs, std::size_t parallelism,
                                                 const std::optional<std::filesystem::path>& checkpoint) const {
  if (parallelism < 1) throw Error(ErrorCode::InvalidArgument, "parallelism must be >= 1");

  std::vector<BatchResult> results(reqs.size(), BatchError{ErrorCode::EmptyResponse, "not run"});
  std::vector<std::size_t> pending;
  std::ofstream ckpt;
  if (checkpoint) {
    const auto done = load_checkpoint(*checkpoint, reqs);
    for (std::size_t i = 0; i < reqs.size(); ++i) {
      if (auto it = done.find(i); it != done.end()) {
        results[i] = ChatResponse{it->second, reqs[i].model, 0};
      } else {
        pending.push_back(i);
      }
    }
    if (checkpoint->has_parent_path()) std::filesystem::create_directories(checkpoint->parent_path());
    ckpt.open(*checkpoint, std::ios::out | std::ios::app | std::ios::binary);
    if (!ckpt) throw Error(ErrorCode::Io, "cannot open checkpoint for appending", checkpoint->string());
    // Terminate a torn final line so the next record starts cleanly.
    std::ifstream tail(*checkpoint, std::ios::binary | std::ios::ate);
    if (tail && tail.tellg() > 0) {
      tail.seekg(-1, std::ios::end);
      if (tail.get() != '\n') ckpt << '\n';
    }
  } else {
    pending.resize(reqs.size());
    for (std::size_t i = 0; i < reqs.size(); ++i) pending[i] = i;
  }
  if (pending.empty()) return results;

  std::mutex ckpt_mutex;
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t slot = next.fetch_add(1); slot < pending.size(); slot = next.fetch_add(1)) {
      const std::size_t i = pending[slot];
      try {
        ChatResponse resp = complete(reqs[i]);
        if (checkpoint) {
          const std::string rec =
              dump_line(json{{"index", i}, {"key", request_key(reqs[i])}, {"content", resp.content}});
          std::lock_guard lock(ckpt_mutex);
          ckpt << rec << '\n';
          ckpt.flush();
        }
        results[i] = std::move(resp);
      } catch (const Error& e) {
        results[i] = BatchError{e.code(), e.what()};
      } catch (const std::exception& e) {
        results[i] = BatchError{ErrorCode::Transport, e.what()};
      }
    }
  };

  const std::size_t workers = std::min(parallelism, pending.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  return results;
}

}  // namespace medv::gateway
