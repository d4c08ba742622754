#include "ea/llm_gateway.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "ea/error.hpp"
#include "ea/io.hpp"

#ifdef EA_HAVE_OPENSSL_HTTPS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

namespace ea {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(FinishReason r) {
  switch (r) {
    case FinishReason::stop:
      return "stop";
    case FinishReason::length:
      return "length";
    case FinishReason::error:
      return "error";
  }
  return "error";
}

std::string_view to_string(TransportMode m) {
  switch (m) {
    case TransportMode::live:
      return "live";
    case TransportMode::record:
      return "record";
    case TransportMode::replay:
      return "replay";
  }
  return "replay";
}

FinishReason parse_finish_reason(std::string_view s) {
  if (s == "stop" || s == "end_turn" || s == "stop_sequence") return FinishReason::stop;
  if (s == "length" || s == "max_tokens") return FinishReason::length;
  return FinishReason::error;
}

std::string make_request_key(std::string_view model, std::string_view prompt, double temperature) {
  // json objects serialize with sorted keys, so the dump is canonical.
  json j = {{"model", model}, {"prompt", prompt}, {"temperature", temperature}};
  return sha256_hex(j.dump());
}

// ---------------------------------------------------------------------------

void RateLimiter::set_rate(double rpm) {
  std::lock_guard lock(mu_);
  interval_s_ = rpm > 0 ? 60.0 / rpm : 0.0;
}

void RateLimiter::acquire() {
  std::chrono::steady_clock::time_point slot;
  {
    std::lock_guard lock(mu_);
    if (interval_s_ <= 0) return;
    const auto now = std::chrono::steady_clock::now();
    slot = std::max(now, next_);
    next_ = slot + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                       std::chrono::duration<double>(interval_s_));
  }
  std::this_thread::sleep_until(slot);
}

RateLimiter& process_rate_limiter() {
  static RateLimiter limiter;
  return limiter;
}

// ---------------------------------------------------------------------------

namespace {

json response_to_json(const ChatResponse& r) {
  return {{"text", r.text},
          {"finish_reason", to_string(r.finish_reason)},
          {"usage", {{"prompt_tokens", r.usage.prompt_tokens}, {"completion_tokens", r.usage.completion_tokens}}},
          {"retries", r.retries}};
}

ChatResponse response_from_json(const json& j, const fs::path& file) {
  try {
    ChatResponse r;
    r.text = j.at("text").get<std::string>();
    r.finish_reason = parse_finish_reason(j.value("finish_reason", std::string("stop")));
    if (j.contains("usage")) {
      r.usage.prompt_tokens = j.at("usage").value("prompt_tokens", 0);
      r.usage.completion_tokens = j.at("usage").value("completion_tokens", 0);
    }
    r.retries = j.value("retries", 0);
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::validation, file.string() + ": malformed fixture response: " + e.what());
  }
}

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorKind::provider, "endpoint is not an absolute URL: " + url);
  const auto path_begin = url.find('/', scheme_end + 3);
  if (path_begin == std::string::npos) return {url, "/"};
  return {url.substr(0, path_begin), url.substr(path_begin)};
}

std::string provider_message(const std::string& body) {
  try {
    auto j = json::parse(body);
    if (j.contains("error")) {
      const auto& e = j.at("error");
      if (e.is_string()) return e.get<std::string>();
      if (e.is_object() && e.contains("message")) return e.at("message").get<std::string>();
    }
  } catch (const json::exception&) {
  }
  return body.size() > 500 ? body.substr(0, 500) : body;
}

}  // namespace

Transport::Transport(TransportOptions options) : options_(std::move(options)) {
  if (options_.mode != TransportMode::live && options_.fixture_dir.empty()) {
    throw Error(ErrorKind::validation, "record/replay transport needs a fixture directory");
  }
  if (options_.mode != TransportMode::replay) {
    if (options_.endpoint.empty()) throw Error(ErrorKind::validation, "live/record transport needs an endpoint");
    if (options_.api_key.empty()) {
      std::string var = "EA_API_KEY_";
      for (char c : options_.provider) var += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      if (const char* v = std::getenv(var.c_str())) options_.api_key = v;
    }
    process_rate_limiter().set_rate(options_.rpm);
  }
}

fs::path Transport::fixture_path(const ChatRequest& request) const {
  return options_.fixture_dir / (request.request_key() + ".json");
}

ChatResponse Transport::complete(const ChatRequest& request) const {
  if (options_.mode == TransportMode::replay) return replay(request);
  ChatResponse r = call_live(request);
  if (options_.mode == TransportMode::record) store(request, r);
  return r;
}

ChatResponse Transport::replay(const ChatRequest& request) const {
  const auto key = request.request_key();
  const auto path = fixture_path(request);
  std::string miss = "fixture miss: " + key;
  if (request.attempt > 0) miss += " (attempt " + std::to_string(request.attempt) + ")";
  if (!fs::exists(path)) throw Error(ErrorKind::fixture_miss, miss);
  const json j = read_json_file(path);
  if (request.attempt == 0) {
    if (!j.contains("response")) throw Error(ErrorKind::fixture_miss, miss);
    return response_from_json(j.at("response"), path);
  }
  if (!j.contains("retries") || !j.at("retries").is_array() ||
      j.at("retries").size() < static_cast<std::size_t>(request.attempt)) {
    throw Error(ErrorKind::fixture_miss, miss);
  }
  return response_from_json(j.at("retries").at(request.attempt - 1), path);
}

void Transport::store(const ChatRequest& request, const ChatResponse& response) const {
  std::lock_guard lock(fixture_mu_);
  const auto path = fixture_path(request);
  json j = fs::exists(path) ? read_json_file(path) : json::object();
  j["request_key"] = request.request_key();
  j["request"] = {{"model", request.model},
                  {"prompt", request.prompt},
                  {"temperature", request.temperature},
                  {"max_output_tokens", request.max_output_tokens}};
  if (request.attempt == 0) {
    j["response"] = response_to_json(response);
  } else {
    if (!j.contains("retries")) j["retries"] = json::array();
    auto& retries = j["retries"];
    while (retries.size() < static_cast<std::size_t>(request.attempt)) retries.push_back(nullptr);
    retries[request.attempt - 1] = response_to_json(response);
  }
  write_text_file(path, dump_json(j));
}

ChatResponse Transport::call_live(const ChatRequest& request) const {
  const Url url = split_url(options_.endpoint);
  const bool anthropic = options_.provider == "anthropic";

  json body;
  body["model"] = request.model;
  body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
  body["temperature"] = request.temperature;
  body["max_tokens"] = request.max_output_tokens;

  httplib::Headers headers;
  if (!options_.api_key.empty()) {
    if (anthropic) {
      headers.emplace("x-api-key", options_.api_key);
    } else {
      headers.emplace("Authorization", "Bearer " + options_.api_key);
    }
  }
  if (anthropic) headers.emplace("anthropic-version", "2023-06-01");

  httplib::Client client(url.origin);
  client.set_connection_timeout(std::chrono::seconds(30));
  client.set_read_timeout(options_.timeout);
  client.set_write_timeout(options_.timeout);

  const std::string payload = body.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
    if (attempt > 0) {
      auto delay = options_.base_backoff * (1LL << std::min(attempt - 1, 20));
      std::this_thread::sleep_for(std::min<std::chrono::milliseconds>(delay, options_.max_backoff));
    }
    process_rate_limiter().acquire();
    ++network_calls_;
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + provider_message(res->body);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorKind::provider,
                  options_.provider + " HTTP " + std::to_string(res->status) + ": " + provider_message(res->body));
    }
    try {
      const json j = json::parse(res->body);
      ChatResponse out;
      out.retries = attempt;
      if (anthropic) {
        for (const auto& part : j.at("content")) {
          if (part.value("type", std::string("text")) == "text") out.text += part.at("text").get<std::string>();
        }
        out.finish_reason = parse_finish_reason(j.value("stop_reason", std::string("error")));
        if (j.contains("usage")) {
          out.usage.prompt_tokens = j.at("usage").value("input_tokens", 0);
          out.usage.completion_tokens = j.at("usage").value("output_tokens", 0);
        }
      } else {
        const auto& choice = j.at("choices").at(0);
        const auto& content = choice.at("message").at("content");
        out.text = content.is_string() ? content.get<std::string>() : std::string();
        out.finish_reason = parse_finish_reason(choice.value("finish_reason", std::string("error")));
        if (j.contains("usage")) {
          out.usage.prompt_tokens = j.at("usage").value("prompt_tokens", 0);
          out.usage.completion_tokens = j.at("usage").value("completion_tokens", 0);
        }
      }
      return out;
    } catch (const json::exception& e) {
      throw Error(ErrorKind::provider, options_.provider + ": unexpected response body: " + e.what());
    }
  }
  throw Error(ErrorKind::provider, "retries exhausted after " + std::to_string(options_.max_retries + 1) +
                                       " attempts: " + last_error);
}

}  // namespace ea
