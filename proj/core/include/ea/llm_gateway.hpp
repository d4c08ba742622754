#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>

namespace ea {

enum class FinishReason { stop, length, error };
enum class TransportMode { live, record, replay };

std::string_view to_string(FinishReason reason);
std::string_view to_string(TransportMode mode);
FinishReason parse_finish_reason(std::string_view s);

struct TokenUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

/// Content hash of (model, prompt, temperature); the fixture file name.
std::string make_request_key(std::string_view model, std::string_view prompt, double temperature);

struct ChatRequest {
  std::string model;
  std::string prompt;
  double temperature = 0.0;
  int max_output_tokens = 4096;
  /// Re-ask counter for callers that retry on unusable output. Not part of
  /// the key: attempt N > 0 replays the N-th stored retry of the same key.
  int attempt = 0;

  std::string request_key() const { return make_request_key(model, prompt, temperature); }
};

struct ChatResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
  TokenUsage usage;
  int retries = 0;  // HTTP backoffs taken before success
};

struct TransportOptions {
  TransportMode mode = TransportMode::replay;
  std::filesystem::path fixture_dir;
  std::string endpoint;           // full URL of the chat-completion route
  std::string provider = "openai";  // openai | anthropic
  std::string api_key;            // empty: read EA_API_KEY_<PROVIDER>
  int max_retries = 5;
  double rpm = 0.0;               // 0 disables rate limiting
  std::chrono::milliseconds base_backoff{500};
  std::chrono::milliseconds max_backoff{30000};
  std::chrono::seconds timeout{600};
};

/// Token bucket shared by every Transport in the process.
class RateLimiter {
 public:
  /// rpm <= 0 disables limiting. Burst capacity is one request.
  void set_rate(double rpm);
  void acquire();

 private:
  std::mutex mu_;
  double interval_s_ = 0.0;
  std::chrono::steady_clock::time_point next_{};
};

RateLimiter& process_rate_limiter();

class Transport {
 public:
  explicit Transport(TransportOptions options);

  Transport(const Transport&) = delete;
  Transport& operator=(const Transport&) = delete;

  /// Safe to call from several threads.
  ChatResponse complete(const ChatRequest& request) const;

  TransportMode mode() const { return options_.mode; }
  const TransportOptions& options() const { return options_; }
  std::filesystem::path fixture_path(const ChatRequest& request) const;

  /// HTTP requests issued so far, including retried ones.
  long network_calls() const { return network_calls_.load(); }

 private:
  ChatResponse replay(const ChatRequest& request) const;
  ChatResponse call_live(const ChatRequest& request) const;
  void store(const ChatRequest& request, const ChatResponse& response) const;

  TransportOptions options_;
  mutable std::mutex fixture_mu_;
  mutable std::atomic<long> network_calls_{0};
};

inline ChatResponse complete(const ChatRequest& request, const Transport& transport) {
  return transport.complete(request);
}

}  // namespace ea
