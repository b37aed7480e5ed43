#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "optisynth/error.hpp"

namespace optisynth {

using Bindings = std::map<std::string, std::string>;

// ---------------------------------------------------------------------------
// Prompt library

struct PromptTemplate {
  std::string id;
  std::string title;
  std::string body;               // `{slot}` placeholders
  std::set<std::string> required; // every slot present in body
  bool partial = false;           // source text is incomplete
};

/// Slot names written `{name}` with name in [a-z_]+.
std::set<std::string> prompt_slots(std::string_view body);

class PromptLibrary {
public:
  /// Reads <dir>/index.json and the files it lists.
  static PromptLibrary load(const std::filesystem::path &dir);
  /// Library under prompts_dir(), loaded once.
  static const PromptLibrary &bundled();

  /// Throws ConfigError for an unknown id.
  const PromptTemplate &get(std::string_view id) const;
  std::vector<std::string> ids() const; // index order
  /// Substitutes every slot. Throws ConfigError for an unknown id or a
  /// missing binding; bindings that name no slot are ignored.
  std::string render(std::string_view id, const Bindings &bindings) const;

private:
  std::vector<PromptTemplate> templates_;
};

std::string render_prompt(std::string_view id, const Bindings &bindings);

// ---------------------------------------------------------------------------
// Fenced output

class ExtractionError : public Error {
public:
  using Error::Error;
};

struct FencedOutput {
  std::string content;   // final ``` block without its fence lines
  std::string reasoning; // text before that block, trimmed
};

/// Splits at the final complete triple-backtick block; the language hint on
/// the opening fence is dropped. Throws ExtractionError without a block.
FencedOutput split_fenced(std::string_view response);
std::string extract_fenced(std::string_view response);

// ---------------------------------------------------------------------------
// Chat exchanges and backends

struct ChatMessage {
  std::string role; // system, user or assistant
  std::string content;
  friend bool operator==(const ChatMessage &, const ChatMessage &) = default;
};

struct ChatExchange {
  std::vector<ChatMessage> messages;
  std::string model;
  double temperature = 0.7;
  std::optional<std::int64_t> seed = 0;
  // Identity used for replay matching.
  std::string prompt_id;
  Bindings bindings;

  /// Throws ConfigError when empty or a role is invalid.
  void validate() const;
};

/// Single user message rendered from the bundled library.
ChatExchange make_exchange(std::string_view prompt_id, const Bindings &bindings);

/// FNV-1a 64 of the prompt id and the sorted bindings, each value with CRLF
/// folded, trailing blanks stripped per line and trailing newlines dropped.
std::uint64_t request_hash(const ChatExchange &exchange);
std::string hash_hex(std::uint64_t hash);

struct ChatReply {
  std::string text;
  int attempts = 1;
};

class ChatBackend {
public:
  virtual ~ChatBackend() = default;
  virtual ChatReply complete(const ChatExchange &exchange) = 0;
};

class ReplayMismatchError : public Error {
public:
  ReplayMismatchError(std::string expected, std::string actual);
  const std::string &expected() const { return expected_; }
  const std::string &actual() const { return actual_; }

private:
  std::string expected_;
  std::string actual_;
};

struct TranscriptRecord {
  std::string request_hash; // hex
  std::string prompt_id;    // informational
  std::string response;
};

std::vector<TranscriptRecord> read_transcript(const std::filesystem::path &path);
void write_transcript(const std::filesystem::path &path,
                      const std::vector<TranscriptRecord> &records);

/// Answers from a transcript. Each request consumes the earliest unused
/// record with its hash, so concurrent tracks may arrive in any order.
class ReplayBackend : public ChatBackend {
public:
  explicit ReplayBackend(std::vector<TranscriptRecord> records);
  static std::unique_ptr<ReplayBackend> open(const std::filesystem::path &path);

  ChatReply complete(const ChatExchange &exchange) override;
  std::size_t remaining() const;
  bool exhausted() const { return remaining() == 0; }
  /// Throws Error naming the first unused record.
  void check_exhausted() const;

private:
  mutable std::mutex mu_;
  std::vector<TranscriptRecord> records_;
  std::vector<bool> used_;
};

/// Forwards to another backend and keeps every exchange in call order.
class RecordingBackend : public ChatBackend {
public:
  explicit RecordingBackend(ChatBackend &inner) : inner_(inner) {}
  ChatReply complete(const ChatExchange &exchange) override;
  std::vector<TranscriptRecord> records() const;

private:
  ChatBackend &inner_;
  mutable std::mutex mu_;
  std::vector<TranscriptRecord> records_;
};

/// Answers with a function of the exchange; used by tests and the template
/// teacher.
class FunctionBackend : public ChatBackend {
public:
  using Handler = std::function<std::string(const ChatExchange &)>;
  explicit FunctionBackend(Handler handler) : handler_(std::move(handler)) {}
  ChatReply complete(const ChatExchange &exchange) override;
  std::size_t calls() const;

private:
  Handler handler_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

// ---------------------------------------------------------------------------
// Live chat-completions backend

class TransportError : public Error {
public:
  using Error::Error;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class HttpTransport {
public:
  virtual ~HttpTransport() = default;
  /// Throws TransportError when no response was received.
  virtual HttpResponse post(const std::string &url, const std::string &body,
                            const std::vector<std::pair<std::string, std::string>> &headers,
                            std::chrono::seconds timeout) = 0;
};

std::unique_ptr<HttpTransport> make_http_transport();

struct LiveConfig {
  std::string endpoint;                            // chat-completions URL
  std::string model;
  std::string credential_env = "OPTISYNTH_API_KEY"; // variable holding the bearer token
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{120};
};

/// OpenAI-compatible chat completions. Transport failures, 429 and 5xx
/// responses are retried with doubling backoff; the credential is read from
/// the environment at each request.
class LiveBackend : public ChatBackend {
public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;
  LiveBackend(LiveConfig config, std::unique_ptr<HttpTransport> transport, Sleeper sleep = {});

  ChatReply complete(const ChatExchange &exchange) override;

private:
  LiveConfig config_;
  std::unique_ptr<HttpTransport> transport_;
  Sleeper sleep_;
};

struct BackendSpec {
  std::string kind; // live or replay
  std::string endpoint;
  std::string model;
  std::string credential_env = "OPTISYNTH_API_KEY";
  std::filesystem::path transcript;
};

std::unique_ptr<ChatBackend> make_backend(const BackendSpec &spec);

// ---------------------------------------------------------------------------
// Fenced completion with one re-ask

struct FencedReply {
  FencedOutput output;
  std::string raw;    // response the content came from
  int calls = 0;      // backend calls made
  bool reasked = false;
};

/// Completes and extracts; on a missing block asks once more in the same
/// conversation. Throws ExtractionError when both answers lack a block.
FencedReply complete_fenced(ChatBackend &backend, const ChatExchange &exchange);

// ---------------------------------------------------------------------------
// Repair loops

enum class RepairKind { Variables, Objective, Constraint, Ranges, Description };

std::string_view to_string(RepairKind kind);
/// Debugging prompt used for the kind.
std::string_view repair_prompt(RepairKind kind);

struct RepairResult {
  std::string text;
  bool passed = false;
  int calls = 0;
  std::set<std::string> missing; // after the last attempt
};

/// Returns the names still missing from a candidate text.
using CoverageCheck = std::function<std::set<std::string>(const std::string &)>;

/// Re-prompts the debugging template for `kind` with the missing names until
/// `check` reports nothing missing or `budget` calls are spent. `context`
/// supplies the other slots of the prompt; the previous text fills
/// `previous_description` when the prompt has that slot.
RepairResult repair_loop(ChatBackend &backend, RepairKind kind, const Bindings &context,
                         std::string text, std::set<std::string> missing, int budget,
                         const CoverageCheck &check);

} // namespace optisynth
