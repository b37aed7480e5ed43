#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "optisynth/teacher.hpp"

namespace optisynth {

namespace {

class HttplibTransport : public HttpTransport {
public:
  HttpResponse post(const std::string &url, const std::string &body,
                    const std::vector<std::pair<std::string, std::string>> &headers,
                    std::chrono::seconds timeout) override {
    const auto scheme = url.find("://");
    if (scheme == std::string::npos)
      throw ConfigError("endpoint must be an absolute URL: " + url);
    const auto slash = url.find('/', scheme + 3);
    const std::string origin = url.substr(0, slash);
    const std::string path = slash == std::string::npos ? "/" : url.substr(slash);
    httplib::Client client(origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers h;
    for (const auto &[k, v] : headers)
      h.emplace(k, v);
    const auto res = client.Post(path, h, body, "application/json");
    if (!res)
      throw TransportError("request to " + origin + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
  }
};

bool retryable(int status) { return status == 429 || status >= 500; }

} // namespace

std::unique_ptr<HttpTransport> make_http_transport() { return std::make_unique<HttplibTransport>(); }

LiveBackend::LiveBackend(LiveConfig config, std::unique_ptr<HttpTransport> transport, Sleeper sleep)
    : config_(std::move(config)), transport_(std::move(transport)), sleep_(std::move(sleep)) {
  if (config_.max_attempts < 1)
    throw ConfigError("live backend needs at least one attempt");
  if (!sleep_)
    sleep_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

ChatReply LiveBackend::complete(const ChatExchange &exchange) {
  exchange.validate();
  const char *credential = std::getenv(config_.credential_env.c_str());
  if (credential == nullptr || *credential == '\0')
    throw ConfigError("environment variable " + config_.credential_env + " is not set");

  nlohmann::json body;
  body["model"] = exchange.model.empty() ? config_.model : exchange.model;
  body["temperature"] = exchange.temperature;
  if (exchange.seed)
    body["seed"] = *exchange.seed;
  body["messages"] = nlohmann::json::array();
  for (const auto &m : exchange.messages)
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  const std::vector<std::pair<std::string, std::string>> headers{
      {"Authorization", std::string("Bearer ") + credential}};

  std::string last_error;
  auto backoff = config_.initial_backoff;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      sleep_(backoff);
      backoff *= 2;
    }
    HttpResponse res;
    try {
      res = transport_->post(config_.endpoint, body.dump(), headers, config_.timeout);
    } catch (const TransportError &e) {
      last_error = e.what();
      continue;
    }
    if (retryable(res.status)) {
      last_error = "HTTP " + std::to_string(res.status);
      continue;
    }
    if (res.status != 200)
      throw Error("chat endpoint returned HTTP " + std::to_string(res.status) + ": " +
                  res.body.substr(0, 200));
    try {
      const auto j = nlohmann::json::parse(res.body);
      return {j.at("choices").at(0).at("message").at("content").get<std::string>(), attempt};
    } catch (const nlohmann::json::exception &e) {
      throw Error(std::string("malformed chat completion: ") + e.what());
    }
  }
  throw TransportError("chat endpoint unreachable after " + std::to_string(config_.max_attempts) +
                       " attempts: " + last_error);
}

} // namespace optisynth
