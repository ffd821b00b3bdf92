#include "nestplay/remote_agent.h"

#include <chrono>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "nestplay/text_util.h"

namespace nestplay::harness {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    throw RemoteConnectionError("endpoint url has no scheme: " + url);
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

bool retryable_status(int status) { return status == 429 || status >= 500; }

const char* kSystemPrompt =
    "You are a game-playing agent. Follow the rules in the user message and "
    "answer in the requested format.";

}  // namespace

void ExchangeLog::append(Exchange e) {
  std::lock_guard<std::mutex> lock(mu_);
  entries_.push_back(std::move(e));
}

std::vector<Exchange> ExchangeLog::entries() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_;
}

std::size_t ExchangeLog::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

std::string chat_request_body(const std::string& model,
                              const std::vector<ChatMessage>& messages) {
  nlohmann::ordered_json body;
  body["model"] = model;
  body["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.content}});
  }
  return body.dump();
}

std::string parse_chat_response(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw RemoteMalformedBody(std::string("response is not JSON: ") + e.what());
  }
  try {
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw RemoteMalformedBody("content is not a string");
    return content.get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw RemoteMalformedBody("response lacks choices[0].message.content");
  }
}

std::string remote_agent_act(const RemoteEndpoint& endpoint,
                             const std::vector<ChatMessage>& messages,
                             ExchangeLog* log) {
  const auto url = split_url(endpoint.url);
  const std::string body = chat_request_body(endpoint.model, messages);
  const auto timeout = std::chrono::milliseconds(std::max(1, endpoint.timeout_ms));
  const int attempts = 1 + std::max(0, endpoint.retries);

  httplib::Client client(url.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  std::string last_error;
  enum class Kind { kTimeout, kConnection, kStatus } last_kind = Kind::kConnection;
  int last_status = 0;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long long>(endpoint.backoff_ms) << (attempt - 1)));
    }
    Exchange ex;
    ex.attempt = attempt + 1;
    ex.request_body = body;
    auto res = client.Post(url.path, body, "application/json");
    if (!res) {
      const auto err = res.error();
      ex.error = httplib::to_string(err);
      if (log) log->append(ex);
      last_error = ex.error;
      last_kind = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                      ? Kind::kTimeout
                      : Kind::kConnection;
      continue;
    }
    ex.status = res->status;
    ex.response_body = res->body;
    if (res->status < 200 || res->status >= 300) {
      ex.error = "HTTP " + std::to_string(res->status);
      if (log) log->append(ex);
      last_error = ex.error;
      last_kind = Kind::kStatus;
      last_status = res->status;
      if (!retryable_status(res->status)) break;
      continue;
    }
    try {
      auto text = parse_chat_response(res->body);
      if (log) log->append(ex);
      return text;
    } catch (const RemoteMalformedBody& e) {
      ex.error = e.what();
      if (log) log->append(ex);
      throw;
    }
  }

  const std::string where = endpoint.url + " after " + std::to_string(attempts) +
                            " attempt(s): " + last_error;
  switch (last_kind) {
    case Kind::kTimeout: throw RemoteTimeout("timed out calling " + where);
    case Kind::kStatus: throw RemoteHttpStatus(last_status, "bad status from " + where);
    case Kind::kConnection: break;
  }
  throw RemoteConnectionError("cannot reach " + where);
}

RemoteTicTacToeOpponent::RemoteTicTacToeOpponent(RemoteEndpoint endpoint,
                                                 std::shared_ptr<ExchangeLog> log)
    : endpoint_(std::move(endpoint)), log_(std::move(log)) {}

int RemoteTicTacToeOpponent::choose_move(const ttt::Board& b, Rng&) {
  const auto prompt = ttt::render_board_prompt(b, 0, true, b.to_move());
  const auto reply = remote_agent_act(
      endpoint_, {{"system", kSystemPrompt}, {"user", prompt}}, log_.get());
  const auto cell = last_integer(reply);
  if (!cell || *cell < 0 || *cell >= ttt::kCells ||
      b.at(static_cast<int>(*cell)) != ttt::Cell::kEmpty) {
    throw OpponentFailure("remote opponent gave no legal move: " + reply);
  }
  return static_cast<int>(*cell);
}

RemoteSpyAgent::RemoteSpyAgent(RemoteEndpoint endpoint,
                               std::shared_ptr<ExchangeLog> log)
    : endpoint_(std::move(endpoint)), log_(std::move(log)) {}

std::string RemoteSpyAgent::describe(const spy::PlayerView& view) {
  const auto prompt = spy::render_spy_prompt(view, 0, true);
  auto reply = remote_agent_act(
      endpoint_, {{"system", kSystemPrompt}, {"user", prompt}}, log_.get());
  if (trim(reply).empty()) throw OpponentFailure("remote agent gave an empty description");
  return reply;
}

int RemoteSpyAgent::vote(const spy::PlayerView& view) {
  const auto prompt = spy::render_spy_prompt(view, 0, false);
  const auto reply = remote_agent_act(
      endpoint_, {{"system", kSystemPrompt}, {"user", prompt}}, log_.get());
  const auto target = spy::parse_vote(reply);
  if (!target || *target == view.player) {
    throw OpponentFailure("remote agent gave no valid vote: " + reply);
  }
  return *target;
}

}  // namespace nestplay::harness
