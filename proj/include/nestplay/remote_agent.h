#ifndef NESTPLAY_REMOTE_AGENT_H_
#define NESTPLAY_REMOTE_AGENT_H_

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "nestplay/errors.h"
#include "nestplay/spy.h"
#include "nestplay/tictactoe.h"

namespace nestplay::harness {

struct ChatMessage {
  std::string role;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct RemoteEndpoint {
  // Full URL of the chat-completion route, e.g.
  // http://127.0.0.1:8000/v1/chat/completions
  std::string url;
  std::string model;
  int timeout_ms = 10000;
  // Extra attempts after the first one.
  int retries = 2;
  // Delay before retry k is backoff_ms * 2^k.
  int backoff_ms = 100;
  bool operator==(const RemoteEndpoint&) const = default;
};

class RemoteError : public OpponentFailure {
 public:
  using OpponentFailure::OpponentFailure;
};
class RemoteTimeout : public RemoteError {
 public:
  using RemoteError::RemoteError;
};
class RemoteConnectionError : public RemoteError {
 public:
  using RemoteError::RemoteError;
};
class RemoteHttpStatus : public RemoteError {
 public:
  RemoteHttpStatus(int status, const std::string& what)
      : RemoteError(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};
class RemoteMalformedBody : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

// One request/response pair. status is 0 when no response arrived.
struct Exchange {
  int attempt = 0;
  std::string request_body;
  int status = 0;
  std::string response_body;
  std::string error;
};

// Thread-safe record of every exchange.
class ExchangeLog {
 public:
  void append(Exchange e);
  std::vector<Exchange> entries() const;
  std::size_t size() const;

 private:
  mutable std::mutex mu_;
  std::vector<Exchange> entries_;
};

// Request body in the chat-completion shape:
// {"model": ..., "messages": [{"role": ..., "content": ...}, ...]}
std::string chat_request_body(const std::string& model,
                              const std::vector<ChatMessage>& messages);
// Extracts choices[0].message.content; throws RemoteMalformedBody.
std::string parse_chat_response(const std::string& body);

// Posts the conversation and returns the first choice's text. Timeouts,
// connection errors and 5xx/429 statuses are retried with exponential
// backoff; other failures surface at once.
std::string remote_agent_act(const RemoteEndpoint& endpoint,
                             const std::vector<ChatMessage>& messages,
                             ExchangeLog* log = nullptr);

class RemoteTicTacToeOpponent : public ttt::Opponent {
 public:
  RemoteTicTacToeOpponent(RemoteEndpoint endpoint,
                          std::shared_ptr<ExchangeLog> log = nullptr);
  int choose_move(const ttt::Board& b, Rng& rng) override;
  std::string name() const override { return "remote:" + endpoint_.model; }

 private:
  RemoteEndpoint endpoint_;
  std::shared_ptr<ExchangeLog> log_;
};

class RemoteSpyAgent : public spy::Agent {
 public:
  RemoteSpyAgent(RemoteEndpoint endpoint,
                 std::shared_ptr<ExchangeLog> log = nullptr);
  std::string describe(const spy::PlayerView& view) override;
  int vote(const spy::PlayerView& view) override;

 private:
  RemoteEndpoint endpoint_;
  std::shared_ptr<ExchangeLog> log_;
};

}  // namespace nestplay::harness

#endif  // NESTPLAY_REMOTE_AGENT_H_
