// In-process HTTP server that mimics the generation and embedding endpoints.
#pragma once

#include <atomic>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

class MockProvider {
 public:
  using Handler = std::function<nlohmann::json(const nlohmann::json& request, int call)>;

  MockProvider() {
    server_.Post("/api/generate", [this](const httplib::Request& req, httplib::Response& res) {
      serve(generate_, generate_calls_, req, res);
    });
    server_.Post("/api/embeddings", [this](const httplib::Request& req, httplib::Response& res) {
      serve(embed_, embed_calls_, req, res);
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~MockProvider() {
    server_.stop();
    thread_.join();
  }
  MockProvider(const MockProvider&) = delete;
  MockProvider& operator=(const MockProvider&) = delete;

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  void on_generate(Handler h) { generate_ = std::move(h); }
  void on_embed(Handler h) { embed_ = std::move(h); }
  int generate_calls() const { return generate_calls_; }
  int embed_calls() const { return embed_calls_; }
  std::vector<nlohmann::json> requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

  /// Returning this from a handler makes the server answer HTTP 500.
  static nlohmann::json fail() { return {{"__status", 500}}; }

 private:
  void serve(const Handler& h, std::atomic<int>& calls, const httplib::Request& req, httplib::Response& res) {
    const int call = ++calls;
    const auto body = nlohmann::json::parse(req.body);
    {
      std::lock_guard lock(mutex_);
      requests_.push_back(body);
    }
    const auto reply = h ? h(body, call) : nlohmann::json::object();
    if (reply.is_object() && reply.contains("__status")) {
      res.status = reply["__status"].get<int>();
      return;
    }
    res.set_content(reply.dump(), "application/json");
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  Handler generate_;
  Handler embed_;
  std::atomic<int> generate_calls_{0};
  std::atomic<int> embed_calls_{0};
  mutable std::mutex mutex_;
  std::vector<nlohmann::json> requests_;
};
