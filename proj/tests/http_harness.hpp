#pragma once

#include <httplib.h>

#include <stdexcept>
#include <thread>

#include "mgal/http_server.hpp"

namespace fixture {

// Runs register_routes() on 127.0.0.1:<ephemeral> for the lifetime of the object.
class LiveServer {
 public:
  LiveServer(mgal::RetrievalService& svc,
             const std::optional<std::filesystem::path>& static_dir = std::nullopt) {
    mgal::register_routes(server_, svc, static_dir);
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("could not bind a port");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LiveServer() {
    server_.stop();
    thread_.join();
  }
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(10, 0);
    return c;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace fixture
