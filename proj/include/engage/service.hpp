#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace engage {

// Read-only query service over a run store. Every JSON response carries the
// run_id it answered from; analytics bodies embed the report CSV lines
// verbatim so served numbers are exactly the report-bundle numbers.
class QueryService {
 public:
  explicit QueryService(std::filesystem::path runs_root);
  ~QueryService();

  QueryService(const QueryService&) = delete;
  QueryService& operator=(const QueryService&) = delete;

  // Blocks until stop(); returns false if binding fails.
  bool listen(const std::string& host, int port);
  // Binds an ephemeral port and returns it (-1 on failure); call
  // listen_after_bind() on another thread to serve.
  int bind_any_port(const std::string& host);
  bool listen_after_bind();
  void stop();

  httplib::Server& server();  // exposed for in-process tests

 private:
  std::filesystem::path runs_root_;
  std::unique_ptr<httplib::Server> server_;
  struct Cache;
  std::shared_ptr<Cache> cache_;

  void register_routes();
};

}  // namespace engage
