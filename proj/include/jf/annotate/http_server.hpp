#pragma once

#include <memory>
#include <string>

#include "jf/annotate/service.hpp"

namespace jf::annotate {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 binds an ephemeral port
  std::string bearer_token;  // empty: no auth
  std::filesystem::path image_root;
};

// JSON over HTTP in front of an AnnotationService.
//   GET  /taxonomy
//   POST /annotators                      {"annotator_id"}
//   GET  /tasks/next?annotator=&kind=
//   POST /annotations                     submission body
//   GET  /agreement?kind=
//   GET  /export?kind=[&agreed=1]
//   GET  /images/{sample_id}
class HttpServer {
 public:
  HttpServer(AnnotationService& service, ServerOptions options);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and returns the port. Throws Error if the bind fails.
  int bind();
  // Blocks until stop().
  void listen();
  void start();  // listen on a background thread
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace jf::annotate
