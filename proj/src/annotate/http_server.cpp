#include "jf/annotate/http_server.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "jf/core/error.hpp"
#include "jf/core/log.hpp"

namespace jf::annotate {
namespace {

void send_json(httplib::Response& res, const Json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& field, const std::string& message) {
  send_json(res, Json{{"error", message}, {"field", field}}, status);
}

std::string mime_of(const std::filesystem::path& p) {
  auto ext = p.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".webp") return "image/webp";
  return "application/octet-stream";
}

}  // namespace

struct HttpServer::Impl {
  AnnotationService& service;
  ServerOptions options;
  httplib::Server server;
  std::thread thread;
  int port = -1;

  Impl(AnnotationService& s, ServerOptions o) : service(s), options(std::move(o)) {}

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [this, fn](const httplib::Request& req, httplib::Response& res) {
      if (!options.bearer_token.empty() &&
          req.get_header_value("Authorization") != "Bearer " + options.bearer_token) {
        send_error(res, 401, "", "missing or wrong bearer token");
        return;
      }
      try {
        fn(req, res);
      } catch (const Rejected& e) {
        send_error(res, e.http_status(), e.field(), e.what());
      } catch (const ValidationError& e) {
        send_error(res, 400, e.field(), e.what());
      } catch (const Json::exception& e) {
        send_error(res, 400, "", std::string("bad JSON: ") + e.what());
      } catch (const std::exception& e) {
        log_warning(std::string("annotation server: ") + e.what());
        send_error(res, 500, "", "internal error");
      }
    };
  }

  void routes() {
    server.Get("/taxonomy", guarded([this](const httplib::Request&, httplib::Response& res) {
                 send_json(res, service.taxonomy().to_json());
               }));
    server.Post("/annotators", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  const auto body = Json::parse(req.body);
                  service.register_annotator(body.at("annotator_id").get<std::string>());
                  send_json(res, Json{{"annotator_id", body.at("annotator_id")}}, 201);
                }));
    server.Get("/tasks/next", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto who = req.get_param_value("annotator");
                 if (who.empty()) throw Rejected("annotator", "annotator query parameter required");
                 auto task = service.next_task(who, parse_task_kind(req.get_param_value("kind")));
                 if (!task) {
                   res.status = 204;
                   return;
                 }
                 send_json(res, task->to_json());
               }));
    server.Post("/annotations", guarded([this](const httplib::Request& req, httplib::Response& res) {
                  Json body;
                  try {
                    body = Json::parse(req.body);
                  } catch (const Json::parse_error&) {
                    throw Rejected("", "body is not valid JSON");
                  }
                  send_json(res, service.submit(body), 201);
                }));
    server.Get("/agreement", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 send_json(res, service.live_agreement(parse_task_kind(req.get_param_value("kind"))).to_json());
               }));
    server.Get("/export", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const bool agreed = req.get_param_value("agreed") == "1";
                 res.set_content(service.export_kind(parse_task_kind(req.get_param_value("kind")), agreed),
                                 "application/x-ndjson");
               }));
    server.Get(R"(/images/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
                 const auto sample = service.sample(req.matches[1]);
                 if (!sample) throw Rejected("sample_id", "unknown sample", 404);
                 const auto path = options.image_root / sample->image_ref;
                 std::ifstream in(path, std::ios::binary);
                 if (!in) throw Rejected("sample_id", "image not available", 404);
                 std::ostringstream buf;
                 buf << in.rdbuf();
                 res.set_content(buf.str(), mime_of(path));
               }));
  }
};

HttpServer::HttpServer(AnnotationService& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind() {
  if (impl_->port >= 0) return impl_->port;
  if (impl_->options.port == 0) {
    impl_->port = impl_->server.bind_to_any_port(impl_->options.host);
  } else if (impl_->server.bind_to_port(impl_->options.host, impl_->options.port)) {
    impl_->port = impl_->options.port;
  }
  if (impl_->port < 0) {
    throw Error("cannot bind " + impl_->options.host + ":" + std::to_string(impl_->options.port));
  }
  return impl_->port;
}

void HttpServer::listen() {
  bind();
  impl_->server.listen_after_bind();
}

void HttpServer::start() {
  bind();
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace jf::annotate
