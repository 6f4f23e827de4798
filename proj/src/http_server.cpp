#include "mgal/http_server.hpp"

#include <httplib.h>

#include "json.hpp"
#include "mgal/errors.hpp"

namespace mgal {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& msg) {
  send_json(res, status, {{"code", code}, {"message", msg}});
}

template <typename F>
auto guarded(F&& handler) {
  return [handler = std::forward<F>(handler)](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.kind(), e.what());
    } catch (const Error& e) {
      send_error(res, 400, e.kind(), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "parse_error", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal_error", e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  if (req.body.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
  json j;
  try {
    j = json::parse(req.body);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("request body: ") + e.what());
  }
  if (!j.is_object()) throw ParseError("request body must be a JSON object");
  return j;
}

Stroke stroke_from_json(const json& body) {
  auto pts = body.find("points");
  if (pts == body.end() || !pts->is_array()) throw ParseError("field 'points': missing or not an array");
  Stroke s;
  for (std::size_t i = 0; i < pts->size(); ++i) {
    const json& p = (*pts)[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
      throw ParseError("field 'points': entry " + std::to_string(i) + " is not an [x, y] pair");
    }
    s.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return s;
}

}  // namespace

void register_routes(httplib::Server& server, RetrievalService& service,
                     const std::optional<std::filesystem::path>& static_dir) {
  server.Post("/sessions", guarded([&service](const httplib::Request& req, httplib::Response& res) {
    const json body = parse_body(req);
    std::optional<std::string> target;
    if (auto t = body.find("target_id"); t != body.end() && !t->is_null()) {
      if (!t->is_string()) throw ParseError("field 'target_id' must be a string");
      target = t->get<std::string>();
    }
    const std::string id = service.create_session(target);
    send_json(res, 201, {{"session_id", id}, {"practice", target.has_value()}});
  }));

  server.Post(R"(/sessions/([^/]+)/strokes)",
              guarded([&service](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                long long k = static_cast<long long>(kDefaultTopK);
                if (auto kj = body.find("k"); kj != body.end()) {
                  if (!kj->is_number_integer()) throw ParseError("field 'k' must be an integer");
                  k = kj->get<long long>();
                }
                if (k < 1) throw ValidationError("k must be >= 1");
                const Stroke stroke = stroke_from_json(body);
                const auto r = service.submit_stroke(req.matches[1], stroke, static_cast<std::size_t>(k));
                json topk = json::array();
                for (const auto& h : r.top_k) {
                  topk.push_back({{"photo_id", h.photo_id}, {"distance", h.distance}, {"rank", h.rank}});
                }
                json out = {{"step", r.step},
                            {"stage", r.stage},
                            {"stroke_count", r.stroke_count},
                            {"topk", std::move(topk)}};
                if (r.true_rank) out["true_rank"] = *r.true_rank;
                send_json(res, 200, out);
              }));

  server.Delete(R"(/sessions/([^/]+))",
                guarded([&service](const httplib::Request& req, httplib::Response& res) {
                  service.delete_session(req.matches[1]);
                  res.status = 204;
                }));

  server.Get("/gallery", guarded([&service](const httplib::Request&, httplib::Response& res) {
    json items = json::array();
    for (const auto& g : service.gallery()) {
      items.push_back({{"photo_id", g.photo_id}, {"thumbnail_ref", g.thumbnail_ref}});
    }
    send_json(res, 200, items);
  }));

  server.Get(R"(/gallery/([^/]+)/image)",
             guarded([&service](const httplib::Request& req, httplib::Response& res) {
               const Thumbnail t = service.thumbnail(req.matches[1]);
               res.status = 200;
               res.set_content(t.bytes, t.content_type);
             }));

  server.Get("/health", guarded([&service](const httplib::Request&, httplib::Response& res) {
    const HealthInfo h = service.health();
    send_json(res, 200, {{"status", h.status},
                         {"model_fingerprint", h.model_fingerprint},
                         {"n", h.n},
                         {"k", h.k},
                         {"T", h.total_steps}});
  }));

  if (static_dir) {
    if (!server.set_mount_point("/", static_dir->string())) {
      throw NotFoundError("static directory " + static_dir->string() + " does not exist");
    }
  }
}

}  // namespace mgal
