#include "msm/service/http.hpp"

#include "msm/errors.hpp"
#include "msm/imaging/png_io.hpp"

#include <httplib.h>

namespace msm {

namespace {

using nlohmann::json;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, {{"code", code}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    json j = json::parse(req.body);
    if (!j.is_object()) throw ServiceError(400, "bad_request", "request body must be a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw ServiceError(400, "bad_request", std::string("request body is not JSON: ") + e.what());
  }
}

Image image_field(const json& body, const char* key, int max_side) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string())
    throw ServiceError(400, "bad_request", std::string("field '") + key + "' must be a base64 PNG string");
  Image img;
  try {
    img = decode_png(base64_decode(it->get<std::string>()));
  } catch (const DecodeError& e) {
    throw ServiceError(400, "decode_error", std::string("field '") + key + "': " + e.what());
  } catch (const InvalidInput& e) {
    throw ServiceError(400, "decode_error", std::string("field '") + key + "': " + e.what());
  }
  if (img.height() > max_side || img.width() > max_side)
    throw ServiceError(400, "image_too_large",
                       std::string("field '") + key + "' exceeds " + std::to_string(max_side) + " px");
  return img;
}

/// Runs a handler, mapping exceptions onto the error envelope.
template <typename F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.status(), e.code(), e.what());
    } catch (const InvalidInput& e) {
      send_error(res, 400, "invalid_input", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

void register_routes(httplib::Server& server, PersonalizationService& service, const HttpOptions& options) {
  PersonalizationService* svc = &service;
  const int max_side = options.max_image_side;

  if (options.allow_cors) {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    server.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  }

  server.Get("/healthz", guarded([svc](const httplib::Request&, httplib::Response& res) {
               send_json(res, 200,
                         {{"status", "ok"}, {"model_id", svc->model_id()}, {"sessions", svc->session_ids().size()}});
             }));

  server.Post("/sessions", guarded([svc](const httplib::Request& req, httplib::Response& res) {
                const json body = parse_body(req);
                const std::string model = body.value("model_id", "");
                const std::string id = svc->create_session(model);
                send_json(res, 201, {{"session_id", id}, {"model_id", svc->model_id()}});
              }));

  server.Get(R"(/sessions/([0-9a-f]+))", guarded([svc](const httplib::Request& req, httplib::Response& res) {
               const std::string id = req.matches[1];
               send_json(res, 200, {{"session_id", id}, {"count", svc->pair_count(id)}});
             }));

  server.Post(R"(/sessions/([^/]+)/pairs)", guarded([svc, max_side](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                const json body = parse_body(req);
                const Image original = image_field(body, "original", max_side);
                const Image retouched = image_field(body, "retouched", max_side);
                send_json(res, 201, {{"count", svc->add_pair(id, original, retouched)}});
              }));

  server.Delete(R"(/sessions/([^/]+)/pairs/(-?\d+))", guarded([svc](const httplib::Request& req, httplib::Response& res) {
                  const std::string id = req.matches[1];
                  const int index = std::stoi(req.matches[2]);
                  send_json(res, 200, {{"count", svc->remove_pair(id, index)}});
                }));

  server.Post(R"(/sessions/([^/]+)/enhance)", guarded([svc, max_side](const httplib::Request& req, httplib::Response& res) {
                const std::string id = req.matches[1];
                const json body = parse_body(req);
                const Image unseen = image_field(body, "image", max_side);
                const std::string method = body.value("method", "masked");
                const EnhanceOutcome out = svc->enhance_unseen(id, unseen, method);
                json j = {{"image", base64_encode(encode_png(out.image))},
                          {"method", out.method},
                          {"i_new", out.i_new},
                          {"predicted_style_norm", out.style_norm},
                          {"style", std::vector<float>(out.style.values.data(),
                                                       out.style.values.data() + out.style.values.size())},
                          {"width", out.image.width()},
                          {"height", out.image.height()}};
                if (out.attention) j["attention"] = *out.attention;
                send_json(res, 200, j);
              }));

  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) send_error(res, res.status, res.status == 404 ? "not_found" : "http_error", "no such route");
  });
}

}  // namespace msm
