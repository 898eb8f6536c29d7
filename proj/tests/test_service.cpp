#include "msm/errors.hpp"
#include "msm/imaging/png_io.hpp"
#include "msm/service/http.hpp"
#include "msm/service/service.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>
#include <httplib.h>

#include <fstream>
#include <numeric>
#include <set>
#include <thread>

using namespace msm;
using msm::test::random_image;
using nlohmann::json;

namespace {

std::shared_ptr<const Models> shared_models() {
  static const auto m = std::make_shared<const Models>(Models::initialize(msm::test::tiny_net()));
  return m;
}

std::string b64png(const Image& img) { return base64_encode(encode_png(img)); }

int status_of(const std::function<void()>& f, std::string* code = nullptr) {
  try {
    f();
  } catch (const ServiceError& e) {
    if (code) *code = e.code();
    return e.status();
  }
  return 0;
}

class HttpFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    service = std::make_unique<PersonalizationService>(shared_models(), "tiny");
    register_routes(server, *service, {64, true});
    port = server.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port, 0);
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }
  void TearDown() override {
    server.stop();
    if (thread.joinable()) thread.join();
  }

  json post(const std::string& path, const json& body, int expect) {
    auto r = client->Post(path, body.dump(), "application/json");
    EXPECT_TRUE(r) << path;
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << path << ' ' << r->body;
    return json::parse(r->body);
  }

  std::unique_ptr<PersonalizationService> service;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::unique_ptr<httplib::Client> client;
};

}  // namespace

TEST(Service, SessionsAreDistinctAndIsolated) {
  PersonalizationService svc(shared_models(), "tiny");
  std::set<std::string> ids;
  for (int i = 0; i < 50; ++i) ids.insert(svc.create_session());
  EXPECT_EQ(ids.size(), 50u);
  Rng rng(1);
  const std::string a = *ids.begin(), b = *ids.rbegin();
  EXPECT_EQ(svc.add_pair(a, random_image(rng, 20, 30), random_image(rng, 20, 30)), 1);
  EXPECT_EQ(svc.add_pair(a, random_image(rng, 8, 8), random_image(rng, 8, 8)), 2);
  EXPECT_EQ(svc.pair_count(b), 0);
  EXPECT_EQ(svc.remove_pair(a, 0), 1);
  std::string code;
  EXPECT_EQ(status_of([&] { svc.remove_pair(a, 3); }, &code), 404);
  EXPECT_EQ(code, "pair_not_found");
  EXPECT_EQ(status_of([&] { svc.create_session("other"); }, &code), 404);
  EXPECT_EQ(code, "model_not_found");
  EXPECT_EQ(status_of([&] { svc.pair_count("beef"); }, &code), 404);
  EXPECT_EQ(code, "session_not_found");
}

TEST(Service, EnhanceMethodsAndErrors) {
  PersonalizationService svc(shared_models(), "tiny");
  const std::string id = svc.create_session();
  Rng rng(2);
  const Image unseen = random_image(rng, 12, 18);
  std::string code;
  EXPECT_EQ(status_of([&] { svc.enhance_unseen(id, unseen, "masked"); }, &code), 409);
  EXPECT_EQ(code, "empty_session");
  for (int i = 0; i < 4; ++i) svc.add_pair(id, random_image(rng, 16, 16), random_image(rng, 16, 16));
  EXPECT_EQ(status_of([&] { svc.enhance_unseen(id, unseen, "sharpest"); }, &code), 400);
  EXPECT_EQ(code, "bad_method");

  const EnhanceOutcome m = svc.enhance_unseen(id, unseen, "masked");
  EXPECT_EQ(m.image.height(), 12);
  EXPECT_EQ(m.image.width(), 18);
  EXPECT_EQ(m.i_new, 4);
  ASSERT_TRUE(m.attention.has_value());
  EXPECT_NEAR(std::accumulate(m.attention->begin(), m.attention->end(), 0.0), 1.0, 1e-6);
  EXPECT_NEAR(m.style_norm, m.style.values.cast<double>().norm(), 1e-9);

  // The average style ignores the unseen image; the weighted one carries no attention.
  const EnhanceOutcome a1 = svc.enhance_unseen(id, unseen, "average");
  const EnhanceOutcome a2 = svc.enhance_unseen(id, random_image(rng, 9, 9), "average");
  EXPECT_TRUE(a1.style.values == a2.style.values);
  EXPECT_FALSE(a1.attention.has_value());
  EXPECT_FALSE(svc.enhance_unseen(id, unseen, "weighted").attention.has_value());
}

TEST(Service, SnapshotSurvivesRestart) {
  msm::test::TempDir dir("snap");
  const auto path = dir.path() / "sessions.json";
  Rng rng(3);
  const Image x = random_image(rng, 16, 16), y = random_image(rng, 16, 16), unseen = random_image(rng, 16, 16);
  std::string id;
  Image before;
  {
    PersonalizationService svc(shared_models(), "tiny", path);
    id = svc.create_session();
    svc.add_pair(id, x, y);
    svc.add_pair(id, y, x);
    before = svc.enhance_unseen(id, unseen, "masked").image;
  }
  ASSERT_TRUE(std::filesystem::exists(path));
  PersonalizationService again(shared_models(), "tiny", path);
  EXPECT_EQ(again.pair_count(id), 2);
  EXPECT_TRUE(again.enhance_unseen(id, unseen, "masked").image == before);

  std::ofstream(path) << "{ broken";
  EXPECT_THROW(PersonalizationService(shared_models(), "tiny", path), DecodeError);
}

TEST(Service, ConcurrentSessionsDoNotInterfere) {
  PersonalizationService svc(shared_models(), "tiny");
  std::vector<std::string> ids;
  for (int i = 0; i < 4; ++i) ids.push_back(svc.create_session());
  std::vector<std::thread> workers;
  for (int t = 0; t < 4; ++t)
    workers.emplace_back([&, t] {
      Rng rng(100 + t);
      for (int k = 0; k <= t; ++k) svc.add_pair(ids[t], random_image(rng, 8, 8), random_image(rng, 8, 8));
      svc.enhance_unseen(ids[t], random_image(rng, 8, 8), "masked");
    });
  for (auto& w : workers) w.join();
  for (int t = 0; t < 4; ++t) EXPECT_EQ(svc.pair_count(ids[t]), t + 1);
}

TEST_F(HttpFixture, FullSessionFlow) {
  auto health = client->Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  EXPECT_EQ(json::parse(health->body)["status"], "ok");
  EXPECT_EQ(health->get_header_value("Access-Control-Allow-Origin"), "*");

  const json created = post("/sessions", json::object(), 201);
  const std::string id = created["session_id"];
  EXPECT_EQ(created["model_id"], "tiny");

  Rng rng(4);
  const Image unseen = random_image(rng, 10, 14);
  json e = post("/sessions/" + id + "/enhance", {{"image", b64png(unseen)}}, 409);
  EXPECT_EQ(e["code"], "empty_session");

  for (int i = 0; i < 3; ++i) {
    const json r = post("/sessions/" + id + "/pairs",
                        {{"original", b64png(random_image(rng, 16, 16))}, {"retouched", b64png(random_image(rng, 16, 16))}},
                        201);
    EXPECT_EQ(r["count"], i + 1);
  }
  auto info = client->Get("/sessions/" + id);
  ASSERT_TRUE(info);
  EXPECT_EQ(json::parse(info->body)["count"], 3);

  const json out = post("/sessions/" + id + "/enhance", {{"image", b64png(unseen)}, {"method", "masked"}}, 200);
  const Image img = decode_png(base64_decode(out["image"].get<std::string>()));
  EXPECT_EQ(img.height(), 10);
  EXPECT_EQ(img.width(), 14);
  EXPECT_EQ(out["i_new"], 3);
  const auto attention = out["attention"].get<std::vector<double>>();
  ASSERT_EQ(attention.size(), 3u);
  EXPECT_NEAR(std::accumulate(attention.begin(), attention.end(), 0.0), 1.0, 1e-6);
  // The HTTP result equals the direct call on the decoded upload.
  EXPECT_TRUE(img == service->enhance_unseen(id, decode_png(encode_png(unseen)), "masked").image.quantized());

  const json avg = post("/sessions/" + id + "/enhance", {{"image", b64png(unseen)}, {"method", "average"}}, 200);
  EXPECT_FALSE(avg.contains("attention"));

  auto del = client->Delete("/sessions/" + id + "/pairs/1");
  ASSERT_TRUE(del);
  EXPECT_EQ(json::parse(del->body)["count"], 2);
}

TEST_F(HttpFixture, ErrorEnvelope) {
  const std::string id = post("/sessions", json::object(), 201)["session_id"];
  EXPECT_EQ(post("/sessions/" + id + "/pairs", {{"original", "bm90IGEgcG5n"}, {"retouched", "bm90IGEgcG5n"}}, 400)["code"],
            "decode_error");
  EXPECT_EQ(post("/sessions/" + id + "/pairs", {{"original", 5}}, 400)["code"], "bad_request");
  auto raw = client->Post("/sessions/" + id + "/pairs", "[not json", "application/json");
  ASSERT_TRUE(raw);
  EXPECT_EQ(json::parse(raw->body)["code"], "bad_request");

  Rng rng(5);
  const std::string big = b64png(random_image(rng, 65, 8));
  EXPECT_EQ(post("/sessions/" + id + "/pairs", {{"original", big}, {"retouched", big}}, 400)["code"], "image_too_large");
  const std::string small = b64png(random_image(rng, 8, 8));
  post("/sessions/" + id + "/pairs", {{"original", small}, {"retouched", small}}, 201);
  EXPECT_EQ(post("/sessions/" + id + "/enhance", {{"image", small}, {"method", "nope"}}, 400)["code"], "bad_method");
  EXPECT_EQ(post("/sessions/abc123/pairs", {{"original", small}, {"retouched", small}}, 404)["code"],
            "session_not_found");
  EXPECT_EQ(post("/sessions", {{"model_id", "other"}}, 404)["code"], "model_not_found");

  auto missing = client->Delete("/sessions/" + id + "/pairs/9");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body)["code"], "pair_not_found");
  auto route = client->Get("/nowhere");
  ASSERT_TRUE(route);
  EXPECT_EQ(route->status, 404);
  EXPECT_EQ(json::parse(route->body)["code"], "not_found");
}
