#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "http_harness.hpp"
#include "json.hpp"
#include "mgal/io.hpp"

using namespace mgal;
using nlohmann::json;

namespace {

json stroke_body(const Stroke& s, int k = 10) {
  json pts = json::array();
  for (const auto& p : s) pts.push_back({p.x, p.y});
  return {{"points", pts}, {"k", k}};
}

struct HttpTest : ::testing::Test {
  fixture::World world = fixture::make_world(10, 6, 4, 8);
  RetrievalService svc{fixture::random_model(5, 6, 3, 2), world.photos, "f00d"};
  fixture::LiveServer live{svc};
  httplib::Client cli = live.client();

  std::string new_session(const json& body = json::object()) {
    auto r = cli.Post("/sessions", body.dump(), "application/json");
    EXPECT_TRUE(r);
    EXPECT_EQ(r->status, 201);
    return json::parse(r->body).at("session_id").get<std::string>();
  }

  void expect_error(const httplib::Result& r, int status, const std::string& code) {
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, status);
    const json j = json::parse(r->body);
    EXPECT_EQ(j.at("code"), code);
    EXPECT_FALSE(j.at("message").get<std::string>().empty());
  }
};

}  // namespace

TEST_F(HttpTest, Health) {
  auto r = cli.Get("/health");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const json j = json::parse(r->body);
  EXPECT_EQ(j.at("status"), "ok");
  EXPECT_EQ(j.at("model_fingerprint"), "f00d");
  EXPECT_EQ(j.at("n"), 10);
  EXPECT_EQ(j.at("k"), 3);
  EXPECT_EQ(j.at("T"), 6);
}

TEST_F(HttpTest, StrokeRoundTrip) {
  const auto id = new_session();
  auto r = cli.Post("/sessions/" + id + "/strokes", stroke_body(world.episodes[0].strokes[0], 4).dump(),
                    "application/json");
  ASSERT_TRUE(r);
  ASSERT_EQ(r->status, 200);
  const json j = json::parse(r->body);
  EXPECT_EQ(j.at("step"), 0);
  EXPECT_EQ(j.at("stage"), 0);
  EXPECT_EQ(j.at("stroke_count"), 1);
  ASSERT_EQ(j.at("topk").size(), 4u);
  EXPECT_EQ(j.at("topk")[0].at("rank"), 1);
  EXPECT_TRUE(j.at("topk")[0].at("photo_id").is_string());
  EXPECT_TRUE(j.at("topk")[0].at("distance").is_number());
  EXPECT_FALSE(j.contains("true_rank"));
}

TEST_F(HttpTest, DefaultKIsTen) {
  const auto id = new_session();
  json body = stroke_body(world.episodes[0].strokes[0]);
  body.erase("k");
  auto r = cli.Post("/sessions/" + id + "/strokes", body.dump(), "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(json::parse(r->body).at("topk").size(), 10u);
}

TEST_F(HttpTest, PracticeSession) {
  const auto id = new_session({{"target_id", "ph2"}});
  auto r = cli.Post("/sessions/" + id + "/strokes", stroke_body(world.episodes[2].strokes[0]).dump(),
                    "application/json");
  ASSERT_TRUE(r);
  const json j = json::parse(r->body);
  ASSERT_TRUE(j.contains("true_rank"));
  EXPECT_GE(j.at("true_rank").get<int>(), 1);
  EXPECT_LE(j.at("true_rank").get<int>(), 10);
}

TEST_F(HttpTest, ErrorsAreStructured) {
  expect_error(cli.Post("/sessions", R"({"target_id":"ghost"})", "application/json"), 404, "not_found");
  expect_error(cli.Post("/sessions", "{oops", "application/json"), 400, "parse_error");
  expect_error(cli.Post("/sessions/nosuch/strokes", stroke_body({{0.5, 0.5}, {0.6, 0.5}}).dump(), "application/json"),
               404, "not_found");
  const auto id = new_session();
  const std::string url = "/sessions/" + id + "/strokes";
  expect_error(cli.Post(url, stroke_body({{0.5, 1.5}}).dump(), "application/json"), 400,
               "validation_error");
  expect_error(cli.Post(url, stroke_body({{0.5, 0.5}, {0.6, 0.5}}, 0).dump(), "application/json"), 400,
               "validation_error");
  expect_error(cli.Post(url, R"({"points": [[0.1]]})", "application/json"), 400, "parse_error");
  expect_error(cli.Post(url, R"({"k": 3})", "application/json"), 400, "parse_error");
  expect_error(cli.Post(url, R"({"points": [], "k": 3})", "application/json"), 400, "validation_error");
  expect_error(cli.Get("/gallery/ghost/image"), 404, "not_found");
}

TEST_F(HttpTest, DeleteSession) {
  const auto id = new_session();
  auto r = cli.Delete("/sessions/" + id);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 204);
  expect_error(cli.Delete("/sessions/" + id), 404, "not_found");
  EXPECT_EQ(svc.session_count(), 0u);
}

TEST_F(HttpTest, GalleryAndImages) {
  auto r = cli.Get("/gallery");
  ASSERT_TRUE(r);
  const json j = json::parse(r->body);
  ASSERT_EQ(j.size(), 10u);
  EXPECT_EQ(j[0].at("photo_id"), "ph0");
  const std::string ref = j[3].at("thumbnail_ref");
  auto img = cli.Get(ref);
  ASSERT_TRUE(img);
  EXPECT_EQ(img->status, 200);
  EXPECT_EQ(img->get_header_value("Content-Type"), "image/bmp");
  EXPECT_EQ(img->body, placeholder_glyph_bmp("ph3"));
}

TEST(HttpStatic, ServesMountedDirectory) {
  auto w = fixture::make_world(3, 2, 3, 1);
  RetrievalService svc(fixture::random_model(4, 4, 1, 1), w.photos, "x");
  const auto dir = std::filesystem::temp_directory_path() / "mgal_static_test";
  std::filesystem::create_directories(dir);
  io::write_file_atomic(dir / "index.html", "<html>canvas</html>");
  {
    fixture::LiveServer live(svc, dir);
    auto cli = live.client();
    auto r = cli.Get("/index.html");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    EXPECT_EQ(r->body, "<html>canvas</html>");
    auto h = cli.Get("/health");
    ASSERT_TRUE(h);
    EXPECT_EQ(h->status, 200);
  }
  std::filesystem::remove_all(dir);
}
