// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fairperc/http_server.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include <gtest/gtest.h>

namespace fairperc {
namespace {

namespace fs = std::filesystem;

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("fairperc_http_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_ / "www");
    std::ofstream(dir_ / "www" / "index.html") << "<html>ui</html>";
    ServiceConfig cfg;
    cfg.log_path = (dir_ / "events.jsonl").string();
    cfg.static_dir = (dir_ / "www").string();
    cfg.master_seed = 1;
    service_ = std::make_unique<ExperimentService>(cfg);
    frontend_ = std::make_unique<HttpFrontend>(*service_);
    port_ = frontend_->bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { frontend_->listen_after_bind(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }

  void TearDown() override {
    frontend_->stop();
    thread_.join();
    frontend_.reset();
    service_.reset();
    fs::remove_all(dir_);
  }

  httplib::Result post(const std::string& path, const Json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  fs::path dir_;
  std::unique_ptr<ExperimentService> service_;
  std::unique_ptr<HttpFrontend> frontend_;
  std::thread thread_;
  int port_ = 0;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(HttpTest, FullSessionOverHttp) {
  auto res = post("/sessions", {{"scenario", "crime_risk"}});
  ASSERT_TRUE(res);
  ASSERT_EQ(res->status, 201);
  auto p = Json::parse(res->body);
  const std::string id = p.at("session_id");
  EXPECT_EQ(p.at("schema_version"), kSchemaVersion);

  auto cur = client_->Get("/sessions/" + id + "/current-test");
  ASSERT_EQ(cur->status, 200);
  EXPECT_EQ(Json::parse(cur->body), p);

  for (int i = 0; i < 20; ++i) {
    res = post("/sessions/" + id + "/responses",
               {{"test_id", p["test"]["id"]}, {"choice", "A2"}, {"explanation", {{"free_text", "balanced errors"}}}});
    ASSERT_EQ(res->status, 200) << res->body;
    p = Json::parse(res->body);
  }
  EXPECT_EQ(p.at("kind"), "complete");
  EXPECT_FALSE(p.at("return_code").get<std::string>().empty());

  const auto exp = client_->Get("/export");
  ASSERT_EQ(exp->status, 200);
  EXPECT_EQ(exp->get_header_value("Content-Type"), "application/x-ndjson");
  EXPECT_EQ(exp->body, service_->export_sessions());
  const auto rec = Json::parse(exp->body);
  EXPECT_EQ(rec.at("return_code"), p.at("return_code"));
  EXPECT_EQ(rec.at("steps").size(), 20u);
  EXPECT_EQ(rec["steps"][0]["choice"], "A2");
  EXPECT_FALSE(rec.contains("demographics"));
}

TEST_F(HttpTest, ErrorStatusCodes) {
  const auto p = Json::parse(post("/sessions", {{"scenario", "crime_risk"}})->body);
  const std::string id = p.at("session_id");
  const Json good = {{"test_id", p["test"]["id"]}, {"choice", "A1"}, {"explanation", {{"free_text", "x"}}}};

  EXPECT_EQ(post("/sessions", {{"scenario", "nope"}})->status, 400);
  EXPECT_EQ(client_->Post("/sessions", "{not json", "application/json")->status, 400);
  EXPECT_EQ(client_->Get("/sessions/0123456789abcdef/current-test")->status, 404);
  EXPECT_EQ(post("/sessions/" + id + "/responses", {{"test_id", p["test"]["id"]}, {"choice", "A1"}})->status, 422);
  EXPECT_EQ(post("/sessions/" + id + "/responses", good)->status, 200);
  const auto dup = post("/sessions/" + id + "/responses", good);
  EXPECT_EQ(dup->status, 409);
  const auto err = Json::parse(dup->body);
  EXPECT_EQ(err.at("error").at("kind"), "conflict");
  EXPECT_EQ(err.at("schema_version"), kSchemaVersion);
  EXPECT_EQ(client_->Get("/export?kind=bogus")->status, 400);
  EXPECT_EQ(client_->Get("/export?scenario=bogus")->status, 400);
}

TEST_F(HttpTest, SurveysDemographicsAndListing) {
  EXPECT_EQ(post("/surveys", {{"scenario", "flu_severity"}, {"chosen", "A3"}, {"demographics", {{"gender", "male"}}}})->status,
            201);
  EXPECT_EQ(post("/surveys", {{"scenario", "flu_severity"}, {"chosen", "A4"}})->status, 422);
  const auto surveys = client_->Get("/export?kind=surveys");
  EXPECT_EQ(Json::parse(surveys->body).at("stakes"), "low");
  EXPECT_EQ(surveys->body.find("male"), std::string::npos);
  EXPECT_NE(client_->Get("/export?kind=surveys&include_demographics=1")->body.find("male"), std::string::npos);

  const auto p = Json::parse(post("/sessions", {{"scenario", "cancer_risk"}})->body);
  EXPECT_EQ(post("/sessions/" + p["session_id"].get<std::string>() + "/demographics", {{"age_bracket", "35-44"}})->status,
            200);
  EXPECT_EQ(post("/sessions/" + p["session_id"].get<std::string>() + "/demographics", {{"shoe_size", "9"}})->status, 422);

  const auto listing = Json::parse(client_->Get("/scenarios")->body);
  EXPECT_EQ(listing.at("scenarios").size(), 5u);
  EXPECT_EQ(Json::parse(client_->Get("/healthz")->body).at("status"), "ok");
  const auto index = client_->Get("/index.html");
  ASSERT_EQ(index->status, 200);
  EXPECT_EQ(index->body, "<html>ui</html>");
}

TEST_F(HttpTest, ConcurrentClients) {
  std::vector<std::thread> clients;
  std::atomic<int> done{0};
  for (int c = 0; c < 4; ++c)
    clients.emplace_back([&] {
      httplib::Client cl("127.0.0.1", port_);
      auto p = Json::parse(cl.Post("/sessions", Json{{"scenario", "crime_risk"}}.dump(), "application/json")->body);
      const std::string id = p.at("session_id");
      while (p.at("kind") == "test") {
        const Json body = {{"test_id", p["test"]["id"]}, {"choice", "A1"}, {"explanation", {{"free_text", "x"}}}};
        p = Json::parse(cl.Post("/sessions/" + id + "/responses", body.dump(), "application/json")->body);
      }
      done += p.at("kind") == "complete";
    });
  for (auto& t : clients) t.join();
  EXPECT_EQ(done.load(), 4);
}

}  // namespace
}  // namespace fairperc
