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

// HTTP+JSON binding of ExperimentService.

#ifndef FAIRPERC_HTTP_SERVER_HPP
#define FAIRPERC_HTTP_SERVER_HPP

#include <string>

#include "httplib.h"
#include "json.hpp"

#include "fairperc/errors.hpp"
#include "fairperc/service.hpp"

namespace fairperc {

class HttpFrontend {
 public:
  explicit HttpFrontend(ExperimentService& service) : service_(service) { routes(); }

  httplib::Server& server() { return server_; }

  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  bool is_running() const { return server_.is_running(); }

 private:
  template <typename Handler>
  static void guarded(httplib::Response& res, int ok_status, Handler&& handler) {
    auto fail = [&](int status, std::string_view kind, const char* what) {
      res.status = status;
      res.set_content(Json{{"schema_version", kSchemaVersion}, {"error", {{"kind", kind}, {"message", what}}}}.dump(),
                      "application/json");
    };
    try {
      Json body = handler();
      res.status = ok_status;
      res.set_content(body.dump(), "application/json");
    } catch (const NotFoundError& e) {
      fail(404, "not_found", e.what());
    } catch (const ConflictError& e) {
      fail(409, "conflict", e.what());
    } catch (const ValidationError& e) {
      fail(422, "validation", e.what());
    } catch (const InputError& e) {
      fail(400, "request", e.what());
    } catch (const Json::parse_error& e) {
      fail(400, "request", e.what());
    } catch (const std::exception& e) {
      fail(500, "internal", e.what());
    }
  }

  static Json body_of(const httplib::Request& req) {
    if (req.body.empty()) return Json::object();
    return Json::parse(req.body);
  }

  void routes() {
    server_.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 201, [&] { return service_.create_session(body_of(req)); });
    });
    server_.Get(R"(/sessions/([0-9a-f]+)/current-test)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 200, [&] { return service_.current_test(req.matches[1]); });
    });
    server_.Post(R"(/sessions/([0-9a-f]+)/responses)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 200, [&] { return service_.submit_response(req.matches[1], body_of(req)); });
    });
    server_.Post(R"(/sessions/([0-9a-f]+)/demographics)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 200, [&] { return service_.submit_demographics(req.matches[1], body_of(req)); });
    });
    server_.Post("/surveys", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, 201, [&] { return service_.submit_survey(body_of(req)); });
    });
    server_.Get("/scenarios", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, 200, [&] { return service_.scenarios(); });
    });
    // Line-delimited records; ?kind=sessions|surveys&scenario=..&include_demographics=1
    server_.Get("/export", [this](const httplib::Request& req, httplib::Response& res) {
      try {
        const bool demographics = req.has_param("include_demographics") &&
                                  (req.get_param_value("include_demographics") == "1" ||
                                   req.get_param_value("include_demographics") == "true");
        const auto kind = req.has_param("kind") ? req.get_param_value("kind") : std::string("sessions");
        std::string body;
        if (kind == "surveys") {
          body = service_.export_surveys(demographics);
        } else if (kind == "sessions") {
          ExportFilter filter;
          filter.include_demographics = demographics;
          if (req.has_param("scenario")) filter.scenario = parse_scenario(req.get_param_value("scenario"));
          body = service_.export_sessions(filter);
        } else {
          throw InputError("kind must be sessions or surveys");
        }
        res.status = 200;
        res.set_content(body, "application/x-ndjson");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(Json{{"schema_version", kSchemaVersion}, {"error", {{"kind", "request"}, {"message", e.what()}}}}.dump(),
                        "application/json");
      }
    });
    server_.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(Json{{"schema_version", kSchemaVersion}, {"status", "ok"}}.dump(), "application/json");
    });
    if (!service_.config().static_dir.empty()) server_.set_mount_point("/", service_.config().static_dir);
  }

  ExperimentService& service_;
  httplib::Server server_;
};

}  // namespace fairperc

#endif  // FAIRPERC_HTTP_SERVER_HPP
