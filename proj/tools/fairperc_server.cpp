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

// HTTP service for live adaptive sessions and surveys.

#include <chrono>
#include <condition_variable>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>

#include "CLI11.hpp"

#include "fairperc/http_server.hpp"

using namespace fairperc;

int main(int argc, char** argv) {
  CLI::App app{"Adaptive fairness-perception experiment server"};
  std::string config_path;
  app.add_option("-c,--config", config_path, "JSON config file; FAIRPERC_* environment variables override it");
  CLI11_PARSE(app, argc, argv);

  try {
    auto config = config_path.empty() ? ServiceConfig{} : ServiceConfig::load(config_path);
    config.apply_env();
    ExperimentService service(config);
    std::cerr << "test space: " << service.table().size() << " tests; event log " << config.log_path << '\n';
    HttpFrontend http(service);

    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    std::thread sweeper([&] {
      std::unique_lock lock(mu);
      while (!cv.wait_for(lock, std::chrono::minutes(1), [&] { return done; })) {
        try {
          if (const auto n = service.expire_idle()) std::cerr << "expired " << n << " idle sessions\n";
        } catch (const std::exception& e) {
          std::cerr << "expiry sweep failed: " << e.what() << '\n';
        }
      }
    });

    std::cerr << "listening on " << config.host << ':' << config.port << '\n';
    const bool ok = http.listen(config.host, config.port);
    {
      std::lock_guard lock(mu);
      done = true;
    }
    cv.notify_one();
    sweeper.join();
    if (!ok) {
      std::cerr << "error: cannot listen on " << config.host << ':' << config.port << '\n';
      return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
