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

#ifndef FAIRPERC_FAIRPERC_HPP
#define FAIRPERC_FAIRPERC_HPP

#include "fairperc/analysis.hpp"
#include "fairperc/errors.hpp"
#include "fairperc/inference.hpp"
#include "fairperc/metrics.hpp"
#include "fairperc/random.hpp"
#include "fairperc/response_model.hpp"
#include "fairperc/scenario.hpp"
#include "fairperc/service.hpp"
#include "fairperc/test_space.hpp"
#include "fairperc/trace_log.hpp"

#endif  // FAIRPERC_FAIRPERC_HPP
