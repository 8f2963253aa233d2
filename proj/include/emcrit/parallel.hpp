// Copyright 2026 The emcrit Authors
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

#pragma once

#include <cstddef>
#include <functional>

namespace emcrit {

// Number of workers to use when the caller passes 0: the EMCRIT_WORKERS
// environment variable if set, else hardware concurrency.
int default_workers();

// Runs body(i) for each i in [0, n) on a small thread pool.
//
// Determinism contract: body(i) must touch only state owned by index i
// (its own RNG stream, its own result slot).  Under that contract the
// outcome is bit-identical for any worker count, including 1.  Reductions
// happen afterwards, in index order, on the caller's side.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  int n_workers = 0);

}  // namespace emcrit
