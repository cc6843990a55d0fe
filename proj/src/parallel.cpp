// Copyright 2026 The vidcrf Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "vidcrf/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vidcrf {

namespace {
int g_default_threads = 0;
}

int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
    if (g_default_threads == 0)
        g_default_threads = omp_get_max_threads();
    omp_set_num_threads(n > 0 ? n : g_default_threads);
#else
    (void)n;
#endif
}

ScopedThreads::ScopedThreads(int n) : previous_(max_threads()) { set_threads(n); }

ScopedThreads::~ScopedThreads() { set_threads(previous_); }

ChunkRange chunk_range(std::size_t count, int parts, int part) {
    const auto p = static_cast<std::size_t>(parts);
    const auto k = static_cast<std::size_t>(part);
    const std::size_t base = count / p;
    const std::size_t extra = count % p;
    const std::size_t begin = k * base + (k < extra ? k : extra);
    return {begin, begin + base + (k < extra ? 1 : 0)};
}

} // namespace vidcrf
