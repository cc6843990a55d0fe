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

#pragma once

#include <cstddef>

namespace vidcrf {

/// Number of OpenMP threads parallel regions will use (1 without OpenMP).
int max_threads();

/// Caps the thread count for subsequent parallel regions; n <= 0 restores the default.
void set_threads(int n);

/// Restores the previous thread cap when it goes out of scope.
class ScopedThreads {
public:
    explicit ScopedThreads(int n);
    ~ScopedThreads();
    ScopedThreads(const ScopedThreads&) = delete;
    ScopedThreads& operator=(const ScopedThreads&) = delete;

private:
    int previous_;
};

/// Half-open range [begin, end) of the chunk owned by `part` when `count`
/// items are split into `parts` contiguous chunks.
struct ChunkRange {
    std::size_t begin;
    std::size_t end;
};
ChunkRange chunk_range(std::size_t count, int parts, int part);

} // namespace vidcrf
