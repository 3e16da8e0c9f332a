// Copyright 2026 The tilscore Authors. All Rights Reserved.
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

/// @file parallel.hpp
/// @brief Minimal fork-join helper used by the tiled stages.

#pragma once

#include <cstddef>
#include <functional>

namespace tilscore {

/// Caps the worker count used by parallel_for. 0 selects
/// std::thread::hardware_concurrency().
void set_max_threads(unsigned n) noexcept;
unsigned max_threads() noexcept;

/// Runs body(i) for i in [0, n). Work is split into contiguous blocks, one per
/// worker; results must be written to disjoint locations. The first
/// exception thrown by any worker is rethrown on the calling thread after all
/// workers have joined.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace tilscore
