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

/// @file commands.hpp
/// @brief `tilscore run|eval|synth` entry points.

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

namespace tilscore::cli {

enum ExitCode : int { kExitOk = 0, kExitValidation = 2, kExitRuntime = 3 };

struct RunOptions {
  std::string subcommand;  ///< segment, detect or score
  std::filesystem::path slide;
  std::filesystem::path tissue_mask;
  std::filesystem::path config;
  std::filesystem::path out;
  unsigned threads = 0;
  bool save_probabilities = false;
};

struct EvalOptions {
  std::string task;  ///< seg, det, tils or survival
  std::filesystem::path pred;
  std::filesystem::path gt;
  std::filesystem::path config;
  std::filesystem::path out;
  /// det: optional directory of tissue masks giving per-case area and pixel size.
  std::filesystem::path tissue_masks;
};

struct SynthOptions {
  std::string scenario;
  std::uint64_t seed = 0;
  std::filesystem::path out;
};

int cmd_run(const RunOptions& opts, std::ostream& diag);
int cmd_eval(const EvalOptions& opts, std::ostream& diag);
int cmd_synth(const SynthOptions& opts, std::ostream& diag);

/// Full command line, including argv[0].
int main_entry(int argc, const char* const* argv);

}  // namespace tilscore::cli
