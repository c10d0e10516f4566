// Copyright 2026 The mfgsolve Authors
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

namespace mfg {

// Distribution of one noise increment. Each increment has mean zero and
// variance dt per coordinate: gaussian draws sqrt(dt) * N(0, 1), rademacher
// draws +-sqrt(dt) with equal probability, zero is deterministic.
enum class NoiseKind { gaussian, rademacher, zero };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::gaussian;
};

}  // namespace mfg
