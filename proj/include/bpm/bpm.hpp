// Copyright 2026 The BPM Authors. All Rights Reserved.
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

// Umbrella header.

#pragma once

#include "bpm/config.hpp"
#include "bpm/errors.hpp"
#include "bpm/geometry.hpp"
#include "bpm/guidance.hpp"
#include "bpm/harness.hpp"
#include "bpm/http_provider.hpp"
#include "bpm/image_io.hpp"
#include "bpm/instruction.hpp"
#include "bpm/localizer.hpp"
#include "bpm/manifest.hpp"
#include "bpm/provider.hpp"
#include "bpm/region_judge.hpp"
#include "bpm/scoring.hpp"
#include "bpm/semantic_judge.hpp"
