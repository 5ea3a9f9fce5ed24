// Copyright 2026 The leace-embed Authors.
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

#ifndef LEACE_LEACE_HPP_
#define LEACE_LEACE_HPP_

#include "leace/clustering.hpp"
#include "leace/config.hpp"
#include "leace/eraser.hpp"
#include "leace/error.hpp"
#include "leace/io.hpp"
#include "leace/labels.hpp"
#include "leace/linalg.hpp"
#include "leace/metrics.hpp"
#include "leace/stats.hpp"
#include "leace/synth.hpp"

#endif  // LEACE_LEACE_HPP_
