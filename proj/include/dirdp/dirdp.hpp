// Copyright 2026 The DirDP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Umbrella header.

#ifndef DIRDP_DIRDP_HPP_
#define DIRDP_DIRDP_HPP_

#include "dirdp/attacks.hpp"
#include "dirdp/data.hpp"
#include "dirdp/error.hpp"
#include "dirdp/experiment.hpp"
#include "dirdp/image_io.hpp"
#include "dirdp/mechanisms.hpp"
#include "dirdp/metrics.hpp"
#include "dirdp/nn.hpp"
#include "dirdp/parallel.hpp"
#include "dirdp/rng.hpp"
#include "dirdp/sphere.hpp"
#include "dirdp/tensor.hpp"
#include "dirdp/training.hpp"

#endif  // DIRDP_DIRDP_HPP_
