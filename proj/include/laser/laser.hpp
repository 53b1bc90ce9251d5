/*
 * Copyright 2026 The laserloc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "laser/baseline_mcl.hpp"
#include "laser/circular_feature.hpp"
#include "laser/codebook.hpp"
#include "laser/evaluation.hpp"
#include "laser/floormap.hpp"
#include "laser/geometry.hpp"
#include "laser/grid.hpp"
#include "laser/io.hpp"
#include "laser/localizer.hpp"
#include "laser/raycast.hpp"
#include "laser/renderer.hpp"
#include "laser/scene.hpp"
#include "laser/training.hpp"
