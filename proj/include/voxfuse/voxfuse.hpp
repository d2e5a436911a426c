/*
 * voxfuse : volumetric lesion mask fusion and evaluation
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef VOXFUSE_VOXFUSE_HPP
#define VOXFUSE_VOXFUSE_HPP

#include "voxfuse/config.hpp"
#include "voxfuse/ensemble.hpp"
#include "voxfuse/errors.hpp"
#include "voxfuse/io.hpp"
#include "voxfuse/lesion_load.hpp"
#include "voxfuse/metrics.hpp"
#include "voxfuse/pipeline.hpp"
#include "voxfuse/preprocess.hpp"
#include "voxfuse/regions.hpp"
#include "voxfuse/rng.hpp"
#include "voxfuse/synthetic.hpp"
#include "voxfuse/version.hpp"
#include "voxfuse/volume.hpp"

#endif
