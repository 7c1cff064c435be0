// Copyright 2026 The duofm authors
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

#include <duofm/cache.hpp>
#include <duofm/convert.hpp>
#include <duofm/descriptors.hpp>
#include <duofm/errors.hpp>
#include <duofm/evaluate.hpp>
#include <duofm/fmap.hpp>
#include <duofm/generators.hpp>
#include <duofm/mesh.hpp>
#include <duofm/mesh_io.hpp>
#include <duofm/operators.hpp>
#include <duofm/pipeline.hpp>
#include <duofm/qmap.hpp>
#include <duofm/refine.hpp>
#include <duofm/spectral.hpp>
