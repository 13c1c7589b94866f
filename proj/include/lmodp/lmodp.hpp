// Copyright 2026 The lmodp Authors
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

#pragma once

#include "lmodp/accountant.hpp"
#include "lmodp/analysis.hpp"
#include "lmodp/dpsgd.hpp"
#include "lmodp/errors.hpp"
#include "lmodp/json_io.hpp"
#include "lmodp/mgf.hpp"
#include "lmodp/numeric.hpp"
#include "lmodp/rng.hpp"
#include "lmodp/sampler.hpp"
#include "lmodp/search.hpp"
