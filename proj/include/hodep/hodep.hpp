// Copyright 2026 The hodep Authors
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

#include "hodep/admm.hpp"
#include "hodep/arc_scores.hpp"
#include "hodep/common.hpp"
#include "hodep/corpus.hpp"
#include "hodep/decoder.hpp"
#include "hodep/factor_graph.hpp"
#include "hodep/oracle.hpp"
#include "hodep/scorer.hpp"
#include "hodep/trainer.hpp"
#include "hodep/tree.hpp"
#include "hodep/verify.hpp"
