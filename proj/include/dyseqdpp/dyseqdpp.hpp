// Copyright 2026 The DySeqDPP Authors
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

#include "dyseqdpp/checkpoint.hpp"
#include "dyseqdpp/codec.hpp"
#include "dyseqdpp/dataset.hpp"
#include "dyseqdpp/dpp.hpp"
#include "dyseqdpp/errors.hpp"
#include "dyseqdpp/kernel_net.hpp"
#include "dyseqdpp/metrics.hpp"
#include "dyseqdpp/random.hpp"
#include "dyseqdpp/rl.hpp"
#include "dyseqdpp/seq_model.hpp"
#include "dyseqdpp/synthetic.hpp"
#include "dyseqdpp/verify.hpp"
