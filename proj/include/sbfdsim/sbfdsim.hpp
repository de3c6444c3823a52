// SPDX-License-Identifier: Apache-2.0
//
// sbfdsim - link-level simulator for sub-band full-duplex cell-free
// massive MIMO joint communication and sensing
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "sbfdsim/channel.hpp"
#include "sbfdsim/constants.hpp"
#include "sbfdsim/esprit.hpp"
#include "sbfdsim/harness.hpp"
#include "sbfdsim/radar.hpp"
#include "sbfdsim/rng.hpp"
#include "sbfdsim/sbfd_grid.hpp"
#include "sbfdsim/scenario.hpp"
#include "sbfdsim/signal.hpp"
#include "sbfdsim/ul_comm.hpp"
