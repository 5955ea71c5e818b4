// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "ucran/baselines.hpp"
#include "ucran/dual_bcd.hpp"
#include "ucran/harness.hpp"
#include "ucran/json_io.hpp"
#include "ucran/mmse.hpp"
#include "ucran/network.hpp"
#include "ucran/precoder.hpp"
#include "ucran/prng.hpp"
#include "ucran/socp.hpp"
#include "ucran/stage1.hpp"
#include "ucran/stage2.hpp"
