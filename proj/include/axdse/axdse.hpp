#pragma once

#include "axdse/error.hpp"
#include "axdse/operators.hpp"
#include "axdse/kernels.hpp"
#include "axdse/env.hpp"
#include "axdse/reward.hpp"
#include "axdse/agent.hpp"
#include "axdse/plots.hpp"
#include "axdse/harness.hpp"
