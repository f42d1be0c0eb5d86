// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vdl/cli.hpp"
#include "vdl/config.hpp"
#include "vdl/csv.hpp"
#include "vdl/datasets.hpp"
#include "vdl/errors.hpp"
#include "vdl/eval.hpp"
#include "vdl/json_io.hpp"
#include "vdl/metrics.hpp"
#include "vdl/numeric.hpp"
#include "vdl/policy.hpp"
#include "vdl/rng.hpp"
#include "vdl/runner.hpp"
#include "vdl/stance.hpp"
#include "vdl/svg.hpp"
#include "vdl/trainers.hpp"
#include "vdl/version.hpp"
#include "vdl/world.hpp"
