#pragma once

#include "drbench/common.hpp"
#include "drbench/datasets.hpp"
#include "drbench/experiment.hpp"
#include "drbench/geometry.hpp"
#include "drbench/harness.hpp"
#include "drbench/hyperparams.hpp"
#include "drbench/io.hpp"
#include "drbench/metrics.hpp"
#include "drbench/optimize.hpp"
#include "drbench/reducers.hpp"
#include "drbench/report.hpp"
#include "drbench/rng.hpp"
