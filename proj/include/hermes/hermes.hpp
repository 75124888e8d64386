#pragma once

#include "cache.hpp"
#include "config.hpp"
#include "core.hpp"
#include "errors.hpp"
#include "features.hpp"
#include "hierarchy.hpp"
#include "hmp.hpp"
#include "metrics.hpp"
#include "popet.hpp"
#include "predictor.hpp"
#include "trace.hpp"
#include "ttp.hpp"
#include "workloads.hpp"
#include "tuning.hpp"
