#pragma once

#include "spam/adam.hpp"
#include "spam/clipping.hpp"
#include "spam/compare.hpp"
#include "spam/config.hpp"
#include "spam/csv.hpp"
#include "spam/errors.hpp"
#include "spam/injectors.hpp"
#include "spam/mask.hpp"
#include "spam/param_store.hpp"
#include "spam/problems.hpp"
#include "spam/rng.hpp"
#include "spam/runner.hpp"
#include "spam/schedule.hpp"
#include "spam/spam_optimizer.hpp"
#include "spam/spike_lab.hpp"
#include "spam/stats.hpp"
#include "spam/sweep.hpp"
