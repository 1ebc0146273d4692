#pragma once

#include "stormbench/config.hpp"
#include "stormbench/diagnostics.hpp"
#include "stormbench/harness.hpp"
#include "stormbench/lemmas.hpp"
#include "stormbench/optimizers.hpp"
#include "stormbench/problems.hpp"
#include "stormbench/rng.hpp"
#include "stormbench/runner.hpp"
#include "stormbench/vec.hpp"
