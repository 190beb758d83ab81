#pragma once

#include "ganbench/analysis.hpp"
#include "ganbench/distributions.hpp"
#include "ganbench/ganzoo.hpp"
#include "ganbench/harness.hpp"
#include "ganbench/matrix.hpp"
#include "ganbench/metrics.hpp"
#include "ganbench/mlp.hpp"
#include "ganbench/rng.hpp"
#include "ganbench/selftest.hpp"
#include "ganbench/tape.hpp"
#include "ganbench/train.hpp"
#include "ganbench/variants.hpp"
