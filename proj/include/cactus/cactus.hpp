#pragma once

// Umbrella header.

#include "cactus/abstraction.hpp"
#include "cactus/baselines.hpp"
#include "cactus/classifier.hpp"
#include "cactus/error.hpp"
#include "cactus/evaluation.hpp"
#include "cactus/experiment.hpp"
#include "cactus/importance.hpp"
#include "cactus/missingness.hpp"
#include "cactus/random.hpp"
#include "cactus/report.hpp"
#include "cactus/synthetic.hpp"
#include "cactus/tabular.hpp"
#include "cactus/version.hpp"
