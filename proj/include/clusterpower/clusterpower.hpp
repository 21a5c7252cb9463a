#pragma once

#include "cluster.hpp"
#include "datagen.hpp"
#include "effect_size.hpp"
#include "evaluate.hpp"
#include "io.hpp"
#include "pipeline.hpp"
#include "power.hpp"
#include "reduce.hpp"
#include "rng.hpp"
#include "types.hpp"
