#pragma once

#include "cluster/cmeans.hpp"
#include "cluster/kmeans.hpp"
#include "cluster/lca.hpp"
#include "cluster/mixture.hpp"
#include "cluster/solution.hpp"
#include "cluster/ward.hpp"
