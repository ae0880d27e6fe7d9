#pragma once

#include "kpower/bitset.hpp"
#include "kpower/embedder.hpp"
#include "kpower/errors.hpp"
#include "kpower/expansion.hpp"
#include "kpower/graph.hpp"
#include "kpower/harness.hpp"
#include "kpower/models.hpp"
#include "kpower/power_cycle.hpp"
#include "kpower/regularity.hpp"
#include "kpower/rng.hpp"
#include "kpower/serialization.hpp"
#include "kpower/tuple_view.hpp"
#include "kpower/typicality.hpp"
