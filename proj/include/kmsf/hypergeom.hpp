#pragma once

#include "kmsf/lauricella.hpp"
#include "kmsf/oracles.hpp"
#include "kmsf/scalar_hypergeom.hpp"
#include "kmsf/series_config.hpp"
#include "kmsf/special.hpp"
