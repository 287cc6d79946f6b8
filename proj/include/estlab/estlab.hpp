#pragma once

#include "estlab/error.hpp"
#include "estlab/rng.hpp"
#include "estlab/core.hpp"
#include "estlab/filters.hpp"
#include "estlab/metrics.hpp"
#include "estlab/parallel.hpp"
#include "estlab/sim.hpp"
#include "estlab/verify.hpp"
#include "estlab/checks.hpp"
#include "estlab/config_io.hpp"
#include "estlab/report.hpp"
