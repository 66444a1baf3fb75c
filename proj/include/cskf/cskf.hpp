#pragma once

// Continuous-scale kinetic fluid solver: D3Q27 central-moment relaxation with
// adaptive high-order viscosities, arbitrary-ratio grid overlays, static and
// dynamic scale construction, and smoke tracers.

#include "cskf/benchmarks.hpp"
#include "cskf/block.hpp"
#include "cskf/collision.hpp"
#include "cskf/config.hpp"
#include "cskf/core.hpp"
#include "cskf/diagnostics.hpp"
#include "cskf/geometry.hpp"
#include "cskf/io.hpp"
#include "cskf/lattice.hpp"
#include "cskf/moments.hpp"
#include "cskf/rescale.hpp"
#include "cskf/runner.hpp"
#include "cskf/scalegen.hpp"
#include "cskf/scheduler.hpp"
#include "cskf/tracers.hpp"
