#pragma once

#include "config.hpp"
#include "error.hpp"
#include "grid.hpp"
#include "patch.hpp"
#include "planner.hpp"
#include "plot.hpp"
#include "qnet.hpp"
#include "rng.hpp"
#include "simenv.hpp"
#include "topomap.hpp"
#include "trainer.hpp"
