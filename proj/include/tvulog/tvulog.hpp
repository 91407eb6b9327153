#pragma once

#include "tvulog/bayes.hpp"
#include "tvulog/blobs.hpp"
#include "tvulog/convolve.hpp"
#include "tvulog/cube.hpp"
#include "tvulog/fgp.hpp"
#include "tvulog/grid.hpp"
#include "tvulog/io.hpp"
#include "tvulog/rng.hpp"
#include "tvulog/scalespace.hpp"
#include "tvulog/signals.hpp"
#include "tvulog/socp.hpp"
#include "tvulog/solvers.hpp"
#include "tvulog/svg.hpp"
#include "tvulog/tube.hpp"
