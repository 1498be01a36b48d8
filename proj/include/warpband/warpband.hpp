#pragma once

#include "warpband/error.hpp"
#include "warpband/warping.hpp"
#include "warpband/model_space.hpp"
#include "warpband/riccati.hpp"
#include "warpband/comparison.hpp"
#include "warpband/band.hpp"
#include "warpband/band_geometry.hpp"
#include "warpband/maxflow.hpp"
#include "warpband/curve_operator.hpp"
#include "warpband/mu_bubble.hpp"
#include "warpband/spectral.hpp"
#include "warpband/sweep.hpp"
