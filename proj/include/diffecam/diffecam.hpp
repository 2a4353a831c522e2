#pragma once

#include "config.hpp"
#include "convolution.hpp"
#include "diffuser_sim.hpp"
#include "edge_model.hpp"
#include "errors.hpp"
#include "fft.hpp"
#include "image.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "random.hpp"
#include "raster_io.hpp"
#include "rolling_shutter.hpp"
#include "shapes.hpp"
#include "solver.hpp"
#include "tv.hpp"
