#pragma once

#include "pcflab/common.hpp"
#include "pcflab/config.hpp"
#include "pcflab/flow.hpp"
#include "pcflab/geometry.hpp"
#include "pcflab/grid.hpp"
#include "pcflab/homogeneous.hpp"
#include "pcflab/initial_data.hpp"
#include "pcflab/io.hpp"
#include "pcflab/metric.hpp"
#include "pcflab/monitors.hpp"
#include "pcflab/run.hpp"
#include "pcflab/runner.hpp"
#include "pcflab/spectral.hpp"
#include "pcflab/tensor.hpp"
