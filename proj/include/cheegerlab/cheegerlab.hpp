#pragma once

#include "cheegerlab/error.hpp"
#include "cheegerlab/format.hpp"
#include "cheegerlab/parallel.hpp"
#include "cheegerlab/model_space.hpp"
#include "cheegerlab/iso_comparison.hpp"
#include "cheegerlab/constellation.hpp"
#include "cheegerlab/ambient_geometry.hpp"
#include "cheegerlab/mesh_generators.hpp"
#include "cheegerlab/mesh_io.hpp"
#include "cheegerlab/extrinsic_analysis.hpp"
