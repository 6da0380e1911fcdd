#pragma once

#include "mvq/annulus.hpp"
#include "mvq/coaptation.hpp"
#include "mvq/frame.hpp"
#include "mvq/geometry.hpp"
#include "mvq/height_field.hpp"
#include "mvq/landmarks.hpp"
#include "mvq/marching_cubes.hpp"
#include "mvq/mesh.hpp"
#include "mvq/metrics.hpp"
#include "mvq/morphometry.hpp"
#include "mvq/nrrd.hpp"
#include "mvq/periodic_spline.hpp"
#include "mvq/phantom.hpp"
#include "mvq/pipeline.hpp"
#include "mvq/section.hpp"
#include "mvq/smoothing.hpp"
#include "mvq/volume.hpp"
