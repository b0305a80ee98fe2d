#pragma once

// Umbrella header.

#include "ssdet/box_codec.hpp"
#include "ssdet/config.hpp"
#include "ssdet/csv.hpp"
#include "ssdet/ema.hpp"
#include "ssdet/evaluation.hpp"
#include "ssdet/experiments.hpp"
#include "ssdet/geometry.hpp"
#include "ssdet/kitti_io.hpp"
#include "ssdet/losses.hpp"
#include "ssdet/nms.hpp"
#include "ssdet/pseudo_labels.hpp"
#include "ssdet/rng.hpp"
#include "ssdet/schedule.hpp"
#include "ssdet/simulator.hpp"
#include "ssdet/toy_detector.hpp"
#include "ssdet/transforms.hpp"
#include "ssdet/types.hpp"
