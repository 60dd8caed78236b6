#pragma once

#include "corneal/common.hpp"
#include "corneal/components.hpp"
#include "corneal/config.hpp"
#include "corneal/error.hpp"
#include "corneal/eye_model.hpp"
#include "corneal/geometry.hpp"
#include "corneal/harness.hpp"
#include "corneal/image.hpp"
#include "corneal/limbus_detection.hpp"
#include "corneal/reconstruction.hpp"
#include "corneal/scene_analysis.hpp"
#include "corneal/simulator.hpp"
#include "corneal/unwrap.hpp"
