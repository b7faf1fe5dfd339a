#pragma once

#include "detbound/config.hpp"
#include "detbound/errors.hpp"
#include "detbound/numerics.hpp"
#include "detbound/geometry.hpp"
#include "detbound/anomaly.hpp"
#include "detbound/rearrangement.hpp"
#include "detbound/bounds.hpp"
#include "detbound/spectral.hpp"
#include "detbound/optimizer.hpp"
