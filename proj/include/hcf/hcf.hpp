#pragma once

#include "hcf/errors.hpp"
#include "hcf/filter.hpp"
#include "hcf/random.hpp"
#include "hcf/sensing.hpp"
#include "hcf/sim.hpp"
#include "hcf/so3.hpp"
#include "hcf/superquadric.hpp"
#include "hcf/version.hpp"
