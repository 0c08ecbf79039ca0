#pragma once

#include "ctrlpower/allocator.hpp"
#include "ctrlpower/csv.hpp"
#include "ctrlpower/error.hpp"
#include "ctrlpower/io.hpp"
#include "ctrlpower/loop.hpp"
#include "ctrlpower/loopsim.hpp"
#include "ctrlpower/plant.hpp"
#include "ctrlpower/ratecost.hpp"
#include "ctrlpower/riccati.hpp"
#include "ctrlpower/scenario.hpp"
#include "ctrlpower/units.hpp"
