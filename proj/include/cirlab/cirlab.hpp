#pragma once

#include "cirlab/errors.hpp"
#include "cirlab/model.hpp"
#include "cirlab/numerics.hpp"
#include "cirlab/rkf45.hpp"
#include "cirlab/rng.hpp"
#include "cirlab/semiclassics.hpp"
#include "cirlab/cdyn.hpp"
#include "cirlab/parallel.hpp"
#include "cirlab/mc.hpp"
#include "cirlab/freespace.hpp"
#include "cirlab/quantum.hpp"
#include "cirlab/config.hpp"
#include "cirlab/csv.hpp"

namespace cirlab {

inline constexpr const char* version = "0.1.0";

} // namespace cirlab
