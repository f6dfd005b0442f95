#pragma once

#include "sublinop/convbody.hpp"
#include "sublinop/error.hpp"
#include "sublinop/fundsol.hpp"
#include "sublinop/grid_io.hpp"
#include "sublinop/mvsolve.hpp"
#include "sublinop/operator_spec.hpp"
#include "sublinop/rotinv.hpp"
#include "sublinop/symmat.hpp"
