#pragma once

#include "stlmine/formula.hpp"
#include "stlmine/trace.hpp"

namespace stlmine {

// Boolean satisfaction of a ground formula by a finite trace, starting at
// sample time t (default 0). Time quantification runs over the trace's
// sample times plus shifted window endpoints, clipped to the trace span;
// atoms between samples evaluate by linear interpolation. Windows reaching
// past the trace end are truncated (an empty F window is false, an empty G
// window is true). Throws ContractError when phi is not ground or t is not
// a sample time.
bool satisfies(const TimedTrace& x, const FormulaPtr& phi, double t = 0.0);

}  // namespace stlmine
