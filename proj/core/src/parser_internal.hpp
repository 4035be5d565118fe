#pragma once

#include <string_view>
#include <vector>

#include "stlmine/formula.hpp"

namespace stlmine {

// Parses formula text against a declaration list: identifiers in parameter
// positions must name a declared parameter. An empty list parses a ground
// formula (any parameter reference is an error).
FormulaPtr parse_formula_with_params(std::string_view text,
                                     const std::vector<ParameterDecl>& decls);

}  // namespace stlmine
