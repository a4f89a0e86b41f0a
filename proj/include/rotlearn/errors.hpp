#pragma once

#include <stdexcept>
#include <string>

namespace rotlearn {

/// Input collapsed below the degeneracy threshold. `index` identifies which
/// column or projection collapsed (-1 when not applicable).
struct DegenerateInput : std::runtime_error {
    int index;
    explicit DegenerateInput(const std::string& what, int idx = -1)
        : std::runtime_error(what), index(idx) {}
};

/// An iterative routine failed to converge within its budget.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace rotlearn
