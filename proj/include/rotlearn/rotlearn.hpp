#pragma once

// Umbrella header: rotation representations, orthogonalization maps and
// their Jacobians, the small training stack, and the analysis experiments.

#include "rotlearn/analysis.hpp"
#include "rotlearn/chain.hpp"
#include "rotlearn/config.hpp"
#include "rotlearn/csv.hpp"
#include "rotlearn/errors.hpp"
#include "rotlearn/heads.hpp"
#include "rotlearn/mat.hpp"
#include "rotlearn/net.hpp"
#include "rotlearn/ortho.hpp"
#include "rotlearn/rng.hpp"
#include "rotlearn/rotations.hpp"
#include "rotlearn/sym_eig.hpp"
#include "rotlearn/tasks.hpp"
