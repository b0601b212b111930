// SPDX-License-Identifier: Apache-2.0

#ifndef FEEC_FEEC_HPP
#define FEEC_FEEC_HPP

#include "feec/afem.hpp"
#include "feec/assembly.hpp"
#include "feec/config.hpp"
#include "feec/estimators.hpp"
#include "feec/experiment.hpp"
#include "feec/forms.hpp"
#include "feec/generate.hpp"
#include "feec/mesh.hpp"
#include "feec/mesh_io.hpp"
#include "feec/problems.hpp"
#include "feec/quadrature.hpp"
#include "feec/refine.hpp"
#include "feec/solvers.hpp"
#include "feec/spaces.hpp"

#endif  // FEEC_FEEC_HPP
