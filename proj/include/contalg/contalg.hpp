#pragma once

#include "contalg/algebroid.hpp"
#include "contalg/calculus.hpp"
#include "contalg/coframe.hpp"
#include "contalg/dual.hpp"
#include "contalg/errors.hpp"
#include "contalg/expr.hpp"
#include "contalg/hamilton_jacobi.hpp"
#include "contalg/hamiltonian.hpp"
#include "contalg/integrate.hpp"
#include "contalg/lagrangian.hpp"
#include "contalg/legendre.hpp"
#include "contalg/linalg.hpp"
#include "contalg/random.hpp"
#include "contalg/state.hpp"
