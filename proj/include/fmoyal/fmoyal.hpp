#pragma once

#include "fmoyal/types.hpp"
#include "fmoyal/summation.hpp"
#include "fmoyal/fock.hpp"
#include "fmoyal/weyl.hpp"
#include "fmoyal/kproduct.hpp"
#include "fmoyal/foscillator.hpp"
#include "fmoyal/kernels.hpp"
#include "fmoyal/starcalc.hpp"
#include "fmoyal/convergence.hpp"
#include "fmoyal/io.hpp"
#include "fmoyal/random.hpp"
#include "fmoyal/config.hpp"
