#pragma once

#include "blpp/core.hpp"
#include "blpp/error.hpp"
#include "blpp/hawkes_oracle.hpp"
#include "blpp/innovations.hpp"
#include "blpp/kernels.hpp"
#include "blpp/linalg.hpp"
#include "blpp/moments.hpp"
#include "blpp/predict.hpp"
#include "blpp/rng.hpp"
#include "blpp/simulate.hpp"
#include "blpp/wh_solvers.hpp"
#include "blpp/io.hpp"
#include "blpp/experiment.hpp"
