#pragma once

#include "conicsvm/core.hpp"
#include "conicsvm/dataset_io.hpp"
#include "conicsvm/loss.hpp"
#include "conicsvm/conic_program.hpp"
#include "conicsvm/conic_solver.hpp"
#include "conicsvm/qp.hpp"
#include "conicsvm/formulations.hpp"
#include "conicsvm/exact.hpp"
#include "conicsvm/random.hpp"
#include "conicsvm/experiments.hpp"
#include "conicsvm/model_io.hpp"
