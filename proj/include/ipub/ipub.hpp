#pragma once

#include <ipub/types.hpp>
#include <ipub/loss.hpp>
#include <ipub/penalty.hpp>
#include <ipub/objective.hpp>
#include <ipub/solver.hpp>
#include <ipub/bound.hpp>
#include <ipub/interval.hpp>
#include <ipub/inewton.hpp>
#include <ipub/oracle.hpp>
#include <ipub/rng.hpp>
