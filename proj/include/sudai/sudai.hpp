#pragma once

#include "sudai/quantum_core.hpp"
#include "sudai/circuit.hpp"
#include "sudai/qgan.hpp"
#include "sudai/detector.hpp"
#include "sudai/bench_io.hpp"
