#pragma once

// Mesh (loop-current) analysis, used as an independent check of the nodal solver.

#include "hybridspec/circuit.hpp"

#include <complex>

namespace hybridspec::testing {

/// Input impedance at net.probe against net.ground. A unit EMF is placed
/// between ground and probe; fundamental loops come from a breadth-first
/// spanning tree and (B Z B^T) I = -B u is solved for the loop currents.
std::complex<double> loop_input_impedance(const CircuitNetwork& net, double omega);

}  // namespace hybridspec::testing
