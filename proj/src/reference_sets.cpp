#include "hybridspec/reference_sets.hpp"

#include "hybridspec/errors.hpp"
#include "hybridspec/units.hpp"

namespace hybridspec::reference {

SystemParams flip_chip(std::size_t cut) {
    if (cut >= kMicrowaveHz.size()) throw ConfigError("reference: cut index out of range");
    SystemParams p;
    p.cavity.omega_c = hz_to_angular(kCavityHz);
    p.cavity.kappa_c1 = hz_to_angular(kCavityPort1Hz);
    p.cavity.kappa_c2 = hz_to_angular(kCavityPort2Hz);
    p.cavity.kappa_ci = hz_to_angular(kCavityIntrinsicHz);
    p.microwave = {hz_to_angular(kMicrowaveHz[cut]), hz_to_angular(kMicrowaveLossHz[cut])};
    for (std::size_t n = 0; n < kMechanicalHz.size(); ++n) {
        p.mechanical.push_back({hz_to_angular(kMechanicalHz[n]), hz_to_angular(kMechanicalLossHz[n])});
        p.g_ab.push_back(hz_to_angular(kMechanicalCouplingHz[n]));
    }
    p.g_ac = hz_to_angular(kCavityCouplingHz);
    p.c_offset = {1.0, 0.0};
    return p;
}

}  // namespace hybridspec::reference
