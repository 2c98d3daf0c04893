#include "ipop/energy_model.hpp"

#include <cmath>
#include <string>

#include "ipop/errors.hpp"

namespace ipop::energy {

void HarvestOperatingPoint::validate() const {
    if (!(v_in >= 0.0) || !std::isfinite(v_in)) {
        throw DomainError("v_in must be non-negative");
    }
    if (!(c_min > 0.0)) {
        throw DomainError("c_min must be positive: the plate voltage diverges as C_min -> 0");
    }
    if (!(c_max >= c_min)) {
        throw DomainError("c_max must be >= c_min");
    }
    if (!(frequency > 0.0)) {
        throw DomainError("frequency must be positive");
    }
    if (!(device_volume > 0.0)) {
        throw DomainError("device_volume must be positive");
    }
}

double cycle_energy(const HarvestOperatingPoint& op) {
    op.validate();
    return 0.5 * op.v_in * op.v_in * (op.c_max - op.c_min) * (op.c_max / op.c_min);
}

double harvested_power(const HarvestOperatingPoint& op) {
    return 2.0 * op.frequency * cycle_energy(op);
}

double power_density(const HarvestOperatingPoint& op) {
    return harvested_power(op) / op.device_volume;
}

double drie_power_density_projection(double v_in, double frequency,
                                     const device::BacksideDrieModel& drie, double depth,
                                     double device_volume) {
    const HarvestOperatingPoint op{v_in, drie.c_max, device::cmin_vs_drie_depth(drie, depth),
                                   frequency, device_volume};
    return power_density(op);
}

}  // namespace ipop::energy
