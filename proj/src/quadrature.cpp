#include "tdipdft/quadrature.hpp"

namespace tdipdft {

DelayGains delay_gains_at(double theta)
{
    DelayGains g = gains_from_turns<double>(theta / (2.0 * num::pi));
    g.theta = theta;
    return g;
}

} // namespace tdipdft
