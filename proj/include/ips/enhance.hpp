#pragma once

#include "ips/sensorio.hpp"

namespace ips::enhance {

/// Mean adaptive threshold: a pixel becomes 255 when its intensity exceeds
/// the mean of its block x block neighborhood (border replicated) minus
/// `offset`, and 0 otherwise. block must be odd and within the frame.
sensorio::Frame adaptive_threshold(const sensorio::Frame& frame, int block = 11,
                                   double offset = 2.0);

}  // namespace ips::enhance
