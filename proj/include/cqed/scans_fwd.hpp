// scans_fwd.hpp — scan coordinate type shared by the spectrum producers.

#pragma once

namespace cqed {

struct ScanPoint {
    double delta_a = 0.0;  // rad/us
    double delta_c = 0.0;  // rad/us
};

}  // namespace cqed
