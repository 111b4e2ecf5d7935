#pragma once

#include <string>

#include "sforge/design_space.hpp"

namespace sforge {

struct ForceTrace {
  Vec samples;           // newtons
  double rate_hz = 80.0;  // nominal; 240 samples = 80 Hz x 3 s
};

// Two parallel load cells; right stays empty for single-cell recordings.
struct DualTrace {
  ForceTrace left, right;
};

enum class CellCombine { Mean, Min, Sum };

// Centered median with shrinking edge windows.  An edge window that would
// have even length is trimmed by one sample on its longer side, so every
// median is over an odd count: [1,2,3,4,5] with window 5 -> [2,2,3,4,4].
Vec median_filter(const Vec& x, int window = 5);

// Valid-mode moving average: output length len(x) - window + 1; each window
// is summed independently so results match a naive reference bit for bit.
Vec moving_average(const Vec& x, int window = 10);

// Peak of the 10-step moving average of the median-filtered signal.
double grip_force(const ForceTrace& trace);

// Per-cell pipelines combined afterwards (mean by default).
double grip_force_dual(const DualTrace& t, CellCombine mode = CellCombine::Mean);

double travel_distance(double cx, double cy, double ox, double oy, double meters_per_px);

// CSV header "t_s,left_n,right_n", or the single-cell "t_s,force_n" variant.
DualTrace trace_from_csv(const std::string& text);
std::string trace_to_csv(const DualTrace& t);

}  // namespace sforge
