#include "sforge/signal.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sforge/error.hpp"
#include "sforge/text.hpp"

namespace sforge {

Vec median_filter(const Vec& x, int window) {
  const int n = static_cast<int>(x.size());
  if (window % 2 == 0) throw ConfigError("median filter window must be odd");
  if (window < 1 || window > n) throw ConfigError("median filter window exceeds signal");
  const int r = window / 2;
  Vec out(n);
  Vec buf;
  buf.reserve(window);
  for (int i = 0; i < n; ++i) {
    int lo = std::max(0, i - r);
    int hi = std::min(n - 1, i + r);
    if ((hi - lo + 1) % 2 == 0) {
      if (i - lo > hi - i)
        ++lo;
      else
        --hi;
    }
    buf.assign(x.begin() + lo, x.begin() + hi + 1);
    std::nth_element(buf.begin(), buf.begin() + (hi - lo) / 2, buf.end());
    out[i] = buf[(hi - lo) / 2];
  }
  return out;
}

// Compensated (Neumaier) sum: plain accumulation of ten 0.3-newton samples
// loses the last bit and a constant plateau would no longer average back to
// itself.
static double window_mean(const double* x, int window) {
  double s = 0.0, c = 0.0;
  for (int j = 0; j < window; ++j) {
    const double t = s + x[j];
    if (std::abs(s) >= std::abs(x[j]))
      c += (s - t) + x[j];
    else
      c += (x[j] - t) + s;
    s = t;
  }
  return (s + c) / window;
}

Vec moving_average(const Vec& x, int window) {
  const int n = static_cast<int>(x.size());
  if (window < 1) throw ConfigError("moving average window must be positive");
  if (window > n) throw ConfigError("moving average window exceeds signal");
  Vec out(n - window + 1);
  for (int i = 0; i + window <= n; ++i) out[i] = window_mean(x.data() + i, window);
  return out;
}

double grip_force(const ForceTrace& trace) {
  if (trace.samples.size() < 10) throw ConfigError("trace too short for grip force");
  const Vec ma = moving_average(median_filter(trace.samples, 5), 10);
  return *std::max_element(ma.begin(), ma.end());
}

double grip_force_dual(const DualTrace& t, CellCombine mode) {
  const double l = grip_force(t.left);
  if (t.right.samples.empty()) return l;
  const double r = grip_force(t.right);
  switch (mode) {
    case CellCombine::Mean: return 0.5 * (l + r);
    case CellCombine::Min: return std::min(l, r);
    case CellCombine::Sum: return l + r;
  }
  return 0.5 * (l + r);
}

double travel_distance(double cx, double cy, double ox, double oy, double meters_per_px) {
  if (meters_per_px <= 0.0) throw ConfigError("meters_per_px must be positive");
  return std::hypot(cx - ox, cy - oy) * meters_per_px;
}

DualTrace trace_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw CorruptJsonError("empty trace file");
  // Tolerate a UTF-8 BOM and trailing CR.
  if (line.size() >= 3 && line.compare(0, 3, "\xef\xbb\xbf") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  bool dual;
  if (line == "t_s,left_n,right_n")
    dual = true;
  else if (line == "t_s,force_n")
    dual = false;
  else
    throw CorruptJsonError("unrecognized trace header: " + line);

  DualTrace t;
  Vec times;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    Vec vals;
    while (std::getline(row, cell, ',')) vals.push_back(parse_double(cell));
    if (vals.size() != (dual ? 3u : 2u))
      throw CorruptJsonError("trace row has wrong column count: " + line);
    times.push_back(vals[0]);
    t.left.samples.push_back(vals[1]);
    if (dual) t.right.samples.push_back(vals[2]);
  }
  if (times.size() >= 2) {
    const double dt = times[1] - times[0];
    if (dt > 0.0) {
      t.left.rate_hz = 1.0 / dt;
      t.right.rate_hz = t.left.rate_hz;
    }
  }
  return t;
}

std::string trace_to_csv(const DualTrace& t) {
  const bool dual = !t.right.samples.empty();
  if (dual && t.right.samples.size() != t.left.samples.size())
    throw ConfigError("left/right traces differ in length");
  std::string out = dual ? "t_s,left_n,right_n\n" : "t_s,force_n\n";
  const double dt = t.left.rate_hz > 0.0 ? 1.0 / t.left.rate_hz : 0.0;
  for (size_t i = 0; i < t.left.samples.size(); ++i) {
    append_fmt17(out, i * dt);
    out += ',';
    append_fmt17(out, t.left.samples[i]);
    if (dual) {
      out += ',';
      append_fmt17(out, t.right.samples[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace sforge
