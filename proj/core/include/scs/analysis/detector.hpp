#pragma once

#include <span>
#include <string>
#include <vector>

namespace scs::analysis {

enum class DetectorMode { conv, scs };

std::string to_string(DetectorMode m);
DetectorMode parse_detector_mode(const std::string& s);

inline constexpr double kDetectorQ = 1e-6;
inline constexpr double kDetectorP = 2.0;

/// Valid (unpadded, stride 1) correlation of `kernel` over `signal`:
/// signal.size() - kernel.size() + 1 responses. Runs the library's conv2d or
/// scs2d on a 1-row image, scs with fixed q = 1e-6 and p = 2.
std::vector<double> detector_response_1d(std::span<const double> kernel, std::span<const double> signal,
                                         DetectorMode mode);

}  // namespace scs::analysis
