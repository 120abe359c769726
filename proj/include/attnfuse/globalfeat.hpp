#pragma once

#include <array>
#include <span>
#include <vector>

#include "attnfuse/category.hpp"
#include "attnfuse/matrix.hpp"
#include "attnfuse/window.hpp"

namespace attnfuse {

inline constexpr std::size_t kGlobalFeatures = 28;

// Forward differences with a 1 s step.
//   v   = diff(x)                         length n-1
//   a   = diff(v)                         length n-2
//   a_t = diff(|v|)                       length n-2
//   a_c = sqrt(max(a^2 - a_t^2, 0))       length n-2
//   j   = diff(a)                         length n-3
struct KinematicDerivatives {
  std::vector<double> x, v, a, a_t, a_c, j;
};

// Throws TooShort for fewer than 4 samples.
KinematicDerivatives kinematics(std::span<const double> x);

using GlobalFeatureVector = std::array<double, kGlobalFeatures>;

// The 28 statistical descriptors of one channel; element k-1 holds g^k.
//
//  g1  sum of v over v>0            g2  sum of v over v<0
//  g3..g5  index/(n-1) of the 1st..3rd largest local maximum of x (0 if absent)
//  g6  mean(v)/max|v|               g7  mean(v)/max(v)
//  g8  rms(v)/max|v|                g9  rms(a_c)/max|a|
//  g10 rms(a_t)/max|a|              g11 rms(a)/max|a|
//  g12 mean|a_c|/max|a|             g13 std(v)       g14 std(a)
//  g15 mean|j|   g16 mean(j)   g17 max|j|   g18 max(j)   g19 rms(j)
//  g20 argmax|j| / len(j)           g21 argmax(j) / len(j)
//  g22 sign changes of v, zeros skipped
//  g23 sum|v| over v>0 / sum|v| over v<0
//  g24 count(v>0) / count(v<0)
//  g25 max(x)-min(x)                g26 mean(v)/(max(x)-min(x))
//  g27 number of local maxima of x  g28 mean|a|
//
// A local maximum is strictly above both neighbours; a plateau counts once at
// its first index. Any ratio with a zero denominator is 0. Moments use the
// population convention.
GlobalFeatureVector global_features(std::span<const double> x);

// Row n of the result is global_features(local.row(n)).
Matrix global_vector(const Matrix& local);

// Flattened local (N*W_l) or global (N*28) vectors of the given categories,
// concatenated in category order.
std::vector<double> window_features(const WindowSample& w, const std::vector<Category>& cats, bool global);

}  // namespace attnfuse
