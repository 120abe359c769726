#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "attnfuse/category.hpp"
#include "attnfuse/matrix.hpp"
#include "attnfuse/window.hpp"

namespace attnfuse {

inline constexpr std::size_t kMlpInputs = kNumCategories;
inline constexpr std::size_t kMlpHidden1 = 16;
inline constexpr std::size_t kMlpHidden2 = 8;

// 7 -> 16 (ReLU) -> 8 (ReLU) -> 1 (sigmoid) score fusion network.
// Weight matrices are row-major [out][in].
struct MlpFusionModel {
  std::array<double, kMlpHidden1 * kMlpInputs> w1{};
  std::array<double, kMlpHidden1> b1{};
  std::array<double, kMlpHidden2 * kMlpHidden1> w2{};
  std::array<double, kMlpHidden2> b2{};
  std::array<double, kMlpHidden2> w3{};
  double b3 = 0.0;
  double dropout_rate = 0.5;
  std::uint64_t seed = 0;

  static constexpr std::size_t kParameterCount =
      kMlpHidden1 * kMlpInputs + kMlpHidden1 + kMlpHidden2 * kMlpHidden1 + kMlpHidden2 + kMlpHidden2 + 1;

  std::vector<double> parameters() const;
  void set_parameters(std::span<const double> p);

  friend bool operator==(const MlpFusionModel&, const MlpFusionModel&) = default;
};

struct MlpHyper {
  double learning_rate = 0.05;
  int epochs = 500;
  std::uint64_t seed = 0;
  double dropout_rate = 0.5;
};

// Glorot-uniform weights, zero biases.
MlpFusionModel init_mlp(std::uint64_t seed, double dropout_rate = 0.5);

// Output in (0,1). In train mode inverted dropout is applied to both hidden
// layers, drawing from rng (or from a generator seeded with model.seed).
double mlp_forward(const MlpFusionModel& model, std::span<const double> scores, bool train_mode = false,
                   std::mt19937_64* rng = nullptr);

// Mean binary cross-entropy over the rows of S (n x 7), dropout disabled.
double mlp_loss(const MlpFusionModel& model, const Matrix& S, std::span<const Label> y);

// Gradient of mlp_loss with respect to parameters(), dropout disabled.
std::vector<double> mlp_gradient(const MlpFusionModel& model, const Matrix& S, std::span<const Label> y);

// Full-batch gradient descent on the cross-entropy. Throws SingleClassInput
// and DivergedLoss.
MlpFusionModel train_mlp(const Matrix& S, std::span<const Label> y, const MlpHyper& hyper);

}  // namespace attnfuse
