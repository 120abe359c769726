#include "attnfuse/mlp.hpp"

#include <algorithm>
#include <cmath>

#include "attnfuse/error.hpp"

namespace attnfuse {
namespace {

constexpr std::size_t I = kMlpInputs;
constexpr std::size_t H1 = kMlpHidden1;
constexpr std::size_t H2 = kMlpHidden2;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct Activations {
  std::array<double, H1> z1{}, h1{}, m1{};
  std::array<double, H2> z2{}, h2{}, m2{};
  double z3 = 0.0;
};

// m1/m2 hold the inverted-dropout multipliers (all 1 when dropout is off).
void forward(const MlpFusionModel& m, std::span<const double> s, Activations& a) {
  for (std::size_t j = 0; j < H1; ++j) {
    double z = m.b1[j];
    for (std::size_t i = 0; i < I; ++i) z += m.w1[j * I + i] * s[i];
    a.z1[j] = z;
    a.h1[j] = std::max(z, 0.0) * a.m1[j];
  }
  for (std::size_t k = 0; k < H2; ++k) {
    double z = m.b2[k];
    for (std::size_t j = 0; j < H1; ++j) z += m.w2[k * H1 + j] * a.h1[j];
    a.z2[k] = z;
    a.h2[k] = std::max(z, 0.0) * a.m2[k];
  }
  double z = m.b3;
  for (std::size_t k = 0; k < H2; ++k) z += m.w3[k] * a.h2[k];
  a.z3 = z;
}

void no_dropout(Activations& a) {
  a.m1.fill(1.0);
  a.m2.fill(1.0);
}

void sample_dropout(Activations& a, double rate, std::mt19937_64& rng) {
  std::bernoulli_distribution keep(1.0 - rate);
  const double scale = 1.0 / (1.0 - rate);
  for (auto& v : a.m1) v = keep(rng) ? scale : 0.0;
  for (auto& v : a.m2) v = keep(rng) ? scale : 0.0;
}

// Accumulates d(loss_i)/d(params) scaled by `weight` into g (layout of parameters()).
void backward(const MlpFusionModel& m, std::span<const double> s, const Activations& a, double target, double weight,
              std::vector<double>& g) {
  double* gw1 = g.data();
  double* gb1 = gw1 + H1 * I;
  double* gw2 = gb1 + H1;
  double* gb2 = gw2 + H2 * H1;
  double* gw3 = gb2 + H2;
  double* gb3 = gw3 + H2;

  const double dz3 = (sigmoid(a.z3) - target) * weight;
  *gb3 += dz3;
  std::array<double, H2> dz2{};
  for (std::size_t k = 0; k < H2; ++k) {
    gw3[k] += dz3 * a.h2[k];
    dz2[k] = a.z2[k] > 0.0 ? dz3 * m.w3[k] * a.m2[k] : 0.0;
  }
  std::array<double, H1> dh1{};
  for (std::size_t k = 0; k < H2; ++k) {
    gb2[k] += dz2[k];
    for (std::size_t j = 0; j < H1; ++j) {
      gw2[k * H1 + j] += dz2[k] * a.h1[j];
      dh1[j] += dz2[k] * m.w2[k * H1 + j];
    }
  }
  for (std::size_t j = 0; j < H1; ++j) {
    const double dz1 = a.z1[j] > 0.0 ? dh1[j] * a.m1[j] : 0.0;
    gb1[j] += dz1;
    for (std::size_t i = 0; i < I; ++i) gw1[j * I + i] += dz1 * s[i];
  }
}

void check_scores(const Matrix& S, std::span<const Label> y) {
  if (S.cols() != I) throw Error(ErrorKind::WrongArity, "fusion network expects " + std::to_string(I) + " scores per sample");
  if (S.rows() != y.size()) throw Error(ErrorKind::DimensionMismatch, "score and label counts differ");
}

}  // namespace

std::vector<double> MlpFusionModel::parameters() const {
  std::vector<double> p;
  p.reserve(kParameterCount);
  p.insert(p.end(), w1.begin(), w1.end());
  p.insert(p.end(), b1.begin(), b1.end());
  p.insert(p.end(), w2.begin(), w2.end());
  p.insert(p.end(), b2.begin(), b2.end());
  p.insert(p.end(), w3.begin(), w3.end());
  p.push_back(b3);
  return p;
}

void MlpFusionModel::set_parameters(std::span<const double> p) {
  if (p.size() != kParameterCount) throw Error(ErrorKind::WrongArity, "fusion network has " + std::to_string(kParameterCount) + " parameters");
  auto it = p.begin();
  auto take = [&](auto& arr) {
    std::copy(it, it + static_cast<long>(arr.size()), arr.begin());
    it += static_cast<long>(arr.size());
  };
  take(w1);
  take(b1);
  take(w2);
  take(b2);
  take(w3);
  b3 = *it;
}

MlpFusionModel init_mlp(std::uint64_t seed, double dropout_rate) {
  MlpFusionModel m;
  m.seed = seed;
  m.dropout_rate = dropout_rate;
  std::mt19937_64 rng(seed);
  auto fill = [&](auto& arr, std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (auto& v : arr) v = u(rng);
  };
  fill(m.w1, I, H1);
  fill(m.w2, H1, H2);
  fill(m.w3, H2, 1);
  return m;
}

double mlp_forward(const MlpFusionModel& model, std::span<const double> scores, bool train_mode, std::mt19937_64* rng) {
  if (scores.size() != I) throw Error(ErrorKind::WrongArity, "fusion network expects " + std::to_string(I) + " scores, got " + std::to_string(scores.size()));
  Activations a;
  if (train_mode && model.dropout_rate > 0.0) {
    std::mt19937_64 local(model.seed);
    sample_dropout(a, model.dropout_rate, rng ? *rng : local);
  } else {
    no_dropout(a);
  }
  forward(model, scores, a);
  return sigmoid(a.z3);
}

double mlp_loss(const MlpFusionModel& model, const Matrix& S, std::span<const Label> y) {
  check_scores(S, y);
  Activations a;
  no_dropout(a);
  double loss = 0.0;
  for (std::size_t r = 0; r < S.rows(); ++r) {
    forward(model, S.row(r), a);
    const double t = y[r] == Label::High ? 1.0 : 0.0;
    loss += softplus(a.z3) - t * a.z3;
  }
  return loss / static_cast<double>(S.rows());
}

std::vector<double> mlp_gradient(const MlpFusionModel& model, const Matrix& S, std::span<const Label> y) {
  check_scores(S, y);
  std::vector<double> g(MlpFusionModel::kParameterCount, 0.0);
  Activations a;
  no_dropout(a);
  const double weight = 1.0 / static_cast<double>(S.rows());
  for (std::size_t r = 0; r < S.rows(); ++r) {
    forward(model, S.row(r), a);
    backward(model, S.row(r), a, y[r] == Label::High ? 1.0 : 0.0, weight, g);
  }
  return g;
}

MlpFusionModel train_mlp(const Matrix& S, std::span<const Label> y, const MlpHyper& hyper) {
  check_scores(S, y);
  if (std::none_of(y.begin(), y.end(), [](Label l) { return l == Label::High; }) ||
      std::none_of(y.begin(), y.end(), [](Label l) { return l == Label::Low; })) {
    throw Error(ErrorKind::SingleClassInput, "fusion network training needs both classes");
  }
  if (!(hyper.dropout_rate >= 0.0 && hyper.dropout_rate < 1.0)) throw Error(ErrorKind::InvalidConfig, "dropout rate must lie in [0,1)");
  MlpFusionModel model = init_mlp(hyper.seed, hyper.dropout_rate);
  std::mt19937_64 rng(hyper.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<double> g(MlpFusionModel::kParameterCount);
  const double weight = 1.0 / static_cast<double>(S.rows());
  Activations a;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    std::fill(g.begin(), g.end(), 0.0);
    double loss = 0.0;
    for (std::size_t r = 0; r < S.rows(); ++r) {
      if (hyper.dropout_rate > 0.0) {
        sample_dropout(a, hyper.dropout_rate, rng);
      } else {
        no_dropout(a);
      }
      forward(model, S.row(r), a);
      const double t = y[r] == Label::High ? 1.0 : 0.0;
      loss += softplus(a.z3) - t * a.z3;
      backward(model, S.row(r), a, t, weight, g);
    }
    if (!std::isfinite(loss)) {
      throw Error(ErrorKind::DivergedLoss, "fusion network loss became non-finite at epoch " + std::to_string(epoch));
    }
    auto p = model.parameters();
    for (std::size_t k = 0; k < p.size(); ++k) p[k] -= hyper.learning_rate * g[k];
    model.set_parameters(p);
  }
  return model;
}

}  // namespace attnfuse
