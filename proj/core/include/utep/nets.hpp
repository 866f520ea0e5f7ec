#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "utep/ndgrad/ops.hpp"
#include "utep/ndgrad/rng.hpp"
#include "utep/ndgrad/tape.hpp"

namespace utep {

using ndgrad::Array2;
using ndgrad::Parameter;
using ndgrad::RngStream;
using ndgrad::Tape;
using ndgrad::Var;

struct NetConfig {
  std::size_t input_dim = 2;
  std::size_t hidden_dim = 64;
  std::size_t feature_dim = 32;
  std::size_t disc_hidden = 32;
  std::size_t classes = 2;
  double dropout_rate = 0.5;
};

struct Linear {
  Parameter weight;  // in x out
  Parameter bias;    // 1 x out

  Linear() = default;
  Linear(const std::string& name, std::size_t in, std::size_t out, RngStream& rng);

  Var forward(Tape& t, Var x) { return ndgrad::add(ndgrad::matmul(x, t.parameter(weight)), t.parameter(bias)); }
  Var forward(Tape& t, Var x) const {
    return ndgrad::add(ndgrad::matmul(x, t.parameter(weight)), t.parameter(bias));
  }
};

/// Feature extractor G_f, classifier G_y and dropout-bearing domain
/// discriminator G_d. Non-const forwards bind parameters for training;
/// const forwards enter them as constants.
class ModelBundle {
 public:
  ModelBundle() = default;
  ModelBundle(const NetConfig& config, RngStream& init_rng);

  const NetConfig& config() const { return config_; }

  Var features(Tape& t, Var x);
  Var features(Tape& t, Var x) const;
  /// Class probabilities g(x) = softmax(G_y(f)).
  Var classify(Tape& t, Var features);
  Var classify(Tape& t, Var features) const;

  /// P(d = 1 | x) per row. `mask` is a rows x disc_hidden binary keep-mask;
  /// nullptr disables dropout. With `grl_lambda` set, the features pass
  /// through gradient reversal first.
  Var discriminate(Tape& t, Var features, const Array2* mask,
                   std::optional<double> grl_lambda = std::nullopt);
  Var discriminate(Tape& t, Var features, const Array2* mask,
                   std::optional<double> grl_lambda = std::nullopt) const;

  /// The discriminator split at its dropout layer: hidden = relu(fc1(f)),
  /// head = sigmoid(fc2(dropout(hidden))). discriminate() is head(hidden(f)).
  /// MC passes share one hidden node across masks.
  Var discriminator_hidden(Tape& t, Var features, std::optional<double> grl_lambda = std::nullopt);
  Var discriminator_hidden(Tape& t, Var features, std::optional<double> grl_lambda = std::nullopt) const;
  Var discriminator_head(Tape& t, Var hidden, const Array2* mask);
  Var discriminator_head(Tape& t, Var hidden, const Array2* mask) const;

  Array2 sample_dropout_mask(std::size_t rows, RngStream& rng) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::vector<Parameter*> discriminator_parameters();
  Parameter* find(const std::string& name);

  void zero_grad();

  Linear& classifier_layer() { return classifier_; }

 private:
  template <typename Self>
  static Var features_impl(Self& self, Tape& t, Var x);
  template <typename Self>
  static Var classify_impl(Self& self, Tape& t, Var features);
  template <typename Self>
  static Var hidden_impl(Self& self, Tape& t, Var features, std::optional<double> grl_lambda);
  template <typename Self>
  static Var head_impl(Self& self, Tape& t, Var hidden, const Array2* mask);

  NetConfig config_;
  Linear feature_fc1_;
  Linear feature_fc2_;
  Linear classifier_;
  Linear disc_fc1_;
  Linear disc_fc2_;
};

/// g(x) for a batch of raw inputs, dropout off.
Array2 forward_classifier(const ModelBundle& bundle, const Array2& x);
/// G_f(x) for a batch of raw inputs.
Array2 extract_features(const ModelBundle& bundle, const Array2& x);
/// Discriminator outputs on precomputed features; mask nullptr = dropout off.
Array2 forward_discriminator(const ModelBundle& bundle, const Array2& features,
                             const Array2* mask);

/// 2 / (1 + exp(-10 p)) - 1. Progress outside [0, 1] is clamped with a warning.
double grl_lambda(double progress);

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path);
/// Overwrites every parameter of `bundle` from the file; shapes must match.
void load_checkpoint(ModelBundle& bundle, const std::filesystem::path& path);
std::string checkpoint_json(const ModelBundle& bundle);

}  // namespace utep
