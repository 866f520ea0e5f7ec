#include "utep/nets.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace utep {

namespace ag = ndgrad;

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, RngStream& rng)
    : weight(name + ".weight", Array2(in, out)), bias(name + ".bias", Array2(1, out)) {
  // He-uniform for relu stacks.
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  for (double& w : weight.value.data()) w = rng.uniform(-bound, bound);
}

ModelBundle::ModelBundle(const NetConfig& config, RngStream& init_rng) : config_(config) {
  if (config.input_dim == 0 || config.hidden_dim == 0 || config.feature_dim == 0 ||
      config.disc_hidden == 0 || config.classes < 2) {
    throw std::invalid_argument("NetConfig: dimensions must be positive and classes >= 2");
  }
  if (!(config.dropout_rate >= 0.0 && config.dropout_rate < 1.0)) {
    throw std::invalid_argument("NetConfig: dropout_rate must be in [0, 1)");
  }
  feature_fc1_ = Linear("feature.fc1", config.input_dim, config.hidden_dim, init_rng);
  feature_fc2_ = Linear("feature.fc2", config.hidden_dim, config.feature_dim, init_rng);
  classifier_ = Linear("classifier.fc", config.feature_dim, config.classes, init_rng);
  disc_fc1_ = Linear("discriminator.fc1", config.feature_dim, config.disc_hidden, init_rng);
  disc_fc2_ = Linear("discriminator.fc2", config.disc_hidden, 1, init_rng);
}

template <typename Self>
Var ModelBundle::features_impl(Self& self, Tape& t, Var x) {
  if (x.cols() != self.config_.input_dim) {
    throw ag::ShapeError("features: input " + x.value().shape_string() + " vs input_dim " +
                         std::to_string(self.config_.input_dim));
  }
  Var h = ag::relu(self.feature_fc1_.forward(t, x));
  return ag::relu(self.feature_fc2_.forward(t, h));
}

template <typename Self>
Var ModelBundle::classify_impl(Self& self, Tape& t, Var features) {
  return ag::softmax(self.classifier_.forward(t, features));
}

template <typename Self>
Var ModelBundle::hidden_impl(Self& self, Tape& t, Var features, std::optional<double> grl_lambda) {
  Var f = grl_lambda ? ag::gradient_reverse(features, *grl_lambda) : features;
  return ag::relu(self.disc_fc1_.forward(t, f));
}

template <typename Self>
Var ModelBundle::head_impl(Self& self, Tape& t, Var hidden, const Array2* mask) {
  Var h = mask != nullptr ? ag::dropout(hidden, *mask, self.config_.dropout_rate) : hidden;
  return ag::sigmoid(self.disc_fc2_.forward(t, h));
}

Var ModelBundle::features(Tape& t, Var x) { return features_impl(*this, t, x); }
Var ModelBundle::features(Tape& t, Var x) const { return features_impl(*this, t, x); }
Var ModelBundle::classify(Tape& t, Var f) { return classify_impl(*this, t, f); }
Var ModelBundle::classify(Tape& t, Var f) const { return classify_impl(*this, t, f); }

Var ModelBundle::discriminate(Tape& t, Var f, const Array2* mask, std::optional<double> grl) {
  return head_impl(*this, t, hidden_impl(*this, t, f, grl), mask);
}
Var ModelBundle::discriminate(Tape& t, Var f, const Array2* mask, std::optional<double> grl) const {
  return head_impl(*this, t, hidden_impl(*this, t, f, grl), mask);
}
Var ModelBundle::discriminator_hidden(Tape& t, Var f, std::optional<double> grl) {
  return hidden_impl(*this, t, f, grl);
}
Var ModelBundle::discriminator_hidden(Tape& t, Var f, std::optional<double> grl) const {
  return hidden_impl(*this, t, f, grl);
}
Var ModelBundle::discriminator_head(Tape& t, Var h, const Array2* mask) { return head_impl(*this, t, h, mask); }
Var ModelBundle::discriminator_head(Tape& t, Var h, const Array2* mask) const {
  return head_impl(*this, t, h, mask);
}

Array2 ModelBundle::sample_dropout_mask(std::size_t rows, RngStream& rng) const {
  Array2 mask(rows, config_.disc_hidden);
  const double keep = 1.0 - config_.dropout_rate;
  for (double& m : mask.data()) m = rng.bernoulli(keep) ? 1.0 : 0.0;
  return mask;
}

std::vector<Parameter*> ModelBundle::parameters() {
  return {&feature_fc1_.weight, &feature_fc1_.bias, &feature_fc2_.weight, &feature_fc2_.bias,
          &classifier_.weight,  &classifier_.bias,  &disc_fc1_.weight,    &disc_fc1_.bias,
          &disc_fc2_.weight,    &disc_fc2_.bias};
}

std::vector<const Parameter*> ModelBundle::parameters() const {
  auto ps = const_cast<ModelBundle*>(this)->parameters();
  return {ps.begin(), ps.end()};
}

std::vector<Parameter*> ModelBundle::discriminator_parameters() {
  return {&disc_fc1_.weight, &disc_fc1_.bias, &disc_fc2_.weight, &disc_fc2_.bias};
}

Parameter* ModelBundle::find(const std::string& name) {
  for (Parameter* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

void ModelBundle::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

Array2 forward_classifier(const ModelBundle& bundle, const Array2& x) {
  Tape t;
  return bundle.classify(t, bundle.features(t, t.constant(x))).value();
}

Array2 extract_features(const ModelBundle& bundle, const Array2& x) {
  Tape t;
  return bundle.features(t, t.constant(x)).value();
}

Array2 forward_discriminator(const ModelBundle& bundle, const Array2& features, const Array2* mask) {
  Tape t;
  return bundle.discriminate(t, t.constant(features), mask).value();
}

double grl_lambda(double progress) {
  if (!(progress >= 0.0 && progress <= 1.0)) {
    spdlog::warn("grl_lambda: progress {} outside [0, 1], clamping", progress);
    progress = std::clamp(std::isnan(progress) ? 0.0 : progress, 0.0, 1.0);
  }
  return 2.0 / (1.0 + std::exp(-10.0 * progress)) - 1.0;
}

std::string checkpoint_json(const ModelBundle& bundle) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const Parameter* p : bundle.parameters()) {
    j[p->name] = {{"rows", p->value.rows()},
                  {"cols", p->value.cols()},
                  {"data", std::vector<double>(p->value.data().begin(), p->value.data().end())}};
  }
  return j.dump(1);
}

void save_checkpoint(const ModelBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << checkpoint_json(bundle) << '\n';
}

void load_checkpoint(ModelBundle& bundle, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  const nlohmann::json j = nlohmann::json::parse(in);
  for (Parameter* p : bundle.parameters()) {
    if (!j.contains(p->name)) throw std::runtime_error("checkpoint missing layer " + p->name);
    const auto& e = j.at(p->name);
    const auto rows = e.at("rows").get<std::size_t>();
    const auto cols = e.at("cols").get<std::size_t>();
    if (rows != p->value.rows() || cols != p->value.cols()) {
      throw ndgrad::ShapeError("checkpoint layer " + p->name + " has shape (" + std::to_string(rows) +
                               "x" + std::to_string(cols) + "), expected " +
                               p->value.shape_string());
    }
    p->value = Array2(rows, cols, e.at("data").get<std::vector<double>>());
    p->zero_grad();
  }
}

}  // namespace utep
