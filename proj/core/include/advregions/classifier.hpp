#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "advregions/data.hpp"
#include "advregions/image.hpp"

namespace advregions {

struct ConvBlockConfig {
  int filters = 16;
  int kernel = 3;  // odd; zero padding of kernel/2 on each side
  int stride = 1;
  bool pool = true;  // 2x2 max-pool after the ReLU

  bool operator==(const ConvBlockConfig&) const = default;
};

struct ModelConfig {
  std::vector<ConvBlockConfig> conv_blocks{{16, 3, 1, true}, {32, 3, 1, true}};
  // Hidden dense widths; the two-way output layer is always appended.
  std::vector<int> dense_widths{64};
  double learning_rate = 1e-3;
  int epochs = 5;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct InputShape {
  int channels = 1;
  int height = 28;
  int width = 28;

  bool operator==(const InputShape&) const = default;
};

struct Prediction {
  Label label = Label::source;
  std::array<double, 2> probabilities{0.5, 0.5};
};

struct TrainingLog {
  std::vector<double> epoch_loss;
  std::vector<std::string> warnings;
};

// Convolutional binary classifier with the two hooks the region analysis
// needs: the last conv layer's activations and gradients with respect to the
// input and to those activations.
//
// Layout: each conv block is conv -> ReLU -> optional 2x2 max-pool. The
// "final conv activations" are the post-ReLU output of the last conv layer,
// before its pool. Dense layers use ReLU except the final two-way layer whose
// outputs are the pre-softmax class scores.
//
// Parameter views are row-major: conv weights are [filters][in_channels][k][k],
// dense weights are [outputs][inputs]. Dense inputs after the last conv block
// are flattened channel-major ([c][y][x]).
//
// All const methods are safe to call concurrently.
class Model {
 public:
  // He-initialised parameters drawn from config.seed.
  Model(ModelConfig config, InputShape shape, std::array<std::string, 2> class_names);
  ~Model();
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;

  const ModelConfig& config() const noexcept;
  const InputShape& input_shape() const noexcept;
  const std::array<std::string, 2>& class_names() const noexcept;
  const TrainingLog& training_log() const noexcept;

  std::size_t conv_layer_count() const noexcept;
  // Includes the output layer (index dense_layer_count() - 1).
  std::size_t dense_layer_count() const noexcept;
  std::span<double> conv_weights(std::size_t i);
  std::span<double> conv_bias(std::size_t i);
  std::span<double> dense_weights(std::size_t i);
  std::span<double> dense_bias(std::size_t i);
  std::span<const double> conv_weights(std::size_t i) const;
  std::span<const double> conv_bias(std::size_t i) const;
  std::span<const double> dense_weights(std::size_t i) const;
  std::span<const double> dense_bias(std::size_t i) const;
  std::size_t parameter_count() const noexcept;

  std::array<double, 2> logits(const Image& image) const;
  Prediction predict(const Image& image) const;
  // Cross-entropy of the softmax output against `label`.
  double loss(const Image& image, Label label) const;

  // K x h x w, channel-major.
  Tensor3 final_conv_activations(const Image& image) const;
  // d loss(image, label) / d image. Throws NumericalError if non-finite.
  Tensor3 loss_gradient_wrt_input(const Image& image, Label label) const;
  // d score[class_index] / d final_conv_activations, score being pre-softmax.
  Tensor3 class_gradient_wrt_activations(const Image& image, int class_index) const;
  // Pre-softmax scores computed from a (possibly perturbed) activation stack.
  std::array<double, 2> logits_from_activations(const Tensor3& activations) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;

  void check_input(const Image& image) const;
  friend Model train(const LabeledImageSet&, const ModelConfig&);
  friend void save_model(const Model&, const std::filesystem::path&);
  friend Model load_model(const std::filesystem::path&);
};

// Mini-batch Adam on mean cross-entropy. Throws TrainingError on a non-finite
// loss; records a warning when the last epoch's loss is not below the first.
Model train(const LabeledImageSet& train_set, const ModelConfig& config);

// Fraction of correctly predicted samples. Throws ValidationError when empty.
double accuracy(const Model& model, const LabeledImageSet& set);

// Versioned self-describing checkpoint (architecture, class order, tensors).
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace advregions
