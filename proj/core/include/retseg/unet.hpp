#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "retseg/tensor.hpp"

namespace retseg {

/// Channel layout of a Reti-UNet. Channel counts are the full-width values;
/// `width_scale` divides every one of them (desk-scale testing).
struct UNetConfig {
  std::vector<int> encoder_channels;
  std::array<int, 2> bridge_channels{};
  std::vector<int> decoder_channels;
  int in_channels = 1;
  int width_scale = 1;

  /// {64,128,256,512} / [512,1024] / {512,256,128,64}
  static UNetConfig reti_unet1(int width_scale = 1);
  /// {64,128,256,512,512} / [512,1024] / {512,512,256,128,64}
  static UNetConfig reti_unet2(int width_scale = 1);
  /// "reti-unet1" or "reti-unet2"
  static UNetConfig by_name(const std::string& name, int width_scale = 1);

  int depth() const noexcept { return static_cast<int>(encoder_channels.size()); }
  /// Throws ConfigInvalid.
  void validate() const;
  /// Channel lists after dividing by width_scale (width_scale of the result is 1).
  UNetConfig scaled() const;

  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

struct ParamShape {
  std::string name;
  Shape4 shape;
};

/// Every trainable tensor of the topology in build order, e.g.
/// enc0.conv1.w (64,1,3,3), enc0.conv1.b (64,1,1,1), ..., dec3.up.w, head.w.
std::vector<ParamShape> parameter_shapes(const UNetConfig& cfg);
std::size_t parameter_count(const UNetConfig& cfg);

template <class T>
class UNet {
 public:
  /// He-uniform weights (bound sqrt(6 / fan_in)), zero biases, drawn in build order from `seed`.
  UNet(UNetConfig cfg, std::uint64_t seed);
  /// Wraps existing tensors; names and shapes must match the config's shape table.
  UNet(UNetConfig cfg, std::uint64_t seed, ParameterList<T> params);

  const UNetConfig& config() const noexcept { return config_; }
  std::uint64_t seed() const noexcept { return seed_; }
  int depth() const noexcept { return config_.depth(); }

  ParameterList<T>& parameters() noexcept { return params_; }
  const ParameterList<T>& parameters() const noexcept { return params_; }
  Tensor4<T>& param(const std::string& name);
  const Tensor4<T>& param(const std::string& name) const;

  template <class U>
  UNet<U> cast() const {
    ParameterList<U> out;
    for (const auto& p : params_) out.push_back({p.name, p.value.template cast<U>()});
    return UNet<U>(config_, seed_, std::move(out));
  }

 private:
  UNetConfig config_;
  std::uint64_t seed_;
  ParameterList<T> params_;
};

/// Activations retained by unet_forward for the reverse pass.
template <class T>
struct UNetCache {
  struct ConvPair {
    Tensor4<T> input;
    Tensor4<T> act1;  // relu(conv1(input))
    Tensor4<T> act2;  // relu(conv2(act1))
  };
  struct Decoder {
    Tensor4<T> up_input;
    int up_channels = 0;  // channel split point of the concat
    ConvPair convs;       // convs.input is concat(up, skip)
  };
  std::vector<ConvPair> encoders;  // act2 is the skip
  std::vector<nn::PoolResult<T>> pools;
  ConvPair bridge;
  std::vector<Decoder> decoders;
  Tensor4<T> head_input;
  Tensor4<T> probs;
};

template <class T>
struct ForwardResult {
  Tensor4<T> probs;  // (n, 1, h, w), sigmoid output
  std::optional<UNetCache<T>> cache;
};

/// Input (n, in_channels, h, w) with h and w divisible by 2^depth.
template <class T>
ForwardResult<T> unet_forward(const UNet<T>& model, const Tensor4<T>& x, bool keep_cache);

/// Gradient of a scalar loss w.r.t. every parameter, given d loss / d probs.
/// Throws MissingCache when `forward` was run without keep_cache.
template <class T>
LayerGrads<T> unet_backward(const UNet<T>& model, const ForwardResult<T>& forward, const Tensor4<T>& dprobs);

}  // namespace retseg
