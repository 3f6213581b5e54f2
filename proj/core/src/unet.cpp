#include "retseg/unet.hpp"

#include <cmath>

#include "retseg/rng.hpp"

namespace retseg {
namespace {

std::string enc_name(int i, const char* leaf) { return "enc" + std::to_string(i) + "." + leaf; }
std::string dec_name(int i, const char* leaf) { return "dec" + std::to_string(i) + "." + leaf; }

void add_conv(std::vector<ParamShape>& out, const std::string& prefix, int out_c, int in_c, int k) {
  out.push_back({prefix + ".w", Shape4{out_c, in_c, k, k}});
  out.push_back({prefix + ".b", Shape4{out_c, 1, 1, 1}});
}

int fan_in(const ParamShape& p) {
  // up-conv weights are (in_c, out_c, 2, 2): each output pixel receives exactly one
  // stamp tap per input channel
  if (p.name.find(".up.") != std::string::npos) return p.shape.n;
  return p.shape.c * p.shape.h * p.shape.w;
}

template <class T>
struct Layers {
  const UNet<T>& model;

  const Tensor4<T>& w(const std::string& prefix) const { return model.param(prefix + ".w"); }
  std::span<const T> b(const std::string& prefix) const { return model.param(prefix + ".b").data(); }

  Tensor4<T> conv_relu(const Tensor4<T>& x, const std::string& prefix) const {
    return nn::relu(nn::conv2d(x, w(prefix), b(prefix)));
  }

  typename UNetCache<T>::ConvPair pair_forward(Tensor4<T> x, const std::string& stage) const {
    typename UNetCache<T>::ConvPair p;
    p.act1 = conv_relu(x, stage + ".conv1");
    p.act2 = conv_relu(p.act1, stage + ".conv2");
    p.input = std::move(x);
    return p;
  }

  // Returns d loss / d pair input; records weight gradients.
  Tensor4<T> pair_backward(const typename UNetCache<T>::ConvPair& p, const std::string& stage, const Tensor4<T>& dact2,
                           LayerGrads<T>& grads) const {
    auto g2 = nn::conv2d_backward(p.act1, w(stage + ".conv2"), nn::relu_backward(p.act2, dact2));
    grads[stage + ".conv2.w"] = std::move(g2.dweight);
    grads[stage + ".conv2.b"] = std::move(g2.dbias);
    auto g1 = nn::conv2d_backward(p.input, w(stage + ".conv1"), nn::relu_backward(p.act1, g2.dx));
    grads[stage + ".conv1.w"] = std::move(g1.dweight);
    grads[stage + ".conv1.b"] = std::move(g1.dbias);
    return std::move(g1.dx);
  }
};

template <class T>
void add_in_place(Tensor4<T>& dst, const Tensor4<T>& src) {
  require(dst.shape() == src.shape(), ErrorCode::ShapeMismatch, "gradient accumulation shape mismatch");
  auto d = dst.data();
  auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

}  // namespace

UNetConfig UNetConfig::reti_unet1(int width_scale) {
  return UNetConfig{{64, 128, 256, 512}, {512, 1024}, {512, 256, 128, 64}, 1, width_scale};
}

UNetConfig UNetConfig::reti_unet2(int width_scale) {
  return UNetConfig{{64, 128, 256, 512, 512}, {512, 1024}, {512, 512, 256, 128, 64}, 1, width_scale};
}

UNetConfig UNetConfig::by_name(const std::string& name, int width_scale) {
  if (name == "reti-unet1") return reti_unet1(width_scale);
  if (name == "reti-unet2") return reti_unet2(width_scale);
  fail(ErrorCode::ConfigInvalid, "unknown model '" + name + "' (expected reti-unet1 or reti-unet2)");
}

void UNetConfig::validate() const {
  require(!encoder_channels.empty(), ErrorCode::ConfigInvalid, "encoder_channels is empty");
  require(encoder_channels.size() == decoder_channels.size(), ErrorCode::ConfigInvalid,
          "encoder and decoder stage counts differ");
  require(in_channels >= 1, ErrorCode::ConfigInvalid, "in_channels must be >= 1");
  require(width_scale >= 1, ErrorCode::ConfigInvalid, "width_scale must be >= 1");
  auto check = [&](int c, const char* where) {
    require(c >= 1, ErrorCode::ConfigInvalid, std::string(where) + " channel count must be positive");
    require(c % width_scale == 0 && c / width_scale >= 1, ErrorCode::ConfigInvalid,
            std::string(where) + " channel count " + std::to_string(c) + " is not divisible by width_scale " +
                std::to_string(width_scale));
  };
  for (int c : encoder_channels) check(c, "encoder");
  for (int c : decoder_channels) check(c, "decoder");
  for (int c : bridge_channels) check(c, "bridge");
}

UNetConfig UNetConfig::scaled() const {
  validate();
  UNetConfig s = *this;
  for (int& c : s.encoder_channels) c /= width_scale;
  for (int& c : s.decoder_channels) c /= width_scale;
  for (int& c : s.bridge_channels) c /= width_scale;
  s.width_scale = 1;
  return s;
}

std::vector<ParamShape> parameter_shapes(const UNetConfig& cfg) {
  const UNetConfig s = cfg.scaled();
  const int depth = s.depth();
  std::vector<ParamShape> out;
  int prev = s.in_channels;
  for (int i = 0; i < depth; ++i) {
    add_conv(out, enc_name(i, "conv1"), s.encoder_channels[i], prev, 3);
    add_conv(out, enc_name(i, "conv2"), s.encoder_channels[i], s.encoder_channels[i], 3);
    prev = s.encoder_channels[i];
  }
  add_conv(out, "bridge.conv1", s.bridge_channels[0], prev, 3);
  add_conv(out, "bridge.conv2", s.bridge_channels[1], s.bridge_channels[0], 3);
  prev = s.bridge_channels[1];
  for (int i = 0; i < depth; ++i) {
    const int c = s.decoder_channels[i];
    const int skip = s.encoder_channels[depth - 1 - i];
    out.push_back({dec_name(i, "up.w"), Shape4{prev, c, 2, 2}});
    out.push_back({dec_name(i, "up.b"), Shape4{c, 1, 1, 1}});
    add_conv(out, dec_name(i, "conv1"), c, c + skip, 3);
    add_conv(out, dec_name(i, "conv2"), c, c, 3);
    prev = c;
  }
  add_conv(out, "head", 1, prev, 1);
  return out;
}

std::size_t parameter_count(const UNetConfig& cfg) {
  std::size_t total = 0;
  for (const auto& p : parameter_shapes(cfg)) total += p.shape.count();
  return total;
}

template <class T>
UNet<T>::UNet(UNetConfig cfg, std::uint64_t seed) : config_(std::move(cfg)), seed_(seed) {
  Rng rng(seed);
  for (const auto& ps : parameter_shapes(config_)) {
    Tensor4<T> t(ps.shape);
    if (ps.name.ends_with(".w")) {
      const double bound = std::sqrt(6.0 / fan_in(ps));
      for (T& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
    }
    params_.push_back({ps.name, std::move(t)});
  }
}

template <class T>
UNet<T>::UNet(UNetConfig cfg, std::uint64_t seed, ParameterList<T> params)
    : config_(std::move(cfg)), seed_(seed), params_(std::move(params)) {
  const auto shapes = parameter_shapes(config_);
  require(shapes.size() == params_.size(), ErrorCode::ShapeHeaderMismatch,
          "expected " + std::to_string(shapes.size()) + " parameter tensors, got " + std::to_string(params_.size()));
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    require(shapes[i].name == params_[i].name && shapes[i].shape == params_[i].value.shape(),
            ErrorCode::ShapeHeaderMismatch,
            "parameter " + params_[i].name + " " + to_string(params_[i].value.shape()) + " does not match " +
                shapes[i].name + " " + to_string(shapes[i].shape));
    require_finite(params_[i].value, "model parameter");
  }
}

template <class T>
Tensor4<T>& UNet<T>::param(const std::string& name) {
  for (auto& p : params_)
    if (p.name == name) return p.value;
  fail(ErrorCode::ShapeMismatch, "no parameter named " + name);
}

template <class T>
const Tensor4<T>& UNet<T>::param(const std::string& name) const {
  return const_cast<UNet&>(*this).param(name);
}

template <class T>
ForwardResult<T> unet_forward(const UNet<T>& model, const Tensor4<T>& x, bool keep_cache) {
  const int depth = model.depth();
  const int stride = 1 << depth;
  require(x.c() == model.config().in_channels, ErrorCode::ShapeMismatch,
          "input has " + std::to_string(x.c()) + " channels, model expects " +
              std::to_string(model.config().in_channels));
  require(x.h() > 0 && x.w() > 0 && x.h() % stride == 0 && x.w() % stride == 0, ErrorCode::IndivisibleSpatialDim,
          "input " + std::to_string(x.h()) + "x" + std::to_string(x.w()) + " not divisible by " +
              std::to_string(stride));

  const Layers<T> L{model};
  UNetCache<T> cache;
  Tensor4<T> h = x;
  for (int i = 0; i < depth; ++i) {
    auto pair = L.pair_forward(std::move(h), "enc" + std::to_string(i));
    auto pooled = nn::maxpool2(pair.act2);
    h = pooled.y;
    cache.encoders.push_back(std::move(pair));
    cache.pools.push_back(std::move(pooled));
  }
  cache.bridge = L.pair_forward(std::move(h), "bridge");
  h = cache.bridge.act2;
  for (int i = 0; i < depth; ++i) {
    const std::string stage = "dec" + std::to_string(i);
    typename UNetCache<T>::Decoder d;
    Tensor4<T> up = nn::upconv2(h, L.w(stage + ".up"), L.b(stage + ".up"));
    d.up_channels = up.c();
    d.up_input = std::move(h);
    d.convs = L.pair_forward(nn::concat_channels(up, cache.encoders[depth - 1 - i].act2), stage);
    h = d.convs.act2;
    cache.decoders.push_back(std::move(d));
  }
  Tensor4<T> probs = nn::sigmoid(nn::conv2d(h, L.w("head"), L.b("head")));
  cache.head_input = std::move(h);

  ForwardResult<T> result{probs, std::nullopt};
  if (keep_cache) {
    cache.probs = std::move(probs);
    result.cache = std::move(cache);
  }
  return result;
}

template <class T>
LayerGrads<T> unet_backward(const UNet<T>& model, const ForwardResult<T>& forward, const Tensor4<T>& dprobs) {
  require(forward.cache.has_value(), ErrorCode::MissingCache, "unet_backward needs a forward pass with keep_cache");
  const auto& cache = *forward.cache;
  require(dprobs.shape() == cache.probs.shape(), ErrorCode::ShapeMismatch, "dprobs shape mismatch");
  const int depth = model.depth();
  const Layers<T> L{model};
  LayerGrads<T> grads;

  auto head = nn::conv2d_backward(cache.head_input, L.w("head"), nn::sigmoid_backward(cache.probs, dprobs));
  grads["head.w"] = std::move(head.dweight);
  grads["head.b"] = std::move(head.dbias);
  Tensor4<T> dh = std::move(head.dx);

  std::vector<Tensor4<T>> dskip(depth);
  for (int i = depth - 1; i >= 0; --i) {
    const std::string stage = "dec" + std::to_string(i);
    const auto& d = cache.decoders[i];
    Tensor4<T> dcat = L.pair_backward(d.convs, stage, dh, grads);
    auto [dup, ds] = nn::split_channels(dcat, d.up_channels);
    dskip[depth - 1 - i] = std::move(ds);
    auto up = nn::upconv2_backward(d.up_input, L.w(stage + ".up"), dup);
    grads[stage + ".up.w"] = std::move(up.dweight);
    grads[stage + ".up.b"] = std::move(up.dbias);
    dh = std::move(up.dx);
  }

  dh = L.pair_backward(cache.bridge, "bridge", dh, grads);
  for (int i = depth - 1; i >= 0; --i) {
    const auto& e = cache.encoders[i];
    Tensor4<T> dact2 = nn::maxpool2_backward(dh, cache.pools[i].argmax, e.act2.shape());
    add_in_place(dact2, dskip[i]);
    dh = L.pair_backward(e, "enc" + std::to_string(i), dact2, grads);
  }
  return grads;
}

template class UNet<float>;
template class UNet<double>;
template ForwardResult<float> unet_forward<float>(const UNet<float>&, const Tensor4<float>&, bool);
template ForwardResult<double> unet_forward<double>(const UNet<double>&, const Tensor4<double>&, bool);
template LayerGrads<float> unet_backward<float>(const UNet<float>&, const ForwardResult<float>&,
                                                const Tensor4<float>&);
template LayerGrads<double> unet_backward<double>(const UNet<double>&, const ForwardResult<double>&,
                                                  const Tensor4<double>&);

}  // namespace retseg
