#include "retseg/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>

#include <json.hpp>

#include "retseg/fsutil.hpp"

namespace retseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

constexpr char kMagic[4] = {'R', 'S', 'E', 'G'};

template <class U>
void put_le(std::string& out, U value) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xff));
}

template <class U>
U get_le(const std::vector<unsigned char>& in, std::size_t pos) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(in[pos + i]) << (8 * i);
  return v;
}

json config_json(const UNetConfig& c) {
  return {{"encoder_channels", c.encoder_channels},
          {"bridge_channels", c.bridge_channels},
          {"decoder_channels", c.decoder_channels},
          {"in_channels", c.in_channels},
          {"width_scale", c.width_scale}};
}

UNetConfig config_from(const json& j) {
  UNetConfig c;
  c.encoder_channels = j.at("encoder_channels").get<std::vector<int>>();
  c.bridge_channels = j.at("bridge_channels").get<std::array<int, 2>>();
  c.decoder_channels = j.at("decoder_channels").get<std::vector<int>>();
  c.in_channels = j.at("in_channels").get<int>();
  c.width_scale = j.at("width_scale").get<int>();
  return c;
}

void append_floats(std::string& blob, std::span<const float> values) {
  for (float f : values) put_le(blob, std::bit_cast<std::uint32_t>(f));
}

[[noreturn]] void corrupt(const fs::path& path, const std::string& why) {
  fail(ErrorCode::CorruptCheckpoint, path.string() + ": " + why);
}

}  // namespace

void save_checkpoint(const UNet<float>& model, const AdamState<float>* adam, const fs::path& path) {
  json tensors = json::array();
  std::string blob;
  auto add = [&](const std::string& name, const Tensor& t) {
    const Shape4& s = t.shape();
    tensors.push_back({{"name", name}, {"shape", {s.n, s.c, s.h, s.w}}, {"offset", blob.size()}, {"count", t.size()}});
    append_floats(blob, t.data());
  };
  for (const auto& p : model.parameters()) add(p.name, p.value);

  json header{{"format", "retseg-checkpoint"},
              {"config", config_json(model.config())},
              {"seed", model.seed()}};
  if (adam) {
    const AdamHyper& h = adam->hyper();
    header["adam"] = {{"lr", h.lr}, {"beta1", h.beta1}, {"beta2", h.beta2}, {"eps", h.eps}, {"t", adam->t()}};
    for (const auto& [name, mom] : adam->moments()) {
      add("adam.m." + name, mom.m);
      add("adam.v." + name, mom.v);
    }
  }
  header["tensors"] = std::move(tensors);

  const std::string text = header.dump();
  std::string out(kMagic, 4);
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out += blob;

  if (path.has_parent_path()) make_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) fail(ErrorCode::WriteFailure, "cannot write " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) fail(ErrorCode::WriteFailure, "short write to " + path.string());
}

Checkpoint load_checkpoint(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::UnreadableFile, "cannot open " + path.string());
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};

  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, 4) != 0) corrupt(path, "bad magic");
  const auto version = get_le<std::uint32_t>(bytes, 4);
  if (version != kCheckpointVersion) corrupt(path, "unsupported version " + std::to_string(version));
  const auto header_len = get_le<std::uint64_t>(bytes, 8);
  if (header_len > bytes.size() - 16) corrupt(path, "header length exceeds file size");
  const std::size_t blob_start = 16 + header_len;

  json header;
  try {
    header = json::parse(bytes.begin() + 16, bytes.begin() + static_cast<std::ptrdiff_t>(blob_start));
  } catch (const json::exception& e) {
    corrupt(path, std::string("unparseable header: ") + e.what());
  }

  try {
    const UNetConfig cfg = config_from(header.at("config"));
    cfg.validate();
    const auto seed = header.at("seed").get<std::uint64_t>();

    std::map<std::string, Tensor> tensors;
    std::vector<std::string> order;
    std::size_t expected_end = 0;
    for (const auto& t : header.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      const auto dims = t.at("shape").get<std::array<int, 4>>();
      const auto offset = t.at("offset").get<std::size_t>();
      const auto count = t.at("count").get<std::size_t>();
      const Shape4 shape{dims[0], dims[1], dims[2], dims[3]};
      if (shape.count() != count) fail(ErrorCode::ShapeHeaderMismatch, name + ": shape does not match count");
      if (offset != expected_end) corrupt(path, name + ": blob offsets are not contiguous");
      if (blob_start + offset + 4 * count > bytes.size()) corrupt(path, name + ": blob runs past end of file");
      std::vector<float> data(count);
      for (std::size_t i = 0; i < count; ++i)
        data[i] = std::bit_cast<float>(get_le<std::uint32_t>(bytes, blob_start + offset + 4 * i));
      expected_end = offset + 4 * count;
      order.push_back(name);
      tensors.emplace(name, Tensor(shape, std::move(data)));
    }
    if (blob_start + expected_end != bytes.size()) corrupt(path, "trailing bytes after last tensor");

    ParameterList<float> params;
    for (const auto& ps : parameter_shapes(cfg)) {
      auto it = tensors.find(ps.name);
      if (it == tensors.end()) fail(ErrorCode::ShapeHeaderMismatch, "missing tensor " + ps.name);
      params.push_back({ps.name, std::move(it->second)});
    }
    Checkpoint ck{UNet<float>(cfg, seed, std::move(params)), std::nullopt};

    if (header.contains("adam")) {
      const auto& a = header.at("adam");
      AdamState<float> state(AdamHyper{a.at("lr").get<double>(), a.at("beta1").get<double>(),
                                       a.at("beta2").get<double>(), a.at("eps").get<double>()});
      std::map<std::string, AdamMoments<float>> moments;
      for (const auto& p : ck.model.parameters()) {
        auto m = tensors.find("adam.m." + p.name);
        auto v = tensors.find("adam.v." + p.name);
        if (m == tensors.end() || v == tensors.end()) continue;
        if (m->second.shape() != p.value.shape() || v->second.shape() != p.value.shape())
          fail(ErrorCode::ShapeHeaderMismatch, "adam moments for " + p.name + " have the wrong shape");
        moments[p.name] = {std::move(m->second), std::move(v->second)};
      }
      state.restore(a.at("t").get<std::int64_t>(), std::move(moments));
      ck.adam = std::move(state);
    }
    return ck;
  } catch (const json::exception& e) {
    corrupt(path, std::string("malformed header: ") + e.what());
  }
}

}  // namespace retseg
