#include "eyeedge/nn/container.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>

#include "eyeedge/common/bytes.hpp"

namespace eyeedge::nn {

namespace {

constexpr std::uint8_t kFlagMasks = 0x1;
constexpr std::uint8_t kFlagSparse = 0x2;
constexpr std::uint8_t kStorageDense = 0;
constexpr std::uint8_t kStorageSparse = 1;
constexpr std::uint8_t kMaskNone = 0;
constexpr std::uint8_t kMaskBitmap = 1;
constexpr std::uint8_t kMaskSameAsStorage = 2;

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

void write_value(ByteWriter& w, const Tensor& t, std::size_t i) {
  if (t.dtype() == DType::f32) {
    w.f32(t.values()[i]);
  } else {
    w.u16(t.half_bits()[i]);
  }
}

bool stored_sparse(Encoding enc, const Layer& layer, std::size_t pi) {
  return enc == Encoding::sparse && !layer.masks.empty() && !layer.masks[pi].empty();
}

[[noreturn]] void fail(const std::string& what) { throw ContainerError("model container: " + what); }

}  // namespace

std::vector<std::uint8_t> pack_bitmap(const Mask& mask) {
  std::vector<std::uint8_t> bits((mask.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) bits[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  }
  return bits;
}

Mask unpack_bitmap(std::span<const std::uint8_t> bits, std::size_t n) {
  Mask m(n);
  for (std::size_t i = 0; i < n; ++i) m[i] = (bits[i / 8] >> (i % 8)) & 1u;
  return m;
}

std::vector<std::uint8_t> encode_container(const ModelGraph& graph, Encoding encoding) {
  ByteWriter w(Endian::little);
  for (char c : std::string_view("GZLM")) w.u8(static_cast<std::uint8_t>(c));
  w.u16(kContainerVersion);
  w.u8(static_cast<std::uint8_t>(graph.dtype));
  std::uint8_t flags = 0;
  if (graph.has_masks()) flags |= kFlagMasks;
  if (encoding == Encoding::sparse) flags |= kFlagSparse;
  w.u8(flags);
  w.str16(graph.name);
  w.u8(static_cast<std::uint8_t>(graph.input_shape.size()));
  for (std::size_t d : graph.input_shape) w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(graph.window));
  w.u32(static_cast<std::uint32_t>(graph.layers.size()));

  for (const Layer& layer : graph.layers) {
    const LayerSpec& s = layer.spec;
    w.u8(static_cast<std::uint8_t>(s.kind));
    w.u8(static_cast<std::uint8_t>(s.padding));
    w.u8(static_cast<std::uint8_t>(s.activation));
    w.u8(0);
    w.u32(static_cast<std::uint32_t>(s.kernel_h));
    w.u32(static_cast<std::uint32_t>(s.kernel_w));
    w.u32(static_cast<std::uint32_t>(s.stride));
    w.u32(static_cast<std::uint32_t>(s.units));
    w.u8(static_cast<std::uint8_t>(layer.params.size()));
    for (std::size_t pi = 0; pi < layer.params.size(); ++pi) {
      const Tensor& t = layer.params[pi];
      if (t.dtype() != graph.dtype) fail("tensor dtype differs from graph dtype");
      w.u8(static_cast<std::uint8_t>(t.rank()));
      for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
      if (stored_sparse(encoding, layer, pi)) {
        const Mask& m = layer.masks[pi];
        w.u8(kStorageSparse);
        w.bytes(pack_bitmap(m));
        const auto nnz = static_cast<std::uint32_t>(std::count(m.begin(), m.end(), std::uint8_t{1}));
        w.u32(nnz);
        for (std::size_t i = 0; i < t.size(); ++i) {
          if (m[i]) {
            write_value(w, t, i);
          } else if (t.at(i) != 0.0f) {
            fail("pruned entry with non-zero value cannot be stored sparsely");
          }
        }
      } else {
        w.u8(kStorageDense);
        for (std::size_t i = 0; i < t.size(); ++i) write_value(w, t, i);
      }
    }
  }

  if (flags & kFlagMasks) {
    for (const Layer& layer : graph.layers) {
      for (std::size_t pi = 0; pi < layer.params.size(); ++pi) {
        if (layer.masks.empty() || layer.masks[pi].empty()) {
          w.u8(kMaskNone);
        } else if (stored_sparse(encoding, layer, pi)) {
          w.u8(kMaskSameAsStorage);
        } else {
          w.u8(kMaskBitmap);
          w.bytes(pack_bitmap(layer.masks[pi]));
        }
      }
    }
  }
  w.u32(crc32_of(w.buffer()));
  return w.take();
}

std::uint32_t container_checksum(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) fail("too short for a checksum");
  ByteReader r(bytes.subspan(bytes.size() - 4), Endian::little);
  return r.u32();
}

bool verify_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) return false;
  return crc32_of(bytes.first(bytes.size() - 4)) == container_checksum(bytes);
}

ModelGraph decode_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) fail("truncated");
  if (!std::equal(bytes.begin(), bytes.begin() + 4, "GZLM")) fail("bad magic");
  if (!verify_container(bytes)) throw IntegrityError("model container: checksum mismatch");

  try {
    ByteReader r(bytes.first(bytes.size() - 4), Endian::little);
    r.bytes(4);
    const std::uint16_t version = r.u16();
    if (version != kContainerVersion) fail("unsupported version " + std::to_string(version));
    ModelGraph g;
    const std::uint8_t dtype = r.u8();
    if (dtype > 1) fail("unknown dtype tag " + std::to_string(dtype));
    g.dtype = static_cast<DType>(dtype);
    const std::uint8_t flags = r.u8();
    if (flags & ~(kFlagMasks | kFlagSparse)) fail("unknown flags");
    g.name = r.str16();
    const std::uint8_t in_rank = r.u8();
    for (std::uint8_t i = 0; i < in_rank; ++i) g.input_shape.push_back(r.u32());
    g.window = r.u32();
    const std::uint32_t n_layers = r.u32();

    std::vector<std::vector<Mask>> storage_bitmaps(n_layers);
    Shape shape = g.input_shape;
    for (std::uint32_t li = 0; li < n_layers; ++li) {
      Layer layer;
      const std::uint8_t kind = r.u8();
      if (kind > static_cast<std::uint8_t>(LayerKind::lstm)) fail("unknown layer kind " + std::to_string(kind));
      layer.spec.kind = static_cast<LayerKind>(kind);
      const std::uint8_t pad = r.u8(), act = r.u8();
      if (pad > 1 || act > 1 || r.u8() != 0) fail("bad layer header");
      layer.spec.padding = static_cast<Padding>(pad);
      layer.spec.activation = static_cast<Activation>(act);
      layer.spec.kernel_h = r.u32();
      layer.spec.kernel_w = r.u32();
      layer.spec.stride = r.u32();
      layer.spec.units = r.u32();
      layer.input_shape = shape;
      layer.output_shape = layer_output_shape(layer.spec, shape);
      const std::vector<Shape> expected = layer_param_shapes(layer.spec, shape);
      const std::uint8_t n_params = r.u8();
      if (n_params != expected.size()) fail("layer " + std::to_string(li) + " has wrong parameter count");
      storage_bitmaps[li].resize(n_params);
      for (std::uint8_t pi = 0; pi < n_params; ++pi) {
        Shape ps(r.u8());
        for (auto& d : ps) d = r.u32();
        if (ps != expected[pi]) fail("layer " + std::to_string(li) + " parameter shape " + shape_string(ps));
        const std::size_t n = shape_size(ps);
        const std::uint8_t storage = r.u8();
        Mask present(n, 1);
        if (storage == kStorageSparse) {
          if (!(flags & kFlagSparse)) fail("sparse tensor in dense container");
          present = unpack_bitmap(r.bytes((n + 7) / 8), n);
          const std::uint32_t nnz = r.u32();
          if (nnz != static_cast<std::uint32_t>(std::count(present.begin(), present.end(), std::uint8_t{1}))) {
            fail("sparse survivor count mismatch");
          }
          storage_bitmaps[li][pi] = present;
        } else if (storage != kStorageDense) {
          fail("unknown storage tag");
        }
        if (g.dtype == DType::f32) {
          std::vector<float> v(n, 0.0f);
          for (std::size_t i = 0; i < n; ++i) {
            if (present[i]) v[i] = r.f32();
          }
          layer.params.emplace_back(ps, std::move(v));
        } else {
          std::vector<std::uint16_t> v(n, 0);
          for (std::size_t i = 0; i < n; ++i) {
            if (present[i]) v[i] = r.u16();
          }
          layer.params.push_back(Tensor::from_half_bits(ps, std::move(v)));
        }
      }
      shape = layer.output_shape;
      g.layers.push_back(std::move(layer));
    }

    if (flags & kFlagMasks) {
      for (std::uint32_t li = 0; li < n_layers; ++li) {
        Layer& layer = g.layers[li];
        std::vector<Mask> masks(layer.params.size());
        bool any = false;
        for (std::size_t pi = 0; pi < layer.params.size(); ++pi) {
          const std::uint8_t tag = r.u8();
          const std::size_t n = layer.params[pi].size();
          if (tag == kMaskBitmap) {
            masks[pi] = unpack_bitmap(r.bytes((n + 7) / 8), n);
          } else if (tag == kMaskSameAsStorage) {
            if (storage_bitmaps[li][pi].empty()) fail("mask refers to a dense storage bitmap");
            masks[pi] = storage_bitmaps[li][pi];
          } else if (tag != kMaskNone) {
            fail("unknown mask tag");
          }
          any = any || !masks[pi].empty();
        }
        if (any) layer.masks = std::move(masks);
      }
    }
    if (r.remaining() != 0) fail("trailing bytes before checksum");
    if (shape != Shape{2}) fail("output head is not 2 units");
    return g;
  } catch (const DecodeError& e) {
    fail(e.what());
  } catch (const ShapeError& e) {
    fail(e.what());
  }
}

void save_model(const ModelGraph& graph, const std::string& path, Encoding encoding) {
  write_file_bytes(path, encode_container(graph, encoding));
}

ModelGraph load_model(const std::string& path) { return decode_container(read_file_bytes(path)); }

}  // namespace eyeedge::nn
