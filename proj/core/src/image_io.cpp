#include "rtgr/image_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace rtgr {

namespace {

constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

void put_u32_be(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::uint32_t read_u32_be(const std::uint8_t* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

void append_chunk(std::vector<std::uint8_t>& out, const char type[4],
                  const std::vector<std::uint8_t>& payload) {
  put_u32_be(out, static_cast<std::uint32_t>(payload.size()));
  const std::size_t crc_start = out.size();
  out.insert(out.end(), type, type + 4);
  out.insert(out.end(), payload.begin(), payload.end());
  const auto crc = static_cast<std::uint32_t>(
      crc32(0L, out.data() + crc_start, static_cast<uInt>(4 + payload.size())));
  put_u32_be(out, crc);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail("image: cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("image: cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail("image: short write to '" + path.string() + "'");
}

int paeth(int a, int b, int c) {
  const int p = a + b - c;
  const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  if (pb <= pc) return b;
  return c;
}

ImageU8 decode_png(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  const std::string name = path.string();
  if (bytes.size() < 8 + 25 || std::memcmp(bytes.data(), kPngMagic, 8) != 0)
    fail("png: '" + name + "' is not a PNG file");

  std::size_t pos = 8;
  std::size_t width = 0, height = 0, src_channels = 0;
  std::vector<std::uint8_t> idat;
  bool seen_ihdr = false, seen_iend = false;

  while (pos + 8 <= bytes.size() && !seen_iend) {
    const std::uint32_t len = read_u32_be(bytes.data() + pos);
    if (pos + 12 + len > bytes.size()) fail("png: '" + name + "' truncated chunk");
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    const std::uint8_t* payload = bytes.data() + pos + 8;

    if (std::memcmp(type, "IHDR", 4) == 0) {
      if (len != 13) fail("png: '" + name + "' malformed IHDR");
      width = read_u32_be(payload);
      height = read_u32_be(payload + 4);
      const std::uint8_t depth = payload[8];
      const std::uint8_t color = payload[9];
      const std::uint8_t interlace = payload[12];
      if (depth != 8) fail("png: '" + name + "' has bit depth " + std::to_string(depth) +
                           ", only 8 is supported");
      if (interlace != 0) fail("png: '" + name + "' is interlaced, which is not supported");
      switch (color) {
        case 0: src_channels = 1; break;
        case 2: src_channels = 3; break;
        case 4: src_channels = 2; break;
        case 6: src_channels = 4; break;
        default:
          fail("png: '" + name + "' has unsupported color type " + std::to_string(color));
      }
      seen_ihdr = true;
    } else if (std::memcmp(type, "IDAT", 4) == 0) {
      idat.insert(idat.end(), payload, payload + len);
    } else if (std::memcmp(type, "IEND", 4) == 0) {
      seen_iend = true;
    }
    pos += 12 + len;
  }
  if (!seen_ihdr || width == 0 || height == 0) fail("png: '" + name + "' missing image header");
  if (idat.empty()) fail("png: '" + name + "' has no image data");

  const std::size_t stride = width * src_channels;
  std::vector<std::uint8_t> raw(height * (stride + 1));
  uLongf raw_len = static_cast<uLongf>(raw.size());
  const int rc = uncompress(raw.data(), &raw_len, idat.data(), static_cast<uLong>(idat.size()));
  if (rc != Z_OK || raw_len != raw.size())
    fail("png: '" + name + "' IDAT decompression failed (zlib " + std::to_string(rc) + ")");

  // Undo per-scanline filters in place.
  std::vector<std::uint8_t> pixels(height * stride);
  const std::size_t bpp = src_channels;
  for (std::size_t y = 0; y < height; ++y) {
    const std::uint8_t filter = raw[y * (stride + 1)];
    const std::uint8_t* src = raw.data() + y * (stride + 1) + 1;
    std::uint8_t* dst = pixels.data() + y * stride;
    const std::uint8_t* up = y > 0 ? pixels.data() + (y - 1) * stride : nullptr;
    for (std::size_t x = 0; x < stride; ++x) {
      const int left = x >= bpp ? dst[x - bpp] : 0;
      const int above = up ? up[x] : 0;
      const int corner = (up && x >= bpp) ? up[x - bpp] : 0;
      int v = src[x];
      switch (filter) {
        case 0: break;
        case 1: v += left; break;
        case 2: v += above; break;
        case 3: v += (left + above) / 2; break;
        case 4: v += paeth(left, above, corner); break;
        default:
          fail("png: '" + name + "' uses unknown filter " + std::to_string(filter));
      }
      dst[x] = static_cast<std::uint8_t>(v & 0xff);
    }
  }

  ImageU8 image;
  image.width = width;
  image.height = height;
  image.channels = src_channels >= 3 ? 3 : 1;
  image.pixels.resize(width * height * image.channels);
  for (std::size_t i = 0; i < width * height; ++i) {
    for (std::size_t c = 0; c < image.channels; ++c)
      image.pixels[i * image.channels + c] = pixels[i * src_channels + c];  // alpha dropped
  }
  return image;
}

std::uint64_t parse_pnm_int(const std::vector<std::uint8_t>& bytes, std::size_t& pos,
                            const std::string& name) {
  // Skip whitespace and '#' comments.
  while (pos < bytes.size()) {
    const char c = static_cast<char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= bytes.size() || !std::isdigit(bytes[pos]))
    fail("pnm: '" + name + "' malformed header");
  std::uint64_t v = 0;
  while (pos < bytes.size() && std::isdigit(bytes[pos])) {
    v = v * 10 + (bytes[pos] - '0');
    ++pos;
  }
  return v;
}

ImageU8 decode_pnm(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  const std::string name = path.string();
  if (bytes.size() < 2) fail("pnm: '" + name + "' truncated");
  const char kind = static_cast<char>(bytes[1]);
  if (bytes[0] != 'P' || (kind != '5' && kind != '6'))
    fail("pnm: '" + name + "' must be binary PGM (P5) or PPM (P6)");
  std::size_t pos = 2;
  const std::uint64_t width = parse_pnm_int(bytes, pos, name);
  const std::uint64_t height = parse_pnm_int(bytes, pos, name);
  const std::uint64_t maxval = parse_pnm_int(bytes, pos, name);
  if (maxval != 255) fail("pnm: '" + name + "' maxval must be 255, got " + std::to_string(maxval));
  ++pos;  // the single whitespace after maxval

  ImageU8 image;
  image.width = width;
  image.height = height;
  image.channels = kind == '5' ? 1 : 3;
  const std::size_t need = width * height * image.channels;
  if (bytes.size() < pos + need) fail("pnm: '" + name + "' truncated pixel data");
  image.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                      bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return image;
}

}  // namespace

ImageU8 read_image(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngMagic, 8) == 0)
    return decode_png(path, bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pnm(path, bytes);
  fail("image: '" + path.string() + "' is neither PNG nor PGM/PPM");
}

void write_png(const std::filesystem::path& path, const ImageU8& image) {
  if (image.channels != 1 && image.channels != 3)
    fail("png: only 1- or 3-channel images can be written, got " +
         std::to_string(image.channels));
  if (image.pixels.size() != image.width * image.height * image.channels)
    fail("png: pixel buffer size does not match dimensions");

  std::vector<std::uint8_t> out(kPngMagic, kPngMagic + 8);

  std::vector<std::uint8_t> ihdr;
  put_u32_be(ihdr, static_cast<std::uint32_t>(image.width));
  put_u32_be(ihdr, static_cast<std::uint32_t>(image.height));
  ihdr.push_back(8);                                      // bit depth
  ihdr.push_back(image.channels == 1 ? 0 : 2);            // gray / rgb
  ihdr.push_back(0);                                      // compression
  ihdr.push_back(0);                                      // filter method
  ihdr.push_back(0);                                      // no interlace
  append_chunk(out, "IHDR", ihdr);

  const std::size_t stride = image.width * image.channels;
  std::vector<std::uint8_t> raw(image.height * (stride + 1));
  for (std::size_t y = 0; y < image.height; ++y) {
    raw[y * (stride + 1)] = 0;  // filter: none
    std::memcpy(raw.data() + y * (stride + 1) + 1, image.pixels.data() + y * stride, stride);
  }

  std::vector<std::uint8_t> compressed(compressBound(static_cast<uLong>(raw.size())));
  uLongf comp_len = static_cast<uLongf>(compressed.size());
  const int rc = compress2(compressed.data(), &comp_len, raw.data(),
                           static_cast<uLong>(raw.size()), 6);
  if (rc != Z_OK) fail("png: zlib compression failed (" + std::to_string(rc) + ")");
  compressed.resize(comp_len);
  append_chunk(out, "IDAT", compressed);
  append_chunk(out, "IEND", {});

  write_file(path, out);
}

void write_pnm(const std::filesystem::path& path, const ImageU8& image) {
  if (image.channels != 1 && image.channels != 3)
    fail("pnm: only 1- or 3-channel images can be written");
  std::vector<std::uint8_t> out;
  const std::string header = std::string(image.channels == 1 ? "P5" : "P6") + "\n" +
                             std::to_string(image.width) + " " + std::to_string(image.height) +
                             "\n255\n";
  out.insert(out.end(), header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  write_file(path, out);
}

TensorT<double> image_to_map(const ImageU8& image) {
  TensorT<double> map(Shape{image.height, image.width});
  for (std::size_t i = 0; i < image.height * image.width; ++i) {
    if (image.channels == 1) {
      map.data()[i] = image.pixels[i] / 255.0;
    } else {
      double acc = 0.0;
      for (std::size_t c = 0; c < image.channels; ++c) acc += image.pixels[i * image.channels + c];
      map.data()[i] = acc / (255.0 * static_cast<double>(image.channels));
    }
  }
  return map;
}

ImageU8 map_to_image(const TensorT<double>& map) {
  if (map.rank() != 2) fail("image: map must be rank 2 [H,W], got " + shape_str(map.shape()));
  ImageU8 image;
  image.height = map.dim(0);
  image.width = map.dim(1);
  image.channels = 1;
  image.pixels.resize(map.numel());
  for (std::size_t i = 0; i < map.numel(); ++i) {
    const double v = std::clamp(map.data()[i], 0.0, 1.0);
    image.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return image;
}

ImageU8 rgb_to_image(const TensorT<double>& planes) {
  if (planes.rank() != 3 || planes.dim(0) != 3)
    fail("image: expected [3,H,W] tensor, got " + shape_str(planes.shape()));
  ImageU8 image;
  image.height = planes.dim(1);
  image.width = planes.dim(2);
  image.channels = 3;
  const std::size_t plane = image.height * image.width;
  image.pixels.resize(plane * 3);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const double v = std::clamp(planes.data()[c * plane + i], 0.0, 1.0);
      image.pixels[i * 3 + c] = static_cast<std::uint8_t>(std::lround(v * 255.0));
    }
  }
  return image;
}

TensorT<double> image_to_rgb(const ImageU8& image) {
  TensorT<double> out(Shape{3, image.height, image.width});
  const std::size_t plane = image.height * image.width;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t src_c = image.channels == 1 ? 0 : c;
      out.data()[c * plane + i] = image.pixels[i * image.channels + src_c] / 255.0;
    }
  }
  return out;
}

}  // namespace rtgr
