#pragma once

// PNG (8/16-bit) and baseline JPEG decoding, 8/16-bit PNG encoding.

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include <jpeglib.h>
#include <png.h>

#include "mklh/error.hpp"
#include "mklh/imaging.hpp"

namespace mklh {

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct PngReadState {
  const std::vector<unsigned char>* bytes = nullptr;
  std::size_t offset = 0;
  std::string error;
};

inline void png_read_from_buffer(png_structp png, png_bytep out, png_size_t count) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->offset + count > st->bytes->size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, st->bytes->data() + st->offset, count);
  st->offset += count;
}

inline void png_on_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngReadState*>(png_get_error_ptr(png));
  if (st) st->error = msg;
  png_longjmp(png, 1);
}

inline void png_on_warning(png_structp, png_const_charp) {}

// Decoded raster before conversion to floats; `depth` is 8 or 16.
struct RawRaster {
  std::size_t width = 0, height = 0;
  int depth = 8;
  std::vector<std::uint16_t> rgb;  // 3 samples per pixel
};

// Decoded state lives on the heap: automatic objects modified between
// setjmp and longjmp have indeterminate values afterwards.
struct PngDecodeBuffers {
  RawRaster out;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
};

inline RawRaster decode_png(const std::vector<unsigned char>& bytes, const std::string& name) {
  auto st = std::make_unique<PngReadState>();
  st->bytes = &bytes;
  auto bufs = std::make_unique<PngDecodeBuffers>();
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, st.get(), png_on_error, png_on_warning);
  if (!png) throw Error(Errc::DecodeError, name + ": libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(Errc::DecodeError, name + ": libpng init failed");
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::DecodeError, name + ": " + (st->error.empty() ? "corrupt PNG" : st->error));
  }
  png_set_read_fn(png, st.get(), png_read_from_buffer);
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int out_depth = png_get_bit_depth(png, info) == 16 ? 16 : 8;
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  bufs->buffer.resize(rowbytes * h);
  bufs->rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) bufs->rows[y] = bufs->buffer.data() + y * rowbytes;
  png_read_image(png, bufs->rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  RawRaster& out = bufs->out;
  out.width = w;
  out.height = h;
  out.depth = out_depth;
  out.rgb.resize(3 * static_cast<std::size_t>(w) * h);
  for (std::size_t y = 0; y < h; ++y) {
    const unsigned char* row = bufs->buffer.data() + y * rowbytes;
    for (std::size_t k = 0; k < 3 * static_cast<std::size_t>(w); ++k) {
      out.rgb[y * 3 * w + k] = out_depth == 16 ? static_cast<std::uint16_t>((row[2 * k] << 8) | row[2 * k + 1])
                                               : row[k];
    }
  }
  return std::move(out);
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

inline void jpeg_on_error(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

inline void jpeg_on_message(j_common_ptr cinfo, int level) {
  if (level < 0) ++cinfo->err->num_warnings;
}

struct JpegDecodeState {
  jpeg_decompress_struct cinfo{};
  JpegErrorManager err{};
  RawRaster out;
  std::vector<JSAMPLE> row;
};

inline RawRaster decode_jpeg(const std::vector<unsigned char>& bytes, const std::string& name) {
  auto s = std::make_unique<JpegDecodeState>();
  s->cinfo.err = jpeg_std_error(&s->err.base);
  s->err.base.error_exit = jpeg_on_error;
  s->err.base.emit_message = jpeg_on_message;

  if (setjmp(s->err.jump)) {
    jpeg_destroy_decompress(&s->cinfo);
    throw Error(Errc::DecodeError, name + ": " + s->err.message);
  }
  jpeg_create_decompress(&s->cinfo);
  jpeg_mem_src(&s->cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&s->cinfo, TRUE);
  s->cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&s->cinfo);
  s->out.width = s->cinfo.output_width;
  s->out.height = s->cinfo.output_height;
  s->out.depth = 8;
  s->out.rgb.resize(3 * s->out.width * s->out.height);
  s->row.resize(3 * s->out.width);
  while (s->cinfo.output_scanline < s->cinfo.output_height) {
    JSAMPROW ptr = s->row.data();
    const std::size_t y = s->cinfo.output_scanline;
    jpeg_read_scanlines(&s->cinfo, &ptr, 1);
    for (std::size_t k = 0; k < s->row.size(); ++k) s->out.rgb[y * s->row.size() + k] = s->row[k];
  }
  // libjpeg only warns on premature end of data and pads the rest.
  const bool truncated = s->err.base.num_warnings > 0;
  jpeg_finish_decompress(&s->cinfo);
  jpeg_destroy_decompress(&s->cinfo);
  if (truncated) throw Error(Errc::DecodeError, name + ": truncated or corrupt JPEG data");
  return std::move(s->out);
}

inline RawRaster decode_any(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  static constexpr unsigned char kPng[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPng, 8) == 0) return decode_png(bytes, path.string());
  if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF)
    return decode_jpeg(bytes, path.string());
  throw Error(Errc::UnsupportedFormat, path.string() + ": not a PNG or JPEG file");
}

}  // namespace detail

/// Decodes a PNG or JPEG; channels are divided by the bit-depth maximum.
inline Image load_image(const std::filesystem::path& path) {
  const detail::RawRaster raw = detail::decode_any(path);
  const double maxval = raw.depth == 16 ? 65535.0 : 255.0;
  std::vector<float> data(raw.rgb.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(raw.rgb[i] / maxval);
  return Image(raw.width, raw.height, std::move(data));
}

/// Foreground iff the mean of the channels is strictly above `threshold`.
inline Mask load_mask(const std::filesystem::path& path, double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw Error(Errc::InvalidArgument, "load_mask: threshold must be in (0,1)");
  const detail::RawRaster raw = detail::decode_any(path);
  const double maxval = raw.depth == 16 ? 65535.0 : 255.0;
  Mask m(raw.width, raw.height);
  for (std::size_t i = 0; i < m.pixel_count(); ++i) {
    const double lum = (raw.rgb[3 * i] + raw.rgb[3 * i + 1] + raw.rgb[3 * i + 2]) / (3.0 * maxval);
    m.set(i, lum > threshold);
  }
  return m;
}

namespace detail {

inline void write_png_rgb(const std::filesystem::path& path, std::size_t w, std::size_t h, int depth,
                          const std::vector<unsigned char>& packed) {
  std::FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw Error(Errc::IoError, "cannot write '" + path.string() + "'");
  auto st = std::make_unique<PngReadState>();
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, st.get(), png_on_error, png_on_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    std::fclose(fp);
    throw Error(Errc::IoError, "libpng init failed");
  }
  auto rows = std::make_unique<std::vector<png_const_bytep>>(h);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error(Errc::IoError, path.string() + ": " + st->error);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), depth, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t rowbytes = w * 3 * (depth / 8);
  for (std::size_t y = 0; y < h; ++y) (*rows)[y] = packed.data() + y * rowbytes;
  png_write_image(png, const_cast<png_bytepp>(rows->data()));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fclose(fp) != 0) throw Error(Errc::IoError, "cannot finish writing '" + path.string() + "'");
}

}  // namespace detail

/// Encodes an RGB PNG; channel values are rounded to the nearest code.
inline void save_png(const Image& img, const std::filesystem::path& path, int bit_depth = 8) {
  if (bit_depth != 8 && bit_depth != 16) throw Error(Errc::InvalidArgument, "save_png: bit depth must be 8 or 16");
  const auto px = img.data();
  const double maxval = bit_depth == 16 ? 65535.0 : 255.0;
  std::vector<unsigned char> packed(px.size() * (bit_depth / 8));
  for (std::size_t i = 0; i < px.size(); ++i) {
    const auto code = static_cast<unsigned>(std::lround(std::clamp(static_cast<double>(px[i]), 0.0, 1.0) * maxval));
    if (bit_depth == 16) {
      packed[2 * i] = static_cast<unsigned char>(code >> 8);
      packed[2 * i + 1] = static_cast<unsigned char>(code & 0xFF);
    } else {
      packed[i] = static_cast<unsigned char>(code);
    }
  }
  detail::write_png_rgb(path, img.width(), img.height(), bit_depth, packed);
}

/// Writes a mask as an 8-bit RGB PNG (white foreground, black background).
inline void save_mask_png(const Mask& mask, const std::filesystem::path& path) {
  std::vector<unsigned char> packed(3 * mask.pixel_count());
  for (std::size_t i = 0; i < mask.pixel_count(); ++i)
    packed[3 * i] = packed[3 * i + 1] = packed[3 * i + 2] = mask[i] ? 255 : 0;
  detail::write_png_rgb(path, mask.width(), mask.height(), 8, packed);
}

}  // namespace mklh
