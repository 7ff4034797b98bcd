#include "rebar2bim/image.hpp"

#include <cctype>

#include "rebar2bim/error.hpp"
#include "rebar2bim/io.hpp"

namespace rebar2bim {

namespace {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::string_view bytes) : bytes_(bytes) {}

  int next_int() {
    skip_space_and_comments();
    long long v = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > 1'000'000) throw Error(ErrorCode::Schema, "pgm: header value too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw Error(ErrorCode::Schema, "pgm: expected integer in header");
    return static_cast<int>(v);
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw Error(ErrorCode::Schema, "pgm: missing P5 magic");
  }
  PgmHeaderReader rd(bytes);
  rd.advance(2);
  const int w = rd.next_int();
  const int h = rd.next_int();
  const int maxval = rd.next_int();
  if (w <= 0 || h <= 0) throw Error(ErrorCode::Schema, "pgm: empty image");
  if (maxval <= 0 || maxval > 255) throw Error(ErrorCode::Schema, "pgm: only 8-bit maxval supported");
  // Exactly one whitespace byte separates the header from the raster.
  if (rd.pos() >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[rd.pos()]))) {
    throw Error(ErrorCode::Schema, "pgm: malformed header");
  }
  const std::size_t start = rd.pos() + 1;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (bytes.size() < start + n) throw Error(ErrorCode::Schema, "pgm: truncated raster");
  GrayImage img(w, h);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<unsigned char>(bytes[start + i]);
    img.pixels[i] = maxval == 255 ? v : static_cast<std::uint8_t>(std::min(255, v * 255 / maxval));
  }
  return img;
}

std::string encode_pgm(const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

GrayImage read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pgm(img));
}

}  // namespace rebar2bim
