#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fpclust/error.hpp"

namespace fpclust {

/// One grayscale image. Row index is the s axis, column index the t axis.
/// Intensities live in [0, 1].
struct ImageGrid {
  std::string id;
  Eigen::MatrixXd pixels;

  Eigen::Index height() const { return pixels.rows(); }
  Eigen::Index width() const { return pixels.cols(); }

  void validate() const {
    require(height() >= 2 && width() >= 2, ErrorKind::DimensionMismatch,
            "image '" + id + "' must be at least 2x2");
    require(pixels.allFinite() && pixels.minCoeff() >= 0.0 && pixels.maxCoeff() <= 1.0,
            ErrorKind::InvalidArg, "image '" + id + "' has intensities outside [0,1]");
  }
};

struct Dataset {
  std::vector<ImageGrid> images;
  std::optional<std::vector<int>> labels;  // values >= 1, one per image
  std::optional<int> positive_class;

  std::size_t size() const { return images.size(); }
  Eigen::Index height() const { return images.empty() ? 0 : images.front().height(); }
  Eigen::Index width() const { return images.empty() ? 0 : images.front().width(); }

  void validate() const {
    require(images.size() >= 2, ErrorKind::InvalidArg, "dataset needs at least 2 images");
    for (const auto& img : images) {
      img.validate();
      require(img.height() == height() && img.width() == width(), ErrorKind::DimensionMismatch,
              "image '" + img.id + "' is " + std::to_string(img.height()) + "x" +
                  std::to_string(img.width()) + ", expected " + std::to_string(height()) + "x" +
                  std::to_string(width()));
    }
    if (labels) {
      require(labels->size() == images.size(), ErrorKind::MalformedManifest,
              "label count does not match image count");
      for (int l : *labels) require(l >= 1, ErrorKind::MalformedManifest, "labels must be >= 1");
    }
  }

  /// Index of the image with the given id, or nullopt.
  std::optional<std::size_t> find(const std::string& id) const {
    for (std::size_t i = 0; i < images.size(); ++i)
      if (images[i].id == id) return i;
    return std::nullopt;
  }
};

namespace detail {

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline bool parse_int(const std::string& s, int& value) {
  if (s.empty()) return false;
  std::size_t pos = 0;
  try {
    value = std::stoi(s, &pos);
  } catch (...) {
    return false;
  }
  return pos == s.size();
}

// Reads one whitespace-delimited PGM header token, skipping '#' comments.
inline std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n' && c != '\r') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace detail

/// Decodes an 8-bit P2 or P5 PGM. Pixel byte v maps to v/255.
inline Eigen::MatrixXd read_pgm(const std::filesystem::path& path) {
  require(std::filesystem::exists(path), ErrorKind::MissingFile, path.string());
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::IoFailure, "cannot open " + path.string());

  const std::string magic = detail::pgm_token(in);
  require(magic == "P5" || magic == "P2", ErrorKind::UnsupportedFormat,
          path.string() + ": magic '" + magic + "' is not P2/P5");
  int width = 0, height = 0, maxval = 0;
  bool ok = detail::parse_int(detail::pgm_token(in), width) &&
            detail::parse_int(detail::pgm_token(in), height) &&
            detail::parse_int(detail::pgm_token(in), maxval);
  require(ok && width > 0 && height > 0, ErrorKind::UnsupportedFormat,
          path.string() + ": malformed header");
  require(maxval == 255, ErrorKind::UnsupportedFormat,
          path.string() + ": maxval " + std::to_string(maxval) + " (only 255 supported)");

  Eigen::MatrixXd pixels(height, width);
  if (magic == "P5") {
    // pgm_token consumed exactly one whitespace byte after maxval
    std::vector<unsigned char> raster(static_cast<std::size_t>(width) * height);
    in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    require(in.gcount() == static_cast<std::streamsize>(raster.size()), ErrorKind::UnsupportedFormat,
            path.string() + ": truncated raster");
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c)
        pixels(r, c) = raster[static_cast<std::size_t>(r) * width + c] / 255.0;
  } else {
    for (int r = 0; r < height; ++r)
      for (int c = 0; c < width; ++c) {
        int v = -1;
        require(detail::parse_int(detail::pgm_token(in), v) && v >= 0 && v <= 255,
                ErrorKind::UnsupportedFormat, path.string() + ": bad ASCII raster value");
        pixels(r, c) = v / 255.0;
      }
  }
  return pixels;
}

/// Pixel to byte: clamp to [0,1], then round half up.
inline std::uint8_t to_byte(double p) {
  const double clamped = std::clamp(p, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(clamped * 255.0 + 0.5));
}

/// Writes a binary P5 PGM with maxval 255.
inline void write_pgm(const Eigen::MatrixXd& pixels, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::IoFailure, "cannot create " + path.string());
  out << "P5\n" << pixels.cols() << " " << pixels.rows() << "\n255\n";
  std::vector<char> raster;
  raster.reserve(static_cast<std::size_t>(pixels.size()));
  for (Eigen::Index r = 0; r < pixels.rows(); ++r)
    for (Eigen::Index c = 0; c < pixels.cols(); ++c)
      raster.push_back(static_cast<char>(to_byte(pixels(r, c))));
  out.write(raster.data(), static_cast<std::streamsize>(raster.size()));
  require(static_cast<bool>(out), ErrorKind::IoFailure, "write failed: " + path.string());
}

inline void write_pgm(const ImageGrid& image, const std::filesystem::path& path) {
  write_pgm(image.pixels, path);
}

/// Loads a manifest CSV with header `id,path[,label]`. Image paths are
/// resolved relative to the manifest's directory; row order is preserved.
inline Dataset load_manifest(const std::filesystem::path& manifest) {
  require(std::filesystem::exists(manifest), ErrorKind::MissingFile, manifest.string());
  std::ifstream in(manifest);
  require(static_cast<bool>(in), ErrorKind::IoFailure, "cannot open " + manifest.string());

  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::MalformedManifest, "empty manifest");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split_csv_line(detail::trim(line));
  const bool has_label = header.size() == 3 && header[2] == "label";
  require(header.size() >= 2 && header[0] == "id" && header[1] == "path" &&
              (header.size() == 2 || has_label),
          ErrorKind::MalformedManifest, "header must be 'id,path' or 'id,path,label'");

  const auto base = manifest.parent_path();
  Dataset ds;
  std::vector<int> labels;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto fields = detail::split_csv_line(line);
    const std::string where = manifest.string() + ":" + std::to_string(lineno);
    require(fields.size() == header.size(), ErrorKind::MalformedManifest, where + ": wrong field count");
    require(!fields[0].empty(), ErrorKind::MalformedManifest, where + ": empty id");
    if (has_label) {
      int label = 0;
      require(detail::parse_int(fields[2], label) && label >= 1, ErrorKind::MalformedManifest,
              where + ": label '" + fields[2] + "' is not a positive integer");
      labels.push_back(label);
    }
    ds.images.push_back(ImageGrid{fields[0], read_pgm(base / fields[1])});
  }
  if (has_label) ds.labels = std::move(labels);
  ds.validate();
  return ds;
}

}  // namespace fpclust
