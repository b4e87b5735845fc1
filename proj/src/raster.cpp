#include "ghrc/raster.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <utility>
#include <nlohmann/json.hpp>

#include "ghrc/error.hpp"

namespace ghrc::projection {

using nlohmann::json;

Raster::Raster(int width, int height, int bands, float fill)
    : width_(width), height_(height), bands_(bands) {
  if (width < 0 || height < 0 || bands < 0) throw DomainError("negative raster dimensions");
  data_.assign(static_cast<std::size_t>(width) * height * bands, fill);
}

Raster Raster::extract_band(int b) const {
  Raster out(width_, height_, 1);
  std::copy(band(b).begin(), band(b).end(), out.data().begin());
  out.nodata = nodata;
  out.geotransform = geotransform;
  out.lcc = lcc;
  return out;
}

namespace {

std::filesystem::path with_ext(const std::filesystem::path& base, const char* ext) {
  std::filesystem::path p = base;
  p += ext;
  return p;
}

std::uint32_t to_le(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
}

}  // namespace

void write_raster(const Raster& r, const std::filesystem::path& base) {
  if (base.has_parent_path()) std::filesystem::create_directories(base.parent_path());
  {
    std::ofstream out(with_ext(base, ".raw"), std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + with_ext(base, ".raw").string());
    std::vector<std::uint32_t> words(r.data().size());
    for (std::size_t i = 0; i < words.size(); ++i)
      words[i] = to_le(std::bit_cast<std::uint32_t>(r.data()[i]));
    out.write(reinterpret_cast<const char*>(words.data()),
              static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
  }
  json meta;
  meta["width"] = r.width();
  meta["height"] = r.height();
  meta["bands"] = r.bands();
  meta["dtype"] = "float32";
  meta["byte_order"] = "little";
  meta["interleave"] = "band_sequential";
  meta["nodata"] = r.nodata;
  if (r.geotransform) {
    const GeoTransform& g = *r.geotransform;
    meta["geotransform"] = {{"x0", g.x0}, {"y0", g.y0}, {"dx", g.dx}, {"dy", g.dy}};
  } else {
    meta["geotransform"] = nullptr;
  }
  if (r.lcc) {
    const LccParams& p = *r.lcc;
    meta["lcc"] = {{"std_parallel_1", p.std_parallel_1}, {"std_parallel_2", p.std_parallel_2},
                   {"lat_origin", p.lat_origin},         {"lon_origin", p.lon_origin},
                   {"false_easting", p.false_easting},   {"false_northing", p.false_northing}};
  } else {
    meta["lcc"] = nullptr;
  }
  std::ofstream out(with_ext(base, ".json"), std::ios::trunc);
  if (!out) throw Error("cannot open " + with_ext(base, ".json").string());
  out << meta.dump(2) << '\n';
}

Raster read_raster(const std::filesystem::path& base) {
  std::ifstream meta_in(with_ext(base, ".json"));
  if (!meta_in) throw Error("cannot open " + with_ext(base, ".json").string());
  json meta;
  try {
    meta = json::parse(meta_in);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(with_ext(base, ".json").string() + ": " + e.what());
  }
  Raster r(meta.at("width").get<int>(), meta.at("height").get<int>(), meta.at("bands").get<int>());
  r.nodata = meta.at("nodata").get<float>();
  if (!meta.at("geotransform").is_null()) {
    const json& g = meta["geotransform"];
    r.geotransform = GeoTransform{g.at("x0"), g.at("y0"), g.at("dx"), g.at("dy")};
  }
  if (meta.contains("lcc") && !meta["lcc"].is_null()) {
    const json& p = meta["lcc"];
    r.lcc = LccParams{p.at("std_parallel_1"), p.at("std_parallel_2"), p.at("lat_origin"),
                      p.at("lon_origin"),     p.at("false_easting"),  p.at("false_northing")};
  }

  std::ifstream in(with_ext(base, ".raw"), std::ios::binary);
  if (!in) throw Error("cannot open " + with_ext(base, ".raw").string());
  std::vector<std::uint32_t> words(r.data().size());
  in.read(reinterpret_cast<char*>(words.data()),
          static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)));
  if (in.gcount() != static_cast<std::streamsize>(words.size() * sizeof(std::uint32_t)))
    throw Error("raster file is truncated: " + with_ext(base, ".raw").string());
  for (std::size_t i = 0; i < words.size(); ++i)
    r.data()[i] = std::bit_cast<float>(to_le(words[i]));
  return r;
}

namespace {

std::pair<float, float> stretch_limits(const Raster& r, int band, double clip_percent) {
  std::vector<float> valid;
  valid.reserve(static_cast<std::size_t>(r.width()) * r.height());
  for (float v : r.band(band))
    if (r.is_valid(v) && std::isfinite(v)) valid.push_back(v);
  if (valid.empty()) return {0.0f, 1.0f};
  const auto pick = [&](double pct) {
    const auto k = static_cast<std::size_t>(std::clamp(pct / 100.0, 0.0, 1.0) *
                                            static_cast<double>(valid.size() - 1));
    std::nth_element(valid.begin(), valid.begin() + static_cast<std::ptrdiff_t>(k), valid.end());
    return valid[k];
  };
  const float lo = pick(clip_percent);
  const float hi = pick(100.0 - clip_percent);
  return {lo, hi > lo ? hi : lo + 1.0f};
}

}  // namespace

void write_quicklook_png(const Raster& r, int band, const std::filesystem::path& path,
                         double clip_percent) {
  const auto [lo, hi] = stretch_limits(r, band, clip_percent);

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw Error("cannot open " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(r.width()), static_cast<png_uint_32>(r.height()),
               8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(r.width()));
  for (int y = 0; y < r.height(); ++y) {
    for (int x = 0; x < r.width(); ++x) {
      const float v = r.at(band, y, x);
      if (!r.is_valid(v) || !std::isfinite(v)) {
        row[x] = 0;
        continue;
      }
      const double s = (v - lo) / (hi - lo);
      row[x] = static_cast<png_byte>(std::lround(std::clamp(s, 0.0, 1.0) * 254.0) + 1);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace ghrc::projection
