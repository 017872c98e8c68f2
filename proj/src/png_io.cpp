// SPDX-License-Identifier: Apache-2.0
#include "wsg/png_io.hpp"

#include <cmath>
#include <cstdio>
#include <memory>

#include <png.h>

namespace wsg {

std::vector<unsigned char> image_to_rgb8(const Tensor& img) {
    if (img.rank() != 4 || img.dim(0) != 1 || img.dim(1) != 3) {
        throw std::invalid_argument("image_to_rgb8: expected [1,3,H,W], got " + img.shape_str());
    }
    const int64_t h = img.dim(2), w = img.dim(3);
    std::vector<unsigned char> out(static_cast<size_t>(3 * h * w));
    for (int64_t y = 0; y < h; ++y) {
        for (int64_t x = 0; x < w; ++x) {
            for (int64_t c = 0; c < 3; ++c) {
                const double v = img.at(0, c, y, x);
                const double u = std::floor(255.0 * (v + 1.0) * 0.5 + 0.5);
                const double clamped = u < 0.0 ? 0.0 : (u > 255.0 ? 255.0 : u);
                out[static_cast<size_t>((y * w + x) * 3 + c)] =
                    static_cast<unsigned char>(clamped);
            }
        }
    }
    return out;
}

void write_png_rgb8(const std::string& path, const Tensor& img) {
    const std::vector<unsigned char> rgb = image_to_rgb8(img);
    const int64_t h = img.dim(2), w = img.dim(3);

    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!fp) throw std::runtime_error("write_png_rgb8: cannot open '" + path + "'");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("write_png_rgb8: png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("write_png_rgb8: png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("write_png_rgb8: libpng error writing '" + path + "'");
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 6);
    png_write_info(png, info);

    std::vector<png_bytep> rows(static_cast<size_t>(h));
    for (int64_t y = 0; y < h; ++y) {
        rows[static_cast<size_t>(y)] = const_cast<png_bytep>(rgb.data() + y * w * 3);
    }
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace wsg
