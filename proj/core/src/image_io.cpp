#include "holosplat/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace holosplat {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngWrite {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWrite() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

struct PngRead {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngRead() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

void write_rows(const std::filesystem::path& path, int width, int height, int bit_depth,
                int color_type, const std::vector<png_bytep>& rows) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    FilePtr file(std::fopen(tmp.c_str(), "wb"));
    if (!file) throw ImageIoError("png: cannot open " + tmp.string());

    PngWrite ctx;
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw ImageIoError("png: writer init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw ImageIoError("png: info init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw ImageIoError("png: write failed for " + path.string());

    png_init_io(ctx.png, file.get());
    png_set_IHDR(ctx.png, ctx.info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    if (bit_depth == 16) png_set_swap(ctx.png);  // little-endian host buffers
    png_write_image(ctx.png, const_cast<png_bytepp>(rows.data()));
    png_write_end(ctx.png, nullptr);
    file.reset();
    std::filesystem::rename(tmp, path);
}

} // namespace

void write_png_rgb8(const Image& image, const std::filesystem::path& path) {
    std::vector<png_byte> buffer(std::size_t(image.width) * image.height * 3);
    for (std::size_t i = 0; i < image.pixel_count(); ++i) {
        for (int ch = 0; ch < 3; ++ch) {
            const double v = std::clamp(image.pixels[i][ch], 0.0, 1.0);
            buffer[i * 3 + ch] = png_byte(std::lround(v * 255.0));
        }
    }
    std::vector<png_bytep> rows(image.height);
    for (int y = 0; y < image.height; ++y)
        rows[y] = buffer.data() + std::size_t(y) * image.width * 3;
    write_rows(path, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, rows);
}

void write_png_gray16(const GrayImage& meters, const std::filesystem::path& path,
                      double meters_per_unit) {
    if (meters_per_unit <= 0) throw ImageIoError("png: meters_per_unit must be > 0");
    std::vector<std::uint16_t> buffer(std::size_t(meters.width) * meters.height);
    for (std::size_t i = 0; i < buffer.size(); ++i) {
        const double units = meters.pixels[i] / meters_per_unit;
        buffer[i] = std::uint16_t(std::clamp(std::lround(units), 0l, 65535l));
    }
    std::vector<png_bytep> rows(meters.height);
    for (int y = 0; y < meters.height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(buffer.data() + std::size_t(y) * meters.width);
    write_rows(path, meters.width, meters.height, 16, PNG_COLOR_TYPE_GRAY, rows);
}

namespace {

PngRead open_reader(const std::filesystem::path& path, FilePtr& file) {
    file.reset(std::fopen(path.c_str(), "rb"));
    if (!file) throw ImageIoError("png: cannot open " + path.string());
    PngRead ctx;
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!ctx.png) throw ImageIoError("png: reader init failed");
    ctx.info = png_create_info_struct(ctx.png);
    if (!ctx.info) throw ImageIoError("png: info init failed");
    return ctx;
}

} // namespace

Image read_png_rgb8(const std::filesystem::path& path) {
    FilePtr file;
    PngRead ctx = open_reader(path, file);
    if (setjmp(png_jmpbuf(ctx.png))) throw ImageIoError("png: read failed for " + path.string());
    png_init_io(ctx.png, file.get());
    png_read_info(ctx.png, ctx.info);

    png_set_expand(ctx.png);
    png_set_strip_16(ctx.png);
    png_set_strip_alpha(ctx.png);
    png_set_gray_to_rgb(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    const int width = int(png_get_image_width(ctx.png, ctx.info));
    const int height = int(png_get_image_height(ctx.png, ctx.info));
    std::vector<png_byte> buffer(std::size_t(width) * height * 3);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y) rows[y] = buffer.data() + std::size_t(y) * width * 3;
    png_read_image(ctx.png, rows.data());

    Image image(width, height);
    for (std::size_t i = 0; i < image.pixel_count(); ++i)
        image.pixels[i] = Vec3(buffer[i * 3], buffer[i * 3 + 1], buffer[i * 3 + 2]) / 255.0;
    return image;
}

GrayImage read_png_gray16(const std::filesystem::path& path, double meters_per_unit) {
    if (meters_per_unit <= 0) throw ImageIoError("png: meters_per_unit must be > 0");
    FilePtr file;
    PngRead ctx = open_reader(path, file);
    if (setjmp(png_jmpbuf(ctx.png))) throw ImageIoError("png: read failed for " + path.string());
    png_init_io(ctx.png, file.get());
    png_read_info(ctx.png, ctx.info);

    if (png_get_color_type(ctx.png, ctx.info) != PNG_COLOR_TYPE_GRAY ||
        png_get_bit_depth(ctx.png, ctx.info) != 16)
        throw ImageIoError("png: expected 16-bit grayscale in " + path.string());
    png_set_swap(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    const int width = int(png_get_image_width(ctx.png, ctx.info));
    const int height = int(png_get_image_height(ctx.png, ctx.info));
    std::vector<std::uint16_t> buffer(std::size_t(width) * height);
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; ++y)
        rows[y] = reinterpret_cast<png_bytep>(buffer.data() + std::size_t(y) * width);
    png_read_image(ctx.png, rows.data());

    GrayImage out(width, height);
    for (std::size_t i = 0; i < buffer.size(); ++i) out.pixels[i] = buffer[i] * meters_per_unit;
    return out;
}

} // namespace holosplat
