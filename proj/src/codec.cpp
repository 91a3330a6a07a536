#include "shroud/codec.hpp"

#include "shroud/error.hpp"

#include <png.h>
// jpeglib.h needs size_t and FILE declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

namespace shroud {
namespace {

constexpr uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};

ImageBuffer decode_png(std::span<const uint8_t> bytes)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        fail(Errc::CorruptData, std::string("png header: ") + image.message);
    if (image.width > kMaxImageSide || image.height > kMaxImageSide) {
        png_image_free(&image);
        fail(Errc::UnsupportedFormat, "image exceeds size limit");
    }
    image.format = PNG_FORMAT_RGBA;
    std::vector<uint8_t> pixels(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        fail(Errc::CorruptData, "png body: " + msg);
    }
    return ImageBuffer(image.width, image.height, std::move(pixels));
}

std::vector<uint8_t> encode_png(const ImageBuffer& img)
{
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = img.width();
    image.height = img.height();
    image.format = PNG_FORMAT_RGBA;
    png_alloc_size_t size = 0;
    if (!png_image_write_get_memory_size(image, size, 0, img.data().data(), 0, nullptr))
        fail(Errc::EncodeFailure, std::string("png size: ") + image.message);
    std::vector<uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data().data(), 0, nullptr))
        fail(Errc::EncodeFailure, std::string("png write: ") + image.message);
    out.resize(size);
    return out;
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo)
{
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

void jpeg_silence(j_common_ptr, int) {}

// Truncated and damaged streams only raise warnings in libjpeg.
void jpeg_warning_is_fatal(j_common_ptr cinfo, int level)
{
    if (level < 0) jpeg_error_exit(cinfo);
}

ImageBuffer decode_jpeg(std::span<const uint8_t> bytes)
{
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    err.base.emit_message = jpeg_warning_is_fatal;
    // Containers live outside the setjmp scope so longjmp never skips a destructor.
    std::vector<uint8_t> pixels;
    std::vector<uint8_t> line;
    uint32_t width = 0, height = 0;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        fail(Errc::CorruptData, std::string("jpeg: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    width = cinfo.output_width;
    height = cinfo.output_height;
    if (width > kMaxImageSide || height > kMaxImageSide) {
        jpeg_destroy_decompress(&cinfo);
        fail(Errc::UnsupportedFormat, "image exceeds size limit");
    }
    pixels.resize(size_t(width) * height * 4);
    line.resize(size_t(width) * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        const uint32_t y = cinfo.output_scanline;
        JSAMPROW row = line.data();
        jpeg_read_scanlines(&cinfo, &row, 1);
        uint8_t* dst = pixels.data() + size_t(y) * width * 4;
        for (uint32_t x = 0; x < width; ++x) {
            dst[x * 4 + 0] = line[x * 3 + 0];
            dst[x * 4 + 1] = line[x * 3 + 1];
            dst[x * 4 + 2] = line[x * 3 + 2];
            dst[x * 4 + 3] = 255;
        }
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return ImageBuffer(width, height, std::move(pixels));
}

std::vector<uint8_t> encode_jpeg(const ImageBuffer& img, int quality)
{
    jpeg_compress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    err.base.emit_message = jpeg_silence;
    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    std::vector<uint8_t> line(size_t(img.width()) * 3);
    if (setjmp(err.jump)) {
        jpeg_destroy_compress(&cinfo);
        std::free(buffer);
        fail(Errc::EncodeFailure, std::string("jpeg: ") + err.message);
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, &buffer, &size);
    cinfo.image_width = img.width();
    cinfo.image_height = img.height();
    cinfo.input_components = 3;
    cinfo.in_color_space = JCS_RGB;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, std::clamp(quality, 1, 100), TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        const auto src = img.row(cinfo.next_scanline);
        for (uint32_t x = 0; x < img.width(); ++x) std::copy_n(&src[x * 4], 3, &line[x * 3]);
        JSAMPROW row = line.data();
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    std::vector<uint8_t> out(buffer, buffer + size);
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    return out;
}

void png_append(png_structp png, png_bytep data, png_size_t length)
{
    auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

} // namespace

std::optional<ImageFormat> parse_format(std::string_view tag)
{
    std::string t(tag);
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    if (t == "png" || t == "image/png") return ImageFormat::Png;
    if (t == "jpeg" || t == "jpg" || t == "image/jpeg") return ImageFormat::Jpeg;
    return std::nullopt;
}

std::string_view format_name(ImageFormat f) { return f == ImageFormat::Png ? "png" : "jpeg"; }

std::optional<ImageFormat> detect_format(std::span<const uint8_t> bytes)
{
    if (bytes.size() >= 8 && std::equal(bytes.begin(), bytes.begin() + 8, kPngMagic)) return ImageFormat::Png;
    if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) return ImageFormat::Jpeg;
    return std::nullopt;
}

ImageBuffer load_image(std::span<const uint8_t> bytes, std::optional<ImageFormat> hint)
{
    const auto sniffed = detect_format(bytes);
    const auto format = sniffed ? sniffed : hint;
    if (!format) fail(Errc::UnsupportedFormat, "not a PNG or JPEG stream");
    if (!sniffed) fail(Errc::CorruptData, std::string("missing ") + std::string(format_name(*format)) + " signature");
    return *format == ImageFormat::Png ? decode_png(bytes) : decode_jpeg(bytes);
}

std::vector<uint8_t> save_image(const ImageBuffer& img, ImageFormat format, int jpeg_quality)
{
    return format == ImageFormat::Png ? encode_png(img) : encode_jpeg(img, jpeg_quality);
}

std::vector<uint8_t> encode_mask_png(const RegionMask& mask)
{
    std::vector<uint8_t> out;
    std::vector<uint8_t> row((mask.width() + 7) / 8);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) fail(Errc::EncodeFailure, "png_create_write_struct");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(Errc::EncodeFailure, "mask png write");
    }
    png_set_write_fn(png, &out, png_append, png_flush_noop);
    png_set_IHDR(png, info, mask.width(), mask.height(), 1, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (uint32_t y = 0; y < mask.height(); ++y) {
        std::fill(row.begin(), row.end(), 0);
        for (uint32_t x = 0; x < mask.width(); ++x)
            if (mask.at(x, y)) row[x / 8] |= uint8_t(0x80 >> (x % 8));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

RegionMask decode_mask_png(std::span<const uint8_t> bytes)
{
    if (detect_format(bytes) != ImageFormat::Png) fail(Errc::UnsupportedFormat, "mask must be a PNG");
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
        fail(Errc::CorruptData, std::string("mask png: ") + image.message);
    if (image.width > kMaxImageSide || image.height > kMaxImageSide) {
        png_image_free(&image);
        fail(Errc::UnsupportedFormat, "mask exceeds size limit");
    }
    image.format = PNG_FORMAT_GRAY;
    std::vector<uint8_t> gray(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, gray.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        fail(Errc::CorruptData, "mask png: " + msg);
    }
    RegionMask mask(image.width, image.height);
    for (size_t i = 0; i < gray.size(); ++i) mask.bits()[i] = gray[i] ? 1 : 0;
    return mask;
}

std::vector<uint8_t> read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::Io, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, std::span<const uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::Io, "cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) fail(Errc::Io, "short write to " + path);
}

void write_file(const std::string& path, std::string_view text)
{
    write_file(path, std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

} // namespace shroud
