#include "lupi/image_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

namespace lupi {
namespace {

constexpr double kScale8 = 255.0;
constexpr double kScale16 = 65535.0;

bool has_extension(const std::filesystem::path& p, const char* ext) {
    auto e = p.extension().string();
    for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return e == ext;
}

// ---------------------------------------------------------------------------
// PGM (binary P5)
// ---------------------------------------------------------------------------

int pgm_read_token(std::istream& in) {
    // Skips whitespace and '#' comments, then parses one unsigned integer.
    for (;;) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
    int value = -1;
    in >> value;
    return in ? value : -1;
}

GrayImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (magic[0] != 'P' || magic[1] != '5')
        throw FormatError(path.string() + ": not a binary PGM (P5)");
    const int w = pgm_read_token(in);
    const int h = pgm_read_token(in);
    const int maxval = pgm_read_token(in);
    if (w <= 0 || h <= 0) throw FormatError(path.string() + ": bad PGM dimensions");
    if (maxval != 255 && maxval != 65535)
        throw FormatError(path.string() + ": unsupported PGM maxval " + std::to_string(maxval) +
                          " (expected 255 or 65535)");
    in.get();  // single whitespace after maxval

    GrayImage img;
    img.width = w;
    img.height = h;
    img.source_bit_depth = maxval == 255 ? 8 : 16;
    img.data.resize(static_cast<size_t>(w) * h);
    const size_t n = img.data.size();
    if (maxval == 255) {
        std::vector<uint8_t> raw(n);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
        if (!in) throw FormatError(path.string() + ": truncated PGM payload");
        for (size_t i = 0; i < n; ++i) img.data[i] = raw[i] / kScale8;
    } else {
        std::vector<uint8_t> raw(n * 2);  // big-endian per PGM
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (!in) throw FormatError(path.string() + ": truncated PGM payload");
        for (size_t i = 0; i < n; ++i) {
            const uint16_t v = static_cast<uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
            img.data[i] = v / kScale16;
        }
    }
    return img;
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    const int maxval = img.source_bit_depth == 8 ? 255 : 65535;
    out << "P5\n" << img.width << " " << img.height << "\n" << maxval << "\n";
    const size_t n = img.data.size();
    if (maxval == 255) {
        std::vector<uint8_t> raw(n);
        for (size_t i = 0; i < n; ++i)
            raw[i] = static_cast<uint8_t>(std::lround(img.data[i] * kScale8));
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(n));
    } else {
        std::vector<uint8_t> raw(n * 2);
        for (size_t i = 0; i < n; ++i) {
            const auto v = static_cast<uint16_t>(std::lround(img.data[i] * kScale16));
            raw[2 * i] = static_cast<uint8_t>(v >> 8);
            raw[2 * i + 1] = static_cast<uint8_t>(v & 0xff);
        }
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    }
    if (!out) throw IoError("short write to " + path.string());
}

// ---------------------------------------------------------------------------
// PNG via libpng
// ---------------------------------------------------------------------------

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};

GrayImage load_png(const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) throw IoError("cannot open " + path.string());

    png_byte header[8];
    if (std::fread(header, 1, 8, fp.get()) != 8 || png_sig_cmp(header, 0, 8))
        throw FormatError(path.string() + ": not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw IoError("libpng initialization failed");
    }
    std::vector<png_bytep> row_ptrs;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path.string() + ": PNG decode error");
    }
    png_init_io(png, fp.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    if (color_type != PNG_COLOR_TYPE_GRAY) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path.string() + ": not a grayscale PNG");
    }
    if (bit_depth != 8 && bit_depth != 16) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw FormatError(path.string() + ": unsupported PNG bit depth " + std::to_string(bit_depth));
    }
    if (bit_depth == 16) png_set_swap(png);  // file is big-endian
    png_read_update_info(png, info);

    GrayImage img;
    img.width = w;
    img.height = h;
    img.source_bit_depth = bit_depth;
    img.data.resize(static_cast<size_t>(w) * h);

    const size_t row_bytes = png_get_rowbytes(png, info);
    std::vector<uint8_t> raw(row_bytes * static_cast<size_t>(h));
    row_ptrs.resize(static_cast<size_t>(h));
    for (int y = 0; y < h; ++y) row_ptrs[static_cast<size_t>(y)] = raw.data() + row_bytes * y;
    png_read_image(png, row_ptrs.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    if (bit_depth == 8) {
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                img.at(x, y) = raw[row_bytes * y + static_cast<size_t>(x)] / kScale8;
    } else {
        for (int y = 0; y < h; ++y) {
            const auto* row = reinterpret_cast<const uint16_t*>(raw.data() + row_bytes * y);
            for (int x = 0; x < w; ++x) img.at(x, y) = row[x] / kScale16;
        }
    }
    return img;
}

void save_png(const GrayImage& img, const std::filesystem::path& path) {
    std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) throw IoError("cannot write " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError(path.string() + ": PNG encode error");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
                 static_cast<png_uint_32>(img.height), img.source_bit_depth,
                 PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (img.source_bit_depth == 16) png_set_swap(png);

    const size_t w = static_cast<size_t>(img.width);
    if (img.source_bit_depth == 8) {
        std::vector<uint8_t> row(w);
        for (int y = 0; y < img.height; ++y) {
            for (size_t x = 0; x < w; ++x)
                row[x] = static_cast<uint8_t>(std::lround(img.at(static_cast<int>(x), y) * kScale8));
            png_write_row(png, row.data());
        }
    } else {
        std::vector<uint16_t> row(w);
        for (int y = 0; y < img.height; ++y) {
            for (size_t x = 0; x < w; ++x)
                row[x] = static_cast<uint16_t>(std::lround(img.at(static_cast<int>(x), y) * kScale16));
            png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
        }
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

GrayImage load_gray_image(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw IoError("no such file: " + path.string());
    GrayImage img;
    if (has_extension(path, ".pgm"))
        img = load_pgm(path);
    else if (has_extension(path, ".png"))
        img = load_png(path);
    else
        throw FormatError(path.string() + ": unsupported image format (want .png or .pgm)");
    img.validate();
    return img;
}

void save_gray_image(const GrayImage& img, const std::filesystem::path& path) {
    img.validate();
    if (has_extension(path, ".pgm"))
        save_pgm(img, path);
    else if (has_extension(path, ".png"))
        save_png(img, path);
    else
        throw FormatError(path.string() + ": unsupported image format (want .png or .pgm)");
}

MaskImage load_mask_image(const std::filesystem::path& path) {
    const GrayImage raw = load_gray_image(path);
    MaskImage mask;
    mask.width = raw.width;
    mask.height = raw.height;
    mask.labels.resize(raw.data.size());
    for (size_t i = 0; i < raw.data.size(); ++i) mask.labels[i] = raw.data[i] > 0.0 ? 1 : 0;
    return mask;
}

void save_mask_image(const MaskImage& mask, const std::filesystem::path& path) {
    mask.validate();
    GrayImage img;
    img.width = mask.width;
    img.height = mask.height;
    img.source_bit_depth = 8;
    img.data.resize(mask.labels.size());
    for (size_t i = 0; i < mask.labels.size(); ++i) img.data[i] = mask.labels[i] ? 1.0 : 0.0;
    save_gray_image(img, path);
}

}  // namespace lupi
