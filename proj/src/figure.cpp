#include "stancekit/error.hpp"
#include "stancekit/evaluation.hpp"
#include "stancekit/font.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <memory>
#include <string>

namespace stancekit {

namespace {

struct Rgb {
    std::uint8_t r, g, b;
};

constexpr Rgb background{255, 255, 255};
constexpr Rgb black{0, 0, 0};
constexpr Rgb white{255, 255, 255};
constexpr Rgb gridline{190, 190, 190};
constexpr Rgb cold{247, 251, 255};
constexpr Rgb hot{8, 48, 107};

constexpr int margin = 16;
constexpr int gap = 10;

class Canvas {
public:
    Canvas(int w, int h) : width_(w), height_(h), pixels_(static_cast<std::size_t>(w) * h * 3) {
        fill(0, 0, w, h, background);
    }

    void fill(int x0, int y0, int w, int h, Rgb c) {
        for (int y = std::max(0, y0); y < std::min(height_, y0 + h); ++y) {
            for (int x = std::max(0, x0); x < std::min(width_, x0 + w); ++x) {
                set(x, y, c);
            }
        }
    }

    void text(int x, int y, std::string_view s, int scale, Rgb c) {
        for (const char ch : s) {
            const auto rows = font::glyph(ch);
            for (int gy = 0; gy < font::glyph_height; ++gy) {
                for (int gx = 0; gx < font::glyph_width; ++gx) {
                    if ((rows[gy] >> (font::glyph_width - 1 - gx)) & 1U) {
                        fill(x + gx * scale, y + gy * scale, scale, scale, c);
                    }
                }
            }
            x += font::advance * scale;
        }
    }

    [[nodiscard]] int width() const noexcept { return width_; }
    [[nodiscard]] int height() const noexcept { return height_; }
    [[nodiscard]] const std::uint8_t *row(int y) const noexcept { return &pixels_[static_cast<std::size_t>(y) * width_ * 3]; }

private:
    void set(int x, int y, Rgb c) {
        const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
        pixels_[i] = c.r;
        pixels_[i + 1] = c.g;
        pixels_[i + 2] = c.b;
    }

    int width_;
    int height_;
    std::vector<std::uint8_t> pixels_;
};

Rgb lerp(Rgb a, Rgb b, double t) {
    auto mix = [t](std::uint8_t x, std::uint8_t y) {
        return static_cast<std::uint8_t>(static_cast<double>(x) + (static_cast<double>(y) - x) * t + 0.5);
    };
    return {mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

std::size_t matrix_max(const MetricsReport &report) {
    std::size_t top = 0;
    for (const auto &row : report.confusion) {
        for (const std::size_t v : row) {
            top = std::max(top, v);
        }
    }
    return top;
}

void write_png(const Canvas &canvas, const std::filesystem::path &path, const std::string &matrix_text) {
    std::unique_ptr<std::FILE, int (*)(std::FILE *)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) {
        throw UnwritablePath(path.string());
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (png == nullptr || info == nullptr) {
        png_destroy_write_struct(&png, &info);
        throw UnwritablePath(path.string());
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw UnwritablePath(path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(canvas.width()), static_cast<png_uint_32>(canvas.height()), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_set_compression_level(png, 9);

    std::string key = "confusion";
    png_text chunk{};
    chunk.compression = PNG_TEXT_COMPRESSION_NONE;
    chunk.key = key.data();
    chunk.text = const_cast<char *>(matrix_text.c_str());
    chunk.text_length = matrix_text.size();
    png_set_text(png, info, &chunk, 1);

    png_write_info(png, info);
    for (int y = 0; y < canvas.height(); ++y) {
        png_write_row(png, const_cast<png_bytep>(canvas.row(y)));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

}  // namespace

FigureLayout figure_layout(const MetricsReport &report, const TaskSpec &task, const FigureOptions &options) {
    FigureLayout layout;
    layout.classes = task.size();
    int label_px = font::text_width("GOLD", options.label_scale);
    for (const auto &l : task.labels()) {
        label_px = std::max(label_px, font::text_width(l, options.label_scale));
    }
    const int digits_px = font::text_width(std::to_string(matrix_max(report)), options.digit_scale);
    layout.cell_size = options.cell_size > 0 ? options.cell_size : std::max({96, label_px + 16, digits_px + 16});

    const int line = font::glyph_height * options.label_scale;
    layout.grid_left = margin + label_px + gap;
    layout.grid_top = margin + 3 * (line + gap);
    const int k = static_cast<int>(layout.classes);
    layout.width = layout.grid_left + k * layout.cell_size + margin;
    layout.height = layout.grid_top + k * layout.cell_size + margin;
    return layout;
}

void confusion_figure(const MetricsReport &report, const TaskSpec &task, const std::filesystem::path &path, const FigureOptions &options) {
    const std::size_t k = task.size();
    if (report.confusion.size() != k) {
        throw InvalidArgument("confusion matrix size does not match the task");
    }
    for (const auto &row : report.confusion) {
        if (row.size() != k) {
            throw InvalidArgument("confusion matrix is not square");
        }
    }
    const std::size_t top = matrix_max(report);
    if (top == 0) {
        throw InvalidArgument("confusion matrix is all zero; nothing was scored");
    }

    const FigureLayout layout = figure_layout(report, task, options);
    Canvas canvas(layout.width, layout.height);
    const int ls = options.label_scale;
    const int line = font::glyph_height * ls;
    const int grid_w = static_cast<int>(k) * layout.cell_size;

    canvas.text(margin, margin, "CONFUSION MATRIX: " + task.name(), ls, black);
    const std::string predicted = "PREDICTED";
    canvas.text(layout.grid_left + (grid_w - font::text_width(predicted, ls)) / 2, margin + line + gap, predicted, ls, black);
    canvas.text(margin, margin + 2 * (line + gap), "GOLD", ls, black);

    std::string matrix_text;
    for (std::size_t i = 0; i < k; ++i) {
        const auto &label = task.labels()[i];
        const int cx = layout.grid_left + static_cast<int>(i) * layout.cell_size;
        canvas.text(cx + (layout.cell_size - font::text_width(label, ls)) / 2, margin + 2 * (line + gap), label, ls, black);
        const int ry = layout.grid_top + static_cast<int>(i) * layout.cell_size;
        canvas.text(layout.grid_left - gap - font::text_width(label, ls), ry + (layout.cell_size - line) / 2, label, ls, black);
    }

    const int ds = options.digit_scale;
    for (std::size_t g = 0; g < k; ++g) {
        for (std::size_t p = 0; p < k; ++p) {
            const std::size_t v = report.confusion[g][p];
            const double t = static_cast<double>(v) / static_cast<double>(top);
            const int x = layout.grid_left + static_cast<int>(p) * layout.cell_size;
            const int y = layout.grid_top + static_cast<int>(g) * layout.cell_size;
            canvas.fill(x, y, layout.cell_size, layout.cell_size, gridline);
            canvas.fill(x + 1, y + 1, layout.cell_size - 2, layout.cell_size - 2, lerp(cold, hot, t));
            const std::string count = std::to_string(v);
            canvas.text(x + (layout.cell_size - font::text_width(count, ds)) / 2, y + (layout.cell_size - font::glyph_height * ds) / 2, count, ds,
                        t > 0.5 ? white : black);
            matrix_text += count;
            matrix_text += p + 1 == k ? (g + 1 == k ? "" : ";") : ",";
        }
    }
    write_png(canvas, path, matrix_text);
}

}  // namespace stancekit
