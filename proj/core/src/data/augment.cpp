#include "scs/data/augment.hpp"

#include <vector>

namespace scs::data {

namespace {

void check_nchw(const Tensor& t) {
    if (t.ndim() != 4) throw ShapeError("augmentation expects NCHW, got " + shape_str(t.shape()));
}

// Writes one image (C,H,W) cropped at (dy,dx) from its pad-extended version,
// optionally mirrored.
void crop_one(const double* src, double* dst, std::size_t c, std::size_t h, std::size_t w,
              std::size_t pad, std::size_t dy, std::size_t dx, bool flip) {
    for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x) {
                const std::size_t xs = flip ? (w - 1 - x) : x;
                const auto sy = static_cast<std::ptrdiff_t>(y + dy) - static_cast<std::ptrdiff_t>(pad);
                const auto sx = static_cast<std::ptrdiff_t>(xs + dx) - static_cast<std::ptrdiff_t>(pad);
                double v = 0.0;
                if (sy >= 0 && sx >= 0 && sy < static_cast<std::ptrdiff_t>(h) &&
                    sx < static_cast<std::ptrdiff_t>(w)) {
                    v = src[(ch * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx)];
                }
                dst[(ch * h + y) * w + x] = v;
            }
}

}  // namespace

Tensor crop_padded(const Tensor& batch, std::size_t pad, std::size_t dy, std::size_t dx) {
    check_nchw(batch);
    if (dy > 2 * pad || dx > 2 * pad) throw ShapeError("crop offset outside padded image");
    const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
    std::vector<double> out(batch.numel());
    const std::size_t per = c * h * w;
    for (std::size_t b = 0; b < n; ++b)
        crop_one(batch.data().data() + b * per, out.data() + b * per, c, h, w, pad, dy, dx, false);
    return Tensor::from_vector(batch.shape(), std::move(out));
}

Tensor hflip(const Tensor& batch) {
    check_nchw(batch);
    const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
    std::vector<double> out(batch.numel());
    const std::size_t per = c * h * w;
    for (std::size_t b = 0; b < n; ++b)
        crop_one(batch.data().data() + b * per, out.data() + b * per, c, h, w, 0, 0, 0, true);
    return Tensor::from_vector(batch.shape(), std::move(out));
}

Tensor augment(const Tensor& batch, const AugmentationConfig& cfg, std::mt19937_64& rng) {
    check_nchw(batch);
    if (!cfg.enabled) return batch;
    const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
    const std::size_t per = c * h * w;
    std::uniform_int_distribution<std::size_t> offset(0, 2 * cfg.crop_pad);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    std::vector<double> out(batch.numel());
    for (std::size_t b = 0; b < n; ++b) {
        const std::size_t dy = offset(rng);
        const std::size_t dx = offset(rng);
        const bool flip = coin(rng) < cfg.flip_prob;
        crop_one(batch.data().data() + b * per, out.data() + b * per, c, h, w, cfg.crop_pad, dy, dx,
                 flip);
    }
    return Tensor::from_vector(batch.shape(), std::move(out));
}

}  // namespace scs::data
