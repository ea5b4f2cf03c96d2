#include "mfuse/nn/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <stdexcept>

namespace mfuse::nn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;

using Node = Tensor::Node;

void require_same(const Tensor& a, const Tensor& b, const char* op)
{
    if (a.shape() != b.shape())
        throw std::invalid_argument(fmt::format("{}: shape mismatch {} vs {}", op, a.shape().str(), b.shape().str()));
}

bool wants_grad(const Node& self, std::size_t i)
{
    return self.parents[i] != nullptr && self.parents[i]->requires_grad;
}

// col[(ci * k + ky) * k + kx][y * w + x] = src[ci][y + ky - pad][x + kx - pad], zero outside.
void im2col(const double* src, std::size_t cin, std::size_t h, std::size_t w, std::size_t k, double* col)
{
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    const std::size_t hw = h * w;
    for (std::size_t ci = 0; ci < cin; ++ci) {
        const double* plane = src + ci * hw;
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                double* row = col + ((ci * k + ky) * k + kx) * hw;
                const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
                const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
                const std::size_t x_lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dx));
                const std::size_t x_hi =
                    static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w),
                                                                      static_cast<std::ptrdiff_t>(w) - dx));
                for (std::size_t y = 0; y < h; ++y) {
                    double* out = row + y * w;
                    const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
                    if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
                        std::fill(out, out + w, 0.0);
                        continue;
                    }
                    const double* in = plane + static_cast<std::size_t>(sy) * w;
                    std::fill(out, out + x_lo, 0.0);
                    for (std::size_t x = x_lo; x < x_hi; ++x)
                        out[x] = in[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(x) + dx)];
                    std::fill(out + x_hi, out + w, 0.0);
                }
            }
        }
    }
}

// Adjoint of im2col: scatter-add columns back into the image.
void col2im_add(const double* col, std::size_t cin, std::size_t h, std::size_t w, std::size_t k, double* dst)
{
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    const std::size_t hw = h * w;
    for (std::size_t ci = 0; ci < cin; ++ci) {
        double* plane = dst + ci * hw;
        for (std::size_t ky = 0; ky < k; ++ky) {
            for (std::size_t kx = 0; kx < k; ++kx) {
                const double* row = col + ((ci * k + ky) * k + kx) * hw;
                const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - pad;
                const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
                const std::size_t x_lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dx));
                const std::size_t x_hi =
                    static_cast<std::size_t>(std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(w),
                                                                      static_cast<std::ptrdiff_t>(w) - dx));
                for (std::size_t y = 0; y < h; ++y) {
                    const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y) + dy;
                    if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h))
                        continue;
                    const double* in = row + y * w;
                    double* out = plane + static_cast<std::size_t>(sy) * w;
                    for (std::size_t x = x_lo; x < x_hi; ++x)
                        out[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(x) + dx)] += in[x];
                }
            }
        }
    }
}

template <class Fwd, class Deriv>
Tensor unary(const Tensor& x, Fwd fwd, Deriv deriv)
{
    Buffer out(x.numel());
    auto xv = x.values();
    std::transform(xv.begin(), xv.end(), out.begin(), fwd);
    return Tensor::make_result(x.shape(), std::move(out), {x}, [deriv](Node& self) {
        Node& px = *self.parents[0];
        for (std::size_t i = 0; i < self.grad.size(); ++i)
            px.grad[i] += self.grad[i] * deriv(px.value[i], self.value[i]);
    });
}

} // namespace

Tensor conv2d(const Tensor& x, const Tensor& weight, const Tensor& bias)
{
    const Shape xs = x.shape();
    const Shape ws = weight.shape();
    if (ws.h != ws.w || ws.h % 2 == 0)
        throw std::invalid_argument(fmt::format("conv2d: kernel {} must be square and odd", ws.str()));
    if (ws.c != xs.c)
        throw std::invalid_argument(
            fmt::format("conv2d: input has {} channels, kernel expects {}", xs.c, ws.c));
    if (bias.defined() && bias.shape() != Shape{1, ws.n, 1, 1})
        throw std::invalid_argument(fmt::format("conv2d: bias shape {} does not match {} outputs", bias.shape().str(), ws.n));

    const std::size_t k = ws.h;
    const std::size_t cout = ws.n;
    const std::size_t cin = xs.c;
    const std::size_t hw = xs.plane();
    const std::size_t rows = cin * k * k;
    const Shape os{xs.n, cout, xs.h, xs.w};

    Buffer out(os.numel());
    Buffer col(rows * hw);
    ConstMatMap wm(weight.values().data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(rows));
    for (std::size_t b = 0; b < xs.n; ++b) {
        im2col(x.values().data() + b * cin * hw, cin, xs.h, xs.w, k, col.data());
        ConstMatMap cm(col.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(hw));
        MatMap om(out.data() + b * cout * hw, static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(hw));
        om.noalias() = wm * cm;
        if (bias.defined())
            for (std::size_t co = 0; co < cout; ++co)
                om.row(static_cast<Eigen::Index>(co)).array() += bias.values()[co];
    }

    return Tensor::make_result(os, std::move(out), {x, weight, bias}, [xs, k, cout, cin, hw, rows](Node& self) {
        const bool gx = wants_grad(self, 0);
        const bool gw = wants_grad(self, 1);
        const bool gb = wants_grad(self, 2);
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        Buffer col(rows * hw);
        ConstMatMap wm(pw.value.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(rows));
        for (std::size_t b = 0; b < xs.n; ++b) {
            ConstMatMap dout(self.grad.data() + b * cout * hw, static_cast<Eigen::Index>(cout),
                             static_cast<Eigen::Index>(hw));
            if (gw) {
                im2col(px.value.data() + b * cin * hw, cin, xs.h, xs.w, k, col.data());
                ConstMatMap cm(col.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(hw));
                MatMap dw(pw.grad.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(rows));
                dw.noalias() += dout * cm.transpose();
            }
            if (gb) {
                Node& pb = *self.parents[2];
                for (std::size_t co = 0; co < cout; ++co)
                    pb.grad[co] += dout.row(static_cast<Eigen::Index>(co)).sum();
            }
            if (gx) {
                MatMap dcol(col.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(hw));
                dcol.noalias() = wm.transpose() * dout;
                col2im_add(col.data(), cin, xs.h, xs.w, k, px.grad.data() + b * cin * hw);
            }
        }
    });
}

Tensor dense(const Tensor& x, const Tensor& weight, const Tensor& bias)
{
    const Shape xs = x.shape();
    const Shape ws = weight.shape();
    const std::size_t in = xs.c * xs.h * xs.w;
    if (ws.c != in || ws.h != 1 || ws.w != 1)
        throw std::invalid_argument(
            fmt::format("dense: {} input features do not match weight {}", in, ws.str()));
    if (bias.defined() && bias.shape() != Shape{1, ws.n, 1, 1})
        throw std::invalid_argument(fmt::format("dense: bias shape {} does not match {} outputs", bias.shape().str(), ws.n));
    const std::size_t out_f = ws.n;
    const Shape os{xs.n, out_f, 1, 1};
    Buffer out(os.numel());
    for (std::size_t b = 0; b < xs.n; ++b)
        for (std::size_t o = 0; o < out_f; ++o) {
            double acc = bias.defined() ? bias.values()[o] : 0.0;
            for (std::size_t i = 0; i < in; ++i)
                acc += weight.values()[o * in + i] * x.values()[b * in + i];
            out[b * out_f + o] = acc;
        }
    return Tensor::make_result(os, std::move(out), {x, weight, bias}, [n = xs.n, in, out_f](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        const bool gx = wants_grad(self, 0);
        const bool gw = wants_grad(self, 1);
        const bool gb = wants_grad(self, 2);
        for (std::size_t b = 0; b < n; ++b)
            for (std::size_t o = 0; o < out_f; ++o) {
                const double g = self.grad[b * out_f + o];
                if (gb)
                    self.parents[2]->grad[o] += g;
                for (std::size_t i = 0; i < in; ++i) {
                    if (gw)
                        pw.grad[o * in + i] += g * px.value[b * in + i];
                    if (gx)
                        px.grad[b * in + i] += g * pw.value[o * in + i];
                }
            }
    });
}

Tensor batch_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, std::span<const double> running_mean,
                  std::span<const double> running_var, bool use_batch_stats, double eps, BatchMoments* moments)
{
    const Shape xs = x.shape();
    const std::size_t c = xs.c;
    const Shape ps{1, c, 1, 1};
    if (gamma.shape() != ps || beta.shape() != ps || running_mean.size() != c || running_var.size() != c)
        throw std::invalid_argument(fmt::format("batch_norm: parameters do not match {} channels", c));
    const std::size_t hw = xs.plane();
    const std::size_t m = xs.n * hw;
    const bool batch_stats = use_batch_stats;
    if (moments != nullptr && batch_stats) {
        moments->mean.assign(c, 0.0);
        moments->unbiased_var.assign(c, 0.0);
    }

    std::vector<double> mu(c), inv_std(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
        if (batch_stats) {
            double s = 0.0;
            for (std::size_t b = 0; b < xs.n; ++b)
                for (std::size_t i = 0; i < hw; ++i)
                    s += x.values()[(b * c + ch) * hw + i];
            const double mean = s / static_cast<double>(m);
            double ss = 0.0;
            for (std::size_t b = 0; b < xs.n; ++b)
                for (std::size_t i = 0; i < hw; ++i) {
                    const double d = x.values()[(b * c + ch) * hw + i] - mean;
                    ss += d * d;
                }
            const double var = ss / static_cast<double>(m);
            mu[ch] = mean;
            inv_std[ch] = 1.0 / std::sqrt(var + eps);
            if (moments != nullptr) {
                moments->mean[ch] = mean;
                moments->unbiased_var[ch] = m > 1 ? ss / static_cast<double>(m - 1) : var;
            }
        } else {
            mu[ch] = running_mean[ch];
            inv_std[ch] = 1.0 / std::sqrt(running_var[ch] + eps);
        }
    }

    std::vector<double> xhat(xs.numel());
    Buffer out(xs.numel());
    for (std::size_t b = 0; b < xs.n; ++b)
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < hw; ++i) {
                const std::size_t idx = (b * c + ch) * hw + i;
                xhat[idx] = (x.values()[idx] - mu[ch]) * inv_std[ch];
                out[idx] = gamma.values()[ch] * xhat[idx] + beta.values()[ch];
            }

    return Tensor::make_result(
        xs, std::move(out), {x, gamma, beta},
        [xs, c, hw, m, batch_stats, inv_std = std::move(inv_std), xhat = std::move(xhat)](Node& self) {
            Node& px = *self.parents[0];
            const Node& pg = *self.parents[1];
            const bool gx = wants_grad(self, 0);
            const bool gg = wants_grad(self, 1);
            const bool gb = wants_grad(self, 2);
            for (std::size_t ch = 0; ch < c; ++ch) {
                double sum_dy = 0.0;
                double sum_dy_xhat = 0.0;
                for (std::size_t b = 0; b < xs.n; ++b)
                    for (std::size_t i = 0; i < hw; ++i) {
                        const std::size_t idx = (b * c + ch) * hw + i;
                        sum_dy += self.grad[idx];
                        sum_dy_xhat += self.grad[idx] * xhat[idx];
                    }
                if (gg)
                    self.parents[1]->grad[ch] += sum_dy_xhat;
                if (gb)
                    self.parents[2]->grad[ch] += sum_dy;
                if (!gx)
                    continue;
                const double g = pg.value[ch];
                const double scale_ = g * inv_std[ch];
                const double mean_dy = sum_dy / static_cast<double>(m);
                const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(m);
                for (std::size_t b = 0; b < xs.n; ++b)
                    for (std::size_t i = 0; i < hw; ++i) {
                        const std::size_t idx = (b * c + ch) * hw + i;
                        if (batch_stats)
                            px.grad[idx] += scale_ * (self.grad[idx] - mean_dy - xhat[idx] * mean_dy_xhat);
                        else
                            px.grad[idx] += scale_ * self.grad[idx];
                    }
            }
        });
}

Tensor relu(const Tensor& x)
{
    return unary(
        x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

Tensor sigmoid(const Tensor& x)
{
    return unary(
        x,
        [](double v) {
            if (v >= 0.0)
                return 1.0 / (1.0 + std::exp(-v));
            const double e = std::exp(v);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor softmax_channels(const Tensor& x)
{
    const Shape xs = x.shape();
    const std::size_t hw = xs.plane();
    Buffer out(xs.numel());
    for (std::size_t b = 0; b < xs.n; ++b)
        for (std::size_t i = 0; i < hw; ++i) {
            const std::size_t base = b * xs.c * hw + i;
            double mx = x.values()[base];
            for (std::size_t ch = 1; ch < xs.c; ++ch)
                mx = std::max(mx, x.values()[base + ch * hw]);
            double total = 0.0;
            for (std::size_t ch = 0; ch < xs.c; ++ch) {
                const double e = std::exp(x.values()[base + ch * hw] - mx);
                out[base + ch * hw] = e;
                total += e;
            }
            for (std::size_t ch = 0; ch < xs.c; ++ch)
                out[base + ch * hw] /= total;
        }
    return Tensor::make_result(xs, std::move(out), {x}, [xs, hw](Node& self) {
        Node& px = *self.parents[0];
        for (std::size_t b = 0; b < xs.n; ++b)
            for (std::size_t i = 0; i < hw; ++i) {
                const std::size_t base = b * xs.c * hw + i;
                double dot = 0.0;
                for (std::size_t ch = 0; ch < xs.c; ++ch)
                    dot += self.grad[base + ch * hw] * self.value[base + ch * hw];
                for (std::size_t ch = 0; ch < xs.c; ++ch) {
                    const std::size_t idx = base + ch * hw;
                    px.grad[idx] += self.value[idx] * (self.grad[idx] - dot);
                }
            }
    });
}

Tensor global_avg_pool(const Tensor& x)
{
    const Shape xs = x.shape();
    const std::size_t hw = xs.plane();
    const Shape os{xs.n, xs.c, 1, 1};
    Buffer out(os.numel());
    for (std::size_t p = 0; p < os.numel(); ++p) {
        double s = 0.0;
        for (std::size_t i = 0; i < hw; ++i)
            s += x.values()[p * hw + i];
        out[p] = s / static_cast<double>(hw);
    }
    return Tensor::make_result(os, std::move(out), {x}, [hw](Node& self) {
        Node& px = *self.parents[0];
        const double inv = 1.0 / static_cast<double>(hw);
        for (std::size_t p = 0; p < self.grad.size(); ++p)
            for (std::size_t i = 0; i < hw; ++i)
                px.grad[p * hw + i] += self.grad[p] * inv;
    });
}

Tensor concat_channels(std::span<const Tensor> parts)
{
    if (parts.empty())
        throw std::invalid_argument("concat_channels: nothing to concatenate");
    const Shape first = parts.front().shape();
    std::size_t channels = 0;
    for (const auto& p : parts) {
        const Shape s = p.shape();
        if (s.n != first.n || s.h != first.h || s.w != first.w)
            throw std::invalid_argument(
                fmt::format("concat_channels: {} incompatible with {}", s.str(), first.str()));
        channels += s.c;
    }
    const Shape os{first.n, channels, first.h, first.w};
    const std::size_t hw = first.plane();
    Buffer out(os.numel());
    std::vector<std::size_t> offsets;
    std::size_t offset = 0;
    for (const auto& p : parts) {
        offsets.push_back(offset);
        const std::size_t pc = p.shape().c;
        for (std::size_t b = 0; b < first.n; ++b)
            std::copy_n(p.values().data() + b * pc * hw, pc * hw, out.data() + (b * channels + offset) * hw);
        offset += pc;
    }
    return Tensor::make_result(os, std::move(out), {parts.begin(), parts.end()},
                               [n = first.n, channels, hw, offsets](Node& self) {
                                   for (std::size_t k = 0; k < self.parents.size(); ++k) {
                                       if (!wants_grad(self, k))
                                           continue;
                                       Node& p = *self.parents[k];
                                       const std::size_t pc = p.shape.c;
                                       for (std::size_t b = 0; b < n; ++b)
                                           for (std::size_t i = 0; i < pc * hw; ++i)
                                               p.grad[b * pc * hw + i] +=
                                                   self.grad[(b * channels + offsets[k]) * hw + i];
                                   }
                               });
}

Tensor convex_combine(const Tensor& weights, const Tensor& x)
{
    const Shape xs = x.shape();
    const Shape ws = weights.shape();
    const bool per_pixel = ws.h == xs.h && ws.w == xs.w;
    const bool per_channel = ws.h == 1 && ws.w == 1;
    if (ws.n != xs.n || ws.c != xs.c || !(per_pixel || per_channel))
        throw std::invalid_argument(
            fmt::format("convex_combine: weights {} incompatible with branches {}", ws.str(), xs.str()));
    const std::size_t hw = xs.plane();
    const std::size_t nc = xs.c;
    auto widx = [=](std::size_t b, std::size_t ch, std::size_t i) {
        return per_pixel ? (b * nc + ch) * hw + i : b * nc + ch;
    };
    const Shape os{xs.n, 1, xs.h, xs.w};
    Buffer out(os.numel());
    for (std::size_t b = 0; b < xs.n; ++b)
        for (std::size_t i = 0; i < hw; ++i) {
            const double x0 = x.values()[b * nc * hw + i];
            double acc = 0.0;
            for (std::size_t ch = 1; ch < nc; ++ch)
                acc += weights.values()[widx(b, ch, i)] * (x.values()[(b * nc + ch) * hw + i] - x0);
            out[b * hw + i] = x0 + acc;
        }
    return Tensor::make_result(os, std::move(out), {weights, x}, [xs, hw, nc, widx](Node& self) {
        Node& pw = *self.parents[0];
        Node& px = *self.parents[1];
        const bool gw = wants_grad(self, 0);
        const bool gx = wants_grad(self, 1);
        for (std::size_t b = 0; b < xs.n; ++b)
            for (std::size_t i = 0; i < hw; ++i) {
                const double g = self.grad[b * hw + i];
                const std::size_t i0 = b * nc * hw + i;
                const double x0 = px.value[i0];
                double rest = 0.0;
                for (std::size_t ch = 1; ch < nc; ++ch) {
                    const std::size_t xi = (b * nc + ch) * hw + i;
                    const double wv = pw.value[widx(b, ch, i)];
                    rest += wv;
                    if (gw)
                        pw.grad[widx(b, ch, i)] += g * (px.value[xi] - x0);
                    if (gx)
                        px.grad[xi] += g * wv;
                }
                if (gx)
                    px.grad[i0] += g * (1.0 - rest);
            }
    });
}

Tensor add(const Tensor& a, const Tensor& b)
{
    require_same(a, b, "add");
    Buffer out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a.values()[i] + b.values()[i];
    return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        for (std::size_t k = 0; k < 2; ++k)
            if (wants_grad(self, k))
                for (std::size_t i = 0; i < self.grad.size(); ++i)
                    self.parents[k]->grad[i] += self.grad[i];
    });
}

Tensor sub(const Tensor& a, const Tensor& b)
{
    require_same(a, b, "sub");
    Buffer out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a.values()[i] - b.values()[i];
    return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        if (wants_grad(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                self.parents[0]->grad[i] += self.grad[i];
        if (wants_grad(self, 1))
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                self.parents[1]->grad[i] -= self.grad[i];
    });
}

Tensor mul(const Tensor& a, const Tensor& b)
{
    require_same(a, b, "mul");
    Buffer out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a.values()[i] * b.values()[i];
    return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (wants_grad(self, 0))
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                pa.grad[i] += self.grad[i] * pb.value[i];
        if (wants_grad(self, 1))
            for (std::size_t i = 0; i < self.grad.size(); ++i)
                pb.grad[i] += self.grad[i] * pa.value[i];
    });
}

Tensor scale(const Tensor& a, double factor)
{
    return unary(
        a, [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Tensor square(const Tensor& a)
{
    return unary(
        a, [](double v) { return v * v; }, [](double in, double) { return 2.0 * in; });
}

Tensor abs(const Tensor& a)
{
    return unary(
        a, [](double v) { return std::abs(v); },
        [](double in, double) { return in > 0.0 ? 1.0 : (in < 0.0 ? -1.0 : 0.0); });
}

Tensor sum(const Tensor& a)
{
    double s = 0.0;
    for (double v : a.values())
        s += v;
    return Tensor::make_result(Shape{}, {s}, {a}, [](Node& self) {
        Node& pa = *self.parents[0];
        for (double& g : pa.grad)
            g += self.grad[0];
    });
}

Tensor mean(const Tensor& a)
{
    double s = 0.0;
    for (double v : a.values())
        s += v;
    const double inv = 1.0 / static_cast<double>(a.numel());
    return Tensor::make_result(Shape{}, {s * inv}, {a}, [inv](Node& self) {
        Node& pa = *self.parents[0];
        for (double& g : pa.grad)
            g += self.grad[0] * inv;
    });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target)
{
    require_same(pred, target, "mse_loss");
    const std::size_t n = pred.numel();
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = pred.values()[i] - target.values()[i];
        s += d * d;
    }
    return Tensor::make_result(Shape{}, {s / static_cast<double>(n)}, {pred, target}, [n](Node& self) {
        Node& pp = *self.parents[0];
        Node& pt = *self.parents[1];
        const double k = 2.0 * self.grad[0] / static_cast<double>(n);
        const bool gp = wants_grad(self, 0);
        const bool gt = wants_grad(self, 1);
        for (std::size_t i = 0; i < n; ++i) {
            const double d = k * (pp.value[i] - pt.value[i]);
            if (gp)
                pp.grad[i] += d;
            if (gt)
                pt.grad[i] -= d;
        }
    });
}

} // namespace mfuse::nn
