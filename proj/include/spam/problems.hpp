#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "spam/errors.hpp"
#include "spam/injectors.hpp"
#include "spam/param_store.hpp"
#include "spam/rng.hpp"

namespace spam {

/// Desk-scale optimization problem with an analytic gradient. `loss` is the
/// full deterministic objective; `gradient` evaluates a mini-batch selected by
/// the given seed, or the full batch when the seed is absent. The optional
/// corruptor perturbs the batch inputs before differentiation. Problems are
/// immutable after construction; gradient evaluation is a pure function of
/// (w, batch seed, corruptor state).
struct Problem {
    std::string name;
    std::size_t dimension = 0;
    SegmentSpec segment_spec;
    std::optional<double> optimum_value;
    std::function<double(std::span<const double>)> loss;
    std::function<std::vector<double>(std::span<const double>, std::optional<std::uint64_t>,
                                      AnomalyInjector*)>
        gradient;
    std::function<std::vector<double>(RngStream&)> initial_point;
};

namespace detail {

inline std::vector<double> zeros_init(std::size_t n) { return std::vector<double>(n, 0.0); }

/// Draw `take` distinct sample indices out of m, seeded by the batch seed.
inline std::vector<std::size_t> batch_indices(std::size_t m, std::size_t take,
                                              std::uint64_t batch_seed) {
    RngStream rng(batch_seed, Stream::batches);
    std::vector<std::size_t> pool(m);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    take = std::min(take, m);
    for (std::size_t i = 0; i < take; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(m - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(take);
    return pool;
}

}  // namespace detail

/// loss = 0.5 * sum_i lambda_i * (w_i - w*_i)^2 with eigenvalues log-spaced in
/// [1, condition] and a Gaussian target point. Deterministic gradient; the
/// batch seed and corruptor are ignored. Optimum value 0.
inline Problem quadratic_problem(std::size_t n, double condition, RngStream& rng) {
    if (n == 0) throw InvalidSpec("dimension must be >= 1");
    if (condition < 1.0) throw InvalidSpec("condition number must be >= 1");

    struct Data {
        std::vector<double> lambda, target;
    };
    auto data = std::make_shared<Data>();
    data->lambda.resize(n);
    data->target.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double frac = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        data->lambda[i] = std::pow(condition, frac);
        data->target[i] = rng.next_gaussian();
    }

    Problem p;
    p.name = "quadratic";
    p.dimension = n;
    p.segment_spec = {{"w", n}};
    p.optimum_value = 0.0;
    p.loss = [data](std::span<const double> w) {
        double acc = 0.0;
        for (std::size_t i = 0; i < data->lambda.size(); ++i) {
            const double d = w[i] - data->target[i];
            acc += data->lambda[i] * d * d;
        }
        return 0.5 * acc;
    };
    p.gradient = [data](std::span<const double> w, std::optional<std::uint64_t>,
                        AnomalyInjector*) {
        std::vector<double> g(data->lambda.size());
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = data->lambda[i] * (w[i] - data->target[i]);
        return g;
    };
    p.initial_point = [n](RngStream&) { return detail::zeros_init(n); };
    return p;
}

/// Binary logistic regression on a synthetic nearly-separable dataset:
/// Gaussian features, labels from a random ground-truth direction plus label
/// noise, mean log-loss with a small ridge term so the objective is strictly
/// convex. Mini-batches are drawn without replacement by seeded shuffling.
inline Problem logistic_problem(std::size_t features, std::size_t samples, RngStream& rng,
                                std::size_t batch_size = 32, double label_noise = 0.3,
                                double ridge = 1e-4) {
    if (features == 0) throw InvalidSpec("features must be >= 1");
    if (samples == 0) throw InvalidSpec("samples must be >= 1");
    if (batch_size == 0) throw InvalidSpec("batch_size must be >= 1");

    struct Data {
        std::size_t n, m, batch;
        double ridge;
        std::vector<double> x;  // m x n, row-major
        std::vector<double> y;  // +1 / -1
    };
    auto data = std::make_shared<Data>();
    data->n = features;
    data->m = samples;
    data->batch = std::min(batch_size, samples);
    data->ridge = ridge;
    data->x.resize(samples * features);
    data->y.resize(samples);

    std::vector<double> truth(features);
    for (double& u : truth) u = rng.next_gaussian();
    const double margin_scale = 1.0 / std::sqrt(static_cast<double>(features));
    for (std::size_t j = 0; j < samples; ++j) {
        double margin = 0.0;
        for (std::size_t i = 0; i < features; ++i) {
            const double xv = rng.next_gaussian();
            data->x[j * features + i] = xv;
            margin += xv * truth[i];
        }
        margin *= margin_scale;
        data->y[j] = (margin + label_noise * rng.next_gaussian()) >= 0.0 ? 1.0 : -1.0;
    }

    // log(1 + exp(-z)) without overflow
    auto log1pexp_neg = [](double z) {
        if (z > 35.0) return std::exp(-z);
        if (z < -35.0) return -z;
        return std::log1p(std::exp(-z));
    };

    auto batch_loss_grad = [data, log1pexp_neg](std::span<const double> w,
                                                const double* x_rows, const double* y_rows,
                                                std::size_t rows, std::vector<double>* grad_out) {
        double loss = 0.0;
        if (grad_out) grad_out->assign(data->n, 0.0);
        for (std::size_t j = 0; j < rows; ++j) {
            const double* xj = x_rows + j * data->n;
            double z = 0.0;
            for (std::size_t i = 0; i < data->n; ++i) z += xj[i] * w[i];
            z *= y_rows[j];
            loss += log1pexp_neg(z);
            if (grad_out) {
                const double s = -y_rows[j] / (1.0 + std::exp(z));  // -y * sigmoid(-z)
                for (std::size_t i = 0; i < data->n; ++i) (*grad_out)[i] += s * xj[i];
            }
        }
        loss /= static_cast<double>(rows);
        double reg = 0.0;
        for (std::size_t i = 0; i < data->n; ++i) reg += w[i] * w[i];
        loss += 0.5 * data->ridge * reg;
        if (grad_out) {
            for (std::size_t i = 0; i < data->n; ++i) {
                (*grad_out)[i] /= static_cast<double>(rows);
                (*grad_out)[i] += data->ridge * w[i];
            }
        }
        return loss;
    };

    Problem p;
    p.name = "logistic";
    p.dimension = features;
    p.segment_spec = {{"w", features}};
    p.loss = [data, batch_loss_grad](std::span<const double> w) {
        return batch_loss_grad(w, data->x.data(), data->y.data(), data->m, nullptr);
    };
    p.gradient = [data, batch_loss_grad](std::span<const double> w,
                                         std::optional<std::uint64_t> batch_seed,
                                         AnomalyInjector* corruptor) {
        std::vector<double> g;
        if (!batch_seed && !corruptor) {
            batch_loss_grad(w, data->x.data(), data->y.data(), data->m, &g);
            return g;
        }
        std::vector<std::size_t> rows;
        if (batch_seed) {
            rows = detail::batch_indices(data->m, data->batch, *batch_seed);
        } else {
            rows.resize(data->m);
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        std::vector<double> xb(rows.size() * data->n);
        std::vector<double> yb(rows.size());
        for (std::size_t j = 0; j < rows.size(); ++j) {
            std::copy_n(data->x.data() + rows[j] * data->n, data->n, xb.data() + j * data->n);
            yb[j] = data->y[rows[j]];
        }
        if (corruptor) corrupt_inputs(xb, *corruptor);
        batch_loss_grad(w, xb.data(), yb.data(), rows.size(), &g);
        return g;
    };
    p.initial_point = [features](RngStream&) { return detail::zeros_init(features); };
    return p;
}

namespace detail {

/// Weight layout and manual forward/backward for a tanh MLP regressor with a
/// linear output layer and mean squared error (0.5 * mean ||f(x) - y||^2).
struct MlpShape {
    std::vector<std::size_t> widths;  // input, hidden..., output
    SegmentSpec segments;
    std::size_t dim = 0;

    explicit MlpShape(std::vector<std::size_t> ws) : widths(std::move(ws)) {
        if (widths.size() < 3) throw InvalidSpec("mlp needs at least one hidden layer");
        for (std::size_t w : widths)
            if (w == 0) throw InvalidSpec("mlp layer widths must be >= 1");
        for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
            const std::string tag = std::to_string(l + 1);
            segments.push_back({"W" + tag, widths[l + 1] * widths[l]});
            segments.push_back({"b" + tag, widths[l + 1]});
        }
        for (const auto& [name, len] : segments) dim += len;
    }

    std::size_t layers() const { return widths.size() - 1; }

    // offset of W_l / b_l in the flat vector, l in [0, layers)
    std::size_t w_offset(std::size_t l) const {
        std::size_t off = 0;
        for (std::size_t k = 0; k < l; ++k) off += widths[k + 1] * widths[k] + widths[k + 1];
        return off;
    }
    std::size_t b_offset(std::size_t l) const { return w_offset(l) + widths[l + 1] * widths[l]; }
};

inline void mlp_forward(const MlpShape& shape, std::span<const double> w,
                        std::span<const double> x, std::vector<std::vector<double>>& acts) {
    acts.resize(shape.layers() + 1);
    acts[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < shape.layers(); ++l) {
        const std::size_t in = shape.widths[l], out = shape.widths[l + 1];
        const double* W = w.data() + shape.w_offset(l);
        const double* b = w.data() + shape.b_offset(l);
        acts[l + 1].assign(out, 0.0);
        for (std::size_t r = 0; r < out; ++r) {
            double z = b[r];
            for (std::size_t c = 0; c < in; ++c) z += W[r * in + c] * acts[l][c];
            acts[l + 1][r] = (l + 1 == shape.layers()) ? z : std::tanh(z);
        }
    }
}

/// Accumulates one sample's gradient contribution (scaled by `weight`) into
/// grad; returns the sample's squared error.
inline double mlp_backward(const MlpShape& shape, std::span<const double> w,
                           std::span<const double> x, std::span<const double> y, double weight,
                           std::vector<std::vector<double>>& acts, std::span<double> grad) {
    mlp_forward(shape, w, x, acts);
    const std::size_t L = shape.layers();
    std::vector<double> delta(acts[L].size());
    double err2 = 0.0;
    for (std::size_t r = 0; r < delta.size(); ++r) {
        const double e = acts[L][r] - y[r];
        err2 += e * e;
        delta[r] = e * weight;
    }
    for (std::size_t l = L; l-- > 0;) {
        const std::size_t in = shape.widths[l], out = shape.widths[l + 1];
        const double* W = w.data() + shape.w_offset(l);
        double* gW = grad.data() + shape.w_offset(l);
        double* gb = grad.data() + shape.b_offset(l);
        for (std::size_t r = 0; r < out; ++r) {
            gb[r] += delta[r];
            for (std::size_t c = 0; c < in; ++c) gW[r * in + c] += delta[r] * acts[l][c];
        }
        if (l == 0) break;
        std::vector<double> next(in, 0.0);
        for (std::size_t c = 0; c < in; ++c) {
            double acc = 0.0;
            for (std::size_t r = 0; r < out; ++r) acc += W[r * in + c] * delta[r];
            next[c] = acc * (1.0 - acts[l][c] * acts[l][c]);  // tanh'
        }
        delta = std::move(next);
    }
    return err2;
}

}  // namespace detail

/// Tiny regression MLP (tanh hidden layers, linear output) fit to a random
/// teacher network of the same shape. One segment per weight matrix and bias.
inline Problem mlp_problem(const std::vector<std::size_t>& widths, std::size_t samples,
                           RngStream& rng, std::size_t batch_size = 32,
                           double target_noise = 0.05) {
    if (samples == 0) throw InvalidSpec("samples must be >= 1");

    struct Data {
        detail::MlpShape shape;
        std::size_t m, batch;
        std::vector<double> x;        // m x in
        std::vector<double> y;        // m x out
        explicit Data(std::vector<std::size_t> ws) : shape(std::move(ws)), m(0), batch(0) {}
    };
    auto data = std::make_shared<Data>(widths);
    data->m = samples;
    data->batch = std::min(batch_size, samples);
    const std::size_t in = data->shape.widths.front();
    const std::size_t out = data->shape.widths.back();

    // teacher weights: per-layer Gaussian scaled by 1/sqrt(fan_in)
    std::vector<double> teacher(data->shape.dim);
    for (std::size_t l = 0; l < data->shape.layers(); ++l) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(data->shape.widths[l]));
        double* W = teacher.data() + data->shape.w_offset(l);
        double* b = teacher.data() + data->shape.b_offset(l);
        for (std::size_t i = 0; i < data->shape.widths[l + 1] * data->shape.widths[l]; ++i)
            W[i] = scale * rng.next_gaussian();
        for (std::size_t i = 0; i < data->shape.widths[l + 1]; ++i)
            b[i] = 0.1 * rng.next_gaussian();
    }

    data->x.resize(samples * in);
    data->y.resize(samples * out);
    std::vector<std::vector<double>> acts;
    for (std::size_t j = 0; j < samples; ++j) {
        for (std::size_t i = 0; i < in; ++i) data->x[j * in + i] = rng.next_gaussian();
        detail::mlp_forward(data->shape, teacher,
                            std::span<const double>(data->x.data() + j * in, in), acts);
        for (std::size_t r = 0; r < out; ++r)
            data->y[j * out + r] = acts.back()[r] + target_noise * rng.next_gaussian();
    }

    auto batch_eval = [data](std::span<const double> w, const double* x_rows, const double* y_rows,
                             std::size_t rows, std::vector<double>* grad_out) {
        const std::size_t nin = data->shape.widths.front();
        const std::size_t nout = data->shape.widths.back();
        std::vector<std::vector<double>> acts;
        double err2 = 0.0;
        if (grad_out) grad_out->assign(data->shape.dim, 0.0);
        const double weight = 1.0 / static_cast<double>(rows);
        for (std::size_t j = 0; j < rows; ++j) {
            std::span<const double> xj(x_rows + j * nin, nin);
            std::span<const double> yj(y_rows + j * nout, nout);
            if (grad_out) {
                err2 += detail::mlp_backward(data->shape, w, xj, yj, weight, acts, *grad_out);
            } else {
                detail::mlp_forward(data->shape, w, xj, acts);
                for (std::size_t r = 0; r < nout; ++r) {
                    const double e = acts.back()[r] - yj[r];
                    err2 += e * e;
                }
            }
        }
        return 0.5 * err2 / static_cast<double>(rows);
    };

    Problem p;
    p.name = "mlp";
    p.dimension = data->shape.dim;
    p.segment_spec = data->shape.segments;
    p.loss = [data, batch_eval](std::span<const double> w) {
        return batch_eval(w, data->x.data(), data->y.data(), data->m, nullptr);
    };
    p.gradient = [data, batch_eval](std::span<const double> w,
                                    std::optional<std::uint64_t> batch_seed,
                                    AnomalyInjector* corruptor) {
        const std::size_t nin = data->shape.widths.front();
        const std::size_t nout = data->shape.widths.back();
        std::vector<double> g;
        if (!batch_seed && !corruptor) {
            batch_eval(w, data->x.data(), data->y.data(), data->m, &g);
            return g;
        }
        std::vector<std::size_t> rows;
        if (batch_seed) {
            rows = detail::batch_indices(data->m, data->batch, *batch_seed);
        } else {
            rows.resize(data->m);
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        std::vector<double> xb(rows.size() * nin);
        std::vector<double> yb(rows.size() * nout);
        for (std::size_t j = 0; j < rows.size(); ++j) {
            std::copy_n(data->x.data() + rows[j] * nin, nin, xb.data() + j * nin);
            std::copy_n(data->y.data() + rows[j] * nout, nout, yb.data() + j * nout);
        }
        if (corruptor) corrupt_inputs(xb, *corruptor);
        batch_eval(w, xb.data(), yb.data(), rows.size(), &g);
        return g;
    };
    p.initial_point = [data](RngStream& rng_init) {
        std::vector<double> w(data->shape.dim, 0.0);
        for (std::size_t l = 0; l < data->shape.layers(); ++l) {
            const double scale = 1.0 / std::sqrt(static_cast<double>(data->shape.widths[l]));
            double* W = w.data() + data->shape.w_offset(l);
            for (std::size_t i = 0; i < data->shape.widths[l + 1] * data->shape.widths[l]; ++i)
                W[i] = scale * rng_init.next_gaussian();
        }
        return w;
    };
    return p;
}

/// Cumulative excess loss over the known optimum, one entry per step.
inline std::vector<double> regret(std::span<const double> losses, double optimum) {
    std::vector<double> out(losses.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        acc += losses[i] - optimum;
        out[i] = acc;
    }
    return out;
}

/// Long deterministic full-batch descent, used to pin optimum values for
/// regret tracking on convex problems. Backtracking line search plus heavy-ball
/// extrapolation with gradient-based restarts keeps the iteration count sane on
/// badly conditioned instances without giving up determinism.
inline double optimum_by_descent(const Problem& p, std::int64_t max_steps = 100000,
                                 double grad_tol = 1e-9) {
    std::vector<double> x(p.dimension, 0.0);
    std::vector<double> y = x;
    std::vector<double> x_new(p.dimension), trial(p.dimension);
    double lr = 1.0;
    double momentum_t = 1.0;
    for (std::int64_t step = 0; step < max_steps; ++step) {
        const std::vector<double> g = p.gradient(y, std::nullopt, nullptr);
        double gn2 = 0.0;
        for (double gi : g) gn2 += gi * gi;
        if (std::sqrt(gn2) <= grad_tol) break;
        const double fy = p.loss(y);
        // once the guaranteed decrease drops below fp resolution of the loss,
        // the iterate is as converged as doubles allow
        if (0.5 * lr * gn2 < 4.0 * std::numeric_limits<double>::epsilon() * std::fabs(fy)) break;
        for (;;) {
            for (std::size_t i = 0; i < y.size(); ++i) trial[i] = y[i] - lr * g[i];
            if (p.loss(trial) <= fy - 0.5 * lr * gn2 || lr < 1e-18) break;
            lr *= 0.5;
        }
        x_new = trial;
        // restart the extrapolation whenever it stops pointing downhill
        double along = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) along += g[i] * (x_new[i] - x[i]);
        if (along > 0.0) momentum_t = 1.0;
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_t * momentum_t));
        const double mix = (momentum_t - 1.0) / t_next;
        for (std::size_t i = 0; i < x.size(); ++i)
            y[i] = x_new[i] + mix * (x_new[i] - x[i]);
        x.swap(x_new);
        momentum_t = t_next;
        lr = std::min(lr * 1.2, 1e3);
    }
    return p.loss(x);
}

}  // namespace spam
