#include "pip/linear_theory.hpp"

#include <algorithm>
#include <cmath>

namespace pip::linear_theory {

namespace {

void check_signal(const std::vector<double>& x, const char* who) {
    check(x.size() >= 4 && is_power_of_two(static_cast<int>(x.size())), who,
          ": signal length must be a power of two >= 4, got ", x.size());
}

double norm2(const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return acc;
}

}  // namespace

Spectrum dft(const std::vector<double>& x) {
    check_signal(x, "dft");
    const size_t n = x.size();
    Spectrum s;
    s.coeffs.resize(n);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    for (size_t k = 0; k < n; ++k) {
        Complex acc(0.0, 0.0);
        for (size_t j = 0; j < n; ++j) {
            const double ang = -2.0 * M_PI * static_cast<double>(k * j % n) / static_cast<double>(n);
            acc += x[j] * Complex(std::cos(ang), std::sin(ang));
        }
        s.coeffs[k] = acc * inv_sqrt_n;
    }
    s.conjugate_symmetric = true;
    return s;
}

std::vector<double> idft_real(const Spectrum& s) {
    const size_t n = s.coeffs.size();
    check(n >= 4 && is_power_of_two(static_cast<int>(n)), "idft: bad length ", n);
    std::vector<double> x(n);
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    for (size_t j = 0; j < n; ++j) {
        Complex acc(0.0, 0.0);
        for (size_t k = 0; k < n; ++k) {
            const double ang = 2.0 * M_PI * static_cast<double>(k * j % n) / static_cast<double>(n);
            acc += s.coeffs[k] * Complex(std::cos(ang), std::sin(ang));
        }
        x[j] = acc.real() * inv_sqrt_n;
    }
    return x;
}

std::vector<double> circular_conv(const std::vector<double>& h, const std::vector<double>& n) {
    check_signal(n, "circular_conv");
    const size_t N = n.size();
    check(h.size() >= 1 && h.size() <= N, "circular_conv: kernel support must be in [1, N]");
    std::vector<double> y(N, 0.0);
    for (size_t j = 0; j < h.size(); ++j) {
        const double hj = h[j];
        if (hj == 0.0) continue;
        for (size_t k = 0; k < N; ++k) y[k] += hj * n[(k + N - j) % N];
    }
    return y;
}

double gram_spectral_norm(const std::vector<double>& n, int r, int iters) {
    check_signal(n, "gram_spectral_norm");
    const size_t N = n.size();
    check(r >= 1 && r <= static_cast<int>(N), "bad support");
    // Power iteration on G = P C^T C P with a deterministic start vector.
    std::vector<double> v(static_cast<size_t>(r), 1.0 / std::sqrt(static_cast<double>(r)));
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        const std::vector<double> cv = circular_conv(v, n);
        // (C^T u)_j = sum_k u_k n_{(k - j) mod N}, restricted to j < r.
        std::vector<double> gv(static_cast<size_t>(r), 0.0);
        for (int j = 0; j < r; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < N; ++k) acc += cv[k] * n[(k + N - static_cast<size_t>(j)) % N];
            gv[static_cast<size_t>(j)] = acc;
        }
        double nrm = std::sqrt(norm2(gv));
        if (nrm == 0.0) return 0.0;
        lambda = nrm;  // ||G v|| with ||v|| = 1
        for (int j = 0; j < r; ++j) v[static_cast<size_t>(j)] = gv[static_cast<size_t>(j)] / nrm;
    }
    return lambda;
}

ConvFit fit_conv_model(const std::vector<double>& n, const std::vector<double>& y, int r,
                       int steps, std::optional<double> lr) {
    check_signal(n, "fit_conv_model");
    check(y.size() == n.size(), "fit_conv_model: y length mismatch");
    check(r >= 1 && r <= static_cast<int>(n.size()), "fit_conv_model: bad support ", r);
    const size_t N = n.size();
    double step = lr.has_value() ? *lr : 0.0;
    if (!lr.has_value()) {
        const double lam = gram_spectral_norm(n, r);
        check(lam > 0.0, "fit_conv_model: degenerate input signal");
        step = 0.95 / (2.0 * lam);
    }

    ConvFit fit;
    fit.kernel.assign(static_cast<size_t>(r), 0.0);
    std::vector<double> resid(N);
    double prev_loss = -1.0;
    int stall = 0;
    for (int it = 0; it < steps; ++it) {
        const std::vector<double> model = circular_conv(fit.kernel, n);
        double loss = 0.0;
        for (size_t k = 0; k < N; ++k) {
            resid[k] = model[k] - y[k];
            loss += resid[k] * resid[k];
        }
        fit.final_loss = loss;
        fit.steps_run = it;
        if (step == 0.0) break;
        // Plateau exit once improvements drop below double noise.
        if (prev_loss >= 0.0 && prev_loss - loss <= 1e-16 * std::max(1.0, loss)) {
            if (++stall >= 50) break;
        } else {
            stall = 0;
        }
        prev_loss = loss;
        for (int j = 0; j < r; ++j) {
            double g = 0.0;
            for (size_t k = 0; k < N; ++k) g += resid[k] * n[(k + N - static_cast<size_t>(j)) % N];
            fit.kernel[static_cast<size_t>(j)] -= step * 2.0 * g;
        }
    }
    // Refresh the loss after the last update.
    const std::vector<double> model = circular_conv(fit.kernel, n);
    double loss = 0.0;
    for (size_t k = 0; k < N; ++k) loss += (model[k] - y[k]) * (model[k] - y[k]);
    fit.final_loss = loss;
    return fit;
}

ElementwiseFit fit_elementwise(const std::vector<double>& n, const std::vector<double>& y,
                               int steps, std::optional<double> lr) {
    check_signal(n, "fit_elementwise");
    check(y.size() == n.size(), "fit_elementwise: y length mismatch");
    const size_t N = n.size();
    const size_t half = N / 2;
    const Spectrum ns = dft(n);
    const Spectrum ys = dft(y);
    const double sqn = std::sqrt(static_cast<double>(N));

    double step = lr.has_value() ? *lr : 0.0;
    if (!lr.has_value()) {
        double lam = 0.0;
        for (size_t l = 0; l <= half; ++l) {
            const double a2 = std::norm(ns.coeffs[l]);
            const double h = (l == 0 || l == half) ? 2.0 * N * a2 : 4.0 * N * a2;
            lam = std::max(lam, h);
        }
        check(lam > 0.0, "fit_elementwise: degenerate input signal");
        step = 0.95 / lam;
    }

    // Parameters: c_l for l = 0..N/2, imaginary parts of bins 0 and N/2
    // pinned to zero by conjugate symmetry of real signals.
    std::vector<Complex> c(half + 1, Complex(0.0, 0.0));
    auto loss_of = [&](const std::vector<Complex>& cc, std::vector<Complex>& rho) {
        double loss = 0.0;
        for (size_t l = 0; l <= half; ++l) {
            rho[l] = sqn * cc[l] * ns.coeffs[l] - ys.coeffs[l];
            const double w = (l == 0 || l == half) ? 1.0 : 2.0;  // mirror bin weight
            loss += w * std::norm(rho[l]);
        }
        return loss;
    };

    std::vector<Complex> rho(half + 1);
    ElementwiseFit fit;
    double prev_loss = -1.0;
    int stall = 0;
    for (int it = 0; it < steps; ++it) {
        const double loss = loss_of(c, rho);
        fit.final_loss = loss;
        fit.steps_run = it;
        if (step == 0.0) break;
        if (prev_loss >= 0.0 && prev_loss - loss <= 1e-16 * std::max(1.0, loss)) {
            if (++stall >= 50) break;
        } else {
            stall = 0;
        }
        prev_loss = loss;
        for (size_t l = 0; l <= half; ++l) {
            const Complex nl = ns.coeffs[l];
            const double w = (l == 0 || l == half) ? 1.0 : 2.0;
            const double ga =
                w * 2.0 * sqn * (rho[l].real() * nl.real() + rho[l].imag() * nl.imag());
            double gb = 0.0;
            if (l != 0 && l != half)
                gb = w * 2.0 * sqn * (rho[l].imag() * nl.real() - rho[l].real() * nl.imag());
            c[l] -= Complex(step * ga, step * gb);
        }
    }
    fit.final_loss = loss_of(c, rho);

    fit.kernel_spectrum.resize(N);
    fit.coeffs.resize(N);
    for (size_t l = 0; l < N; ++l) {
        const Complex cl = l <= half ? c[l] : std::conj(c[N - l]);
        fit.kernel_spectrum[l] = cl;
        fit.coeffs[l] = cl * ns.coeffs[l];
    }
    return fit;
}

double ls_oracle(const std::vector<double>& n, const std::vector<double>& y, int r) {
    check_signal(n, "ls_oracle");
    check(y.size() == n.size(), "ls_oracle: y length mismatch");
    check(r >= 1 && r <= static_cast<int>(n.size()), "ls_oracle: bad support");
    const size_t N = n.size();
    // B[:, j] = n shifted by j; G = B^T B, rhs = B^T y.
    auto col = [&](int j, size_t k) { return n[(k + N - static_cast<size_t>(j)) % N]; };
    std::vector<std::vector<double>> G(static_cast<size_t>(r),
                                       std::vector<double>(static_cast<size_t>(r), 0.0));
    std::vector<double> rhs(static_cast<size_t>(r), 0.0);
    for (int i = 0; i < r; ++i) {
        for (int j = i; j < r; ++j) {
            double acc = 0.0;
            for (size_t k = 0; k < N; ++k) acc += col(i, k) * col(j, k);
            G[static_cast<size_t>(i)][static_cast<size_t>(j)] = acc;
            G[static_cast<size_t>(j)][static_cast<size_t>(i)] = acc;
        }
        double acc = 0.0;
        for (size_t k = 0; k < N; ++k) acc += col(i, k) * y[k];
        rhs[static_cast<size_t>(i)] = acc;
    }
    // Gaussian elimination with partial pivoting.
    std::vector<double> a(rhs);
    for (int p = 0; p < r; ++p) {
        int piv = p;
        for (int i = p + 1; i < r; ++i)
            if (std::abs(G[static_cast<size_t>(i)][static_cast<size_t>(p)]) >
                std::abs(G[static_cast<size_t>(piv)][static_cast<size_t>(p)]))
                piv = i;
        std::swap(G[static_cast<size_t>(p)], G[static_cast<size_t>(piv)]);
        std::swap(a[static_cast<size_t>(p)], a[static_cast<size_t>(piv)]);
        const double d = G[static_cast<size_t>(p)][static_cast<size_t>(p)];
        check(std::abs(d) > 1e-12, "ls_oracle: singular normal equations");
        for (int i = p + 1; i < r; ++i) {
            const double f = G[static_cast<size_t>(i)][static_cast<size_t>(p)] / d;
            if (f == 0.0) continue;
            for (int j = p; j < r; ++j)
                G[static_cast<size_t>(i)][static_cast<size_t>(j)] -=
                    f * G[static_cast<size_t>(p)][static_cast<size_t>(j)];
            a[static_cast<size_t>(i)] -= f * a[static_cast<size_t>(p)];
        }
    }
    std::vector<double> h(static_cast<size_t>(r));
    for (int i = r - 1; i >= 0; --i) {
        double acc = a[static_cast<size_t>(i)];
        for (int j = i + 1; j < r; ++j)
            acc -= G[static_cast<size_t>(i)][static_cast<size_t>(j)] * h[static_cast<size_t>(j)];
        h[static_cast<size_t>(i)] = acc / G[static_cast<size_t>(i)][static_cast<size_t>(i)];
    }
    const std::vector<double> model = circular_conv(h, n);
    double loss = 0.0;
    for (size_t k = 0; k < N; ++k) loss += (model[k] - y[k]) * (model[k] - y[k]);
    return loss;
}

std::vector<Prop1Trial> prop1_equivalence_suite(const std::vector<int>& sizes, int trials,
                                                uint64_t seed, int steps, InputLaw law) {
    std::vector<Prop1Trial> rows;
    Rng rng(derive_seed(seed, 0x1A11));
    for (int N : sizes) {
        check(is_power_of_two(N) && N >= 4, "prop1 sizes must be powers of two >= 4");
        for (int t = 0; t < trials; ++t) {
            std::vector<double> n(static_cast<size_t>(N));
            // Redraw until the spectrum stays well away from zero so the
            // gradient fitters converge within the step budget.
            for (int attempt = 0;; ++attempt) {
                check(attempt < 1000, "could not draw a well-conditioned input signal");
                for (double& v : n)
                    v = law == InputLaw::Gaussian ? static_cast<double>(rng.normal())
                                                  : static_cast<double>(0.1f * rng.uniform());
                const Spectrum ns = dft(n);
                double lo = 1e300, hi = 0.0;
                for (const Complex& z : ns.coeffs) {
                    lo = std::min(lo, std::abs(z));
                    hi = std::max(hi, std::abs(z));
                }
                if (lo >= std::max(1e-3, hi / 16.0)) break;
            }
            std::vector<double> y(static_cast<size_t>(N));
            for (double& v : y) v = static_cast<double>(rng.normal());

            Prop1Trial row;
            row.n_size = N;
            row.support = N;
            row.trial = t;
            row.loss_conv = fit_conv_model(n, y, N, steps).final_loss;
            row.loss_elem = fit_elementwise(n, y, steps).final_loss;
            row.loss_oracle = ls_oracle(n, y, N);
            rows.push_back(row);
        }
    }
    return rows;
}

}  // namespace pip::linear_theory
