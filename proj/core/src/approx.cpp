// SPDX-License-Identifier: Apache-2.0

#include "slotflow/approx.hpp"

#include <cmath>

namespace slotflow {

namespace {

int ceil_log2(std::size_t v) {
    int k = 0;
    std::size_t p = 1;
    while (p < v) {
        p <<= 1;
        k++;
    }
    return k;
}

// Largest power of two <= v (v >= 1).
std::size_t floor_pow2(std::size_t v) {
    std::size_t p = 1;
    while (p * 2 <= v) {
        p <<= 1;
    }
    return p;
}

}  // namespace

ChebApprox chebyshev_fit(const std::function<double(double)> &f, double a, double b,
                         int degree) {
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b)) {
        throw ShapeError("chebyshev_fit: invalid interval");
    }
    if (degree < 0) {
        throw ShapeError("chebyshev_fit: negative degree");
    }
    const int n = degree + 1;
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    std::vector<double> fx(n);
    for (int j = 0; j < n; j++) {
        const double y = std::cos(M_PI * (j + 0.5) / n);
        fx[j] = f(center + half * y);
        if (!std::isfinite(fx[j])) {
            throw DomainError("chebyshev_fit: function not finite at node " +
                              std::to_string(j));
        }
    }

    ChebApprox p;
    p.a = a;
    p.b = b;
    p.degree = degree;
    p.coeffs.resize(n);
    for (int k = 0; k < n; k++) {
        double acc = 0.0;
        for (int j = 0; j < n; j++) {
            acc += fx[j] * std::cos(M_PI * k * (j + 0.5) / n);
        }
        p.coeffs[k] = acc * (k == 0 ? 1.0 : 2.0) / n;
    }
    p.depth_cost = ceil_log2(static_cast<std::size_t>(degree) + 1) + 1;

    const int grid = std::max(10 * degree, 32);
    double err = 0.0;
    for (int g = 0; g <= grid; g++) {
        const double x = a + (b - a) * g / grid;
        const double fv = f(x);
        if (!std::isfinite(fv)) {
            throw DomainError("chebyshev_fit: function not finite on the error grid");
        }
        err = std::max(err, std::fabs(fv - eval_cheb_plain(p, x)));
    }
    p.max_abs_error = err;
    return p;
}

double eval_cheb_plain(const ChebApprox &p, double x) {
    const double u = (2.0 * x - p.a - p.b) / (p.b - p.a);
    double b1 = 0.0, b2 = 0.0;
    for (int k = p.degree; k >= 1; k--) {
        const double t = 2.0 * u * b1 - b2 + p.coeffs[k];
        b2 = b1;
        b1 = t;
    }
    return u * b1 - b2 + p.coeffs[0];
}

namespace {

// Evaluation node: either a plain scalar (degree-0 remainder) or a slot vector.
struct Node {
    bool is_scalar = false;
    double scalar = 0.0;
    CipherVec ct;
};

// Depth-balanced recombination over the Chebyshev basis. For degree D with
// m the largest power of two <= D, T_{m+j} = 2 T_m T_j - T_{m-j} gives
//   p = q + T_m * r,   r = c_m + sum_{j>=1} 2 c_{m+j} T_j,
// with the T_{m-j} corrections folded into q's coefficients. Every branch is
// evaluated unconditionally so depth and counts depend only on D.
Node eval_rec(HeBackend &backend, const std::vector<double> &c,
              const std::vector<CipherVec> &pow, const CipherVec &u) {
    const std::size_t deg = c.size() - 1;
    if (deg == 0) {
        Node n;
        n.is_scalar = true;
        n.scalar = c[0];
        return n;
    }
    if (deg == 1) {
        Node n;
        CipherVec t = backend.mul_plain(u, std::vector<Complex>(u.slot_count(), c[1]));
        n.ct = backend.add_plain(t, std::vector<Complex>(u.slot_count(), c[0]));
        return n;
    }
    const std::size_t m = floor_pow2(deg);
    std::vector<double> q(c.begin(), c.begin() + m);
    std::vector<double> r(deg - m + 1);
    r[0] = c[m];
    for (std::size_t j = 1; j <= deg - m; j++) {
        r[j] = 2.0 * c[m + j];
        q[m - j] -= c[m + j];
    }
    // pow[k] holds T_{2^k}; T_m sits at index log2(m).
    const CipherVec &tm = pow[static_cast<std::size_t>(ceil_log2(m))];
    Node rn = eval_rec(backend, r, pow, u);
    CipherVec giant =
        rn.is_scalar ? backend.mul_plain(tm, std::vector<Complex>(tm.slot_count(), rn.scalar))
                     : backend.mul(tm, rn.ct);
    Node qn = eval_rec(backend, q, pow, u);
    Node out;
    out.ct = backend.add(qn.ct, giant);
    return out;
}

}  // namespace

CipherVec eval_cheb_encrypted(HeBackend &backend, const ChebApprox &p, const CipherVec &x) {
    if (x.level() < p.depth_cost) {
        throw LevelExhausted("eval_cheb_encrypted: degree " + std::to_string(p.degree) +
                             " needs " + std::to_string(p.depth_cost) + " levels, have " +
                             std::to_string(x.level()));
    }
    const std::size_t s = x.slot_count();
    if (p.degree == 0) {
        // No basis to build; one level for the scalar product keeps the
        // result a proper slot vector.
        CipherVec t = backend.mul_plain(x, std::vector<Complex>(s, 0.0));
        return backend.add_plain(t, std::vector<Complex>(s, p.coeffs[0]));
    }

    // Domain map u = (2x - a - b) / (b - a).
    CipherVec u = backend.mul_plain(x, std::vector<Complex>(s, 2.0 / (p.b - p.a)));
    u = backend.add_plain(u, std::vector<Complex>(s, -(p.a + p.b) / (p.b - p.a)));

    // Power-of-two Chebyshev basis: T_{2k} = 2 T_k^2 - 1.
    std::vector<CipherVec> pow;
    pow.push_back(u);
    const std::size_t m_top = floor_pow2(static_cast<std::size_t>(p.degree));
    for (std::size_t m = 2; m <= m_top; m <<= 1) {
        CipherVec sq = backend.mul(pow.back(), pow.back());
        sq = backend.add(sq, sq);
        sq = backend.add_plain(sq, std::vector<Complex>(s, -1.0));
        pow.push_back(std::move(sq));
    }

    Node out = eval_rec(backend, p.coeffs, pow, u);
    return std::move(out.ct);
}

ChebCost cheb_cost(int degree) {
    ChebCost cost;
    if (degree < 0) {
        throw ShapeError("cheb_cost: negative degree");
    }
    if (degree == 0) {
        cost.ops.pt_mults = 1;
        cost.ops.adds = 1;
        cost.depth = 1;
        return cost;
    }
    cost.depth = ceil_log2(static_cast<std::size_t>(degree) + 1) + 1;
    cost.ops.pt_mults += 1;  // domain map
    cost.ops.adds += 1;
    for (std::size_t m = 2; m <= floor_pow2(static_cast<std::size_t>(degree)); m <<= 1) {
        cost.ops.ct_mults += 1;  // squaring
        cost.ops.adds += 2;      // doubling and the -1 shift
    }
    // Mirror of eval_rec.
    std::function<void(std::size_t)> rec = [&](std::size_t deg) {
        if (deg == 0) {
            return;
        }
        if (deg == 1) {
            cost.ops.pt_mults += 1;
            cost.ops.adds += 1;
            return;
        }
        const std::size_t m = floor_pow2(deg);
        rec(deg - m);
        if (deg - m == 0) {
            cost.ops.pt_mults += 1;  // T_m times a scalar remainder
        } else {
            cost.ops.ct_mults += 1;
        }
        rec(m - 1);
        cost.ops.adds += 1;
    };
    rec(static_cast<std::size_t>(degree));
    return cost;
}

std::function<double(double)> activation_function(const std::string &name) {
    if (name == "identity") {
        return [](double x) { return x; };
    }
    if (name == "square") {
        return [](double x) { return x * x; };
    }
    if (name == "relu") {
        return [](double x) { return x > 0.0 ? x : 0.0; };
    }
    if (name == "sigmoid") {
        return [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    }
    if (name == "softplus") {
        // log(1 + e^x), overflow-safe.
        return [](double x) { return std::fmax(x, 0.0) + std::log1p(std::exp(-std::fabs(x))); };
    }
    if (name == "silu") {
        return [](double x) { return x / (1.0 + std::exp(-x)); };
    }
    if (name == "tanh") {
        return [](double x) { return std::tanh(x); };
    }
    if (name == "exp") {
        return [](double x) { return std::exp(x); };
    }
    throw ShapeError("unknown activation function: " + name);
}

const std::vector<std::string> &activation_names() {
    static const std::vector<std::string> names = {"identity", "square",   "relu", "sigmoid",
                                                   "softplus", "silu",     "tanh", "exp"};
    return names;
}

}  // namespace slotflow
