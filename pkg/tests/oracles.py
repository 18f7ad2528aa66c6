"""Reference implementations used as test oracles.

Nothing here imports the package's transform code: the Meyer transform is
written out from its closed form and the Daubechies basis is built by an
explicit loop cascade from the raw filter taps.
"""

import math

import numpy as np
from scipy.integrate import trapezoid


def meyer_poly(x):
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    return x ** 4 * (35 - 84 * x + 70 * x ** 2 - 20 * x ** 3)


def psi_hat_ref(xi):
    xi = np.asarray(xi, dtype=float)
    a = np.abs(xi)
    out = np.zeros(a.shape)
    lo = (a > 2 * math.pi / 3) & (a <= 4 * math.pi / 3)
    hi = (a > 4 * math.pi / 3) & (a < 8 * math.pi / 3)
    out[lo] = np.sin(math.pi / 2 * meyer_poly(3 * a[lo] / (2 * math.pi) - 1))
    out[hi] = np.cos(math.pi / 2 * meyer_poly(3 * a[hi] / (4 * math.pi) - 1))
    return out * np.exp(-0.5j * xi)


def psi_coeff_ref(j, k, m):
    m = np.asarray(m, dtype=float)
    return 2.0 ** (-j / 2) * np.exp(-2j * math.pi * m * k / 2 ** j) * psi_hat_ref(2 * math.pi * m / 2 ** j)


def psi_on_line(t, n_xi=40001):
    """Meyer mother wavelet on the real line by quadrature of its transform.

    psi(t) = (1/pi) int_0^inf |psi_hat(xi)| cos(xi (t - 1/2)) dxi.
    """
    xi = np.linspace(2 * math.pi / 3, 8 * math.pi / 3, n_xi)
    amp = np.abs(psi_hat_ref(xi))
    t = np.asarray(t, dtype=float)
    vals = np.cos(np.outer(t - 0.5, xi)) * amp
    return trapezoid(vals, xi, axis=1) / math.pi


def daub_basis_ref(taps, M):
    """Rows are sqrt(M)-scaled periodic Daubechies basis vectors in pyramid order.

    Convention: analysis a[k] = sum_n h[n] x[(2k + n) mod n_len] (same for the
    detail filter g[n] = (-1)**n h[L-1-n]); synthesis is the transpose.
    """
    h = list(taps)
    L = len(h)
    g = [(-1) ** n * h[L - 1 - n] for n in range(L)]
    levels = int(round(math.log2(M)))

    def upsample(vec, filt):
        size = 2 * len(vec)
        out = [0.0] * size
        for i, c in enumerate(vec):
            if c == 0.0:
                continue
            for n, w in enumerate(filt):
                out[(2 * i + n) % size] += w * c
        return out

    def to_grid(vec, filt):
        cur = upsample(vec, filt)
        while len(cur) < M:
            cur = upsample(cur, h)
        return cur

    rows = []
    scaling = [1.0]
    while len(scaling) < M:
        scaling = upsample(scaling, h)
    rows.append(scaling)
    for j in range(levels):
        for k in range(2 ** j):
            unit = [0.0] * 2 ** j
            unit[k] = 1.0
            rows.append(to_grid(unit, g))
    return math.sqrt(M) * np.array(rows)


def beta_tilde_ref(Yhat, g_func, j1, k1, eta):
    """Direct double sum over the frequency band and the profiles.

    ``Yhat`` is indexed by FFT order; ``g_func(m, x)`` returns the kernel
    Fourier coefficient; ``eta`` holds the space basis values on the grid.
    """
    N, M = Yhat.shape
    total = 0.0 + 0.0j
    for m in range(-(N // 2) + 1, N // 2):
        if j1 < 0:
            coeff = 1.0 if m == 0 else 0.0
        else:
            coeff = complex(psi_coeff_ref(j1, k1, m))
        if coeff == 0:
            continue
        inner = 0.0 + 0.0j
        for l in range(M):
            inner += Yhat[m % N, l] / g_func(m, l / M) * eta[l]
        total += np.conj(coeff) * inner / M
    return total
