"""Monte Carlo helpers shared by the estimator and acceptance tests."""

import numpy as np

from lmdeconv.estimator import dft_profiles, estimate_coefficients
from lmdeconv.longmem import sample_stationary


def noise_coefficients(kernel, generator, alpha, N, M, J1, J2, cells, R, seed, batch=500):
    """beta_tilde of pure noise (sigma = 1) at table ``cells`` over R replicates.

    ``cells`` is a list of (row, col) pyramid positions; returns an (R, len(cells))
    complex array. Noise for all profiles and replicates comes from one stream.
    """
    rng = np.random.default_rng(seed)
    rows, cols = np.array(cells).T
    out = np.empty((R, len(cells)), dtype=complex)
    done = 0
    while done < R:
        n = min(batch, R - done)
        xi = sample_stationary(generator, alpha, N, rng, size=(n, M))
        for r in range(n):
            table = estimate_coefficients(dft_profiles(xi[r].T), kernel, J1, J2)
            out[done + r] = table.values[rows, cols]
        done += n
    return out
