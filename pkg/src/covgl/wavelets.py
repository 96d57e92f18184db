"""Periodized orthonormal discrete wavelet transform.

Only the pieces needed here: filter tables, a full-depth analysis matrix and
the finest-scale detail coefficients used for noise estimation.
"""

import numpy as np

from .errors import ValidationError

_SQRT_HALF = 1.0 / np.sqrt(2.0)

# Scaling (low-pass) filters, unit l2 norm, summing to sqrt(2).
FILTERS = {
    "haar": np.array([_SQRT_HALF, _SQRT_HALF]),
    # Least-asymmetric Daubechies, 8 vanishing moments.
    "symmlet8": np.array([
        -0.0033824159510061256, -0.0005421323317911481,
        0.03169508781149298, 0.007607487324917605,
        -0.1432942383508097, -0.061273359067658524,
        0.4813596512583722, 0.7771857517005235,
        0.3644418948353314, -0.05194583810770904,
        -0.027219029917056003, 0.049137179673607506,
        0.003808752013890615, -0.01495225833704823,
        -0.0003029205147213668, 0.0018899503327594609,
    ]),
}


def is_power_of_two(n):
    return n >= 1 and (n & (n - 1)) == 0


def filter_pair(name):
    """Return the (low-pass, high-pass) analysis filters for ``name``."""
    try:
        h = FILTERS[name]
    except KeyError:
        raise ValidationError(f"unknown wavelet {name!r}") from None
    # quadrature mirror: g[m] = (-1)^(m+1) h[T-1-m]
    g = h[::-1] * (-1.0) ** (np.arange(h.size) + 1)
    return h, g


def analysis_step(x, h, g):
    """One periodized analysis level along axis 0.

    ``x`` has even length L on axis 0; returns (approx, detail), each of
    length L/2 on axis 0.
    """
    x = np.asarray(x, dtype=float)
    L = x.shape[0]
    if L < 2 or L % 2:
        raise ValidationError(f"analysis step needs an even length >= 2, got {L}")
    # circular convolution, downsampled with phase T/2
    idx = (2 * np.arange(L // 2)[:, None] + h.size // 2 - np.arange(h.size)[None, :]) % L
    windows = x[idx]  # (L/2, T, ...)
    approx = np.einsum("kt...,t->k...", windows, h)
    detail = np.einsum("kt...,t->k...", windows, g)
    return approx, detail


def dwt(x, name, levels=None):
    """Full-depth periodized DWT along axis 0.

    Coefficients are ordered coarsest first:
    ``[a_0, d_0, d_1 (2), d_2 (4), ..., finest details (L/2)]``.
    """
    x = np.asarray(x, dtype=float)
    L = x.shape[0]
    if not is_power_of_two(L):
        raise ValidationError(f"wavelet transform length must be a power of two, got {L}")
    max_levels = int(np.log2(L))
    levels = max_levels if levels is None else levels
    if not 0 <= levels <= max_levels:
        raise ValidationError(f"levels must lie in [0, {max_levels}]")
    h, g = filter_pair(name)
    approx = x
    details = []
    for _ in range(levels):
        approx, d = analysis_step(approx, h, g)
        details.append(d)
    return np.concatenate([approx] + details[::-1], axis=0)


def analysis_matrix(name, size):
    """Orthogonal ``size x size`` matrix W with ``dwt(x) == W @ x``."""
    return dwt(np.eye(size), name)


def synthesis_matrix(name, size):
    """Matrix whose columns are the discrete wavelet basis vectors."""
    return analysis_matrix(name, size).T


def finest_details(x, name="symmlet8"):
    """Finest-scale detail coefficients of ``x`` (1-D, power-of-two length)."""
    h, g = filter_pair(name)
    return analysis_step(np.asarray(x, dtype=float), h, g)[1]
