"""Built-in mean-zero initial data families.

Every preset is normalized so that its ``amplitude`` parameter equals the
j = 2 Wiener norm of the generated field (the quantity the certificate
thresholds), which makes sweeps across the smallness threshold read off
directly in amplitude.
"""

from __future__ import annotations

import numpy as np

from .norms import wiener_norm
from .spectral import FourierField, mode_grids


def single_mode(truncation: int, amplitude: float = 0.2, k: int = 1, dim: int = 1) -> FourierField:
    """a * cos(k x1) scaled so the j = 2 norm equals ``amplitude``."""
    if k < 1 or k > truncation:
        raise ValueError(f"mode k = {k} must satisfy 1 <= k <= truncation {truncation}")
    half = amplitude / (2.0 * k * k)
    mode = (k,) if dim == 1 else (k, 0)
    return FourierField.from_modes(dim, truncation, {mode: half})


def two_mode(truncation: int, amplitude: float = 0.2, dim: int = 1) -> FourierField:
    """A fixed two-frequency profile with j = 2 norm equal to ``amplitude``.

    In 1-d: 0.8a cos(x) + 0.05a cos(2x); in 2-d the modes are (1, 0) and
    (1, 1) with the same norm split.  Most of the norm sits in the lowest
    mode so that the default time grids resolve the relaxation of every
    component the data excites.
    """
    if truncation < 2:
        raise ValueError(f"two-mode preset needs truncation >= 2, got {truncation}")
    if dim == 1:
        modes = {(1,): 0.4 * amplitude, (2,): 0.025 * amplitude}
    else:
        modes = {(1, 0): 0.4 * amplitude, (1, 1): 0.05 * amplitude}
    return FourierField.from_modes(dim, truncation, modes)


def random_decay(
    truncation: int,
    seed: int,
    amplitude: float = 0.2,
    decay: float = 3.0,
    dim: int = 1,
) -> FourierField:
    """Random phases under an exp(-decay |k|) envelope, rescaled to ``amplitude``.

    The draw is deterministic in ``seed``; the rescaling fixes the j = 2 norm
    exactly, so certificates on this preset are reproducible.  The default
    envelope rate keeps high-mode content small enough that the transient
    layer it excites stays resolved at the default time steps.
    """
    if amplitude <= 0:
        raise ValueError(f"amplitude must be positive, got {amplitude}")
    rng = np.random.default_rng(seed)
    n = 2 * truncation + 1
    shape = (n,) * dim
    raw = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    grids = mode_grids(dim, truncation)
    raw *= np.exp(-decay * grids.kmag)
    sl = tuple(slice(None, None, -1) for _ in range(dim))
    coeffs = 0.5 * (raw + np.conj(raw[sl]))
    coeffs[(truncation,) * dim] = 0.0
    field = FourierField(dim, truncation, coeffs)
    norm = wiener_norm(field, 2)
    if norm == 0.0:
        raise ValueError("degenerate random draw produced the zero field")
    return field * (amplitude / norm)


PRESETS = {
    "single-mode": single_mode,
    "two-mode": two_mode,
    "random-decay": random_decay,
}
