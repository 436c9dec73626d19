"""The right-hand side lap(exp(-lap h)), evaluated two independent ways.

The exponential route synthesizes lap(h) on a padded grid, exponentiates
pointwise and transforms back.  The series route expands the exponential,

    lap(exp(-lap h)) = -lap^2 h + sum_{j>=2} lap F_j,
    F_j = ((-1)^j / j!) (lap h)^j,

and sums the terms to a fixed or adaptive depth.  The two routes serve as
mutual oracles: the exponential nonlinearity is not polynomial, so exact
dealiasing is impossible, and the cross-check (rather than a masking rule)
is the correctness guard for the default padding factor of 2.

Powers are formed in physical space on the padded grid: one synthesis, J
pointwise multiply-accumulates and one analysis, instead of J spectral
convolutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NumericalError
from .norms import wiener_norm
from .spectral import FourierField, GridField, analyze, bilaplacian_neg, laplacian, synthesize

#: Adaptive depth resolution refuses to go past this many series terms.
DEPTH_HARD_CAP = 64

#: Pointwise exponentials with arguments above this certainly overflow.
_EXP_ARG_LIMIT = 700.0


@dataclass(frozen=True)
class TaylorDepth:
    """Series depth: a fixed highest term, or adaptive with a tail tolerance.

    ``fixed(1)`` is the linear-only sentinel: the j >= 2 sum is empty, which
    switches the nonlinearity off entirely (used by the time stepper to test
    exact linear integration).
    """

    max_j: int | None = None
    tail_tol: float | None = None

    def __post_init__(self):
        if (self.max_j is None) == (self.tail_tol is None):
            raise ValueError("specify exactly one of max_j and tail_tol")
        if self.max_j is not None:
            if not isinstance(self.max_j, (int, np.integer)) or self.max_j < 1:
                raise ValueError(f"max_j must be an integer >= 1, got {self.max_j}")
            object.__setattr__(self, "max_j", int(self.max_j))
        if self.tail_tol is not None and not (0.0 < self.tail_tol < math.inf):
            raise ValueError(f"tail_tol must be a positive real, got {self.tail_tol}")

    @classmethod
    def fixed(cls, max_j: int) -> "TaylorDepth":
        return cls(max_j=max_j)

    @classmethod
    def adaptive(cls, tail_tol: float = 1e-12) -> "TaylorDepth":
        return cls(tail_tol=tail_tol)

    def resolve(self, r: float) -> int:
        """Depth J such that the remainder bound r^(J+1)/(J+1)! is below tolerance.

        ``r`` is the Wiener norm of lap(h) at the evaluation time; the bound
        is the standard Taylor remainder of exp combined with the algebra
        property of the norm.
        """
        if self.max_j is not None:
            return self.max_j
        j = 2
        tail = r**3 / 6.0  # r^(J+1) / (J+1)! at J = 2
        while tail >= self.tail_tol:
            j += 1
            if j > DEPTH_HARD_CAP:
                raise NumericalError(
                    f"adaptive depth exceeded the cap of {DEPTH_HARD_CAP} terms; "
                    f"achieved tail bound {tail:.3e} >= tolerance {self.tail_tol:g}"
                )
            tail *= r / (j + 1)
        return j


def padded_grid_size(truncation: int, padding_factor: float) -> int:
    """Grid resolution ceil(padding * (2N+1)), never below the 2N+1 floor."""
    if padding_factor < 1.0:
        raise ValueError(f"padding factor must be >= 1, got {padding_factor}")
    return max(math.ceil(padding_factor * (2 * truncation + 1)), 2 * truncation + 1)


def _laplacian_grid(field: FourierField, padding_factor: float) -> np.ndarray:
    m = padded_grid_size(field.truncation, padding_factor)
    return synthesize(laplacian(field), m).samples


def taylor_term_Fj(
    field: FourierField, j: int, padding_factor: float = 2.0
) -> tuple[FourierField, float]:
    """The series term F_j = ((-1)^j / j!) (lap h)^j.

    Returns the mean-zero coefficient field together with the (generally
    nonzero) mean of the term; the Laplacian that a caller applies on top
    annihilates that mean, so it is reported for diagnostics only.
    """
    if j < 2:
        raise ValueError(f"series terms start at j = 2, got {j}")
    g = _laplacian_grid(field, padding_factor)
    values = ((-1.0) ** j / math.factorial(j)) * g**j
    return analyze(GridField(field.dim, values), field.truncation)


def taylor_sum(
    field: FourierField, depth: TaylorDepth, padding_factor: float = 2.0
) -> tuple[FourierField, float]:
    """sum_{j=2}^{J} F_j with J resolved from ``depth``; terms summed ascending.

    Returns the mean-zero part and the mean, like ``taylor_term_Fj``.  With
    the linear-only sentinel the sum is empty and the zero field is returned.
    """
    depth_j = depth.resolve(wiener_norm(field, 2))
    if depth_j < 2:
        return FourierField.zero(field.dim, field.truncation), 0.0
    y = -_laplacian_grid(field, padding_factor)
    term = 0.5 * y * y
    total = term.copy()
    for j in range(3, depth_j + 1):
        term = term * (y / j)
        total += term
    return analyze(GridField(field.dim, total), field.truncation)


def rhs_exponential(field: FourierField, padding_factor: float = 2.0) -> FourierField:
    """lap(exp(-lap h)) via the pointwise exponential on a padded grid."""
    if field.max_abs() == 0.0:
        return field  # exp(0) is constant; its Laplacian vanishes exactly
    g = _laplacian_grid(field, padding_factor)
    arg_max = float(np.max(-g))
    if arg_max > _EXP_ARG_LIMIT:
        raise NumericalError(
            f"pointwise exponential would overflow: max |lap h| on the grid is "
            f"{float(np.max(np.abs(g))):.6g}"
        )
    transformed, _mean = analyze(GridField(field.dim, np.exp(-g)), field.truncation)
    return laplacian(transformed)


def rhs_taylor(
    field: FourierField, depth: TaylorDepth, padding_factor: float = 2.0
) -> FourierField:
    """-lap^2 h + sum_{j=2}^{J} lap F_j, the series route to the right-hand side."""
    linear = bilaplacian_neg(field)
    series, _mean = taylor_sum(field, depth, padding_factor)
    return linear + laplacian(series)
