"""Lattice bookkeeping, transforms and Fourier multipliers on the torus.

Real mean-zero fields on T^n (n in {1, 2}) are stored as truncated Fourier
coefficient boxes: all modes k with max-norm |k_i| <= N are retained, in an
array indexed so that position ``i`` along each axis holds wavenumber
``i - N``.  The coefficient convention is

    coeff(k) = (2*pi)^(-n) * integral of h(x) exp(-i k.x) dx,

so that cos(x) decomposes into the two coefficients {+1: 1/2, -1: 1/2}.
Realness of the represented function is the Hermitian symmetry
coeff(-k) == conj(coeff(k)); the zero mode is identically zero (the mean is
conserved by the evolution and is factored out of every representation).

The physical-space side is a uniform M^n grid over [0, 2*pi)^n; synthesis
and analysis are exact inverses of each other whenever M >= 2N + 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import NumericalError

#: Relative tolerance for the Hermitian-symmetry check at construction.
HERMITIAN_RTOL = 1e-10

#: Synthesis must leave an imaginary residue below this times the field size.
SYNTHESIS_IMAG_RTOL = 1e-12


@dataclass(frozen=True)
class Wavevector:
    """A lattice point k in Z^n with its Euclidean magnitude."""

    components: tuple[int, ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("wavevector needs at least one component")
        if not all(isinstance(c, (int, np.integer)) for c in self.components):
            raise ValueError(f"wavevector components must be integers, got {self.components}")
        object.__setattr__(self, "components", tuple(int(c) for c in self.components))

    @property
    def magnitude(self) -> float:
        return math.sqrt(sum(c * c for c in self.components))

    @property
    def dim(self) -> int:
        return len(self.components)


def _as_components(k) -> tuple[int, ...]:
    if isinstance(k, Wavevector):
        return k.components
    if isinstance(k, (int, np.integer)):
        return (int(k),)
    return tuple(int(c) for c in k)


class _ModeGrids:
    """Cached |k|-power arrays over the (2N+1)^dim coefficient box."""

    __slots__ = ("ksq", "kmag", "k4")

    def __init__(self, dim, truncation):
        axis = np.arange(-truncation, truncation + 1, dtype=float)
        if dim == 1:
            ksq = axis**2
        else:
            kx, ky = np.meshgrid(axis, axis, indexing="ij")
            ksq = kx**2 + ky**2
        self.ksq = ksq
        self.kmag = np.sqrt(ksq)
        self.k4 = ksq**2
        for a in (self.ksq, self.kmag, self.k4):
            a.flags.writeable = False


@lru_cache(maxsize=None)
def mode_grids(dim: int, truncation: int) -> _ModeGrids:
    """Arrays of |k|^2, |k| and |k|^4 laid out like the coefficient box."""
    return _ModeGrids(dim, truncation)


def _conj_flip(coeffs: np.ndarray) -> np.ndarray:
    sl = tuple(slice(None, None, -1) for _ in range(coeffs.ndim))
    return np.conj(coeffs[sl])


@dataclass(frozen=True, eq=False)
class FourierField:
    """Truncated Fourier coefficients of a real mean-zero function on T^n.

    Attributes:
        dim: spatial dimension, 1 or 2
        truncation: box radius N; modes with max-norm |k_i| <= N are stored
        coeffs: complex array of shape (2N+1,)*dim, index i -> k_i = i - N;
            immutable after construction
    """

    dim: int
    truncation: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        if not isinstance(self.truncation, (int, np.integer)) or self.truncation < 1:
            raise ValueError(f"truncation must be a positive integer, got {self.truncation}")
        n = 2 * self.truncation + 1
        coeffs = np.ascontiguousarray(self.coeffs, dtype=complex)
        if coeffs.shape != (n,) * self.dim:
            raise ValueError(
                f"coefficient array has shape {coeffs.shape}, expected {(n,) * self.dim}"
            )
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must all be finite")
        center = (self.truncation,) * self.dim
        if coeffs[center] != 0:
            raise ValueError(
                f"zero mode must vanish (mean-zero reduction), got {coeffs[center]}"
            )
        scale = max(1.0, float(np.max(np.abs(coeffs)))) if coeffs.size else 1.0
        asym = float(np.max(np.abs(coeffs - _conj_flip(coeffs))))
        if asym > HERMITIAN_RTOL * scale:
            raise ValueError(
                f"coefficients are not Hermitian-symmetric (deviation {asym:.3e}); "
                "the represented function would not be real-valued"
            )
        coeffs.flags.writeable = False
        object.__setattr__(self, "truncation", int(self.truncation))
        object.__setattr__(self, "coeffs", coeffs)

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, dim: int, truncation: int) -> "FourierField":
        n = 2 * truncation + 1
        return cls(dim, truncation, np.zeros((n,) * dim, dtype=complex))

    @classmethod
    def from_modes(cls, dim: int, truncation: int, modes) -> "FourierField":
        """Build a field from {wavevector: amplitude}, filling Hermitian partners.

        A partner -k given explicitly must agree with conj(coeff(k)); the zero
        mode may not carry a nonzero amplitude.
        """
        n = 2 * truncation + 1
        coeffs = np.zeros((n,) * dim, dtype=complex)
        explicit = {}
        for k, a in dict(modes).items():
            comps = _as_components(k)
            if len(comps) != dim:
                raise ValueError(f"mode {comps} has wrong dimension for dim={dim}")
            if any(abs(c) > truncation for c in comps):
                raise ValueError(f"mode {comps} lies outside truncation {truncation}")
            if all(c == 0 for c in comps):
                if a != 0:
                    raise ValueError("zero mode must vanish (mean-zero reduction)")
                continue
            explicit[comps] = complex(a)
        for comps, a in explicit.items():
            neg = tuple(-c for c in comps)
            if neg in explicit:
                if abs(explicit[neg] - np.conj(a)) > HERMITIAN_RTOL * max(1.0, abs(a)):
                    raise ValueError(f"modes {comps} and {neg} are not conjugate partners")
            idx = tuple(c + truncation for c in comps)
            nidx = tuple(c + truncation for c in neg)
            coeffs[idx] = a
            if neg not in explicit:
                coeffs[nidx] = np.conj(a)
        return cls(dim, truncation, coeffs)

    # -- access ------------------------------------------------------------

    def coeff(self, k) -> complex:
        """Coefficient at wavevector ``k`` (int, tuple or Wavevector)."""
        comps = _as_components(k)
        if len(comps) != self.dim:
            raise ValueError(f"wavevector {comps} has wrong dimension for dim={self.dim}")
        if any(abs(c) > self.truncation for c in comps):
            raise ValueError(f"wavevector {comps} outside truncation {self.truncation}")
        return complex(self.coeffs[tuple(c + self.truncation for c in comps)])

    def nonzero_modes(self):
        """(components, amplitude) pairs for nonzero modes, lexicographic order."""
        idx = np.argwhere(self.coeffs != 0)
        out = []
        for pos in idx:
            comps = tuple(int(p) - self.truncation for p in pos)
            out.append((comps, complex(self.coeffs[tuple(pos)])))
        out.sort(key=lambda item: item[0])
        return out

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    # -- arithmetic (pure; results are new fields) --------------------------

    def _check_compatible(self, other: "FourierField"):
        if self.dim != other.dim or self.truncation != other.truncation:
            raise ValueError(
                f"incompatible fields: dim/truncation ({self.dim},{self.truncation}) "
                f"vs ({other.dim},{other.truncation})"
            )

    def __add__(self, other):
        self._check_compatible(other)
        return FourierField(self.dim, self.truncation, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check_compatible(other)
        return FourierField(self.dim, self.truncation, self.coeffs - other.coeffs)

    def __neg__(self):
        return FourierField(self.dim, self.truncation, -self.coeffs)

    def __mul__(self, scalar):
        s = float(scalar)
        return FourierField(self.dim, self.truncation, self.coeffs * s)

    __rmul__ = __mul__

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        """JSON form: {"dim", "truncation", "coeffs": [[k..., re, im], ...]}."""
        entries = [
            list(comps) + [a.real, a.imag] for comps, a in self.nonzero_modes()
        ]
        return {"dim": self.dim, "truncation": self.truncation, "coeffs": entries}

    @classmethod
    def from_json_dict(cls, data: dict) -> "FourierField":
        dim = int(data["dim"])
        truncation = int(data["truncation"])
        given = {}
        for entry in data["coeffs"]:
            if len(entry) != dim + 2:
                raise ValueError(f"coefficient entry {entry} has wrong length for dim={dim}")
            comps = tuple(int(c) for c in entry[:dim])
            given[comps] = complex(float(entry[dim]), float(entry[dim + 1]))
        # Hermitian partners may be omitted in the file; from_modes restores them.
        return cls.from_modes(dim, truncation, given)


def _apply_multiplier(field: FourierField, multiplier: np.ndarray) -> FourierField:
    coeffs = field.coeffs * multiplier
    coeffs[(field.truncation,) * field.dim] = 0.0  # keep the zero mode exactly zero
    return FourierField(field.dim, field.truncation, coeffs)


def laplacian(field: FourierField) -> FourierField:
    """Multiply each mode by -|k|^2."""
    return _apply_multiplier(field, -mode_grids(field.dim, field.truncation).ksq)


def bilaplacian_neg(field: FourierField) -> FourierField:
    """Multiply each mode by -|k|^4 (the leading dissipative operator)."""
    return _apply_multiplier(field, -mode_grids(field.dim, field.truncation).k4)


# -- physical grid ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GridField:
    """Real samples on the uniform M^dim grid x_j = 2*pi*j/M over [0, 2*pi)^dim."""

    dim: int
    samples: np.ndarray

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        samples = np.ascontiguousarray(self.samples, dtype=float)
        if samples.ndim != self.dim:
            raise ValueError(f"samples must be {self.dim}-dimensional, got shape {samples.shape}")
        if self.dim == 2 and samples.shape[0] != samples.shape[1]:
            raise ValueError(f"grid must be square, got shape {samples.shape}")
        if samples.shape[0] < 1:
            raise ValueError("grid must contain at least one point")
        if not np.all(np.isfinite(samples)):
            raise ValueError("grid samples must all be finite")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def resolution(self) -> int:
        return self.samples.shape[0]


def default_grid_size(truncation: int) -> int:
    """Next power of two >= 2(N+1); always satisfies the 2N+1 floor."""
    return 1 << (2 * truncation + 1).bit_length()


def _embed_indices(truncation: int, resolution: int) -> np.ndarray:
    return np.arange(-truncation, truncation + 1) % resolution


def synthesize(field: FourierField, grid_points_per_dim: int | None = None) -> GridField:
    """Evaluate sum_k coeff(k) exp(i k.x) on a uniform grid.

    Parameters
    ----------
    field:
        The coefficients to synthesize.
    grid_points_per_dim:
        Grid resolution M; defaults to the next power of two >= 2(N+1).
        Must satisfy M >= 2N+1 so synthesis is alias-free.

    Returns
    -------
    GridField with real samples.  The imaginary residue of the inverse
    transform is checked against SYNTHESIS_IMAG_RTOL times the field
    magnitude before being discarded.
    """
    n = field.truncation
    m = default_grid_size(n) if grid_points_per_dim is None else int(grid_points_per_dim)
    if m < 2 * n + 1:
        raise ValueError(
            f"grid resolution {m} is too small for truncation {n}; need at least {2 * n + 1}"
        )
    spectrum = np.zeros((m,) * field.dim, dtype=complex)
    idx = _embed_indices(n, m)
    if field.dim == 1:
        spectrum[idx] = field.coeffs
    else:
        spectrum[np.ix_(idx, idx)] = field.coeffs
    values = np.fft.ifftn(spectrum) * (m**field.dim)
    imag_max = float(np.max(np.abs(values.imag)))
    real_max = float(np.max(np.abs(values.real)))
    if imag_max > SYNTHESIS_IMAG_RTOL * real_max:
        raise NumericalError(
            f"synthesis produced imaginary residue {imag_max:.3e} "
            f"above {SYNTHESIS_IMAG_RTOL:g} x field magnitude {real_max:.3e}"
        )
    return GridField(field.dim, values.real)


def analyze(grid: GridField, truncation: int) -> tuple[FourierField, float]:
    """Discrete Fourier coefficients of the samples, restricted to the box.

    Returns the mean-zero field together with the discarded mean (the zero
    mode of the samples), which the caller may want for diagnostics.
    """
    n = int(truncation)
    if n < 1:
        raise ValueError(f"truncation must be a positive integer, got {truncation}")
    m = grid.resolution
    if m < 2 * n + 1:
        raise ValueError(
            f"grid resolution {m} is too small for truncation {n}; need at least {2 * n + 1}"
        )
    spectrum = np.fft.fftn(grid.samples) / (m**grid.dim)
    mean = float(spectrum[(0,) * grid.dim].real)
    idx = _embed_indices(n, m)
    if grid.dim == 1:
        coeffs = spectrum[idx].copy()
    else:
        coeffs = spectrum[np.ix_(idx, idx)].copy()
    coeffs[(n,) * grid.dim] = 0.0
    # fftn of real input is Hermitian only to roundoff; tighten it so that
    # downstream exact checks are not tripped by last-bit noise.
    coeffs = 0.5 * (coeffs + _conj_flip(coeffs))
    return FourierField(grid.dim, n, coeffs), mean


def embed(field: FourierField, truncation: int) -> FourierField:
    """Re-express a field in a larger coefficient box (zero padding)."""
    n = int(truncation)
    if n < field.truncation:
        raise ValueError(
            f"cannot embed truncation {field.truncation} into smaller box {n}"
        )
    if n == field.truncation:
        return field
    size = 2 * n + 1
    coeffs = np.zeros((size,) * field.dim, dtype=complex)
    lo, hi = n - field.truncation, n + field.truncation + 1
    coeffs[(slice(lo, hi),) * field.dim] = field.coeffs
    return FourierField(field.dim, n, coeffs)


def multiply(f: FourierField, g: FourierField) -> tuple[FourierField, float]:
    """Pointwise product of two fields, exact in the combined truncation.

    The product of trigonometric polynomials with boxes N_f and N_g lives in
    the box N_f + N_g; the grid is sized so no aliasing occurs.  Returns the
    mean-zero part of the product and its mean.
    """
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")
    n_out = f.truncation + g.truncation
    m = default_grid_size(n_out)
    a = synthesize(f, m).samples
    b = synthesize(g, m).samples
    return analyze(GridField(f.dim, a * b), n_out)
