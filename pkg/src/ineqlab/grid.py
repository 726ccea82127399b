"""Periodic grid functions on [0, L]^d and their Fourier spectra.

Functions are piecewise constant on the cells of a uniform lattice, so
every quadrature-type functional is an exact finite sum times h^d.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic lattice: d axes, n cells per axis, period lam."""

    d: int
    n: int
    lam: float

    def __post_init__(self):
        if self.d not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.n < 1:
            raise ValueError(f"cells per axis must be positive, got {self.n}")
        if not self.lam > 0:
            raise ValueError(f"period must be positive, got {self.lam}")

    @property
    def h(self):
        """Cell width."""
        return self.lam / self.n

    @property
    def size(self):
        """Total cell count n^d."""
        return self.n ** self.d

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def cell_volume(self):
        return self.h ** self.d

    def axis_coords(self):
        """Cell-center coordinates along one axis."""
        return (np.arange(self.n) + 0.5) * self.h


@dataclass(frozen=True)
class GridFunction:
    """Real values on the cells of a GridSpec, row-major."""

    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.spec.size:
            raise ValueError(
                f"value count {v.size} does not match grid size {self.spec.size}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("grid values must be finite")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def mean(self):
        return float(self.values.mean())

    def as_nd(self):
        return self.values.reshape(self.spec.shape)

    def with_values(self, values):
        return GridFunction(self.spec, values)


@dataclass(frozen=True)
class SpectrumView:
    """Fourier coefficients indexed by integer wave vectors.

    Layout is centered: index along each axis runs over
    k = -n/2, ..., n/2 - 1 (fftshift order).  The coefficient at k = 0
    equals the mean of the grid function, and Parseval holds in the form

        h^d sum |values|^2 = lam^d sum |coeffs|^2.

    The physical frequency of mode k is 2*pi*k/lam per axis.
    """

    spec: GridSpec
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.spec.shape:
            raise ValueError("coefficient shape does not match grid")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def wavevectors(self):
        """Integer wave numbers along one axis, in coefficient order."""
        n = self.spec.n
        return np.fft.fftshift(np.fft.fftfreq(n, d=1.0 / n)).astype(int)


def make(spec, values):
    """Wrap a value array as a GridFunction (validates length and finiteness)."""
    return GridFunction(spec, values)


def to_spectrum(u):
    """Forward transform with the mean-at-zero normalization."""
    c = np.fft.fftn(u.as_nd()) / u.spec.size
    return SpectrumView(u.spec, np.fft.fftshift(c))


def from_spectrum(sv):
    """Inverse of to_spectrum; the result is real up to round-off."""
    c = np.fft.ifftshift(sv.coeffs) * sv.spec.size
    vals = np.fft.ifftn(c)
    return GridFunction(sv.spec, np.real(vals).ravel())


def tile(u, k):
    """Periodically replicate u onto [0, k*lam]^d with k*n cells per axis.

    Per-volume integrals of local functionals are unchanged.
    """
    if int(k) != k or k < 1:
        raise ValueError(f"tile factor must be a positive integer, got {k}")
    k = int(k)
    spec = u.spec
    arr = u.as_nd()
    arr = np.tile(arr, (k,) * spec.d)
    new = GridSpec(spec.d, k * spec.n, k * spec.lam)
    return GridFunction(new, arr.ravel())


def dilate(u, ell, m):
    """Physical dilation: values scaled by m, period scaled by ell.

    No resampling happens; the same cell array represents the dilated
    piecewise-constant function, so homogeneity laws are exact.
    """
    if not ell > 0:
        raise ValueError(f"dilation scale must be positive, got {ell}")
    new = GridSpec(u.spec.d, u.spec.n, ell * u.spec.lam)
    return GridFunction(new, m * u.values)


def refine(u, k):
    """Same piecewise-constant function on a k-times finer grid."""
    if int(k) != k or k < 1:
        raise ValueError(f"refine factor must be a positive integer, got {k}")
    k = int(k)
    arr = u.as_nd()
    for ax in range(u.spec.d):
        arr = np.repeat(arr, k, axis=ax)
    new = GridSpec(u.spec.d, k * u.spec.n, u.spec.lam)
    return GridFunction(new, arr.ravel())


def shift(u, offsets):
    """Cyclic shift by whole cells (one offset per axis)."""
    arr = np.roll(u.as_nd(), offsets, axis=tuple(range(u.spec.d)))
    return GridFunction(u.spec, arr.ravel())


# ---------------------------------------------------------------------------
# File formats.
#
# PGF1 (text):   header line "PGF1 d n lambda", then n^d whitespace separated
#                decimal values in row-major order.
# PGB1 (binary): 24-byte header = 8-byte magic "PGB1\0\0\0\0", d and n as
#                32-bit little-endian integers, lambda as little-endian
#                float64; then n^d little-endian float64 values, row-major.
# ---------------------------------------------------------------------------

_PGB1_MAGIC = b"PGB1\x00\x00\x00\x00"


def save_grid(u, path, binary=False):
    path = str(path)
    if binary:
        with open(path, "wb") as f:
            f.write(_PGB1_MAGIC)
            f.write(struct.pack("<ii", u.spec.d, u.spec.n))
            f.write(struct.pack("<d", u.spec.lam))
            f.write(u.values.astype("<f8").tobytes())
    else:
        with open(path, "w") as f:
            f.write(f"PGF1 {u.spec.d} {u.spec.n} {u.spec.lam!r}\n")
            f.write(" ".join(repr(v) for v in u.values.tolist()))
            f.write("\n")


def load_grid(path):
    path = str(path)
    with open(path, "rb") as f:
        head = f.read(8)
    if head == _PGB1_MAGIC:
        with open(path, "rb") as f:
            raw = f.read()
        if len(raw) < 24:
            raise ValueError("truncated PGB1 header")
        d, n = struct.unpack("<ii", raw[8:16])
        (lam,) = struct.unpack("<d", raw[16:24])
        spec = GridSpec(d, n, lam)
        vals = np.frombuffer(raw[24:], dtype="<f8")
        if vals.size != spec.size:
            raise ValueError(
                f"PGB1 payload has {vals.size} values, expected {spec.size}"
            )
        return GridFunction(spec, vals)
    with open(path, "r") as f:
        header = f.readline().split()
        if len(header) != 4 or header[0] != "PGF1":
            raise ValueError("malformed grid file header")
        spec = GridSpec(int(header[1]), int(header[2]), float(header[3]))
        tokens = f.read().split()
    if len(tokens) != spec.size:
        raise ValueError(f"PGF1 has {len(tokens)} values, expected {spec.size}")
    return GridFunction(spec, np.array([float(t) for t in tokens]))
