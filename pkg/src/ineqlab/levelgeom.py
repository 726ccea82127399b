"""Level sets, mollifiers, the coarea identity, and the covering/capacity
construction: density sets, maximal ball packings, logarithmic capacity
potentials in d = 2 and indicator potentials in general d, plus the
numerical verification of the covering-lemma claims with their explicit
constants.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, GridSpec
from .norms import tv_norm


@dataclass(frozen=True)
class SignedLevelIndicator:
    spec: GridSpec
    values: np.ndarray = field(repr=False)
    level: float

    def abs_integral(self):
        return float(np.sum(np.abs(self.values)) * self.spec.cell_volume)

    def as_grid(self):
        return GridFunction(self.spec, self.values.astype(float))


def level_indicator(u, mu):
    """Signed indicator: +1 where u > mu, -1 where u < -mu, 0 otherwise."""
    if mu < 0:
        raise ValueError(f"level must be nonnegative, got {mu}")
    v = np.where(u.values > mu, 1.0, np.where(u.values < -mu, -1.0, 0.0))
    return SignedLevelIndicator(u.spec, v, float(mu))


def upper_level_set(u, mu):
    """Binary indicator of {u > mu} as a GridFunction."""
    return u.with_values((u.values > mu).astype(float))


# ------------------------------------------------------------- mollifiers


def _offset_dist(spec):
    """Torus distance of every lattice offset from the origin."""
    z = spec.h * np.arange(spec.n)
    z = np.minimum(z, spec.lam - z)
    axes = [z**2] * spec.d
    grids = np.meshgrid(*axes, indexing="ij") if spec.d > 1 else [axes[0]]
    return np.sqrt(sum(grids))


@dataclass(frozen=True)
class MollifierKernel:
    """Nonnegative symmetric kernel of unit discrete mass.

    kind 'smooth-bump' is the C^2 bump (1 - (r/R)^2)^3 supported in radius R;
    kind 'hard-disc' is the uniform density on the ball of radius R/2.  For
    the smooth kind the discretely measured reference constants of the
    unit-scale kernel are tabulated: grad_const = R ||grad psi_R||_1 and
    lap_const = R^2 ||Delta psi_R||_1, with spectral differential operators
    so that Young's convolution inequality is exact on the grid.
    """

    spec: GridSpec
    kind: str
    radius: float
    weights: np.ndarray = field(repr=False)
    grad_const: float
    lap_const: float

    def convolve(self, u):
        f = np.fft.fftn(u.as_nd()) * np.fft.fftn(self.weights)
        out = np.real(np.fft.ifftn(f)) * u.spec.cell_volume
        return u.with_values(out.ravel())


def make_kernel(spec, kind, radius):
    if not 0 < radius <= spec.lam / 2:
        raise ValueError(f"kernel radius must lie in (0, lam/2], got {radius}")
    r = _offset_dist(spec)
    if kind == "smooth-bump":
        w = np.maximum(0.0, 1.0 - (r / radius) ** 2) ** 3
    elif kind == "hard-disc":
        w = (r <= radius / 2).astype(float)
    else:
        raise ValueError(f"unknown kernel kind {kind!r}")
    total = w.sum() * spec.cell_volume
    if total == 0:
        raise ValueError("kernel support contains no cells; enlarge radius")
    w = w / total
    gc = lc = float("nan")
    if kind == "smooth-bump":
        gk = _spectral_gradient_l1(spec, w)
        lk = _spectral_laplacian_l1(spec, w)
        gc, lc = radius * gk, radius**2 * lk
    return MollifierKernel(spec, kind, float(radius), w, gc, lc)


def _spectral_gradient_l1(spec, arr):
    k = 2j * np.pi * np.fft.fftfreq(spec.n, d=1.0 / spec.n) / spec.lam
    fhat = np.fft.fftn(arr)
    total = 0.0
    for ax in range(spec.d):
        sh = [1] * spec.d
        sh[ax] = spec.n
        g = np.real(np.fft.ifftn(fhat * k.reshape(sh)))
        total += np.sum(np.abs(g)) * spec.cell_volume
    return float(total)


def _spectral_laplacian_l1(spec, arr):
    k2 = np.zeros(spec.shape)
    f = (2 * np.pi * np.fft.fftfreq(spec.n, d=1.0 / spec.n) / spec.lam) ** 2
    for ax in range(spec.d):
        sh = [1] * spec.d
        sh[ax] = spec.n
        k2 = k2 + f.reshape(sh)
    lap = np.real(np.fft.ifftn(-k2 * np.fft.fftn(arr)))
    return float(np.sum(np.abs(lap)) * spec.cell_volume)


def mollify(u, kernel):
    """Periodic convolution with a unit-mass kernel.

    Returns (u_R, slack) where slack = R * tv(u) - ||u - u_R||_1 >= 0 is the
    discrete analogue of the mollifier displacement bound.
    """
    if kernel.spec != u.spec:
        raise ValueError("kernel and function live on different grids")
    ur = kernel.convolve(u)
    l1 = float(np.sum(np.abs(u.values - ur.values)) * u.spec.cell_volume)
    slack = kernel.radius * tv_norm(u) - l1
    return ur, slack


# ------------------------------------------------------------ coarea check


def coarea_check(u):
    """Exact discrete coarea identity for the anisotropic TV.

    Sums perimeter(level set) x level gap over the finite level set of u and
    compares with tv_norm(u).  Returns (tv, level_sum, relative error).
    """
    spec = u.spec
    tv = tv_norm(u)
    levels = np.unique(np.abs(u.values))
    levels = np.concatenate([[0.0], levels[levels > 0]])
    total = 0.0
    for lo, hi in zip(levels[:-1], levels[1:]):
        mid = 0.5 * (lo + hi)
        pos = (u.values > mid).astype(float)
        neg = (u.values < -mid).astype(float)
        per = tv_norm(u.with_values(pos)) + tv_norm(u.with_values(neg))
        total += per * (hi - lo)
    err = abs(tv - total) / max(tv, 1e-300) if tv > 0 else abs(total)
    return tv, total, err


# --------------------------------------------------- covers and potentials


@dataclass(frozen=True)
class BallCover:
    spec: GridSpec
    centers: np.ndarray = field(repr=False)  # (N, d) integer cell indices
    radius: float
    min_center_distance: float  # separation certificate (>= R up to grid)
    covered: bool  # every density-set cell lies within R of some center

    @property
    def count(self):
        return int(len(self.centers))

    def coords(self):
        """Physical cell-center coordinates of the ball centers."""
        return (self.centers + 0.5) * self.spec.h


@dataclass(frozen=True)
class CoverPotential:
    grid: GridFunction
    radius: float
    outer_radius: float
    kind: str  # 'log-capacity' or 'indicator'


def density_set(chi, radius):
    """Cells where {chi = 1} fills more than half of the R/2 ball around them.

    Implemented as thresholding the hard-disc mollification at 1/2, which is
    the same statement cell-exactly.
    """
    _require_binary(chi)
    if radius < 2 * chi.spec.h:
        raise ValueError("density radius below 2h: the R/2 ball holds no neighbors")
    kernel = make_kernel(chi.spec, "hard-disc", radius)
    smoothed = kernel.convolve(chi)
    # guard the strict inequality against convolution round-off
    return smoothed.values > 0.5 + 1e-12


def _require_binary(chi):
    vals = np.unique(chi.values)
    if not set(vals.tolist()) <= {0.0, 1.0}:
        raise ValueError("expected a binary {0,1} function")


def _torus_dist2_cells(spec, cells, center_cell):
    """Squared torus distance between cell centers, from integer indices."""
    diff = np.abs(cells - center_cell) * spec.h
    diff = np.minimum(diff, spec.lam - diff)
    return np.sum(diff**2, axis=-1)


def maximal_packing(chi_or_mask, radius, spec=None):
    """Greedy lexicographic maximal packing of the density set.

    Scans the cells of Omega_R in row-major order and accepts any cell whose
    center is at least R (torus distance) from all accepted centers.  The
    result is maximal, so every Omega_R cell lies within R of some center.
    """
    if isinstance(chi_or_mask, GridFunction):
        mask = chi_or_mask.values.astype(bool)
        spec = chi_or_mask.spec
    else:
        mask = np.asarray(chi_or_mask).ravel()
        if spec is None:
            raise ValueError("need a GridSpec when passing a raw mask")
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        empty = np.zeros((0, spec.d), dtype=int)
        return BallCover(spec, empty, float(radius), np.inf, True)
    cells = np.stack(np.unravel_index(idx, spec.shape), axis=-1)
    alive = np.ones(idx.size, dtype=bool)
    centers = []
    cover_d2 = np.full(idx.size, np.inf)
    for i in range(idx.size):
        if not alive[i]:
            continue
        d2 = _torus_dist2_cells(spec, cells, cells[i])
        centers.append(cells[i])
        alive &= d2 >= radius**2  # anything closer can never be accepted
        cover_d2 = np.minimum(cover_d2, d2)
    centers = np.array(centers, dtype=int)
    dmin = np.inf
    for i in range(len(centers) - 1):
        d2 = _torus_dist2_cells(spec, centers[i + 1 :], centers[i])
        dmin = min(dmin, float(np.sqrt(d2.min())))
    covered = bool(np.all(cover_d2 <= radius**2 * (1 + 1e-12)))
    return BallCover(spec, centers, float(radius), dmin, covered)


def _max_of_rolled_profile(spec, profile, centers):
    """max_i profile(x - y_i) for a profile tabulated on the offset grid."""
    out = np.zeros(spec.shape)
    for c in centers:
        out = np.maximum(out, np.roll(profile, tuple(c), axis=tuple(range(spec.d))))
    return out


def capacity_potential(cover, radius, outer, spec=None):
    """Pointwise max of radial log profiles: 1 on B_R, log decay to 0 at B_L."""
    spec = cover.spec if spec is None else spec
    if spec.d != 2:
        raise ValueError("log-capacity potentials are defined for d = 2 only")
    if not radius < outer:
        raise ValueError(f"need R < L, got R={radius}, L={outer}")
    if outer > spec.lam / 2:
        raise ValueError(f"outer radius exceeds lam/2: {outer}")
    r = _offset_dist(spec)
    lnLR = np.log(outer / radius)
    prof = np.clip(np.log(outer / np.maximum(r, 1e-300)) / lnLR, 0.0, 1.0)
    vals = _max_of_rolled_profile(spec, prof, cover.centers)
    return CoverPotential(GridFunction(spec, vals.ravel()), float(radius), float(outer), "log-capacity")


def indicator_potential(cover, radius, spec=None):
    """Characteristic function of the union of R-balls around the centers."""
    spec = cover.spec if spec is None else spec
    prof = (_offset_dist(spec) <= radius).astype(float)
    vals = _max_of_rolled_profile(spec, prof, cover.centers)
    return CoverPotential(GridFunction(spec, vals.ravel()), float(radius), float(radius), "indicator")


def neg_laplacian(u):
    """-Delta with the standard 2d+1 point periodic stencil."""
    arr = u.as_nd()
    out = np.zeros_like(arr)
    h2 = u.spec.h**2
    for ax in range(u.spec.d):
        out += (2 * arr - np.roll(arr, 1, axis=ax) - np.roll(arr, -1, axis=ax)) / h2
    return u.with_values(out.ravel())


def grad_dot(u, v):
    """integral of grad u . grad v with forward differences (summation by
    parts makes this equal to integral of (-Delta u) v exactly)."""
    if u.spec != v.spec:
        raise ValueError("mismatched grids")
    ua, va = u.as_nd(), v.as_nd()
    total = 0.0
    for ax in range(u.spec.d):
        du = np.roll(ua, -1, axis=ax) - ua
        dv = np.roll(va, -1, axis=ax) - va
        total += np.sum(du * dv)
    return float(total * u.spec.cell_volume / u.spec.h**2)


def integral(u):
    return float(np.sum(u.values) * u.spec.cell_volume)


@dataclass(frozen=True)
class ClaimRow:
    claim: str
    lhs: float
    rhs: float

    @property
    def ratio(self):
        if self.rhs == 0:
            return 0.0 if self.lhs == 0 else np.inf
        return self.lhs / self.rhs

    def passes(self, tol=0.0):
        return self.lhs <= self.rhs * (1 + tol) + 1e-12


def verify_geom_claims(chi, radius, outer):
    """Evaluate both sides of the covering-lemma claims with their explicit
    constants (d = 2, binary chi).

    Rows produced (lhs <= rhs expected, up to the stated discretization band):

      claim1    integral chi <= 2 R tv(chi) + integral_{Omega_R} chi
      claim1a   |{chi=1} \\ Omega_R| <= 2 ||chi - chi_R||_1
      claim1b   ||chi - chi_R||_1 <= R tv(chi)
      packing   N (pi/4) R^2 <= 2 integral chi
      claim3    integral chi <= 2 R tv(chi) + integral chi phi_{R,L}
      claim4    integral phi_{R,L} <= N pi (L^2 - R^2) / (2 ln(L/R))
      claim5    integral max(-Delta phi, 0) <= N 2 pi / ln(L/R)
      capmass   per-center discrete capacity mass vs 2 pi / ln(L/R) (ratio ~ 1)
      claim2a   integral grad phi . grad phi' (phi' = phi) <= claim5 lhs
    """
    if chi.spec.d != 2:
        raise ValueError("geometry claims are verified in d = 2")
    _require_binary(chi)
    spec = chi.spec

    kernel = make_kernel(spec, "hard-disc", radius)
    chi_r = kernel.convolve(chi)
    omega = chi_r.values > 0.5 + 1e-12
    cover = maximal_packing(omega, radius, spec=spec)
    pot = capacity_potential(cover, radius, outer)
    phi = pot.grid

    int_chi = integral(chi)
    tv_chi = tv_norm(chi)
    l1_moll = float(np.sum(np.abs(chi.values - chi_r.values)) * spec.cell_volume)
    int_omega_chi = float(np.sum(chi.values[omega.ravel()]) * spec.cell_volume)
    int_chi_phi = float(np.sum(chi.values * phi.values) * spec.cell_volume)
    n = cover.count
    lnLR = np.log(outer / radius)

    neg = neg_laplacian(phi)
    claim5_lhs = float(np.sum(np.maximum(neg.values, 0.0)) * spec.cell_volume)

    # per-center capacity mass on a fresh single-center potential
    single_centers = cover.centers[:1] if n else np.zeros((0, 2), dtype=int)
    single = BallCover(spec, single_centers, radius, np.inf, True)
    if n:
        phi1 = capacity_potential(single, radius, outer).grid
        cap1 = float(np.sum(np.maximum(neg_laplacian(phi1).values, 0.0)) * spec.cell_volume)
    else:
        cap1 = 0.0

    rows = [
        ClaimRow("claim1", int_chi, 2 * radius * tv_chi + int_omega_chi),
        ClaimRow("claim1a", int_chi - int_omega_chi, 2 * l1_moll),
        ClaimRow("claim1b", l1_moll, radius * tv_chi),
        ClaimRow("packing", n * (np.pi / 4) * radius**2, 2 * int_chi),
        ClaimRow("claim3", int_chi, 2 * radius * tv_chi + int_chi_phi),
        ClaimRow("claim4", integral(phi), n * np.pi * (outer**2 - radius**2) / (2 * lnLR)),
        ClaimRow("claim5", claim5_lhs, n * 2 * np.pi / lnLR),
        ClaimRow("capmass", cap1, 2 * np.pi / lnLR),
        ClaimRow("claim2a", grad_dot(phi, phi), claim5_lhs),
    ]
    return rows, cover, pot
