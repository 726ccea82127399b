"""Scalar functionals of a single grid function.

Covers Lebesgue and weak Lebesgue norms, the log-weighted L^{4/3} norm,
discrete total variation, spectral fractional norms |grad|^s, the
double-integral representation of the -1/2 norm, and the gradient/inverse
gradient product used by the Gagliardo-Nirenberg family.

Conventions that the rest of the package relies on:

* total variation defaults to the anisotropic (per-axis l1) form, for
  which the discrete coarea identity is exact on step functions;
* negative-order spectral norms require (numerically) vanishing mean and
  exclude the k = 0 mode;
* under ``dilate(u, ell, m)`` the spectral norm of order s scales by the
  exact factor m * ell^(d/2 - s).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MEAN_ZERO_RTOL = 1e-10


@dataclass(frozen=True)
class NormReport:
    kind: str
    value: float
    params: dict
    metadata: dict


def _require_mean_zero(u, what, ref_scale=0.0):
    scale = float(np.max(np.abs(u.values))) if u.values.size else 0.0
    if abs(u.mean) > MEAN_ZERO_RTOL * max(scale, ref_scale, 1e-300):
        raise ValueError(f"{what} requires vanishing mean, got mean {u.mean:g}")


def lp_norm(u, p):
    """(h^d sum |u|^p)^(1/p); p = inf gives the max norm."""
    if p != np.inf and p < 1:
        raise ValueError(f"exponent must satisfy p >= 1, got {p}")
    a = np.abs(u.values)
    if p == np.inf:
        return float(a.max())
    return float((u.spec.cell_volume * np.sum(a**p)) ** (1.0 / p))


def _level_measures(u):
    """Distinct positive values v of |u| with the measures of {|u| >= v}."""
    a = np.abs(u.values)
    vals, cnt = np.unique(a, return_counts=True)
    tail = np.cumsum(cnt[::-1])[::-1].astype(float)  # count of {|u| >= v}
    keep = vals > 0
    return vals[keep], tail[keep] * u.spec.cell_volume


def weak_lp_norm(u, p):
    """sup_mu mu * |{|u| >= mu}|^(1/p), exact on the finite level set."""
    if not 1 <= p < np.inf:
        raise ValueError(f"exponent must satisfy 1 <= p < inf, got {p}")
    vals, meas = _level_measures(u)
    if vals.size == 0:
        return 0.0
    return float(np.max(vals * meas ** (1.0 / p)))


def weak_log_norm(u):
    """sup_{mu >= e} mu ln^{1/4}(mu) |{|u| > mu}|^{3/4}, exact level sup."""
    a = np.abs(u.values)
    hv = u.spec.cell_volume
    e = float(np.e)
    best = e * ((a > e).sum() * hv) ** 0.75  # candidate mu = e (ln e = 1)
    vals, meas = _level_measures(u)
    keep = vals > e  # sup approached as mu -> v from below, measure {|u| >= v}
    if np.any(keep):
        v, m = vals[keep], meas[keep]
        best = max(best, float(np.max(v * np.log(v) ** 0.25 * m**0.75)))
    return float(best)


def log_weighted_l43(u):
    """L^{4/3} norm of u * ln^{1/4}(max(u, e)); the weight is 1 where u <= e."""
    w = u.values * np.log(np.maximum(u.values, np.e)) ** 0.25
    return lp_norm(u.with_values(w), 4.0 / 3.0)


def _forward_diffs(u):
    """Forward periodic differences along each axis (values, not divided by h)."""
    arr = u.as_nd()
    return [np.roll(arr, -1, axis=ax) - arr for ax in range(u.spec.d)]


def tv_norm(u, mode="anisotropic"):
    """Discrete total variation, h^(d-1) times the sum of jump magnitudes.

    anisotropic: sum of |forward difference| over axes (exact coarea);
    isotropic:   l2 magnitude of the forward-difference vector.
    """
    diffs = _forward_diffs(u)
    if mode == "anisotropic":
        s = sum(np.sum(np.abs(d)) for d in diffs)
    elif mode == "isotropic":
        s = np.sum(np.sqrt(sum(d**2 for d in diffs)))
    else:
        raise ValueError(f"unknown TV mode {mode!r}")
    return float(u.spec.h ** (u.spec.d - 1) * s)


def _freq_magnitude2(spec):
    """|2 pi k / lam|^2 on the unshifted FFT layout."""
    f = 2.0 * np.pi * np.fft.fftfreq(spec.n, d=1.0 / spec.n) / spec.lam
    mags = []
    for ax in range(spec.d):
        sh = [1] * spec.d
        sh[ax] = spec.n
        mags.append((f**2).reshape(sh))
    return sum(np.broadcast_arrays(*mags)) if spec.d > 1 else mags[0]


SPECTRAL_ORDERS = (-1.0, -0.5, 0.0, 0.5, 1.0)


def spectral_norm(u, s, mean_scale=0.0):
    """Fourier multiplier norm (sum over k != 0 of |2 pi k/lam|^{2s} |u_k|^2)^{1/2}.

    For s < 0 the function must have vanishing mean (the k = 0 mode is
    undefined there); for s >= 0 the k = 0 mode contributes nothing.
    mean_scale widens the reference scale of the vanishing-mean check, for
    fields obtained by centering a larger one.
    """
    if float(s) not in SPECTRAL_ORDERS:
        raise ValueError(f"unsupported spectral order {s}")
    if s < 0:
        _require_mean_zero(u, f"spectral norm of order {s}", mean_scale)
    spec = u.spec
    c = np.fft.fftn(u.as_nd()) / spec.size
    k2 = _freq_magnitude2(spec)
    w = np.abs(c) ** 2
    zero = (0,) * spec.d
    w[zero] = 0.0
    k2 = k2.copy()
    k2[zero] = 1.0  # excluded mode; value irrelevant
    total = np.sum(w * k2 ** float(s)) * spec.lam**spec.d
    return float(np.sqrt(total))


def doubleint_half_norm(f, cutoff):
    """Double-integral form  h^{2d} sum_{0<dist<=cutoff} |f(x)-f(y)|^2 / dist^{d-1}.

    Periodic (torus) distances; cutoff at most lam/2 so no pair is counted
    through both sides of the torus.  This is a cross-check quantity only:
    it is treated as proportional to spectral_norm(f, -1/2)^2 with an
    unfixed constant, and the proportionality is only meaningful when the
    cutoff resolves the relevant modes.
    """
    spec = f.spec
    if not 0 < cutoff <= spec.lam / 2:
        raise ValueError(f"cutoff must lie in (0, lam/2], got {cutoff}")
    # offset kernel K(z) = 1/|z|^{d-1} on 0 < |z| <= cutoff, as a grid array
    axes = []
    for _ in range(spec.d):
        z = spec.h * np.arange(spec.n)
        z = np.minimum(z, spec.lam - z)
        axes.append(z**2)
    grids = np.meshgrid(*axes, indexing="ij") if spec.d > 1 else [axes[0]]
    dist = np.sqrt(sum(grids))
    kern = np.zeros(spec.shape)
    mask = (dist > 0) & (dist <= cutoff)
    kern[mask] = dist[mask] ** -(spec.d - 1)
    # sum over ordered pairs: sum_z K(z) sum_x |f(x+z)-f(x)|^2, and the inner
    # sum is 2(a(0) - a(z)) with a the circular autocorrelation of f.
    arr = f.as_nd()
    fhat = np.fft.fftn(arr)
    acorr = np.real(np.fft.ifftn(np.abs(fhat) ** 2))
    a0 = float(np.sum(arr**2))
    total = np.sum(kern * 2.0 * (a0 - acorr))
    return float(spec.h ** (2 * spec.d) * total)


def grad_q_norm(u, q):
    """q-norm of the forward-difference gradient, (h^d sum |Du/h|^q)^{1/q}.

    |Du| is the euclidean magnitude of the per-axis forward differences;
    q = inf gives the max magnitude.  q = 1 coincides with isotropic TV.
    """
    if q != np.inf and q < 1:
        raise ValueError(f"exponent must satisfy q >= 1, got {q}")
    mag = np.sqrt(sum(d**2 for d in _forward_diffs(u))) / u.spec.h
    if q == np.inf:
        return float(mag.max())
    return float((u.spec.cell_volume * np.sum(mag**q)) ** (1.0 / q))


def gn_rhs(u, q):
    """Gradient/inverse-gradient product ||grad u||_q^{1/2} ||grad^{-1} u||_2^{1/2}.

    The left-hand exponent p = 4q/(2+q) pairs with this right-hand side.
    At q = 2 the gradient norm is evaluated spectrally, which makes the
    q = 2 estimate an exact Fourier Cauchy-Schwarz inequality (ratio <= 1);
    other q use the forward-difference gradient.
    """
    if q != np.inf and q < 1:
        raise ValueError(f"exponent must satisfy q >= 1, got {q}")
    _require_mean_zero(u, "gradient/inverse-gradient product")
    gq = spectral_norm(u, 1.0) if q == 2 else grad_q_norm(u, q)
    return float(np.sqrt(gq) * np.sqrt(spectral_norm(u, -1.0)))


def norm_report(u, kind, **params):
    """Uniform entry point used by the CLI."""
    if kind == "lp":
        val = lp_norm(u, params["p"])
    elif kind == "weak-lp":
        val = weak_lp_norm(u, params["p"])
    elif kind == "weak-log":
        val = weak_log_norm(u)
    elif kind == "log-l43":
        val = log_weighted_l43(u)
    elif kind == "tv":
        val = tv_norm(u, params.get("mode", "anisotropic"))
    elif kind == "spectral":
        val = spectral_norm(u, params["s"])
    elif kind == "gn-rhs":
        val = gn_rhs(u, params["q"])
    elif kind == "doubleint-half":
        val = doubleint_half_norm(u, params["cutoff"])
    else:
        raise ValueError(f"unknown norm kind {kind!r}")
    return NormReport(kind=kind, value=val, params=params, metadata={})
