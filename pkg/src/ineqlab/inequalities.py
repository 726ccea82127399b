"""Direct checkers for the interpolation inequalities, plus empirical
constant calibration and extremizer search over generator families.

Inequality catalogue (lhs <= constant * rhs in every case):

  prop1        ||u||_{4/3} vs ||grad u||_1^{1/2} ||grad^{-1} u||_2^{1/2}
  gn(q)        ||u||_p, p = 4q/(2+q), vs ||grad u||_q^{1/2} ||grad^{-1} u||_2^{1/2}
  weak1        weak-L^{4/3} variant of prop1
  prop2        log-weighted L^{4/3} strengthening (d = 2, u >= -1)
  weaklog      weak form of the log strengthening
  geomest      volume-fraction form for binary fields: Phi ln^{1/3}(1/Phi)
               vs per-volume (tv)^{2/3} (squared order -1 norm)^{1/3}
  prop3        ||(u - C)_+||_{(2+3d)/(3d)} vs tv and W_2^2(u, 1)
  prop5        additive form with threshold nu^{(3d+1)/(3d+3)}, mixing tv,
               W_2^2(u, v) and the order -1/2 norm of v - Phi
  prop4        multiplicative sup/inf form; the inner infimum is only
               approximated from above by a mollification family, so its
               reports are informational and never certified

The existential constants are replaced by fixture constants committed in
fixtures.py; checks assert against those, calibration sweeps update them
deliberately.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fixtures
from .families import FamilySpec, generate, parameter_box
from .grid import dilate, refine, tile
from .norms import (
    MEAN_ZERO_RTOL,
    gn_rhs,
    log_weighted_l43,
    lp_norm,
    spectral_norm,
    tv_norm,
    weak_log_norm,
    weak_lp_norm,
)
from .transport import w2_squared, w2_to_uniform

INEQUALITY_IDS = (
    "prop1",
    "gn",
    "weak1",
    "prop2",
    "weaklog",
    "geomest",
    "prop3",
    "prop5",
    "prop4",
)


@dataclass(frozen=True)
class TraceStep:
    step: str
    lhs: float
    rhs: float

    @property
    def slack(self):
        return self.rhs - self.lhs


@dataclass(frozen=True)
class InequalityReport:
    ineq_id: str
    input_desc: str
    lhs: float
    rhs: float
    ratio: float
    constant: float
    passed: bool
    degenerate: bool = False
    certified: bool = True
    steps: tuple = ()
    extra: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CalibrationResult:
    ineq_id: str
    sweep_desc: str
    constant: float
    argmax_desc: str
    ratios: tuple
    stability: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def parallel_map(fn, items):
    """Map preserving order; thread count capped by INEQLAB_THREADS."""
    threads = int(os.environ.get("INEQLAB_THREADS", "1"))
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _ratio(lhs, rhs):
    if rhs > 0:
        return lhs / rhs, False
    return (0.0, True) if lhs == 0 else (np.inf, False)


def _require(cond, message):
    if not cond:
        raise ValueError(message)


def _require_mean_zero(u):
    scale = float(np.max(np.abs(u.values))) if u.values.size else 0.0
    _require(
        abs(u.mean) <= MEAN_ZERO_RTOL * max(scale, 1e-300),
        f"precondition violated: mean(u) = 0 (got {u.mean:g})",
    )


def _interp_rhs(u):
    return float(np.sqrt(tv_norm(u)) * np.sqrt(spectral_norm(u, -1)))


def centered_half_norm(v):
    """order -1/2 seminorm of v minus its mean (0 for numerically constant v)."""
    c = v.values - v.mean
    scale = float(np.max(np.abs(v.values))) if v.values.size else 0.0
    if float(np.max(np.abs(c))) <= 1e-13 * max(scale, 1e-300):
        return 0.0
    return spectral_norm(v.with_values(c), -0.5, mean_scale=scale)


def _plus_power_norm(u, shift, p):
    """||(u - shift)_+||_p"""
    w = np.maximum(u.values - shift, 0.0)
    return lp_norm(u.with_values(w), p)


def check(ineq_id, u, v=None, *, q=None, nu=None, c_thr=None, nu_grid=None,
          scales=None, constant=None, w2_kw=None, desc=""):
    """Evaluate one inequality on explicit inputs and report lhs, rhs, ratio.

    The pass flag compares the ratio against `constant` (defaulting to the
    committed fixture constant for the inequality).
    """
    w2_kw = dict(w2_kw or {})
    d = u.spec.d
    extra = {}
    certified = True

    if ineq_id == "prop1":
        _require_mean_zero(u)
        lhs, rhs = lp_norm(u, 4 / 3), _interp_rhs(u)
    elif ineq_id == "gn":
        _require(q is not None, "gn needs the gradient exponent q")
        _require_mean_zero(u)
        p = 4 * q / (2 + q)
        lhs, rhs = lp_norm(u, p), gn_rhs(u, q)
        extra["p"] = p
    elif ineq_id == "weak1":
        _require_mean_zero(u)
        lhs, rhs = weak_lp_norm(u, 4 / 3), _interp_rhs(u)
    elif ineq_id == "prop2":
        _require(d == 2, f"precondition violated: d = 2 (got {d})")
        _require(u.values.min() >= -1 - 1e-12, "precondition violated: u >= -1")
        _require_mean_zero(u)
        lhs, rhs = log_weighted_l43(u), _interp_rhs(u)
    elif ineq_id == "weaklog":
        _require(u.values.min() >= -1 - 1e-12, "precondition violated: u >= -1")
        _require_mean_zero(u)
        lhs, rhs = weak_log_norm(u), _interp_rhs(u)
    elif ineq_id == "geomest":
        vals = set(np.unique(u.values).tolist())
        _require(vals <= {0.0, 1.0}, "precondition violated: binary {0,1} field")
        phi = u.mean
        _require(0 < phi < 0.5, f"precondition violated: 0 < fraction < 1/2 (got {phi:g})")
        vol = u.spec.lam**d
        centered = u.with_values(u.values - phi)
        lhs = phi * np.log(1 / phi) ** (1 / 3)
        rhs = (tv_norm(u) / vol) ** (2 / 3) * (spectral_norm(centered, -1) ** 2 / vol) ** (1 / 3)
        extra["phi"] = phi
    elif ineq_id == "prop3":
        _require(u.values.min() >= 0, "precondition violated: u >= 0")
        _require(abs(u.mean - 1) <= 1e-9, f"precondition violated: mean(u) = 1 (got {u.mean:g})")
        c = fixtures.constant("prop3") if c_thr is None else c_thr
        p = (2 + 3 * d) / (3 * d)
        w2 = w2_to_uniform(u, **w2_kw)
        lhs = _plus_power_norm(u, c, p)
        rhs = tv_norm(u) ** (2 * d / (2 + 3 * d)) * w2.value ** (d / (2 + 3 * d))
        extra.update({"p": p, "threshold": c, "w2": w2.value, "w2_gap": w2.gap})
    elif ineq_id == "prop5":
        _require(v is not None and nu is not None, "prop5 needs v and nu")
        _require(u.values.min() >= 0, "precondition violated: u >= 0")
        _require(v.values.min() >= 0, "precondition violated: v >= 0")
        phi = u.mean
        _require(
            abs(v.mean - phi) <= 1e-9 * max(abs(phi), 1e-300),
            f"precondition violated: equal means (got {phi:g} vs {v.mean:g})",
        )
        cfix = fixtures.constant("prop5")
        if constant is not None and np.isfinite(constant):
            cfix = constant
        thr_exp = (3 * d + 1) / (3 * d + 3)
        _require(
            phi <= nu**thr_exp / (2 * cfix) + 1e-12,
            f"precondition violated: Phi <= nu^{{(3d+1)/(3d+3)}}/(2C) (Phi={phi:g})",
        )
        p = (3 * d + 3) / (3 * d + 1)
        w2 = w2_squared(u, v, **w2_kw)
        half = centered_half_norm(v) ** 2
        terms = {
            "tv": tv_norm(u),
            "w2": nu ** (2 / (d + 1)) * w2.value,
            "half": nu ** ((1 - d) / (d + 1)) * half,
        }
        lhs = _plus_power_norm(u, nu**thr_exp, p)
        rhs = sum(terms.values()) ** (1 / p)
        extra.update({"p": p, "nu": nu, "phi": phi, "terms": terms, "w2_gap": w2.gap})
    elif ineq_id == "prop4":
        _require(u.values.min() >= 0, "precondition violated: u >= 0")
        nu_grid = nu_grid if nu_grid is not None else np.logspace(-2, 2, 9)
        scales = scales if scales is not None else [2, 4, 8, 16]
        from .levelgeom import make_kernel

        p = (3 * d + 3) / (3 * d + 1)
        candidates = [u] + [
            make_kernel(u.spec, "smooth-bump", s * u.spec.h).convolve(u) for s in scales
        ]
        best = -np.inf
        for nu_ in nu_grid:
            inner = np.inf
            for v_ in candidates:
                w2 = w2_squared(u, v_, **w2_kw)
                half = centered_half_norm(v_) ** 2
                val = nu_ ** (2 / (d + 1)) * w2.value + nu_ ** (-(d - 1) / (d + 1)) * half
                inner = min(inner, val)
            best = max(best, inner)
        lhs = lp_norm(u, p)
        rhs = tv_norm(u) ** (2 * d / (3 * d + 3)) * best ** (1 / 3)
        certified = False
        # the inner infimum is only upper-bounded by the mollification
        # family, so this ratio is informational; the certified route is
        # the additive prop5 form plus its exact rescaling
        extra.update({"p": p, "sup_inf": best, "certified": False, "certified_route": "prop5"})
    else:
        raise ValueError(f"unknown inequality id {ineq_id!r}")

    ratio, degenerate = _ratio(lhs, rhs)
    cpass = fixtures.constant(ineq_id, q=q) if constant is None else constant
    passed = degenerate or (np.isfinite(ratio) and ratio <= cpass * (1 + 1e-12))
    return InequalityReport(
        ineq_id=ineq_id,
        input_desc=desc,
        lhs=float(lhs),
        rhs=float(rhs),
        ratio=float(ratio),
        constant=float(cpass),
        passed=bool(passed),
        degenerate=degenerate,
        certified=certified,
        extra=extra,
    )


def check_family(ineq_id, fs, **kw):
    u = generate(fs)
    return check(ineq_id, u, desc=f"{fs.describe()} seed={fs.seed}", **kw)


def rescale_to_mean(u, target):
    """Multiply a nonnegative field so its mean becomes `target` exactly."""
    if u.mean <= 0:
        raise ValueError("cannot rescale a field with nonpositive mean")
    return u.with_values(u.values * (target / u.mean))


def prop5_instance(item, constant=None, **kw):
    """Materialize one (u_spec, v_spec, phi, nu_factor) sweep entry.

    nu is placed `nu_factor` above the admissibility floor
    (2 C Phi)^{(3d+3)/(3d+1)} so the precondition holds with margin.
    """
    ufs, vfs, phi, factor = item
    c = fixtures.constant("prop5") if constant is None else constant
    u = rescale_to_mean(generate(ufs), phi)
    v = rescale_to_mean(generate(vfs), phi)
    d = u.spec.d
    nu = factor * (2 * c * phi) ** ((3 * d + 3) / (3 * d + 1))
    return check(
        "prop5", u, v, nu=nu, constant=constant,
        desc=f"{ufs.describe()}|{vfs.describe()} phi={phi:g} nu={nu:g}", **kw,
    )


# ------------------------------------------------------------- calibration


def _stability(ineq_id, u, base_ratio, **kw):
    """Ratio drift under refine, tile and pure dilation of the argmax input."""
    out = {}
    for name, g in (
        ("refine", refine(u, 2)),
        ("tile", tile(u, 2)),
        ("dilate", dilate(u, 2, 1)),
    ):
        try:
            r = check(ineq_id, g, **kw).ratio
            out[name] = r / base_ratio - 1 if base_ratio > 0 else 0.0
        except ValueError as err:  # e.g. transport cap exceeded after tiling
            out[name] = f"skipped: {err}"
    return out


def calibrate(ineq_id, family_specs, *, with_stability=True, **kw):
    """Empirical constant (max observed ratio) over a family sweep.

    For prop3 the threshold constant is additionally bisected to the
    smallest value C for which the sweep passes with the same C as
    prefactor (bisection tolerance 1e-3); the single max-ratio constant at
    that threshold is reported alongside as the two-constant relaxation.
    """
    specs = list(family_specs)
    if not specs:
        raise ValueError("empty calibration sweep")

    if ineq_id == "prop3":
        return _calibrate_prop3(specs, **kw)

    reports = parallel_map(lambda fs: check_family(ineq_id, fs, constant=np.inf, **kw), specs)
    ratios = [r.ratio for r in reports]
    imax = int(np.argmax(ratios))
    stability = {}
    if with_stability and ratios[imax] > 0:
        stability = _stability(ineq_id, generate(specs[imax]), ratios[imax], constant=np.inf, **kw)
    return CalibrationResult(
        ineq_id=ineq_id,
        sweep_desc=f"{len(specs)} instances",
        constant=float(max(ratios)),
        argmax_desc=reports[imax].input_desc,
        ratios=tuple(ratios),
        stability=stability,
    )


def _calibrate_prop3(specs, tol=1e-3, **kw):
    """Joint threshold/prefactor bisection for the W_2 interpolation bound."""
    data = []
    for fs in specs:
        u = generate(fs)
        d = u.spec.d
        p = (2 + 3 * d) / (3 * d)
        w2 = w2_to_uniform(u, **dict(kw.get("w2_kw", {})))
        rhs = tv_norm(u) ** (2 * d / (2 + 3 * d)) * w2.value ** (d / (2 + 3 * d))
        data.append((u, p, rhs, fs))

    def feasible(c):
        return all(_plus_power_norm(u, c, p) <= c * rhs + 1e-15 for u, p, rhs, _ in data)

    hi = 1.0
    while not feasible(hi):
        hi *= 2
        if hi > 1e9:
            raise RuntimeError("threshold bisection failed to bracket")
    lo = 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    c = hi
    ratios = [_plus_power_norm(u, c, p) / rhs if rhs > 0 else 0.0 for u, p, rhs, _ in data]
    imax = int(np.argmax(ratios))
    return CalibrationResult(
        ineq_id="prop3",
        sweep_desc=f"{len(specs)} instances",
        constant=float(c),
        argmax_desc=f"{data[imax][3].describe()} seed={data[imax][3].seed}",
        ratios=tuple(ratios),
        extra={"prefactor_at_threshold": float(max(ratios))},
    )


# -------------------------------------------------------------- extremizer


def extremize(ineq_id, family, grid, budget, seed=0, n_starts=None, fixed=None, **kw):
    """Derivative-free ratio maximization over a family's parameter box.

    Deterministic multi-start (even grid over the box plus Philox draws)
    followed by Nelder-Mead refinement within the evaluation budget.
    budget = 0 evaluates the starts only; negative budgets are rejected.
    """
    from scipy.optimize import minimize

    if budget < 0:
        raise ValueError(f"evaluation budget must be nonnegative, got {budget}")
    box = parameter_box(family, grid)
    names = [b[0] for b in box]
    lo = np.array([b[1] for b in box])
    hi = np.array([b[2] for b in box])
    fixed = dict(fixed or {})

    evals = []

    def objective(x):
        x = np.clip(x, lo, hi)
        params = dict(zip(names, x.tolist()), **fixed)
        try:
            r = check_family(ineq_id, FamilySpec(grid, family, params, seed), constant=np.inf, **kw)
            val = r.ratio if np.isfinite(r.ratio) else 0.0
        except ValueError:
            val = 0.0
        evals.append((tuple(x.tolist()), val))
        return -val

    if n_starts is None:
        n_starts = 33 if len(box) == 1 else 8
    if len(box) == 1:
        starts = np.linspace(lo[0], hi[0], n_starts)[:, None]
    else:
        rng = np.random.Generator(np.random.Philox(key=seed))
        starts = lo + (hi - lo) * rng.random((n_starts, len(box)))
        starts[0] = 0.5 * (lo + hi)
    start_vals = [-objective(s) for s in starts]
    order = np.argsort(start_vals)[::-1]

    best_x = starts[order[0]]
    best_val = start_vals[order[0]]
    if budget > 0:
        per_start = max(10, budget // max(1, min(3, len(order))))
        for i in order[:3]:
            res = minimize(
                objective,
                starts[i],
                method="Nelder-Mead",
                options={"maxfev": per_start, "xatol": 1e-3, "fatol": 1e-10},
            )
            if -res.fun > best_val:
                best_val, best_x = -res.fun, np.clip(res.x, lo, hi)

    params = dict(zip(names, np.asarray(best_x).tolist()), **fixed)
    return CalibrationResult(
        ineq_id=ineq_id,
        sweep_desc=f"extremize {family} ({len(evals)} evaluations)",
        constant=float(best_val),
        argmax_desc=f"{family}({params}) seed={seed}",
        ratios=tuple(v for _, v in evals),
        extra={"params": params},
    )
