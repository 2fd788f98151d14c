"""Parametric models for discovery curves and derivative-free fitting.

Three shapes cover the observed behavior on normalized curves:

* ``f1(x; a) = 1 - 2**(-a*x) + x * 2**(-a)`` -- saturation with a linear
  tail correction; pins f1(0) = 0 and f1(1) = 1.  Used for blind uniform
  sampling.
* ``f2(x; a, b) = 1 - 2**(-a*x) + x * 2**(-b)`` -- same family with the
  tail slope decoupled; captures the walk's fast start and stagnation.
* ``f3(x; a) = a * x`` -- a line through the origin, the annealer's
  near-constant discovery rate.

One-parameter models are fitted by golden-section search (``a > 0``
enforced in log space for f1), f2 by a downhill simplex; both are run
from several starts and the best residual wins.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .hybrid import fit_through_origin

FIT_MODELS = ("linear_origin", "f1", "f2", "f3")

_STARTS = (0.5, 2.0, 8.0)
_PARAM_TOL = 1e-8


def eval_f1(x, a):
    return 1.0 - 2.0 ** (-a * np.asarray(x, dtype=np.float64)) + np.asarray(x) * 2.0 ** (-a)


def eval_f2(x, a, b):
    return 1.0 - 2.0 ** (-a * np.asarray(x, dtype=np.float64)) + np.asarray(x) * 2.0 ** (-b)


def eval_f3(x, a):
    return a * np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class FitResult:
    model: str
    params: tuple[float, ...]
    rmsd: float
    converged: bool


def _curve_points(curve) -> tuple[np.ndarray, np.ndarray]:
    if hasattr(curve, "xs"):
        xs, ys = curve.xs, curve.ys
    else:
        xs, ys = curve
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.size == 0 or xs.shape != ys.shape:
        raise ValueError("curve must provide matching, non-empty x and y arrays")
    return xs, ys


def _sse_fn(xs, ys, model_of_t):
    def sse(t):
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            resid = model_of_t(t) - ys
            val = float(np.dot(resid, resid))
        return val if np.isfinite(val) else 1e300

    return sse


def _golden_multistart(sse, starts):
    """Best scalar minimizer over downhill-bracketed golden sections."""
    best_t, best_f, best_ok = None, np.inf, False
    for s in starts:
        try:
            xa, xb, xc, _, _, _, _ = optimize.bracket(sse, xa=s - 0.5, xb=s + 0.5, maxiter=500)
            t, f, _ = optimize.golden(
                sse, brack=(xa, xb, xc), tol=_PARAM_TOL * 1e-2, full_output=True
            )
            ok = True
        except Exception:
            t, f, ok = s, sse(s), False
        if f < best_f:
            best_t, best_f, best_ok = float(t), float(f), ok
    return best_t, best_f, best_ok


def fit_curve(curve, model: str) -> FitResult:
    """Least-squares fit of one model to a normalized curve.

    ``curve`` is a :class:`binsampler.curves.NormalizedCurve` or an
    ``(xs, ys)`` pair.  Multi-start golden-section search handles the
    one-parameter models, a multi-start Nelder-Mead simplex handles f2;
    ``converged`` reports whether the winning start met its tolerance.
    """
    if model not in FIT_MODELS:
        raise ValueError(f"unknown fit model {model!r}; expected one of {FIT_MODELS}")
    xs, ys = _curve_points(curve)
    n = xs.size
    if n < 3:
        raise ValueError(f"fitting {model} needs at least 3 points, got {n}")
    if model == "linear_origin":
        a = fit_through_origin(np.column_stack([xs, ys]))
        resid = ys - a * xs
        return FitResult(
            model=model,
            params=(float(a),),
            rmsd=float(np.sqrt(np.dot(resid, resid) / n)),
            converged=True,
        )
    if model == "f1":
        sse = _sse_fn(xs, ys, lambda t: eval_f1(xs, np.exp(t)))
        t, f, ok = _golden_multistart(sse, [np.log(s) for s in _STARTS])
        return FitResult(
            model=model, params=(float(np.exp(t)),), rmsd=float(np.sqrt(f / n)), converged=ok
        )
    if model == "f3":
        sse = _sse_fn(xs, ys, lambda a: eval_f3(xs, a))
        a, f, ok = _golden_multistart(sse, list(_STARTS))
        return FitResult(
            model=model, params=(float(a),), rmsd=float(np.sqrt(f / n)), converged=ok
        )
    if model == "f2":
        def sse(params):
            t, b = params
            with np.errstate(over="ignore", under="ignore", invalid="ignore"):
                resid = eval_f2(xs, np.exp(t), b) - ys
                val = float(np.dot(resid, resid))
            return val if np.isfinite(val) else 1e300

        best = None
        for a0 in _STARTS:
            for b0 in _STARTS:
                res = optimize.minimize(
                    sse,
                    x0=np.array([np.log(a0), b0]),
                    method="Nelder-Mead",
                    options={
                        "xatol": _PARAM_TOL * 1e-2,
                        "fatol": 1e-16,
                        "maxiter": 4000,
                        "maxfev": 8000,
                    },
                )
                if best is None or res.fun < best.fun:
                    best = res
        a = float(np.exp(best.x[0]))
        return FitResult(
            model=model,
            params=(a, float(best.x[1])),
            rmsd=float(np.sqrt(best.fun / n)),
            converged=bool(best.success),
        )
    raise ValueError(f"unknown fit model {model!r}; expected one of {FIT_MODELS}")
