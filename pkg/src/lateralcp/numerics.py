"""Special functions, adaptive Gauss-Kronrod quadrature and bracketed root finding.

Everything here is a pure function of its inputs.  The integrators accept
vectorised integrands: ``f`` receives a 1-D array of abscissae and must return
an array whose first axis matches it (trailing axes are integrated
component-wise).
"""
from __future__ import annotations

from dataclasses import dataclass
import heapq
import math
from typing import Callable

import numpy as np
from scipy import special

MAX_BESSEL_ORDER = 64


class QuadratureError(RuntimeError):
    """Adaptive integration did not reach the requested tolerance."""

    def __init__(self, message, value=None, error_estimate=None):
        super().__init__(message)
        self.value = value
        self.error_estimate = error_estimate


class BracketError(ValueError):
    """The supplied bracket does not enclose a sign change."""


class RootFindingError(RuntimeError):
    """Root iteration exhausted its budget; ``bracket`` holds the last bracket."""

    def __init__(self, message, bracket):
        super().__init__(message)
        self.bracket = bracket


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"interval ends must be finite, got [{self.lo}, {self.hi}]")
        if not self.lo < self.hi:
            raise ValueError(f"interval requires lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-8
    abs_tol: float = 0.0
    max_subdivisions: int = 2000

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.abs_tol >= 0:
            raise ValueError("abs_tol must be non-negative")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be >= 1")


# ---------------------------------------------------------------------------
# Bessel family
# ---------------------------------------------------------------------------

_BESSEL = {
    "J": (special.jv, special.jvp),
    "Y": (special.yv, special.yvp),
    "H1": (special.hankel1, special.h1vp),
    "I": (special.iv, special.ivp),
    "K": (special.kv, special.kvp),
}
_SINGULAR_AT_ZERO = {"Y", "H1", "K"}


def bessel_pair(kind, order, z):
    """Vectorised value and first derivative of a cylinder function.

    No domain checking; intended for inner loops.  ``order`` may be an array
    broadcastable against ``z``.
    """
    fn, dfn = _BESSEL[kind]
    z = np.asarray(z, dtype=complex)
    return fn(order, z), dfn(order, z)


def bessel_eval(kind: str, order: int, argument: complex) -> tuple[complex, complex]:
    """Return ``(Z_m(x), Z_m'(x))`` for ``kind`` in ``{J, Y, H1, I, K}``.

    Raises
    ------
    ValueError
        Unknown kind, order outside ``0..64``, or a zero argument for the
        kinds singular at the origin.
    OverflowError
        The value is not representable (typically I/K at extreme arguments).
    """
    if kind not in _BESSEL:
        raise ValueError(f"unknown Bessel kind {kind!r}")
    if int(order) != order or not 0 <= order <= MAX_BESSEL_ORDER:
        raise ValueError(f"order must be an integer in 0..{MAX_BESSEL_ORDER}, got {order}")
    argument = complex(argument)
    if argument == 0 and kind in _SINGULAR_AT_ZERO:
        raise ValueError(f"{kind}_{order} is singular at zero argument")
    if argument == 0:
        # series at the origin: J_m, I_m ~ (x/2)^m / m!
        value = 1.0 if order == 0 else 0.0
        deriv = 0.5 if order == 1 else 0.0
        return complex(value), complex(deriv)
    with np.errstate(all="ignore"):
        value, deriv = bessel_pair(kind, int(order), argument)
    value, deriv = complex(value), complex(deriv)
    if not (np.isfinite(value) and np.isfinite(deriv)):
        raise OverflowError(f"{kind}_{order}({argument}) is not representable in double precision")
    return value, deriv


# ---------------------------------------------------------------------------
# Adaptive Gauss-Kronrod (7, 15)
# ---------------------------------------------------------------------------

_XGK = np.array([
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327,
])

# full symmetric 15-point layout on [-1, 1]
KRONROD_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
_gauss_idx = [1, 3, 5, 7, 9, 11, 13]
GAUSS_WEIGHTS[_gauss_idx] = np.concatenate([_WG[:-1], _WG[::-1]])


def _apply_rule(f, panels):
    """Evaluate the K15/G7 pair on every ``(a, b)`` panel in one integrand call."""
    a = np.array([p[0] for p in panels])
    b = np.array([p[1] for p in panels])
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = (mid[:, None] + half[:, None] * KRONROD_NODES[None, :]).ravel()
    y = np.asarray(f(x))
    y = y.reshape((len(panels), 15) + y.shape[1:])
    wk = np.tensordot(KRONROD_WEIGHTS, np.moveaxis(y, 1, 0), axes=1)
    wg = np.tensordot(GAUSS_WEIGHTS, np.moveaxis(y, 1, 0), axes=1)
    scale = half.reshape((-1,) + (1,) * (wk.ndim - 1))
    kron = wk * scale
    err = np.abs((wk - wg) * scale)
    if err.ndim > 1:
        err = err.reshape(len(panels), -1).max(axis=1)
    return kron, err


def _norm(v):
    return float(np.max(np.abs(v))) if np.ndim(v) else abs(v)


def integrate_adaptive(
    f: Callable[[np.ndarray], np.ndarray],
    interval: Interval,
    spec: QuadratureSpec = QuadratureSpec(),
    breakpoints=(),
):
    """Globally adaptive Gauss-Kronrod integration of a vectorised integrand.

    Panels with the largest error are bisected (in batches, so the integrand
    is called on many nodes at once) until the summed error estimate meets
    ``max(rel_tol * |value|, abs_tol)``.  ``breakpoints`` inside the interval
    become forced panel boundaries.

    Returns
    -------
    value, error_estimate
        ``value`` is a complex scalar or array (matching the integrand's
        trailing shape); ``error_estimate`` is the summed panel error, using
        the max-norm over components.
    """
    cuts = sorted({interval.lo, interval.hi, *[float(b) for b in breakpoints
                                               if interval.lo < b < interval.hi]})
    panels = list(zip(cuts[:-1], cuts[1:]))
    vals, errs = _apply_rule(f, panels)
    # heap of (-err, tiebreak, a, b); tiebreak keeps the ordering deterministic
    heap = []
    store = {}
    for i, (p, v, e) in enumerate(zip(panels, vals, errs)):
        store[i] = v
        heapq.heappush(heap, (-float(e), i, p[0], p[1]))
    counter = len(panels)
    total = np.sum(vals, axis=0)
    total_err = float(np.sum(errs))
    n_panels = len(panels)
    while True:
        if not (np.all(np.isfinite(total)) and math.isfinite(total_err)):
            raise QuadratureError(
                f"integrand not finite on [{interval.lo}, {interval.hi}]",
                value=total, error_estimate=total_err)
        target = max(spec.rel_tol * _norm(total), spec.abs_tol)
        if total_err <= target:
            return total, total_err
        if n_panels >= spec.max_subdivisions:
            raise QuadratureError(
                f"no convergence after {n_panels} panels on [{interval.lo}, {interval.hi}]: "
                f"error {total_err:.3e} > target {target:.3e}",
                value=total, error_estimate=total_err)
        # split every panel carrying a large share of the error
        batch = []
        threshold = -heap[0][0] * 0.25
        while heap and -heap[0][0] >= threshold and len(batch) < 64:
            batch.append(heapq.heappop(heap))
        children = []
        for _, key, a, b in batch:
            m = 0.5 * (a + b)
            if not (a < m < b):
                raise QuadratureError(
                    f"panel [{a}, {b}] cannot be split further", value=total,
                    error_estimate=total_err)
            del store[key]
            children += [(a, m), (m, b)]
        cvals, cerrs = _apply_rule(f, children)
        for p, v, e in zip(children, cvals, cerrs):
            store[counter] = v
            heapq.heappush(heap, (-float(e), counter, p[0], p[1]))
            counter += 1
        n_panels += len(batch)
        # fixed summation order keeps results bit-reproducible
        total = np.sum([store[k] for k in sorted(store)], axis=0)
        total_err = float(sum(-h[0] for h in heap))


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------

def find_root(f: Callable[[float], float], bracket: Interval, tol: float = 1e-14,
              max_iter: int = 400) -> float:
    """Bisection down to ``tol`` followed by a bracket-safe secant polish."""
    a, b = bracket.lo, bracket.hi
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if np.sign(fa) == np.sign(fb):
        raise BracketError(f"no sign change on [{a}, {b}]: f = {fa:.3e}, {fb:.3e}")
    for _ in range(max_iter):
        if b - a <= tol:
            break
        m = 0.5 * (a + b)
        if not (a < m < b):
            break
        fm = f(m)
        if fm == 0:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b, fb = m, fm
    else:
        raise RootFindingError(f"bisection did not reach width {tol}", (a, b))
    x = b - fb * (b - a) / (fb - fa)
    if not a <= x <= b:
        x = 0.5 * (a + b)
    return x
