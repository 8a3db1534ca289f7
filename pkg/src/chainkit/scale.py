"""Scale functions, their regularity certificates, and the conjugate transform.

A scale function is a strictly increasing bijection of (0, inf) onto itself
with two-sided power-law control: C^-1 (R/r)^b1 <= psi(R)/psi(r) <= C (R/r)^b2.
The conjugate transform is phi(s) = sup_{r>0} (s/r - 1/psi(r)); for power
scale functions it has the closed form

    phi(s) = s^(b/(b-1)) * b^(-1/(b-1)) * (1 - 1/b),

obtained by solving the stationarity condition for r.  All grid certificates
produced here are grid-verified statements, not proofs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

GRID_POINTS_PER_DECADE = 64
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class ScaleError(ValueError):
    pass


@dataclass
class ScaleFunction:
    """Space-time scaling profile with claimed regularity (beta1, beta2, C).

    kind is "power" (params: beta), "piecewise" (params: breakpoints,
    exponents) or "table" (params: r, values; log-log linear interpolation).
    """

    kind: str
    beta1: float
    beta2: float
    C_reg: float = 1.0
    params: dict = field(default_factory=dict)

    def __call__(self, r):
        return self.value(r)

    def value(self, r):
        r = np.asarray(r, dtype=float)
        if (r <= 0).any():
            raise ScaleError("scale functions are defined for r > 0")
        if self.kind == "power":
            out = r ** self.params["beta"]
        elif self.kind == "piecewise":
            out = _piecewise_eval(self.params["breakpoints"], self.params["exponents"], r)
        elif self.kind == "table":
            out = _table_eval(self.params["r"], self.params["values"], r)
        else:
            raise ScaleError(f"unknown scale-function kind {self.kind!r}")
        return float(out) if out.ndim == 0 else out

    def inverse(self, v):
        v = np.asarray(v, dtype=float)
        if (v <= 0).any():
            raise ScaleError("inverse is defined for v > 0")
        if self.kind == "power":
            out = v ** (1.0 / self.params["beta"])
        elif self.kind == "piecewise":
            bp, ex = self.params["breakpoints"], self.params["exponents"]
            out = _piecewise_inverse(bp, ex, v)
        elif self.kind == "table":
            out = _table_eval(self.params["values"], self.params["r"], v)
        else:
            raise ScaleError(f"unknown scale-function kind {self.kind!r}")
        return float(out) if out.ndim == 0 else out


def power_scale(beta: float) -> ScaleFunction:
    return ScaleFunction("power", beta1=beta, beta2=beta, C_reg=1.0,
                         params={"beta": float(beta)})


def piecewise_scale(breakpoints, exponents, beta1=None, beta2=None,
                    C_reg=1.0) -> ScaleFunction:
    """Continuous piecewise power law.

    ``exponents`` has one more entry than ``breakpoints``; exponent i applies
    below breakpoint i (the last one above all breakpoints).  Normalized so
    that psi(first breakpoint) = first breakpoint ** exponent[0].
    """
    breakpoints = [float(b) for b in breakpoints]
    exponents = [float(e) for e in exponents]
    if len(exponents) != len(breakpoints) + 1:
        raise ScaleError("need one more exponent than breakpoints")
    if any(e <= 0 for e in exponents):
        raise ScaleError("piecewise exponents must be positive")
    if sorted(breakpoints) != breakpoints:
        raise ScaleError("breakpoints must be increasing")
    b1 = min(exponents) if beta1 is None else beta1
    b2 = max(exponents) if beta2 is None else beta2
    return ScaleFunction("piecewise", beta1=b1, beta2=b2, C_reg=C_reg,
                         params={"breakpoints": breakpoints, "exponents": exponents})


def tabulated_scale(r, values, beta1, beta2, C_reg) -> ScaleFunction:
    r = np.asarray(r, dtype=float)
    values = np.asarray(values, dtype=float)
    if r.ndim != 1 or r.shape != values.shape or r.size < 2:
        raise ScaleError("table needs two equal-length columns with >= 2 rows")
    if (np.diff(r) <= 0).any() or (np.diff(values) <= 0).any():
        raise ScaleError("tabulated scale data must be strictly increasing")
    if (r <= 0).any() or (values <= 0).any():
        raise ScaleError("tabulated scale data must be positive")
    return ScaleFunction("table", beta1=beta1, beta2=beta2, C_reg=C_reg,
                         params={"r": r, "values": values})


def _piecewise_eval(breakpoints, exponents, r):
    # anchors chosen so the pieces join continuously with value b**e at each b
    out = np.empty_like(r, dtype=float)
    edges = [0.0] + list(breakpoints) + [math.inf]
    scale = 1.0
    anchor = 1.0
    for i, e in enumerate(exponents):
        lo, hi = edges[i], edges[i + 1]
        mask = (r > lo) & (r <= hi) if i < len(exponents) - 1 else (r > lo)
        out[mask] = scale * (r[mask] / anchor) ** e
        if i < len(breakpoints):
            b = breakpoints[i]
            scale = scale * (b / anchor) ** e
            anchor = b
    return out


def _piecewise_inverse(breakpoints, exponents, v):
    edges = [0.0] + list(breakpoints)
    # values at breakpoints
    vals = []
    scale, anchor = 1.0, 1.0
    for i, b in enumerate(breakpoints):
        scale = scale * (b / anchor) ** exponents[i]
        anchor = b
        vals.append(scale)
    out = np.empty_like(v, dtype=float)
    scale, anchor = 1.0, 1.0
    vedges = [0.0] + vals + [math.inf]
    for i, e in enumerate(exponents):
        lo, hi = vedges[i], vedges[i + 1]
        mask = (v > lo) & (v <= hi) if i < len(exponents) - 1 else (v > lo)
        out[mask] = anchor * (v[mask] / scale) ** (1.0 / e)
        if i < len(breakpoints):
            scale = vals[i]
            anchor = breakpoints[i]
    return out


def _table_eval(xs, ys, q):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    q = np.asarray(q, dtype=float)
    if (q < xs[0]).any() or (q > xs[-1]).any():
        raise ScaleError("query outside the tabulated range")
    return np.exp(np.interp(np.log(q), np.log(xs), np.log(ys)))


def _geometric_grid(lo: float, hi: float, per_decade: int) -> np.ndarray:
    decades = math.log10(hi / lo)
    npts = max(2, int(math.ceil(decades * per_decade)) + 1)
    return np.geomspace(lo, hi, npts)


def verify_regularity(psi: ScaleFunction, window,
                      per_decade: int = GRID_POINTS_PER_DECADE) -> dict:
    """Grid certificate for C^-1 (R/r)^b1 <= psi(R)/psi(r) <= C (R/r)^b2.

    Returns the smallest C making both bounds hold on a geometric grid over
    the window, and whether it is <= psi.C_reg.
    """
    r_min, r_max = window
    if not 0 < r_min < r_max:
        raise ScaleError("window must satisfy 0 < r_min < r_max")
    grid = _geometric_grid(r_min, r_max, per_decade)
    vals = psi.value(grid)
    if (np.diff(vals) <= 0).any():
        raise ScaleError("scale function is not increasing on the window")
    lr = np.log(grid)
    lv = np.log(vals)
    best_C = 1.0
    i, j = np.triu_indices(grid.size, 1)
    ratio = lv[j] - lv[i]
    span = lr[j] - lr[i]
    # psi(R)/psi(r) <= C (R/r)^b2  and  >= C^-1 (R/r)^b1
    best_C = max(
        1.0,
        float(np.exp(np.max(ratio - psi.beta2 * span))),
        float(np.exp(np.max(psi.beta1 * span - ratio))),
    )
    return {"ok": best_C <= psi.C_reg * (1 + 1e-12), "best_C": best_C,
            "window": [float(r_min), float(r_max)], "grid_points": int(grid.size)}


@dataclass
class PhiTransform:
    """Conjugate transform phi(s) = sup_{r>0} (s/r - 1/psi(r)).

    Power scale functions use the closed form; anything else a log-grid scan
    refined by golden-section search.  phi is nonnegative, nondecreasing and
    convex as a sup of affine functions of s.
    """

    source: ScaleFunction
    method: str = "auto"
    rel_tol: float = 1e-8

    def __call__(self, s):
        if np.ndim(s) == 0:
            return self.value(float(s))
        return np.array([self.value(float(v)) for v in np.asarray(s).ravel()])

    def value(self, s: float) -> float:
        if s <= 0:
            raise ScaleError("phi is defined for s > 0")
        if self.method in ("auto", "closed-form") and self.source.kind == "power":
            return phi_power_closed_form(self.source.params["beta"], s)
        if self.method == "closed-form":
            raise ScaleError("closed form requires a power scale function")
        return self._numeric_sup(s)

    def _numeric_sup(self, s: float) -> float:
        b1 = max(self.source.beta1, 1.0 + 1e-9)
        b2 = max(self.source.beta2, b1)
        # for psi(r) = r^b the maximizer is r* = (b/s)^(1/(b-1)); bracket it
        # over the claimed exponent range with three decades of slack
        cands = [(b / s) ** (1.0 / (b - 1.0)) for b in (b1, b2)]
        lo = min(cands) / 1e3
        hi = max(cands) * 1e3

        def objective(r):
            return s / r - 1.0 / float(self.source.value(r))

        grid = _geometric_grid(lo, hi, GRID_POINTS_PER_DECADE)
        vals = np.array([objective(r) for r in grid])
        k = int(np.argmax(vals))
        a = grid[max(k - 1, 0)]
        b = grid[min(k + 1, grid.size - 1)]
        best = _golden_max(objective, math.log(a), math.log(b), self.rel_tol)
        return max(best, float(vals[k]), 0.0)


def _golden_max(f, lo, hi, rel_tol):
    # maximize f(exp(t)) on [lo, hi] assuming unimodality
    c = hi - GOLDEN * (hi - lo)
    d = lo + GOLDEN * (hi - lo)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    while hi - lo > rel_tol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - GOLDEN * (hi - lo)
            fc = f(math.exp(c))
        else:
            lo, c, fc = c, d, fd
            d = lo + GOLDEN * (hi - lo)
            fd = f(math.exp(d))
    return max(fc, fd)


def phi_power_closed_form(beta: float, s: float) -> float:
    """phi for psi(r) = r^beta: stationary point r* = (beta/s)^(1/(beta-1))."""
    if beta <= 1:
        raise ScaleError("closed form requires beta > 1")
    return s ** (beta / (beta - 1.0)) * beta ** (-1.0 / (beta - 1.0)) * (1.0 - 1.0 / beta)


def verify_phi_regularity(phi: PhiTransform, window,
                          per_decade: int = GRID_POINTS_PER_DECADE) -> dict:
    """Grid certificate for the conjugate exponent bounds on phi(S)/phi(s).

    The exponents are beta2/(beta2-1) (lower) and beta1/(beta1-1) (upper);
    requires beta1 > 1 for the source scale function.
    """
    psi = phi.source
    if psi.beta1 <= 1:
        raise ScaleError("phi regularity requires beta1 > 1")
    s_min, s_max = window
    if not 0 < s_min <= s_max:
        raise ScaleError("window must satisfy 0 < s_min <= s_max")
    if s_min == s_max:
        return {"ok": True, "best_C": 1.0, "window": [float(s_min), float(s_max)],
                "grid_points": 1}
    grid = _geometric_grid(s_min, s_max, per_decade)
    vals = np.array([phi.value(float(s)) for s in grid])
    ls = np.log(grid)
    lv = np.log(vals)
    i, j = np.triu_indices(grid.size, 1)
    ratio = lv[j] - lv[i]
    span = ls[j] - ls[i]
    e_hi = psi.beta1 / (psi.beta1 - 1.0)
    e_lo = psi.beta2 / (psi.beta2 - 1.0)
    best_C = max(
        1.0,
        float(np.exp(np.max(ratio - e_hi * span))),
        float(np.exp(np.max(e_lo * span - ratio))),
    )
    return {"ok": best_C <= psi.C_reg * (1 + 1e-12), "best_C": best_C,
            "window": [float(s_min), float(s_max)], "grid_points": int(grid.size)}


def walk_dimension_lower_check(psi: ScaleFunction, space_diam: float, window,
                               per_decade: int = GRID_POINTS_PER_DECADE,
                               c1_cap: float = 1e6) -> dict:
    """Check psi(r)/psi(s) >= C1^-1 (r/s)^2 on a grid over the window.

    Returns the smallest admissible C1 and flags failure when the observed
    growth exponent stays below 2 over a full decade (or no C1 below the cap
    works).
    """
    r_min, r_max = window
    if not 0 < r_min < r_max <= space_diam:
        raise ScaleError("window must lie inside (0, space diameter]")
    grid = _geometric_grid(r_min, r_max, per_decade)
    vals = psi.value(grid)
    lr = np.log(grid)
    lv = np.log(vals)
    i, j = np.triu_indices(grid.size, 1)
    ratio = lv[j] - lv[i]
    span = lr[j] - lr[i]
    C1 = max(1.0, float(np.exp(np.max(2.0 * span - ratio))))
    decade = span >= math.log(10.0) * (1 - 1e-12)
    min_decade_slope = float(np.min(ratio[decade] / span[decade])) if decade.any() else 2.0
    ok = C1 <= c1_cap and min_decade_slope >= 2.0 - 1e-9
    return {"ok": ok, "C1": C1, "min_decade_exponent": min_decade_slope,
            "window": [float(r_min), float(r_max)]}


def parse_psi_spec(spec: str) -> ScaleFunction:
    """Parse a CLI scale-function spec.

    Formats: "power:BETA", "piecewise:r1,b1;r2,b2;...;bLAST" (exponent b_i
    below breakpoint r_i, trailing exponent above the last breakpoint) or
    "table:PATH.csv" (two columns r, psi(r), strictly increasing; claimed
    exponents may follow as ":beta1,beta2,C").
    """
    kind, _, rest = spec.partition(":")
    if kind == "power":
        return power_scale(float(rest))
    if kind == "piecewise":
        parts = rest.split(";")
        breakpoints, exponents = [], []
        for part in parts[:-1]:
            r, b = part.split(",")
            breakpoints.append(float(r))
            exponents.append(float(b))
        exponents.append(float(parts[-1]))
        return piecewise_scale(breakpoints, exponents)
    if kind == "table":
        path, _, claimed = rest.partition(":")
        data = np.loadtxt(path, delimiter=",", ndmin=2)
        if claimed:
            b1, b2, C = (float(v) for v in claimed.split(","))
        else:
            slopes = np.diff(np.log(data[:, 1])) / np.diff(np.log(data[:, 0]))
            b1, b2, C = float(slopes.min()), float(slopes.max()), 2.0
        return tabulated_scale(data[:, 0], data[:, 1], b1, b2, C)
    raise ScaleError(f"unrecognized scale-function spec {spec!r}")
