"""Curves, fields along curves, geodesics and two-parameter maps.

The covariant derivative along a curve with reference field W is

    (D^W_gamma X)^k = dX^k/dt + X^i gammadot^j Gamma^k_ij(gamma(t), W(t)),

geodesics solve D^{gammadot}_gamma gammadot = 0, integrated with an adaptive
Dormand-Prince 5(4) pair (scipy's RK45) and dense output.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .connection import christoffel
from .errors import DomainError, IntegrationError
from .geometry import metric_blocks
from .jets import Jet, jet_space
from .metrics import TangentSample


def _component_jets(func, dim, values, order):
    space = jet_space(len(values), order)
    args = [Jet.variable(space, float(v), i) for i, v in enumerate(values)]
    out = func(*args) if len(values) > 1 else func(args[0])
    if len(out) != dim:
        raise ValueError(f"expected {dim} components, got {len(out)}")
    return [c if isinstance(c, Jet) else Jet.constant(space, float(c)) for c in out]


class CurvePath:
    """A smooth curve on the chart with velocity and acceleration.

    Closed-form curves come from a jet-evaluable function of t; integrator
    output wraps the dense solution (velocity is part of the ODE state, the
    acceleration is the ODE right-hand side on the solution).
    """

    def __init__(self, domain, position, velocity, acceleration, func=None):
        self.domain = (float(domain[0]), float(domain[1]))
        self._pos = position
        self._vel = velocity
        self._acc = acceleration
        self.func = func  # jet-evaluable t -> components, when closed-form

    @classmethod
    def from_function(cls, func, domain, dim=None):
        """func(t) -> point components, evaluable over jets to order 2."""

        probe = func(0.5 * (domain[0] + domain[1]))
        n = len(probe) if dim is None else dim

        def pos(t):
            return np.array([float(c) for c in func(float(t))])

        def vel(t):
            comps = _component_jets(func, n, [t], 2)
            return np.array([c.extract((1,)) for c in comps])

        def acc(t):
            comps = _component_jets(func, n, [t], 2)
            return np.array([c.extract((2,)) for c in comps])

        return cls(domain, pos, vel, acc, func=func)

    def position(self, t):
        return self._pos(t)

    def velocity(self, t):
        return self._vel(t)

    def acceleration(self, t):
        return self._acc(t)

    def check_admissible(self, metric, ts):
        """Verify (gamma(t), gammadot(t)) stays in the metric domain on the
        given grid plus midpoints."""
        ts = np.asarray(ts, dtype=float)
        grid = np.sort(np.concatenate([ts, 0.5 * (ts[1:] + ts[:-1])]))
        for t in grid:
            x, v = self.position(t), self.velocity(t)
            if not metric.in_domain(x, v):
                raise DomainError(
                    f"curve leaves the domain of {metric.name!r} at t={t:g}"
                )


class FieldAlongCurve:
    """A vector field along a curve, with its t-derivative."""

    def __init__(self, value, derivative):
        self._value = value
        self._derivative = derivative

    @classmethod
    def from_function(cls, func, dim=None):
        probe = func(0.0)
        n = len(probe) if dim is None else dim

        def value(t):
            return np.array([float(c) for c in func(float(t))])

        def derivative(t):
            comps = _component_jets(func, n, [t], 1)
            return np.array([c.extract((1,)) for c in comps])

        return cls(value, derivative)

    @classmethod
    def from_constant(cls, vec):
        vec = np.asarray(vec, dtype=float)
        return cls(lambda t: vec.copy(), lambda t: np.zeros_like(vec))

    def value(self, t):
        return self._value(t)

    def derivative(self, t):
        return self._derivative(t)


def cov_deriv_along(metric, curve, W, X, t):
    """(D^W_gamma X)(t): derivative of X plus the Christoffel correction with
    reference vector W(t)."""
    x = curve.position(t)
    w = W.value(t)
    if not metric.in_domain(x, w):
        raise DomainError(f"reference field is not admissible at t={t:g}")
    ce = christoffel(metric, TangentSample(x, w))
    vel = curve.velocity(t)
    return X.derivative(t) + np.einsum(
        "kij,i,j->k", ce.Gamma.values, X.value(t), vel
    )


def _spray(metric, x, v):
    """Geodesic right-hand side: xddot^k = -v^i v^j gamma^k_ij(x, v).

    Contracting twice with v kills every Cartan correction, so only the
    formal symbols built from dg/dx are needed.
    """
    blocks = metric_blocks(metric, x, v, order=3)
    dg = blocks.dg_dx
    b = np.einsum("kij,i,j->k", dg, v, v) - 0.5 * np.einsum("ijk,i,j->k", dg, v, v)
    try:
        return -np.linalg.solve(blocks.g, b)
    except np.linalg.LinAlgError as exc:
        raise IntegrationError(f"degenerate fundamental tensor at x={x.tolist()}") from exc


def geodesic_shoot(metric, x0, v0, T, tol=1e-10):
    """Integrate the geodesic equation from (x0, v0) over [0, T].

    The per-step tolerance is tol scaled by the interval length; the output
    curve carries the dense solution (velocity from the state, acceleration
    from the spray)."""
    x0 = np.asarray(x0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not np.any(v0 != 0.0):
        raise DomainError("geodesic initial velocity must be nonzero")
    metric.check_sample(x0, v0)
    n = metric.dim

    def rhs(t, y):
        x, v = y[:n], y[n:]
        if not metric.in_domain(x, v):
            raise IntegrationError(
                f"geodesic left the domain of {metric.name!r} at t={t:g}"
            )
        return np.concatenate([v, _spray(metric, x, v)])

    rtol = max(tol / max(T, 1.0), 1e-13)
    sol = solve_ivp(
        rhs,
        (0.0, T),
        np.concatenate([x0, v0]),
        method="RK45",
        rtol=rtol,
        atol=rtol * 1e-2,
        dense_output=True,
    )
    if not sol.success:
        raise IntegrationError(f"geodesic integration failed: {sol.message}")

    dense = sol.sol

    curve = CurvePath(
        (0.0, T),
        position=lambda t: dense(t)[:n],
        velocity=lambda t: dense(t)[n:],
        acceleration=lambda t: _spray(metric, dense(t)[:n], dense(t)[n:]),
    )
    curve.check_admissible(metric, sol.t)
    return curve


def geodesic_residual(metric, curve, ts):
    """max |D^{gammadot}_gamma gammadot| over the given times (the defect of
    the geodesic equation)."""
    worst = 0.0
    for t in np.asarray(ts, dtype=float):
        x = curve.position(t)
        v = curve.velocity(t)
        ce = christoffel(metric, TangentSample(x, v))
        resid = curve.acceleration(t) + np.einsum("kij,i,j->k", ce.Gamma.values, v, v)
        worst = max(worst, float(np.abs(resid).max()))
    return worst


def parallel_transport(metric, curve, W, x0, t0, t1):
    """Solve D^W_gamma X = 0 with X(t0) = x0; returns the transported field
    with dense interpolation on [t0, t1]."""
    x0 = np.asarray(x0, dtype=float)

    def rhs(t, X):
        p = curve.position(t)
        w = W.value(t)
        if not metric.in_domain(p, w):
            raise IntegrationError(f"reference field left the domain at t={t:g}")
        ce = christoffel(metric, TangentSample(p, w))
        return -np.einsum("kij,i,j->k", ce.Gamma.values, X, curve.velocity(t))

    sol = solve_ivp(
        rhs, (t0, t1), x0, method="RK45", rtol=1e-11, atol=1e-13, dense_output=True
    )
    if not sol.success:
        raise IntegrationError(f"parallel transport failed: {sol.message}")
    dense = sol.sol
    return FieldAlongCurve(
        value=lambda t: dense(t),
        derivative=lambda t: rhs(t, dense(t)),
    )


class TwoParamMap:
    """A smooth map (t, s) -> chart point, jet-evaluable to order 2."""

    def __init__(self, func, t_range, s_range, dim=None):
        self.func = func
        self.t_range = tuple(map(float, t_range))
        self.s_range = tuple(map(float, s_range))
        probe = func(
            0.5 * (self.t_range[0] + self.t_range[1]),
            0.5 * (self.s_range[0] + self.s_range[1]),
        )
        self.dim = len(probe) if dim is None else dim

    def jets(self, t, s):
        """Component 2-jets in (t, s)."""
        return _component_jets(lambda tj, sj: self.func(tj, sj), self.dim, [t, s], 2)

    def value(self, t, s):
        return np.array([float(c) for c in self.func(float(t), float(s))])

    def partials(self, t, s):
        """dict with value, d_t, d_s, d_tt, d_ts, d_ss at (t, s)."""
        comps = self.jets(t, s)
        pick = lambda mono: np.array([c.extract(mono) for c in comps])
        return {
            "value": np.array([c.value for c in comps]),
            "d_t": pick((1, 0)),
            "d_s": pick((0, 1)),
            "d_tt": pick((2, 0)),
            "d_ts": pick((1, 1)),
            "d_ss": pick((0, 2)),
        }

    def t_curve(self, s):
        """The t-parameter curve at fixed s."""
        return CurvePath.from_function(
            lambda t: self.func(t, s), self.t_range, dim=self.dim
        )

    def s_curve(self, t):
        return CurvePath.from_function(
            lambda s: self.func(t, s), self.s_range, dim=self.dim
        )


def mixed_derivative_commutation(metric, lam, V, t, s):
    """Residual |D^V_{gamma_s} beta_t' - D^V_{beta_t} gamma_s'| at (t, s).

    Both derivatives equal the mixed partial plus the symmetric Christoffel
    contraction, so the residual is roundoff-level for any smooth map."""
    p = lam.partials(t, s)
    w = np.asarray(V(t, s), dtype=float)
    if not metric.in_domain(p["value"], w):
        raise DomainError(f"reference field not admissible at (t={t:g}, s={s:g})")
    ce = christoffel(metric, TangentSample(p["value"], w))
    G = ce.Gamma.values
    d_ts = p["d_ts"]
    first = d_ts + np.einsum("kij,i,j->k", G, p["d_s"], p["d_t"])
    second = d_ts + np.einsum("kij,i,j->k", G, p["d_t"], p["d_s"])
    return float(np.abs(first - second).max())
