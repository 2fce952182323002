"""Randomized verification harness: sweeps metrics x samples x fields and
reports a residual for every structural identity of the connection and its
curvature.  Deterministic for a fixed seed; the repo's acceptance gate.

Residuals are relative to the magnitude of the largest term appearing in the
identity, with an absolute floor of 1e-14 on the denominator.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import jets
from .connection import VectorFieldOnChart, christoffel, christoffel_with_partials
from .curvature import (
    cartan_derivative_block,
    covariant_acceleration,
    field_curvature_block,
    flag_curvature,
    h_tensor,
    r_along_curve,
    r_along_curve_direct,
)
from .curves import (
    CurvePath,
    FieldAlongCurve,
    TwoParamMap,
    cov_deriv_along,
    geodesic_shoot,
    mixed_derivative_commutation,
)
from .errors import FinslerError
from .geometry import metric_blocks
from .metrics import MetricField, TangentSample, builtin, check_homogeneity

DEFAULT_TOLERANCES = {
    "homogeneity": 1e-10,
    "euler_gvv": 1e-10,
    "g_zero_homogeneity": 1e-10,
    "cartan_flagpole": 1e-10,
    "cartan_symmetry": 1e-12,
    "cartan_neg_homogeneity": 1e-10,
    "dg_dy_cartan": 1e-10,
    "christoffel_symmetry": 1e-12,
    "gamma_vv": 1e-10,
    "nonlinear_connection": 1e-10,
    "christoffel_homogeneity": 1e-10,
    "torsion_free": 1e-10,
    "almost_g_field": 1e-9,
    "koszul": 1e-9,
    "curvature_antisymmetry": 1e-10,
    "curvature_pair_b": 1e-8,
    "first_bianchi": 1e-9,
    "six_b": 1e-8,
    "nabla_cartan_flagpole": 1e-9,
    "nabla_cartan_symmetry": 1e-10,
    "second_bianchi": 1e-7,
    "almost_g_curve": 1e-9,
    "curve_linearity": 1e-9,
    "curve_leibniz": 1e-9,
    "curve_chart_restriction": 1e-9,
    "two_param_commutation": 1e-10,
    "extension_independence": 1e-8,
    "curve_decomposition": 1e-8,
    "h_symmetry": 1e-12,
    "h_zero_geodesic": 1e-8,
    "flag_sphere": 1e-6,
    "flag_funk": 1e-4,
    "flag_hyperbolic": 1e-6,
}

_FLOOR = 1e-14


def _rel(resid, *terms):
    scale = _FLOOR
    for t in terms:
        scale = max(scale, float(np.abs(t).max()) if np.ndim(t) else abs(float(t)))
    return float(np.abs(resid).max()) / scale


@dataclass
class VerificationPlan:
    """What to sweep: metrics, sample counts, RNG seed, field degree bounds
    and the tolerance table (deterministic given the seed)."""

    metrics: list
    samples: int = 50
    curve_samples: int = 20
    heavy_samples: int = 5
    seed: int = 0
    degree: int = 3
    box: tuple = (-0.6, 0.6)
    tolerances: dict = field(default_factory=dict)

    def tolerance(self, name):
        return self.tolerances.get(name, DEFAULT_TOLERANCES[name])


def perturbed_riemannian(dim, amplitude=0.1):
    """I + amplitude * S(x) with S_ij = sin(x_i + 2 x_j) + sin(x_j + 2 x_i);
    the standard non-flat Riemannian test metric."""

    def entry(i, j):
        def f(x):
            return (i == j) + amplitude * (
                jets.sin(x[i] + 2 * x[j]) + jets.sin(x[j] + 2 * x[i])
            )

        return f

    matrix = [[entry(i, j) for j in range(dim)] for i in range(dim)]
    m = builtin("riemannian", matrix=matrix)
    return MetricField("riemannian_perturbation", dim, m.func, predicate=m.predicate)


def default_metrics(dim=2):
    return [
        builtin("euclidean", dim=dim),
        perturbed_riemannian(dim),
        builtin("minkowski_quartic", dim=dim),
        builtin("funk", dim=dim),
        builtin("sphere_round", dim=dim),
    ]


def default_plan(samples=50, seed=7, dim=2, **kwargs):
    return VerificationPlan(metrics=default_metrics(dim), samples=samples, seed=seed, **kwargs)


@dataclass
class IdentityResult:
    name: str
    max_residual: float
    tolerance: float
    passed: bool
    count: int
    worst: dict


@dataclass
class VerificationReport:
    results: list
    passed: bool
    seed: int
    metric_names: list

    def to_dict(self):
        return {
            "passed": bool(self.passed),
            "seed": self.seed,
            "metrics": list(self.metric_names),
            "identities": {
                r.name: {
                    "max_residual": r.max_residual,
                    "tolerance": r.tolerance,
                    "passed": bool(r.passed),
                    "count": r.count,
                    "worst": r.worst,
                }
                for r in self.results
            },
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary_lines(self):
        lines = []
        for r in self.results:
            status = "pass" if r.passed else "FAIL"
            lines.append(
                f"{status}  {r.name:26s}  max {r.max_residual:10.3e}  tol {r.tolerance:8.1e}  n={r.count}"
            )
        return lines


class _Tracker:
    def __init__(self):
        self.data = {}

    def add(self, name, resid, where):
        entry = self.data.setdefault(name, [0.0, 0, None])
        entry[1] += 1
        if resid >= entry[0]:
            entry[0] = resid
            entry[2] = where


# -- samplers and random fields -----------------------------------------------


def sample_tangent(metric, rng, box, max_tries=1000, cond_limit=1e8):
    """Draw (x, v) in the box, rejecting domain violations and badly
    conditioned fundamental tensors; raises if no sample is found."""
    lo, hi = box
    for _ in range(max_tries):
        x = rng.uniform(lo, hi, metric.dim)
        v = rng.uniform(-1.5, 1.5, metric.dim)
        if np.abs(v).max() < 0.2:
            continue
        if not metric.in_domain(x, v):
            continue
        g = metric_blocks(metric, x, v, order=2).g
        if not np.all(np.isfinite(g)) or np.linalg.cond(g) > cond_limit:
            continue
        return TangentSample(x, v)
    raise FinslerError(
        f"could not draw an admissible sample for metric {metric.name!r} "
        f"in box {box} after {max_tries} tries"
    )


def _poly_func(coeffs, center):
    def f(x):
        total = 0.0
        for alpha, c in coeffs:
            term = c
            for i, a in enumerate(alpha):
                for _ in range(a):
                    term = term * (x[i] - center[i])
            total = total + term
        return total

    return f


def _monomials_upto(dim, degree):
    monos = []

    def rec(prefix, rem, slots):
        if slots == 0:
            monos.append(tuple(prefix))
            return
        for d in range(rem + 1):
            rec(prefix + [d], rem - d, slots - 1)

    rec([], degree, dim)
    return monos


def random_polynomial_field(rng, dim, degree=3, scale=1.0, center=None):
    """Chart vector field with random polynomial components."""
    center = np.zeros(dim) if center is None else np.asarray(center, dtype=float)
    monos = _monomials_upto(dim, degree)
    funcs = []
    for _ in range(dim):
        coeffs = [(m, rng.uniform(-scale, scale)) for m in monos]
        funcs.append(_poly_func(coeffs, center))
    return VectorFieldOnChart(funcs, dim, "random_poly")


def extension_field(x0, value, jac, quad=None):
    """Field with prescribed value and Jacobian at x0 (plus an optional
    quadratic part), used to build admissible reference extensions."""
    x0 = np.asarray(x0, dtype=float)
    value = np.asarray(value, dtype=float)
    jac = np.asarray(jac, dtype=float)
    n = len(x0)

    def component(k):
        def f(x):
            d = [x[i] - x0[i] for i in range(n)]
            total = value[k]
            for i in range(n):
                total = total + jac[k, i] * d[i]
            if quad is not None:
                for i in range(n):
                    for j in range(n):
                        total = total + 0.5 * quad[k, i, j] * d[i] * d[j]
            return total

        return f

    return VectorFieldOnChart([component(k) for k in range(n)], n, "extension")


def random_curve(rng, sample, scale=1.0):
    """Polynomial curve through the sample with random higher coefficients."""
    x0, v0 = sample.x, sample.v
    a2 = rng.uniform(-scale, scale, len(x0))
    a3 = rng.uniform(-scale, scale, len(x0))

    def f(t):
        return [
            x0[i] + t * v0[i] + (t * t) * (0.5 * a2[i]) + (t * t * t) * (a3[i] / 6.0)
            for i in range(len(x0))
        ]

    return CurvePath.from_function(f, (-1.0, 1.0), dim=len(x0))


def random_curve_field(rng, dim, value, degree=2, scale=1.0):
    """Field along a curve: value at t=0 prescribed, random t-polynomial."""
    value = np.asarray(value, dtype=float)
    coeffs = rng.uniform(-scale, scale, (dim, degree))

    def f(t):
        out = []
        for k in range(dim):
            total = value[k]
            tp = t
            for c in coeffs[k]:
                total = total + c * tp
                tp = tp * t
            out.append(total)
        return out

    return FieldAlongCurve.from_function(f, dim=dim)


# -- identity sweeps ----------------------------------------------------------


def _g_derivative_along(blocks, JV, Xv, Yv, Zv, JY, JZ):
    """X(g_V(Y, Z)) at the sample from cached blocks: chain rule through the
    base point and the reference field."""
    dgX = np.einsum("ijl,l->ij", blocks.dg_dx, Xv) + 2.0 * np.einsum(
        "qij,ql,l->ij", blocks.C, JV, Xv
    )
    return (
        float(Yv @ dgX @ Zv)
        + float((JY @ Xv) @ blocks.g @ Zv)
        + float(Yv @ blocks.g @ (JZ @ Xv))
    )


def _point_identities(metric, sample, cp, track, where):
    v = sample.v
    n = metric.dim
    g, C, G, N = cp.g, cp.cartan, cp.Gamma, cp.N
    L = metric.value(sample.x, sample.v)

    rep = check_homogeneity(metric, sample, (0.5, 2.0, 7.0))
    track.add("homogeneity", rep.max_residual, where)

    track.add("euler_gvv", _rel(v @ g @ v - L, L), where)

    # scale by |v| |C| (the size of a generic slot insertion): for nearly
    # axis-aligned v the individual products are themselves near zero and
    # would turn roundoff into a spurious ratio
    contraction = np.einsum("i,ijk->jk", v, C)
    track.add(
        "cartan_flagpole",
        _rel(contraction, np.abs(v).max() * np.abs(C).max()),
        where,
    )

    worst = max(
        np.abs(C - C.transpose(p)).max()
        for p in ((0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0))
    )
    track.add("cartan_symmetry", _rel(worst, C, 1.0), where)

    blocks_2v = metric_blocks(metric, sample.x, 2.0 * v, order=3)
    track.add("cartan_neg_homogeneity", _rel(blocks_2v.C - 0.5 * C, C), where)
    for lam in (0.5, 3.0):
        g_lam = metric_blocks(metric, sample.x, lam * v, order=2).g
        track.add("g_zero_homogeneity", _rel(g_lam - g, g), where)

    blocks3 = metric_blocks(metric, sample.x, sample.v, order=3)
    track.add(
        "dg_dy_cartan",
        _rel(blocks3.dg_dy - 2.0 * np.einsum("kij->ijk", C), blocks3.dg_dy, C),
        where,
    )

    track.add("christoffel_symmetry", _rel(G - G.transpose(0, 2, 1), G, 1.0), where)

    ce = christoffel(metric, sample)
    gamma_up = np.linalg.solve(ce.g, ce.gamma_lc.values.reshape(n, -1)).reshape(n, n, n)
    lhs = np.einsum("kij,i,j->k", G, v, v)
    rhs = np.einsum("kij,i,j->k", gamma_up, v, v)
    vv_scale = np.abs(G).max() * float(v @ v)
    track.add("gamma_vv", _rel(lhs - rhs, lhs, rhs, vv_scale), where)

    track.add(
        "nonlinear_connection",
        _rel(np.einsum("sji,i->sj", G, v) - N, N, np.einsum("sji,i->sj", G, v)),
        where,
    )

    for lam in (0.1, 2.0, 10.0):
        ce_lam = christoffel(metric, TangentSample(sample.x, lam * v))
        track.add(
            "christoffel_homogeneity",
            _rel(ce_lam.Gamma.values - G, G, 1e-2),
            where,
        )


def _field_identities(metric, sample, cp, blocks4, rng, plan, track, where, heavy):
    n = metric.dim
    x0, v0 = sample.x, sample.v
    g, C, G = cp.g, cp.cartan, cp.Gamma

    JV = rng.uniform(-1.0, 1.0, (n, n))
    V = extension_field(x0, v0, JV, quad=rng.uniform(-1.0, 1.0, (n, n, n)))
    fields = [random_polynomial_field(rng, n, plan.degree, center=x0) for _ in range(4)]
    X, Y, Z, W = fields
    vals = [f.value(x0) for f in fields]
    Xv, Yv, Zv, Wv = vals
    jacs = [f.jacobian(x0) for f in fields]
    JX, JY, JZ, JW = jacs

    def nab(Av, JB, Bv):
        return JB @ Av + np.einsum("kij,i,j->k", G, Av, Bv)

    # torsion: nabla_X Y - nabla_Y X - [X, Y]
    bracket = JY @ Xv - JX @ Yv
    t_lhs = nab(Xv, JY, Yv) - nab(Yv, JX, Xv)
    track.add("torsion_free", _rel(t_lhs - bracket, t_lhs, bracket), where)

    nXV = nab(Xv, JV, v0)
    nYV = nab(Yv, JV, v0)
    nZV = nab(Zv, JV, v0)

    # almost g-compatibility (field form)
    lhs = _g_derivative_along(blocks4, JV, Xv, Yv, Zv, JY, JZ)
    rhs = (
        float(nab(Xv, JY, Yv) @ g @ Zv)
        + float(Yv @ g @ nab(Xv, JZ, Zv))
        + 2.0 * float(np.einsum("ijk,i,j,k->", C, nXV, Yv, Zv))
    )
    track.add("almost_g_field", _rel(lhs - rhs, lhs, rhs), where)

    # Koszul consistency
    koszul_rhs = (
        _g_derivative_along(blocks4, JV, Xv, Yv, Zv, JY, JZ)
        - _g_derivative_along(blocks4, JV, Zv, Xv, Yv, JX, JY)
        + _g_derivative_along(blocks4, JV, Yv, Zv, Xv, JZ, JX)
        + float(bracket @ g @ Zv)
        + float((JX @ Zv - JZ @ Xv) @ g @ Yv)
        - float((JZ @ Yv - JY @ Zv) @ g @ Xv)
        + 2.0
        * (
            -float(np.einsum("ijk,i,j,k->", C, nXV, Yv, Zv))
            - float(np.einsum("ijk,i,j,k->", C, nYV, Zv, Xv))
            + float(np.einsum("ijk,i,j,k->", C, nZV, Xv, Yv))
        )
    )
    koszul_lhs = 2.0 * float(nab(Xv, JY, Yv) @ g @ Zv)
    track.add("koszul", _rel(koszul_lhs - koszul_rhs, koszul_lhs, koszul_rhs), where)

    # curvature identities
    Rc = field_curvature_block(cp, JV)

    def R(av, bv, cv):
        return np.einsum("kabc,a,b,c->k", Rc, av, bv, cv)

    anti = R(Xv, Yv, Zv) + R(Yv, Xv, Zv)
    track.add("curvature_antisymmetry", _rel(anti, R(Xv, Yv, Zv), 1e-2), where)

    bianchi1 = R(Xv, Yv, Zv) + R(Yv, Zv, Xv) + R(Zv, Xv, Yv)
    track.add("first_bianchi", _rel(bianchi1, R(Xv, Yv, Zv), R(Yv, Zv, Xv)), where)

    nc = cartan_derivative_block(cp, blocks4, JV)

    sym_resid = max(
        np.abs(nc - nc.transpose(0, *p)).max()
        for p in ((1, 3, 2), (2, 1, 3), (3, 2, 1))
    )
    track.add("nabla_cartan_symmetry", _rel(sym_resid, nc, 1e-2), where)

    # Eq: nabla_X C (V, Z, W) = -C(nabla_X V, Z, W)
    lhs = float(np.einsum("lijk,l,i,j,k->", nc, Xv, v0, Zv, Wv))
    rhs = -float(np.einsum("ijk,i,j,k->", C, nXV, Zv, Wv))
    track.add("nabla_cartan_flagpole", _rel(lhs - rhs, lhs, rhs, np.abs(nc).max()), where)

    def B(Pv, Qv, Rv_, Sv):
        """B value together with the size of its largest constituent (the
        constituents are terms of the identities below, so they set the
        scale residuals are relative to)."""
        t1 = float(np.einsum("lijk,l,i,j,k->", nc, Qv, nab(Pv, JV, v0), Rv_, Sv))
        t2 = float(np.einsum("lijk,l,i,j,k->", nc, Pv, nab(Qv, JV, v0), Rv_, Sv))
        t3 = float(np.einsum("ijk,i,j,k->", C, R(Qv, Pv, v0), Rv_, Sv))
        return t1 - t2 + t3, max(abs(t1), abs(t2), abs(t3))

    if heavy:
        # pair symmetry with the B correction
        p1 = float(R(Xv, Yv, Zv) @ g @ Wv)
        p2 = float(R(Xv, Yv, Wv) @ g @ Zv)
        b0, s0 = B(Xv, Yv, Zv, Wv)
        rhs = 2.0 * b0
        track.add("curvature_pair_b", _rel(p1 + p2 - rhs, p1, p2, rhs, s0), where)

        # six-B pair-interchange identity
        q1 = float(R(Xv, Yv, Zv) @ g @ Wv)
        q2 = float(R(Zv, Wv, Xv) @ g @ Yv)
        bs = [
            B(Zv, Yv, Xv, Wv),
            B(Xv, Zv, Yv, Wv),
            B(Wv, Xv, Zv, Yv),
            B(Yv, Wv, Zv, Xv),
            B(Wv, Zv, Xv, Yv),
            B(Xv, Yv, Zv, Wv),
        ]
        rhs = sum(b for b, _ in bs)
        track.add(
            "six_b", _rel(q1 - q2 - rhs, q1, q2, rhs, max(s for _, s in bs)), where
        )

        _second_bianchi(metric, sample, cp, V, X, Y, Z, W, track, where)


def _second_bianchi(metric, sample, cp, V, X, Y, Z, W, track, where):
    """Cyclic sum of (nabla_X R^V)(Y,Z)W; the outermost derivative of the
    curvature needs fifth derivatives of L, so it is taken by fourth-order
    central differences of the exactly-computed curvature field."""
    from .curvature import curvature_field

    x0 = sample.x
    G = cp.Gamma
    n = metric.dim
    Wv = W.value(x0)
    Rc = field_curvature_block(cp, V.jacobian(x0))

    def R_vals(av, bv, cv):
        return np.einsum("kabc,a,b,c->k", Rc, av, bv, cv)

    def nab(A, B):
        Av, Bv = A.value(x0), B.value(x0)
        return B.jacobian(x0) @ Av + np.einsum("kij,i,j->k", G, Av, Bv)

    def nabla_of_R_field(Av, B1, B2):
        """nabla^V_A of the vector field p -> R^V(B1, B2)W at x0."""
        norm = np.linalg.norm(Av)
        e = Av / norm
        h = 0.002
        vals = [
            curvature_field(metric, V, B1, B2, W, x0 + step * h * e)
            for step in (-2.0, -1.0, 1.0, 2.0)
        ]
        dT = (vals[0] - 8.0 * vals[1] + 8.0 * vals[2] - vals[3]) / (12.0 * h) * norm
        T0 = R_vals(B1.value(x0), B2.value(x0), Wv)
        return dT + np.einsum("kij,i,j->k", G, Av, T0)

    total = np.zeros(n)
    scale = 1e-2
    for A, B1, B2 in ((X, Y, Z), (Y, Z, X), (Z, X, Y)):
        first = nabla_of_R_field(A.value(x0), B1, B2)
        term = (
            first
            - R_vals(nab(A, B1), B2.value(x0), Wv)
            - R_vals(B1.value(x0), nab(A, B2), Wv)
            - R_vals(B1.value(x0), B2.value(x0), nab(A, W))
        )
        total = total + term
        scale = max(scale, float(np.abs(first).max()), float(np.abs(term).max()))
    track.add("second_bianchi", float(np.abs(total).max()) / scale, where)


def _admissible_vector(metric, rng, x0, max_tries=500, cond_limit=1e8):
    for _ in range(max_tries):
        w = rng.uniform(-1.5, 1.5, metric.dim)
        if np.abs(w).max() < 0.2 or not metric.in_domain(x0, w):
            continue
        g = metric_blocks(metric, x0, w, order=2).g
        if np.all(np.isfinite(g)) and np.linalg.cond(g) <= cond_limit:
            return w
    raise FinslerError(
        f"no admissible vector found at x={x0.tolist()} for {metric.name!r}"
    )


def _compose_field(chart_field, curve):
    """Restriction of a chart field to a curve, evaluated by jet composition."""

    def f(t):
        pos = curve.func(t)
        return [func(pos) for func in chart_field.funcs]

    return FieldAlongCurve.from_function(f, dim=chart_field.dim)


def _nonsingular_pair(rng, v0, n):
    """Draw u with {v0, u} comfortably independent."""
    nv = np.linalg.norm(v0)
    while True:
        u = rng.uniform(-1.0, 1.0, n)
        cross = np.linalg.norm(u - (u @ v0) / (nv * nv) * v0)
        if cross > 0.2:
            return u


def _extension_jacobian(rng, v0, u, acc2, udot, n):
    """Jacobian J with J v0 = acc2 and J u = udot, random elsewhere.

    These two columns are exactly the first-order data a variational pair of
    the curve determines; everything else is free extension choice."""
    basis = np.empty((n, n))
    targets = np.empty((n, n))
    basis[:, 0] = v0
    basis[:, 1] = u
    targets[:, 0] = acc2
    targets[:, 1] = udot
    for k in range(2, n):
        while True:
            basis[:, k] = rng.uniform(-1.0, 1.0, n)
            if np.linalg.matrix_rank(basis[:, : k + 1]) == k + 1:
                break
        targets[:, k] = rng.uniform(-1.0, 1.0, n)
    return targets @ np.linalg.inv(basis)


def _curve_identities(metric, rng, plan, track, metric_name):
    n = metric.dim
    for index in range(plan.curve_samples):
        sample = sample_tangent(metric, rng, plan.box)
        x0, v0 = sample.x, sample.v
        where = {"metric": metric_name, "kind": "curve", "x": x0.tolist(), "v": v0.tolist()}

        curve = random_curve(rng, sample)
        for _ in range(10):  # keep the curve genuinely non-geodesic
            if np.abs(covariant_acceleration(metric, curve, 0.0)).max() >= 0.05:
                break
            curve = random_curve(rng, sample)
        ce = christoffel(metric, sample)
        G = ce.Gamma.values
        vel0 = curve.velocity(0.0)

        # reference field along the curve, admissible at t=0
        w0 = _admissible_vector(metric, rng, x0)
        Wc = random_curve_field(rng, n, w0)
        Xc = random_curve_field(rng, n, rng.uniform(-1.0, 1.0, n))
        Yc = random_curve_field(rng, n, rng.uniform(-1.0, 1.0, n))
        ce_w = christoffel(metric, TangentSample(x0, w0))
        Gw = ce_w.Gamma.values
        blocks_w = metric_blocks(metric, x0, w0, order=3)

        Xv, Yv = Xc.value(0.0), Yc.value(0.0)
        dX, dY, dW = Xc.derivative(0.0), Yc.derivative(0.0), Wc.derivative(0.0)
        DX = dX + np.einsum("kij,i,j->k", Gw, Xv, vel0)
        DY = dY + np.einsum("kij,i,j->k", Gw, Yv, vel0)
        DW = dW + np.einsum("kij,i,j->k", Gw, w0, vel0)
        gw = blocks_w.g
        lhs = (
            float(Xv @ (np.einsum("ijl,l->ij", blocks_w.dg_dx, vel0)) @ Yv)
            + 2.0 * float(np.einsum("qij,q,i,j->", blocks_w.C, dW, Xv, Yv))
            + float(dX @ gw @ Yv)
            + float(Xv @ gw @ dY)
        )
        rhs = (
            float(DX @ gw @ Yv)
            + float(Xv @ gw @ DY)
            + 2.0 * float(np.einsum("ijk,i,j,k->", blocks_w.C, DW, Xv, Yv))
        )
        track.add("almost_g_curve", _rel(lhs - rhs, lhs, rhs), where)

        # linearity and Leibniz for the curve derivative
        a, b = rng.uniform(-2.0, 2.0, 2)

        def D(F, t=0.0):
            return cov_deriv_along(metric, curve, Wc, F, t)

        combo = FieldAlongCurve(
            value=lambda t: a * Xc.value(t) + b * Yc.value(t),
            derivative=lambda t: a * Xc.derivative(t) + b * Yc.derivative(t),
        )
        lin = D(combo) - (a * D(Xc) + b * D(Yc))
        track.add("curve_linearity", _rel(lin, D(Xc), D(Yc)), where)

        c0, c1 = rng.uniform(-1.0, 1.0, 2)
        h = lambda t: t * t + c1 * t + c0
        hdot = lambda t: 2.0 * t + c1
        scaled = FieldAlongCurve(
            value=lambda t: h(t) * Xc.value(t),
            derivative=lambda t: hdot(t) * Xc.value(t) + h(t) * Xc.derivative(t),
        )
        leib = D(scaled) - (hdot(0.0) * Xc.value(0.0) + h(0.0) * D(Xc))
        track.add("curve_leibniz", _rel(leib, D(scaled), D(Xc)), where)

        # restriction of a chart field to the curve
        Vf = extension_field(x0, w0, rng.uniform(-1.0, 1.0, (n, n)))
        Xf = random_polynomial_field(rng, n, plan.degree, center=x0)
        lhs_vec = cov_deriv_along(
            metric, curve, _compose_field(Vf, curve), _compose_field(Xf, curve), 0.0
        )
        from .connection import nabla

        rhs_vec = nabla(metric, Vf, VectorFieldOnChart.constant(vel0), Xf, x0)
        track.add(
            "curve_chart_restriction", _rel(lhs_vec - rhs_vec, lhs_vec, rhs_vec), where
        )

        # two-parameter map commutation
        c_lin = rng.uniform(-0.5, 0.5, (n, 5))

        def lam_func(t, s):
            return [
                x0[i]
                + t * c_lin[i, 0]
                + s * c_lin[i, 1]
                + (t * s) * c_lin[i, 2]
                + (t * t) * c_lin[i, 3]
                + (s * s) * c_lin[i, 4]
                for i in range(n)
            ]

        lam = TwoParamMap(lam_func, (-0.5, 0.5), (-0.5, 0.5), dim=n)
        resid = mixed_derivative_commutation(metric, lam, lambda t, s: v0, 0.0, 0.0)
        parts = lam.partials(0.0, 0.0)
        scale_terms = np.einsum("kij,i,j->k", G, parts["d_s"], parts["d_t"])
        track.add(
            "two_param_commutation",
            _rel(resid, parts["d_ts"], scale_terms, 1e-2),
            where,
        )

        # curve-wise curvature: direct commutator vs hh + H (non-geodesic)
        u = _nonsingular_pair(rng, v0, n)
        w = rng.uniform(-1.0, 1.0, n)
        hh_path = r_along_curve(metric, curve, 0.0, u, w)
        direct1 = r_along_curve_direct(metric, curve, 0.0, u, w, rng=rng)
        track.add(
            "curve_decomposition", _rel(hh_path - direct1, hh_path, direct1), where
        )

        # extension independence: a second jet realization and a chart-field
        # extension sharing the variational first-order data
        direct2 = r_along_curve_direct(metric, curve, 0.0, u, w, rng=rng)
        acc2 = curve.acceleration(0.0)
        udot = -np.einsum("kij,i,j->k", G, u, v0)
        J = _extension_jacobian(rng, v0, u, acc2, udot, n)
        Vext = extension_field(x0, v0, J, quad=rng.uniform(-1.0, 1.0, (n, n, n)))
        Uext = extension_field(x0, u, rng.uniform(-1.0, 1.0, (n, n)))
        Wext = extension_field(x0, w, rng.uniform(-1.0, 1.0, (n, n)))
        from .curvature import curvature_field

        chart = curvature_field(metric, Vext, Vext, Uext, Wext, x0)
        worst = max(
            _rel(direct2 - hh_path, hh_path, direct2),
            _rel(chart - hh_path, hh_path, chart),
        )
        track.add("extension_independence", worst, where)

        # H symmetry
        H_uw = h_tensor(metric, curve, 0.0, u, w)
        H_wu = h_tensor(metric, curve, 0.0, w, u)
        track.add("h_symmetry", _rel(H_uw - H_wu, H_uw, H_wu, 1e-2), where)


def _geodesic_identities(metric, rng, plan, track, metric_name):
    sample = sample_tangent(metric, rng, plan.box)
    L0 = metric.value(sample.x, sample.v)
    v0 = sample.v / np.sqrt(abs(L0)) if abs(L0) > 1e-12 else sample.v
    where = {"metric": metric_name, "kind": "geodesic", "x": sample.x.tolist(), "v": v0.tolist()}
    curve = geodesic_shoot(metric, sample.x, v0, T=0.6, tol=1e-10)
    for t in (0.12, 0.33, 0.57):
        x, vel = curve.position(t), curve.velocity(t)
        cp = christoffel_with_partials(metric, x, vel)
        u = rng.uniform(-1.0, 1.0, metric.dim)
        w = rng.uniform(-1.0, 1.0, metric.dim)
        H = h_tensor(metric, curve, t, u, w)
        M = np.einsum("i,j,kijp->kp", u, w, cp.dGamma_dy)
        Lval = abs(metric.value(x, vel))
        scale = max(float(np.abs(M).max()) * max(Lval, 1.0), _FLOOR)
        track.add("h_zero_geodesic", float(np.abs(H).max()) / scale, where)


_FLAG_CONSTANTS = {
    "sphere_round": ("flag_sphere", 1.0),
    "funk": ("flag_funk", -0.25),
    "hyperbolic": ("flag_hyperbolic", -1.0),
}


def _flag_identities(metric, rng, plan, track, metric_name):
    if metric.name not in _FLAG_CONSTANTS:
        return
    ident, K0 = _FLAG_CONSTANTS[metric.name]
    count = min(plan.samples, 20)
    for _ in range(count):
        sample = sample_tangent(metric, rng, plan.box)
        u = _nonsingular_pair(rng, sample.v, metric.dim)
        K = flag_curvature(metric, sample, u)
        where = {"metric": metric_name, "kind": "flag", "x": sample.x.tolist(), "v": sample.v.tolist()}
        track.add(ident, abs(K - K0), where)


def run_verification(plan):
    """Execute every identity sweep in the plan; deterministic for a fixed
    seed.  Returns a VerificationReport whose aggregate flag is the gate."""
    rng = np.random.default_rng(plan.seed)
    track = _Tracker()
    names = []
    for entry in plan.metrics:
        metric = entry
        names.append(metric.name)
        for index in range(plan.samples):
            sample = sample_tangent(metric, rng, plan.box)
            where = {
                "metric": metric.name,
                "kind": "point",
                "x": sample.x.tolist(),
                "v": sample.v.tolist(),
            }
            cp = christoffel_with_partials(metric, sample.x, sample.v)
            blocks4 = metric_blocks(metric, sample.x, sample.v, order=4)
            _point_identities(metric, sample, cp, track, where)
            _field_identities(
                metric,
                sample,
                cp,
                blocks4,
                rng,
                plan,
                track,
                where,
                heavy=index < plan.heavy_samples,
            )
        _curve_identities(metric, rng, plan, track, metric.name)
        _geodesic_identities(metric, rng, plan, track, metric.name)
        _flag_identities(metric, rng, plan, track, metric.name)

    results = []
    for name in DEFAULT_TOLERANCES:
        if name not in track.data:
            continue
        max_resid, count, worst = track.data[name]
        tol = plan.tolerance(name)
        results.append(
            IdentityResult(
                name=name,
                max_residual=max_resid,
                tolerance=tol,
                passed=max_resid <= tol,
                count=count,
                worst=worst,
            )
        )
    passed = all(r.passed for r in results)
    return VerificationReport(
        results=results, passed=passed, seed=plan.seed, metric_names=names
    )
