"""Curvature of the reference-vector connection: the field tensor R^V, the
hh-curvature block, the curve-wise operator with its acceleration correction,
and flag curvature.

Index conventions for the rank-4 block (antisymmetric in its last two axes):

    R4[i, j, k, l] = dGamma^i_jl/dx^k - N^p_k dGamma^i_jl/dy^p
                   - dGamma^i_jk/dx^l + N^p_l dGamma^i_jk/dy^p
                   + Gamma^i_hk Gamma^h_jl - Gamma^i_hl Gamma^h_jk

and the curve-wise operator contracts it as

    R(v, u)w = R4[i, j, k, l] w^j v^k u^l,

which reduces to the classical R(v, u)w of the Levi-Civita connection when
the metric is Riemannian (the calibration case for sign and slot order).
"""

from __future__ import annotations

import numpy as np

from .connection import (
    christoffel,
    christoffel_core,
    christoffel_with_partials,
    ring_inverse,
)
from .errors import DomainError
from .geometry import TensorBlock, composed_ring_blocks, metric_blocks
from .jets import Jet, jet_space
from .metrics import TangentSample


def hh_block(cp):
    """Assemble the rank-4 curvature block from Christoffel partials."""
    dGx, dGy, N, G = cp.dGamma_dx, cp.dGamma_dy, cp.N, cp.Gamma
    return (
        np.einsum("ijlk->ijkl", dGx)
        - np.einsum("pk,ijlp->ijkl", N, dGy)
        - dGx
        + np.einsum("pl,ijkp->ijkl", N, dGy)
        + np.einsum("ihk,hjl->ijkl", G, G)
        - np.einsum("ihl,hjk->ijkl", G, G)
    )


def hh_curvature(metric, sample):
    """The horizontal-horizontal curvature block at a sample."""
    cp = christoffel_with_partials(metric, sample.x, sample.v)
    return TensorBlock(hh_block(cp), variance=("u", "d", "d", "d"))


def hh_apply(R4, v, u, w):
    """R(v, u)w from the rank-4 block (w in the j-slot, v and u in the
    antisymmetric pair)."""
    return np.einsum("ijkl,j,k,l->i", np.asarray(R4), w, v, u)


def jacobi_operator(metric, sample, u):
    """The geodesic-deviation operator u -> R(u, v)v at the sample (the
    operator entering D^2 J + R(J, v)v = 0; positive on the round sphere)."""
    cp = christoffel_with_partials(metric, sample.x, sample.v)
    return hh_apply(hh_block(cp), np.asarray(u, dtype=float), sample.v, sample.v)


# -- curvature of a chart reference field -------------------------------------


def _field_gamma_partial(cp, V_jac):
    """x-derivative of p -> Gamma(p, V(p)) at the sample underlying cp."""
    return cp.dGamma_dx + np.einsum("qp,kijq->kijp", V_jac, cp.dGamma_dy)


def field_curvature_block(cp, V_jac):
    """Coordinate components Rc[k, a, b, c] of R^V(e_a, e_b) e_c from the
    Christoffel partials and the reference field's Jacobian."""
    dGt = _field_gamma_partial(cp, V_jac)
    G = cp.Gamma
    return (
        np.einsum("kbca->kabc", dGt)
        - np.einsum("kacb->kabc", dGt)
        + np.einsum("kah,hbc->kabc", G, G)
        - np.einsum("kbh,hac->kabc", G, G)
    )


def curvature_field(metric, V, X, Y, Z, x):
    """R^V(X, Y)Z at x, by differentiating the composite symbols
    Gamma(p, V(p)) through jets and contracting tensorially."""
    x = np.asarray(x, dtype=float)
    v = V.value(x)
    if not metric.in_domain(x, v):
        raise DomainError(f"reference field is not admissible at x={x.tolist()}")
    cp = christoffel_with_partials(metric, x, v)
    Rc = field_curvature_block(cp, V.jacobian(x))
    return np.einsum("kabc,a,b,c->k", Rc, X.value(x), Y.value(x), Z.value(x))


def curvature_field_nested(metric, V, X, Y, Z, x):
    """Cross-check path: R^V(X,Y)Z by two nested covariant derivatives minus
    the bracket term, with all field derivatives carried explicitly."""
    x = np.asarray(x, dtype=float)
    v = V.value(x)
    if not metric.in_domain(x, v):
        raise DomainError(f"reference field is not admissible at x={x.tolist()}")
    cp = christoffel_with_partials(metric, x, v)
    G = cp.Gamma
    dGt = _field_gamma_partial(cp, V.jacobian(x))

    Xv, JX, _ = X.derivatives2(x)
    Yv, JY, HY = Y.derivatives2(x)
    Zv, JZ, HZ = Z.derivatives2(x)

    def nabla_with_jacobian(Av, JA, Bv, JB, HB):
        """(nabla_A B) and its x-derivative at the point."""
        W = JB @ Av + np.einsum("kij,i,j->k", G, Av, Bv)
        dW = (
            np.einsum("kil,i->kl", HB, Av)
            + JB @ JA
            + np.einsum("kij,il,j->kl", G, JA, Bv)
            + np.einsum("kij,i,jl->kl", G, Av, JB)
            + np.einsum("kijl,i,j->kl", dGt, Av, Bv)
        )
        return W, dW

    W_YZ, dW_YZ = nabla_with_jacobian(Yv, JY, Zv, JZ, HZ)
    W_XZ, dW_XZ = nabla_with_jacobian(Xv, JX, Zv, JZ, HZ)

    def outer(Av, Wv, dW):
        return dW @ Av + np.einsum("kij,i,j->k", G, Av, Wv)

    first = outer(Xv, W_YZ, dW_YZ)
    second = outer(Yv, W_XZ, dW_XZ)
    bracket = JY @ Xv - JX @ Yv
    third = JZ @ bracket + np.einsum("kij,i,j->k", G, bracket, Zv)
    return first - second - third


# -- covariant derivative of the Cartan tensor --------------------------------


def cartan_derivative_block(cp, blocks, V_jac):
    """(nabla^V C_V)[l, i, j, k] assembled from cached Christoffel partials,
    order-4 metric blocks and the reference field's Jacobian."""
    DC = np.einsum("ijkl->lijk", blocks.dC_dx) + np.einsum(
        "ql,ijkq->lijk", V_jac, blocks.dC_dy
    )
    G = cp.Gamma
    C = cp.cartan
    return (
        DC
        - np.einsum("pli,pjk->lijk", G, C)
        - np.einsum("plj,ipk->lijk", G, C)
        - np.einsum("plk,ijp->lijk", G, C)
    )


def nabla_cartan_block(metric, V, x):
    """(nabla^V C_V)[l, i, j, k]: derivative slot first, then the three
    symmetric slots.  Returns the block together with the Christoffel data."""
    x = np.asarray(x, dtype=float)
    v = V.value(x)
    if not metric.in_domain(x, v):
        raise DomainError(f"reference field is not admissible at x={x.tolist()}")
    cp = christoffel_with_partials(metric, x, v)
    blocks = metric_blocks(metric, x, v, order=4)
    block = cartan_derivative_block(cp, blocks, V.jacobian(x))
    return block, cp


def nabla_cartan(metric, V, X, Y, Z, W, x):
    """nabla^V_X C_V(Y, Z, W) at x (tensorial contraction of the block)."""
    block, _ = nabla_cartan_block(metric, V, x)
    return float(
        np.einsum(
            "lijk,l,i,j,k->",
            block,
            X.value(x),
            Y.value(x),
            Z.value(x),
            W.value(x),
        )
    )


def b_tensor(metric, V, X, Y, Z, W, x):
    """B^V(X,Y,Z,W) = nabla_Y C(nabla_X V, Z, W) - nabla_X C(nabla_Y V, Z, W)
    + C(R^V(Y,X)V, Z, W)."""
    from .connection import nabla

    block, cp = nabla_cartan_block(metric, V, x)
    Zv, Wv = Z.value(x), W.value(x)
    nxV = nabla(metric, V, X, V, x)
    nyV = nabla(metric, V, Y, V, x)
    Rv = curvature_field(metric, V, Y, X, V, x)
    t1 = np.einsum("lijk,l,i,j,k->", block, Y.value(x), nxV, Zv, Wv)
    t2 = np.einsum("lijk,l,i,j,k->", block, X.value(x), nyV, Zv, Wv)
    t3 = np.einsum("ijk,i,j,k->", cp.cartan, Rv, Zv, Wv)
    return float(t1 - t2 + t3)


# -- curvature along curves ----------------------------------------------------


def covariant_acceleration(metric, curve, t):
    """(D^{gammadot}_gamma gammadot)(t), the invariant acceleration."""
    x = curve.position(t)
    v = curve.velocity(t)
    ce = christoffel(metric, TangentSample(x, v))
    return curve.acceleration(t) + np.einsum("kij,i,j->k", ce.Gamma.values, v, v)


def h_tensor(metric, curve, t, u, w):
    """H_gamma(u, w)^k = u^i w^j (D^{gammadot} gammadot)^p dGamma^k_ij/dy^p;
    the correction by which the curve-wise operator differs from the
    hh-block, zero on geodesics."""
    x = curve.position(t)
    v = curve.velocity(t)
    metric.check_sample(x, v)
    cp = christoffel_with_partials(metric, x, v)
    acc = curve.acceleration(t) + np.einsum("kij,i,j->k", cp.Gamma, v, v)
    return np.einsum("i,j,p,kijp->k", u, w, acc, cp.dGamma_dy)


def r_along_curve(metric, curve, t, u, w):
    """R^gamma(gammadot, u)w via the hh-block plus the H correction."""
    x = curve.position(t)
    v = curve.velocity(t)
    metric.check_sample(x, v)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    cp = christoffel_with_partials(metric, x, v)
    acc = curve.acceleration(t) + np.einsum("kij,i,j->k", cp.Gamma, v, v)
    H = np.einsum("i,j,p,kijp->k", u, w, acc, cp.dGamma_dy)
    return hh_apply(hh_block(cp), v, u, w) + H


def _ring_jet(ring, value, d_t, d_s):
    c = np.zeros(ring.size)
    c[ring.index[(0, 0)]] = value
    c[ring.index[(1, 0)]] = d_t
    c[ring.index[(0, 1)]] = d_s
    return Jet(ring, c)


def r_along_curve_direct(metric, curve, t, u, w, rng=None):
    """R^gamma(gammadot, u)w by the direct two-parameter-map commutator
    D_t(D_s W) - D_s(D_t W), with the u-extension parallel along the curve.

    The map is a polynomial jet built from the curve's 2-jet; with `rng` the
    free jet data (second s-derivative and the W-field's derivatives) gets
    random values, which the commutator provably cancels."""
    n = metric.dim
    x0 = curve.position(t)
    v0 = curve.velocity(t)
    acc2 = curve.acceleration(t)
    metric.check_sample(x0, v0)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)

    ce = christoffel(metric, TangentSample(x0, v0))
    udot = -np.einsum("kij,i,j->k", ce.Gamma.values, u, v0)

    if rng is None:
        lam_ss = np.zeros(n)
        w_t = w_s = w_ts = w_tt = w_ss = np.zeros(n)
    else:
        lam_ss, w_t, w_s, w_ts, w_tt, w_ss = rng.uniform(-1.0, 1.0, (6, n))

    combined = jet_space(2 + 2 * n, 4)
    tj = Jet.variable(combined, 0.0, 0)
    sj = Jet.variable(combined, 0.0, 1)
    x_jets, v_jets = [], []
    for i in range(n):
        lam = (
            x0[i]
            + tj * v0[i]
            + (tj * tj) * (0.5 * acc2[i])
            + sj * u[i]
            + (tj * sj) * udot[i]
            + (sj * sj) * (0.5 * lam_ss[i])
        )
        lam_t = v0[i] + tj * acc2[i] + sj * udot[i]
        x_jets.append(lam + Jet.variable(combined, 0.0, 2 + i))
        v_jets.append(lam_t + Jet.variable(combined, 0.0, 2 + n + i))
    g, dg, C = composed_ring_blocks(metric, x_jets, v_jets, n_outer=2)

    ring = jet_space(2, 1)
    lam_t = np.array([_ring_jet(ring, v0[i], acc2[i], udot[i]) for i in range(n)], dtype=object)
    lam_s = np.array([_ring_jet(ring, u[i], udot[i], lam_ss[i]) for i in range(n)], dtype=object)
    W = np.array([_ring_jet(ring, w[i], w_t[i], w_s[i]) for i in range(n)], dtype=object)
    dWdt = np.array([_ring_jet(ring, w_t[i], w_tt[i], w_ts[i]) for i in range(n)], dtype=object)
    dWds = np.array([_ring_jet(ring, w_s[i], w_ts[i], w_ss[i]) for i in range(n)], dtype=object)

    Gamma = christoffel_core(g, dg, C, lam_t, ring_inverse(g))[3]

    D_s_W = dWds + np.einsum("i,j,kij->k", W, lam_s, Gamma)
    D_t_W = dWdt + np.einsum("i,j,kij->k", W, lam_t, Gamma)

    value = np.vectorize(lambda jet: jet.value)
    G0 = value(Gamma)
    outer_t = np.array([c.extract((1, 0)) for c in D_s_W]) + np.einsum(
        "i,j,kij->k", value(D_s_W), value(lam_t), G0
    )
    outer_s = np.array([c.extract((0, 1)) for c in D_t_W]) + np.einsum(
        "i,j,kij->k", value(D_t_W), value(lam_s), G0
    )
    return outer_t - outer_s


# -- flag curvature -------------------------------------------------------------


def flag_curvature(metric, sample, u):
    """K_v(u) = g_v(R(v,u)u, v) / (L(v) g_v(u,u) - g_v(v,u)^2).

    The numerator is the hh-block contraction: along the geodesic through the
    sample the H correction vanishes, so no integration is needed."""
    u = np.asarray(u, dtype=float)
    cp = christoffel_with_partials(metric, sample.x, sample.v)
    g, v = cp.g, sample.v
    L = metric.value(sample.x, sample.v)
    gu = g @ u
    den = L * float(u @ gu) - float(v @ gu) ** 2
    scale = abs(L * float(u @ gu)) + float(v @ gu) ** 2 + 1e-300
    if abs(den) < 1e-10 * scale:
        raise ValueError(
            "degenerate flag: span(v, u) is g_v-degenerate "
            f"(denominator {den:.3g} below tolerance)"
        )
    num = float(hh_apply(hh_block(cp), v, u, u) @ g @ v)
    return num / den


def flag_curvature_predecessor(metric, sample, u, w):
    """K_v(u, w) = g_v(R(v,u)w, v) / (L(v) g_v(u,w) - g_v(v,u) g_v(v,w))."""
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    cp = christoffel_with_partials(metric, sample.x, sample.v)
    g, v = cp.g, sample.v
    L = metric.value(sample.x, sample.v)
    den = L * float(u @ g @ w) - float(v @ g @ u) * float(v @ g @ w)
    scale = abs(L * float(u @ g @ w)) + abs(float(v @ g @ u) * float(v @ g @ w)) + 1e-300
    if abs(den) < 1e-10 * scale:
        raise ValueError(
            "degenerate flag pair: denominator "
            f"{den:.3g} below tolerance for the given (u, w)"
        )
    num = float(hh_apply(hh_block(cp), v, u, w) @ g @ v)
    return num / den
