"""Christoffel symbols of the reference-vector affine connection, and the
covariant derivative of chart vector fields.

For an admissible reference vector v at x the symbols are assembled from the
metric blocks in three steps (Einstein summation, indices 0-based in code):

    gamma_kij = 1/2 (dg_ki/dx^j - dg_ij/dx^k + dg_jk/dx^i)
    N^s_j     = v^i gamma^s_ji - v^l v^i gamma^p_li g^{ks} C_pjk
    Gamma^s_ij = gamma^s_ij - g^{ks}(N^p_j C_pik + N^p_i C_pkj - N^p_k C_pij)

The assembly is written once over a generic scalar ring: with float blocks it
returns the symbols at a sample; with order-1 jet blocks it returns the
symbols together with their x- and y-derivatives in a single pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import exprs
from .errors import DomainError
from .geometry import (
    TensorBlock,
    check_nondegenerate,
    metric_blocks,
    point_ring_blocks,
)
from .jets import Jet, jet_space
from .metrics import TangentSample


class VectorFieldOnChart:
    """A vector field on the chart with jet-evaluable components."""

    def __init__(self, funcs, dim, name="field"):
        self.funcs = tuple(funcs)
        self.dim = dim
        self.name = name
        if len(self.funcs) != dim:
            raise ValueError("need one component function per dimension")

    @classmethod
    def from_expressions(cls, expressions, dim, name="field"):
        funcs = []
        for text in expressions:
            compiled = exprs.compile_expression(text, dim, allow_v=False)
            funcs.append(lambda x, _c=compiled: _c(x, None))
        return cls(funcs, dim, name)

    @classmethod
    def constant(cls, vec):
        vec = np.asarray(vec, dtype=float)
        return cls([lambda x, _v=float(c): _v for c in vec], len(vec), "constant")

    def value(self, x):
        x = [float(c) for c in x]
        return np.array([float(f(x)) for f in self.funcs])

    def jets(self, x, order):
        space = jet_space(self.dim, order)
        xj = [Jet.variable(space, float(x[i]), i) for i in range(self.dim)]
        out = []
        for f in self.funcs:
            r = f(xj)
            out.append(r if isinstance(r, Jet) else Jet.constant(space, float(r)))
        return out

    def jacobian(self, x):
        """J[k, i] = d V^k / d x^i."""
        comps = self.jets(x, 1)
        n = self.dim
        J = np.empty((n, n))
        for k in range(n):
            for i in range(n):
                mono = tuple(1 if a == i else 0 for a in range(n))
                J[k, i] = comps[k].extract(mono)
        return J

    def derivatives2(self, x):
        """(value, jacobian, hessian[k, i, j] = d^2 V^k / dx^i dx^j)."""
        comps = self.jets(x, 2)
        n = self.dim
        val = np.array([c.value for c in comps])
        J = np.empty((n, n))
        H = np.empty((n, n, n))
        for k in range(n):
            for i in range(n):
                ei = tuple(1 if a == i else 0 for a in range(n))
                J[k, i] = comps[k].extract(ei)
                for j in range(n):
                    eij = tuple((a == i) + (a == j) for a in range(n))
                    H[k, i, j] = comps[k].extract(eij)
        return val, J, H


@dataclass(frozen=True)
class ChristoffelEval:
    """Christoffel data at one sample: gamma_lc[i,j,k] follows the pattern
    gamma_ijk of the formal symbols, Gamma[k,i,j] = Gamma^k_ij, N[s,j] = N^s_j."""

    sample: TangentSample
    gamma_lc: TensorBlock
    N: TensorBlock
    Gamma: TensorBlock
    g: np.ndarray
    ginv: np.ndarray
    cartan: np.ndarray


def christoffel_core(g, dg, C, v, ginv):
    """Generic assembly of (gamma_low, gamma_up, N, Gamma) over any scalar
    ring (float arrays or object arrays of jets)."""
    gamma_low = 0.5 * (
        dg - np.einsum("bca->abc", dg) + np.einsum("cab->abc", dg)
    )  # gamma_low[k,i,j] = gamma_kij, symmetric in (i, j)
    gamma_up = np.einsum("sk,kij->sij", ginv, gamma_low)
    spray = np.einsum("pli,l,i->p", gamma_up, v, v)
    C_up = np.einsum("pjk,ks->pjs", C, ginv)
    N = np.einsum("sji,i->sj", gamma_up, v) - np.einsum("p,pjs->sj", spray, C_up)
    corr = (
        -np.einsum("ks,pj,pik->sij", ginv, N, C)
        - np.einsum("ks,pi,pkj->sij", ginv, N, C)
        + np.einsum("ks,pk,pij->sij", ginv, N, C)
    )
    Gamma = gamma_up + corr
    return gamma_low, gamma_up, N, Gamma


def ring_inverse(g):
    """Inverse of a matrix of order-1 jets.

    In the order-1 ring the first-order part is nilpotent, so the Neumann
    series truncates exactly: (g0 + d)^-1 = g0^-1 - g0^-1 d g0^-1.
    """
    n = g.shape[0]
    val = np.array([[g[i, j].value for j in range(n)] for i in range(n)])
    G0 = np.linalg.inv(val)
    space = g[0, 0].space
    delta = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            delta[i, j] = g[i, j] - val[i, j]
    corr = np.einsum("ia,ab,bj->ij", G0, delta, G0)
    out = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            out[i, j] = Jet.constant(space, G0[i, j]) - corr[i, j]
    return out


def christoffel(metric, sample):
    """Christoffel symbols, nonlinear connection and lowered symbols at a
    sample, by the explicit formulas (float path)."""
    blocks = metric_blocks(metric, sample.x, sample.v, order=3)
    check_nondegenerate(blocks.g, f"at x={sample.x.tolist()}, v={sample.v.tolist()}")
    ginv = np.linalg.solve(blocks.g, np.eye(metric.dim))
    gamma_low, _, N, Gamma = christoffel_core(
        blocks.g, blocks.dg_dx, blocks.C, sample.v, ginv
    )
    return ChristoffelEval(
        sample=sample,
        gamma_lc=TensorBlock(gamma_low, variance=("d", "d", "d"), sym=((1, 2),)),
        N=TensorBlock(N, variance=("u", "d")),
        Gamma=TensorBlock(Gamma, variance=("u", "d", "d"), sym=((1, 2),)),
        g=blocks.g,
        ginv=ginv,
        cartan=blocks.C,
    )


@dataclass(frozen=True)
class ChristoffelPartials:
    """Gamma with its base and fiber derivatives at one sample.

    Gamma[k,i,j] = Gamma^k_ij; dGamma_dx[k,i,j,p] = d Gamma^k_ij / d x^p;
    dGamma_dy[k,i,j,p] = d Gamma^k_ij / d y^p; N[s,j] = N^s_j.
    """

    x: np.ndarray
    v: np.ndarray
    Gamma: np.ndarray
    dGamma_dx: np.ndarray
    dGamma_dy: np.ndarray
    N: np.ndarray
    g: np.ndarray
    ginv: np.ndarray
    cartan: np.ndarray


def christoffel_with_partials(metric, x, v):
    """Run the Christoffel assembly over order-1 jet blocks, obtaining Gamma
    together with all its first x- and y-derivatives in one pass."""
    g, dg, C, v_ring, ring = point_ring_blocks(metric, x, v)
    n = metric.dim
    gval = np.array([[g[i, j].value for j in range(n)] for i in range(n)])
    check_nondegenerate(gval, f"at x={np.asarray(x).tolist()}, v={np.asarray(v).tolist()}")
    ginv = ring_inverse(g)
    _, _, N, Gamma = christoffel_core(g, dg, C, v_ring, ginv)

    slot_pos = [
        ring.index[tuple(1 if a == s else 0 for a in range(2 * n))]
        for s in range(2 * n)
    ]
    G = np.empty((n, n, n))
    dG_dx = np.empty((n, n, n, n))
    dG_dy = np.empty((n, n, n, n))
    Nval = np.empty((n, n))
    for k in range(n):
        for i in range(n):
            Nval[k, i] = N[k, i].value
            for j in range(n):
                jet = Gamma[k, i, j]
                G[k, i, j] = jet.value
                for p in range(n):
                    dG_dx[k, i, j, p] = jet.coeffs[slot_pos[p]]
                    dG_dy[k, i, j, p] = jet.coeffs[slot_pos[n + p]]
    Cval = np.array(
        [[[C[i, j, k].value for k in range(n)] for j in range(n)] for i in range(n)]
    )
    ginv_val = np.array(
        [[ginv[i, j].value for j in range(n)] for i in range(n)]
    )
    return ChristoffelPartials(
        x=np.asarray(x, dtype=float),
        v=np.asarray(v, dtype=float),
        Gamma=G,
        dGamma_dx=dG_dx,
        dGamma_dy=dG_dy,
        N=Nval,
        g=gval,
        ginv=ginv_val,
        cartan=Cval,
    )


def nabla(metric, V, X, Y, x):
    """Covariant derivative (nabla^V_X Y)(x) of chart fields:

        (nabla^V_X Y)^k = X^i dY^k/dx^i + X^i Y^j Gamma^k_ij(x, V(x))
    """
    x = np.asarray(x, dtype=float)
    v = V.value(x)
    if not metric.in_domain(x, v):
        raise DomainError(
            f"reference field {V.name!r} is not admissible at x={x.tolist()}"
        )
    ce = christoffel(metric, TangentSample(x, v))
    Xv = X.value(x)
    Yv = Y.value(x)
    JY = Y.jacobian(x)
    return JY @ Xv + np.einsum("kij,i,j->k", ce.Gamma.values, Xv, Yv)
