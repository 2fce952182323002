"""Fundamental tensor, Cartan tensor and their partials via jet evaluation.

All blocks at a sample (x, v) come from a single jet evaluation of L with all
2n base/fiber directions seeded.  Conventions (0-based arrays, y = fiber):

    g[i, j]          = 1/2 d^2 L / dy_i dy_j
    C[i, j, k]       = 1/4 d^3 L / dy_i dy_j dy_k          (fully symmetric)
    dg_dx[i, j, k]   = d g_ij / d x_k
    dg_dy[i, j, k]   = d g_ij / d y_k  ( = 2 C[k, i, j] )
    dC_dx[i, j, k, l] = d C_ijk / d x_l
    dC_dy[i, j, k, l] = d C_ijk / d y_l                    (fully symmetric)
    d2g_dxdx[i, j, k, l] = d^2 g_ij / d x_k d x_l
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetricError
from .jets import Jet, derivative_jet, jet_space, split_jet
COND_LIMIT = 1e10


@dataclass(frozen=True)
class TensorBlock:
    """Dense tensor with per-axis variance flags and declared symmetries.

    variance is one character per axis: 'd' (down, covariant) or
    'u' (up, contravariant).  sym lists groups of axes that are
    interchangeable.
    """

    values: np.ndarray
    variance: tuple
    sym: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if len(self.variance) != self.values.ndim:
            raise ValueError("variance must have one flag per axis")

    @property
    def rank(self):
        return self.values.ndim

    def __getitem__(self, idx):
        return self.values[idx]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def symmetry_residual(self):
        """Largest entrywise violation of the declared symmetries."""
        worst = 0.0
        for group in self.sym:
            group = list(group)
            for a in range(len(group)):
                for b in range(a + 1, len(group)):
                    axes = list(range(self.values.ndim))
                    axes[group[a]], axes[group[b]] = axes[group[b]], axes[group[a]]
                    worst = max(
                        worst,
                        float(np.abs(self.values - self.values.transpose(axes)).max()),
                    )
        return worst


def raise_first(g, block):
    """Raise the first index of `block` with a dense solve against g."""
    block = np.asarray(block, dtype=float)
    n = g.shape[0]
    return np.linalg.solve(g, block.reshape(n, -1)).reshape(block.shape)


def lower_first(g, block):
    block = np.asarray(block, dtype=float)
    n = g.shape[0]
    return (g @ block.reshape(n, -1)).reshape(block.shape)


def _unit(n2, *slots):
    mono = [0] * n2
    for s in slots:
        mono[s] += 1
    return tuple(mono)


def _as_jet(value, space):
    return value if isinstance(value, Jet) else Jet.constant(space, float(value))


@dataclass(frozen=True)
class SampleBlocks:
    """Derivative blocks of L at one sample, extracted from one jet."""

    x: np.ndarray
    v: np.ndarray
    order: int
    L: float
    dL_dy: np.ndarray
    g: np.ndarray
    dg_dx: np.ndarray = None
    dg_dy: np.ndarray = None
    C: np.ndarray = None
    d2g_dxdx: np.ndarray = None
    dC_dx: np.ndarray = None
    dC_dy: np.ndarray = None


def metric_blocks(metric, x, v, order):
    """Evaluate L once with all 2n directions seeded and extract every block
    available at the requested order (2, 3 or 4)."""
    metric.check_sample(x, v)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    n = metric.dim
    space = jet_space(2 * n, order)
    xj = [Jet.variable(space, x[i], i) for i in range(n)]
    vj = [Jet.variable(space, v[i], n + i) for i in range(n)]
    LJ = _as_jet(metric.func(xj, vj), space)

    def d(*slots):
        return LJ.extract(_unit(2 * n, *slots))

    L = LJ.value
    dL_dy = np.array([d(n + i) for i in range(n)])
    g = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            g[i, j] = g[j, i] = 0.5 * d(n + i, n + j)
    out = {"x": x, "v": v, "order": order, "L": L, "dL_dy": dL_dy, "g": g}

    if order >= 3:
        dg_dx = np.empty((n, n, n))
        C = np.empty((n, n, n))
        for i in range(n):
            for j in range(i, n):
                for k in range(n):
                    val = 0.5 * d(n + i, n + j, k)
                    dg_dx[i, j, k] = dg_dx[j, i, k] = val
                    cval = 0.25 * d(n + i, n + j, n + k)
                    C[i, j, k] = C[j, i, k] = cval
        # full symmetrization of C across its last axis is automatic: the jet
        # coefficient only sees the multiset of slots
        dg_dy = 2.0 * np.einsum("kij->ijk", C)
        out.update(dg_dx=dg_dx, dg_dy=dg_dy, C=C)

    if order >= 4:
        d2g_dxdx = np.empty((n, n, n, n))
        dC_dx = np.empty((n, n, n, n))
        dC_dy = np.empty((n, n, n, n))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    for l in range(n):
                        d2g_dxdx[i, j, k, l] = 0.5 * d(n + i, n + j, k, l)
                        dC_dx[i, j, k, l] = 0.25 * d(n + i, n + j, n + k, l)
                        dC_dy[i, j, k, l] = 0.25 * d(n + i, n + j, n + k, n + l)
        out.update(d2g_dxdx=d2g_dxdx, dC_dx=dC_dx, dC_dy=dC_dy)
    return SampleBlocks(**out)


def check_nondegenerate(g, context=""):
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise DegenerateMetricError(
            f"fundamental tensor is numerically degenerate"
            f"{' ' + context if context else ''}"
            f" (condition number {cond:.3g}, det {np.linalg.det(g):.3g})"
        )


def fundamental_tensor(metric, sample):
    """g_v in the coordinate basis; refuses degenerate samples."""
    blocks = metric_blocks(metric, sample.x, sample.v, order=2)
    check_nondegenerate(blocks.g, f"at x={sample.x.tolist()}, v={sample.v.tolist()}")
    return TensorBlock(blocks.g, variance=("d", "d"), sym=((0, 1),))


def cartan_tensor(metric, sample):
    """C_v, the fully symmetric third fiber derivative of L / 4."""
    blocks = metric_blocks(metric, sample.x, sample.v, order=3)
    return TensorBlock(blocks.C, variance=("d", "d", "d"), sym=((0, 1, 2),))


def tensor_partials(metric, sample):
    """Base and fiber partials of g; dg_dy equals twice the Cartan tensor."""
    blocks = metric_blocks(metric, sample.x, sample.v, order=3)
    return {
        "dg_dx": TensorBlock(blocks.dg_dx, variance=("d", "d", "d"), sym=((0, 1),)),
        "dg_dy": TensorBlock(blocks.dg_dy, variance=("d", "d", "d"), sym=((0, 1),)),
    }


# -- jet-valued blocks (for differentiating the connection) -------------------


def point_ring_blocks(metric, x, v):
    """g, dg_dx, C and v with entries as order-1 jets over the 2n (x, y)
    seed directions, extracted from one order-4 evaluation of L.

    Running the Christoffel pipeline over this ring yields Gamma together
    with its x- and y-derivatives in one pass.
    """
    metric.check_sample(x, v)
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    n = metric.dim
    space = jet_space(2 * n, 4)
    xj = [Jet.variable(space, x[i], i) for i in range(n)]
    vj = [Jet.variable(space, v[i], n + i) for i in range(n)]
    LJ = _as_jet(metric.func(xj, vj), space)

    g = np.empty((n, n), dtype=object)
    dg = np.empty((n, n, n), dtype=object)
    C = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            g[i, j] = derivative_jet(LJ, _unit(2 * n, n + i, n + j), 1) * 0.5
            for k in range(n):
                dg[i, j, k] = derivative_jet(LJ, _unit(2 * n, n + i, n + j, k), 1) * 0.5
                C[i, j, k] = (
                    derivative_jet(LJ, _unit(2 * n, n + i, n + j, n + k), 1) * 0.25
                )
    ring = jet_space(2 * n, 1)
    v_ring = np.empty(n, dtype=object)
    for i in range(n):
        v_ring[i] = Jet.variable(ring, v[i], n + i)
    return g, dg, C, v_ring, ring


def composed_ring_blocks(metric, x_jets, v_jets, n_outer, outer_order=1):
    """g, dg_dx, C as jets over `n_outer` leading outer variables, with the
    base point and fiber vector given as jets in a combined space.

    `x_jets`/`v_jets` must live in jet_space(n_outer + 2n, 3 + outer_order)
    and carry the metric's own seed directions in the trailing 2n slots (the
    caller adds Jet.variable offsets there).  Used to differentiate the
    connection through a curve or a two-parameter map by composition.
    """
    n = metric.dim
    combined = x_jets[0].space
    if combined.nvars != n_outer + 2 * n:
        raise ValueError("combined space does not match n_outer + 2*dim variables")
    LJ = _as_jet(metric.func(list(x_jets), list(v_jets)), combined)

    def block(*slots):
        return split_jet(LJ, n_outer, _unit(2 * n, *slots), outer_order)

    g = np.empty((n, n), dtype=object)
    dg = np.empty((n, n, n), dtype=object)
    C = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            g[i, j] = block(n + i, n + j) * 0.5
            for k in range(n):
                dg[i, j, k] = block(n + i, n + j, k) * 0.5
                C[i, j, k] = block(n + i, n + j, n + k) * 0.25
    return g, dg, C
