"""Congestion objective phi(s) = d^T L_s^+ d and its derivatives.

One approximate solve yields the value, the per-edge voltage differences
Delta_e, and the full gradient (grad phi)_e = -w_e Delta_e^2 at once. The
exact dense path backs the small-instance oracles: gradient, Hessian (via
the factorization H = 2 diag(zeta) P diag(zeta) with zeta_e = sqrt(w_e)
Delta_e and P = W^{1/2} A L^+ A^T W^{1/2}), homogeneity diagnostics, and
the total-effective-resistance gradient.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import graphs, solver
from .errors import CapExceededError


@dataclass(frozen=True, eq=False)
class DiffResult:
    """Gradient bundle from a single solve.

    grad_e = -w_e * delta_e^2 holds by construction, so every entry is
    nonpositive; phi is the congestion value d^T x_hat.
    """

    grad: np.ndarray
    delta: np.ndarray
    zeta: np.ndarray
    phi: float
    x: np.ndarray


@dataclass(frozen=True, eq=False)
class HessianInfo:
    H: np.ndarray
    opnorm_bound: float
    gsc_M: float


def make_context(g: graphs.Graph, cfg: solver.SolverConfig) -> solver.SolveContext:
    """Solve context keyed to the graph's backbone (preconditioner, warm start)."""
    bb = g.backbone_mask
    return solver.context_from_edges(g.n, g.ei[bb], g.ej[bb], g.w[bb], cfg)


def _voltages(g, s, d, cfg, context, warm=True):
    cfg = cfg or solver.SolverConfig()
    s = graphs.check_switch(g, s)
    d = graphs.check_demand(g, d)
    if g.n <= cfg.dense_threshold:
        L = graphs.assemble_laplacian_dense(g, s)
        return solver.exact_pinv_apply(L, d)
    L = graphs.assemble_laplacian(g, s)
    x0 = context.x_warm if (warm and context is not None) else None
    res = solver.solve(L, d, cfg, context=context, x0=x0)
    return res.x


def phi(g: graphs.Graph, s: np.ndarray, d: np.ndarray,
        cfg: solver.SolverConfig | None = None,
        context: solver.SolveContext | None = None) -> float:
    """Congestion d^T L_s^+ d of the switched graph."""
    x = _voltages(g, s, d, cfg, context)
    return float(d @ x)


def approx_diff(g: graphs.Graph, s: np.ndarray, d: np.ndarray,
                cfg: solver.SolverConfig | None = None,
                context: solver.SolveContext | None = None) -> DiffResult:
    """Value, voltage differences, and gradient from one solve."""
    x = _voltages(g, s, d, cfg, context)
    delta = x[g.ei] - x[g.ej]
    return DiffResult(grad=-g.w * delta ** 2, delta=delta,
                      zeta=np.sqrt(g.w) * delta, phi=float(d @ x), x=x)


def exact_gradient(g: graphs.Graph, s: np.ndarray, d: np.ndarray,
                   dense_threshold: int = 2000) -> np.ndarray:
    """Machine-precision gradient via the dense pseudoinverse."""
    _require_dense(g, dense_threshold)
    s = graphs.check_switch(g, s)
    d = graphs.check_demand(g, d)
    L = graphs.assemble_laplacian_dense(g, s)
    x = solver.exact_pinv_apply(L, d)
    delta = x[g.ei] - x[g.ej]
    return -g.w * delta ** 2


def hessian_dense(g: graphs.Graph, s: np.ndarray, d: np.ndarray,
                  dense_threshold: int = 2000) -> HessianInfo:
    """Exact Hessian of phi at s, built from the rank-structured factorization.

    opnorm_bound is the generic operator-norm bound 2 * phi(s); gsc_M is
    the self-concordance constant 3 ||w . rho_T||_2 with rho_T the edge
    resistances measured in the backbone subgraph.
    """
    _require_dense(g, dense_threshold)
    s = graphs.check_switch(g, s)
    d = graphs.check_demand(g, d)
    L = graphs.assemble_laplacian_dense(g, s)
    Lp = solver.pinv_laplacian(L)
    x = Lp @ d
    delta = x[g.ei] - x[g.ej]
    zeta = np.sqrt(g.w) * delta
    A = g.incidence.toarray()
    sw = np.sqrt(g.w)
    P = (sw[:, None] * (A @ Lp @ A.T)) * sw[None, :]
    H = 2.0 * (zeta[:, None] * P * zeta[None, :])
    H = 0.5 * (H + H.T)
    phi_val = float(d @ x)

    Lt = graphs.assemble_laplacian_dense(g, g.backbone_indicator())
    Lpt = solver.pinv_laplacian(Lt)
    rho_t = Lpt[g.ei, g.ei] + Lpt[g.ej, g.ej] - 2.0 * Lpt[g.ei, g.ej]
    gsc = 3.0 * float(np.linalg.norm(g.w * rho_t))
    return HessianInfo(H=H, opnorm_bound=2.0 * phi_val, gsc_M=gsc)


def homogeneity_residual(g: graphs.Graph, s: np.ndarray, d: np.ndarray,
                         cfg: solver.SolverConfig | None = None,
                         context: solver.SolveContext | None = None) -> float:
    """|phi(s) + <grad, s>| / phi(s); phi is homogeneous of degree -1.

    Returns the absolute residual when phi(s) = 0 (zero demand).
    """
    diff = approx_diff(g, s, d, cfg, context)
    resid = abs(diff.phi + float(diff.grad @ s))
    return resid / diff.phi if diff.phi > 0 else resid


def total_effective_resistance(g: graphs.Graph, s: np.ndarray,
                               dense_threshold: int = 2000) -> float:
    """Kirchhoff index R(s) = n * trace(L_s^+), a connectivity diagnostic."""
    _require_dense(g, dense_threshold)
    s = graphs.check_switch(g, s)
    L = graphs.assemble_laplacian_dense(g, s)
    return g.n * float(np.trace(solver.pinv_laplacian(L)))


def total_effective_resistance_gradient(g: graphs.Graph, s: np.ndarray,
                                        dense_threshold: int = 2000) -> np.ndarray:
    """Gradient of R(s): entry e is -n * w_e * a_e^T L_s^{+2} a_e."""
    _require_dense(g, dense_threshold)
    s = graphs.check_switch(g, s)
    L = graphs.assemble_laplacian_dense(g, s)
    Lp = solver.pinv_laplacian(L)
    cols = Lp[:, g.ei] - Lp[:, g.ej]
    return -g.n * g.w * np.einsum("ij,ij->j", cols, cols)


def _require_dense(g: graphs.Graph, dense_threshold: int) -> None:
    if g.n > dense_threshold:
        raise CapExceededError(
            f"dense-only operation: n={g.n} exceeds threshold {dense_threshold}")
