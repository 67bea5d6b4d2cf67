"""Conditional-gradient optimization of congestion under an edge budget.

The feasible set is the unit cube with backbone entries pinned to 1 and
total mass at most q. Its linear minimization oracle keeps the backbone
and closes the q - |T| switchable edges with the most negative gradient
entries. The gap <grad, s - v*> certifies approximation quality: once it
falls below tau * phi(s) with tau = alpha/(1+alpha), the iterate is
within a (1+alpha) factor of the constrained optimum.

The default step rule follows the 2/(t+2) schedule but re-evaluates the
objective and skips any step that would increase it, so the value trace
is non-increasing while the classic convergence analysis still applies.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import congestion, graphs, solver
from .errors import InvalidInputError

STEP_RULES = ("classic_2_over_t2", "monotone_guard")


@dataclass(frozen=True)
class FWConfig:
    q: int
    alpha: float
    max_iterations: int = 500
    step_rule: str = "monotone_guard"
    solver: solver.SolverConfig = field(default_factory=solver.SolverConfig)

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise InvalidInputError("alpha must lie in (0, 1)")
        if self.step_rule not in STEP_RULES:
            raise InvalidInputError(f"unknown step rule {self.step_rule!r}")
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be at least 1")


@dataclass(frozen=True)
class Certificate:
    gap: float
    tau: float
    phi_value: float
    certified: bool
    bound_factor: float | None


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    phi: float
    gap: float
    eta: float
    l1: float
    wall_time: float


@dataclass(frozen=True, eq=False)
class FWTrace:
    records: tuple[IterationRecord, ...]


def lmo_top_q(grad: np.ndarray, g: graphs.Graph, q: int) -> np.ndarray:
    """Vertex minimizing <grad, v> over the budgeted cube with backbone kept.

    Selects the min(q, m) - |T| switchable edges with the most negative
    gradient entries; ties, including zero entries, break toward lower
    edge index. The result has exactly min(q, m) ones.
    """
    t_size = len(g.backbone)
    if q < t_size:
        raise InvalidInputError(f"budget q={q} is below the backbone size {t_size}")
    grad = np.asarray(grad, dtype=float)
    off = np.flatnonzero(~g.backbone_mask)
    k = min(q, g.m) - t_size
    v = np.zeros(g.m)
    v[g.backbone_mask] = 1.0
    if k > 0 and len(off):
        order = np.lexsort((off, grad[off]))
        v[off[order[:k]]] = 1.0
    return v


def fw_gap(grad: np.ndarray, s: np.ndarray, v_star: np.ndarray) -> float:
    """Certificate gap <grad, s - v*>; nonnegative when v* is the oracle output."""
    return float(np.asarray(grad) @ (np.asarray(s) - np.asarray(v_star)))


def certificate(g: graphs.Graph, s: np.ndarray, d: np.ndarray, cfg: FWConfig,
                context: solver.SolveContext | None = None) -> Certificate:
    """Evaluate the gap certificate at an arbitrary feasible point."""
    diff = congestion.approx_diff(g, s, d, cfg.solver, context)
    v = lmo_top_q(diff.grad, g, cfg.q)
    gap = fw_gap(diff.grad, s, v)
    return _certificate(gap, cfg.alpha, diff.phi)


def _certificate(gap: float, alpha: float, phi_value: float) -> Certificate:
    tau = alpha / (1.0 + alpha)
    certified = gap <= tau * phi_value
    return Certificate(gap=gap, tau=tau, phi_value=phi_value, certified=certified,
                       bound_factor=(1.0 + alpha) if certified else None)


def run(g: graphs.Graph, d: np.ndarray, cfg: FWConfig,
        context: solver.SolveContext | None = None
        ) -> tuple[np.ndarray, Certificate, FWTrace]:
    """Optimize from the backbone indicator; stop on certificate or budget.

    Returns the final (or best seen, under the classic step rule)
    fractional switch vector, its certificate, and the iteration trace.
    The budget ||s_t||_1 <= q and backbone pinning hold at every iterate.
    """
    d = graphs.check_demand(g, d)
    t_size = len(g.backbone)
    if cfg.q < t_size:
        raise InvalidInputError(f"budget q={cfg.q} is below the backbone size {t_size}")
    if context is None:
        context = congestion.make_context(g, cfg.solver)
    bb = g.backbone_mask

    start = time.perf_counter()
    s = g.backbone_indicator()
    diff = congestion.approx_diff(g, s, d, cfg.solver, context)
    records = []
    best_phi = np.inf
    best_s = s
    best_gap = np.inf

    for t in range(cfg.max_iterations):
        v = lmo_top_q(diff.grad, g, cfg.q)
        gap = fw_gap(diff.grad, s, v)
        eta = 2.0 / (t + 2.0)
        records.append(IterationRecord(iteration=t, phi=diff.phi, gap=gap, eta=eta,
                                       l1=float(s.sum()),
                                       wall_time=time.perf_counter() - start))
        cert = _certificate(gap, cfg.alpha, diff.phi)
        if cert.certified:
            return s, cert, FWTrace(tuple(records))
        if diff.phi < best_phi:
            best_phi, best_s, best_gap = diff.phi, s, gap

        s_try = (1.0 - eta) * s + eta * v
        s_try[bb] = 1.0
        np.clip(s_try, 0.0, 1.0, out=s_try)
        assert s_try.sum() <= cfg.q + 1e-9
        diff_try = congestion.approx_diff(g, s_try, d, cfg.solver, context)
        if cfg.step_rule == "monotone_guard" and diff_try.phi > diff.phi:
            continue
        s, diff = s_try, diff_try

    return best_s, _certificate(best_gap, cfg.alpha, best_phi), FWTrace(tuple(records))


def hexagon_norm(u: np.ndarray, q: int) -> float:
    """max(||u||_1, q ||u||_inf), the budget-polytope gauge."""
    if q < 1:
        raise InvalidInputError("q must be at least 1")
    a = np.abs(np.asarray(u, dtype=float))
    if a.size == 0:
        return 0.0
    return float(max(a.sum(), q * a.max()))


def hexagon_dual_norm(u: np.ndarray, q: int) -> float:
    """Average of the q largest coordinate magnitudes (zero-padded)."""
    if q < 1:
        raise InvalidInputError("q must be at least 1")
    a = np.sort(np.abs(np.asarray(u, dtype=float)))[::-1]
    return float(a[:q].sum() / q)
