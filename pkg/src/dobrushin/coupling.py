"""Exact couplings on the doubled configuration space and the reconstruction sweep.

A coupling table is a dense array of shape (q,)*n + (q,)*n: the first ``n``
axes hold the first configuration x, the last ``n`` the second configuration y,
both in ``g.vertices`` order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence

import numpy as np

from .criterion import ContractionParams, UniquenessCertificate, Verdict
from .gibbs import DEFAULT_CAP, ExactMeasure, Observable, broadcast_site_table, check_cap
from .gibbs import conditional_measure, outside_configurations
from .graph import ColorPartition, Graph, shells
from .spin_model import FiniteSpinModel, conditional_table

EXACT_TOL = 1e-12
SLACK_TOL = 1e-10
CONTRACTION_TOL = 1e-9


class FalsificationError(AssertionError):
    """A bound that must hold under the criterion's hypotheses was violated."""


def optimal_coupling(p, q) -> np.ndarray:
    """Maximal coupling of two laws on the same alphabet.

    Overlap min(p, q) sits on the diagonal; the residuals are coupled
    independently and scaled by 1/d(p, q). With d = 0 the coupling is purely
    diagonal.
    """
    return _optimal_couplings(np.asarray(p, dtype=float)[None], np.asarray(q, dtype=float)[None])[0]


def _optimal_couplings(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    # P, Q: (..., k) -> (..., k, k)
    m = np.minimum(P, Q)
    rp = P - m
    rq = Q - m
    d = rp.sum(axis=-1)[..., None, None]
    k = P.shape[-1]
    out = m[..., :, None] * np.eye(k)
    safe = np.where(d > 0, d, 1.0)
    return out + np.where(d > 0, rp[..., :, None] * rq[..., None, :] / safe, 0.0)


@dataclass(frozen=True, eq=False)
class CouplingTable:
    graph: Graph
    q: int
    weights: np.ndarray

    @property
    def n(self) -> int:
        return len(self.graph)

    def total_mass(self) -> float:
        return math.fsum(self.weights.ravel())

    def first_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=tuple(range(self.n, 2 * self.n)))

    def second_marginal(self) -> np.ndarray:
        return self.weights.sum(axis=tuple(range(self.n)))

    def disagreement(self, site: str) -> float:
        return float((_pair_marginal(self, site, site, second=True) * (1 - np.eye(self.q))).sum())


def _pair_marginal(nu: CouplingTable, a: str, b: str, second: bool) -> np.ndarray:
    i = nu.graph.index(a)
    j = nu.graph.index(b) + (nu.n if second else 0)
    keep = (i, j)
    axes = tuple(k for k in range(2 * nu.n) if k not in keep)
    return nu.weights.sum(axis=axes)


def product_coupling(mu1: ExactMeasure, mu2: ExactMeasure, cap: int = DEFAULT_CAP) -> CouplingTable:
    n = len(mu1.graph)
    check_cap(mu1.q, 2 * n, cap)
    w = np.multiply.outer(mu1.weights, mu2.weights)
    return CouplingTable(mu1.graph, mu1.q, w)


def diagonal_coupling(mu: ExactMeasure, cap: int = DEFAULT_CAP) -> CouplingTable:
    n = len(mu.graph)
    check_cap(mu.q, 2 * n, cap)
    flat = np.diag(mu.weights.ravel())
    return CouplingTable(mu.graph, mu.q, flat.reshape((mu.q,) * (2 * n)))


def random_coupling(g: Graph, q: int, rng: np.random.Generator, cap: int = DEFAULT_CAP) -> CouplingTable:
    """Arbitrary law on X^2 (not tied to any Gibbs measure), Dirichlet(1) weights."""
    check_cap(q, 2 * len(g), cap)
    w = rng.dirichlet(np.ones(q ** (2 * len(g))))
    return CouplingTable(g, q, w.reshape((q,) * (2 * len(g))))


@lru_cache(maxsize=512)
def _kernel(model: FiniteSpinModel, g: Graph, site: str) -> np.ndarray:
    # rho^{x,y}_site broadcast over the 2n-axis table
    n, q = len(g), model.q
    nbrs = g.neighbors(site)
    d = len(nbrs)
    T = conditional_table(model, g, site).reshape(q**d, q)
    rho = _optimal_couplings(T[:, None, :], T[None, :, :])
    rho = rho.reshape((q,) * (2 * d + 2))
    axes = ([g.index(u) for u in nbrs] + [n + g.index(u) for u in nbrs]
            + [g.index(site), n + g.index(site)])
    return broadcast_site_table(rho, axes, 2 * n)


def apply_R(nu: CouplingTable, site: str, model: FiniteSpinModel) -> CouplingTable:
    """Redraw the spin pair at ``site`` from the optimal coupling of the two conditionals."""
    i = nu.graph.index(site)
    m = nu.weights.sum(axis=(i, nu.n + i), keepdims=True)
    return CouplingTable(nu.graph, nu.q, m * _kernel(model, nu.graph, site))


def outside_support_mass(nu: CouplingTable, site: str) -> float:
    """Mass where ``site`` disagrees but every neighbor agrees."""
    g, n, q = nu.graph, nu.n, nu.q
    mask = 1.0 - np.eye(q)
    w = nu.weights * broadcast_site_table(mask, [g.index(site), n + g.index(site)], 2 * n)
    for u in g.neighbors(site):
        w = w * broadcast_site_table(np.eye(q), [g.index(u), n + g.index(u)], 2 * n)
    return float(w.sum())


@dataclass(frozen=True)
class Moments:
    """gamma[l] = nu(I_l); lam[i, l1, l2] = nu(I_l1 H^i_l2), i = 0, 1 for the two copies."""

    gamma: np.ndarray
    lam: np.ndarray


def moments(nu: CouplingTable, model: FiniteSpinModel) -> Moments:
    g, n, q = nu.graph, nu.n, nu.q
    h = model.h_values
    gamma = np.empty(n)
    lam = np.empty((2, n, n))
    mask = 1.0 - np.eye(q)
    for a in range(n):
        D = nu.weights * broadcast_site_table(mask, [a, n + a], 2 * n)
        for b in range(n):
            for i in range(2):
                ax = b + i * n
                marg = D.sum(axis=tuple(k for k in range(2 * n) if k != ax))
                lam[i, a, b] = marg @ h
        gamma[a] = D.sum()
    return Moments(gamma, lam)


def region_functionals(mom: Moments, idx: Sequence[int]) -> tuple[float, float]:
    idx = list(idx)
    if not idx:
        raise ValueError("region must be nonempty")
    gam = float(mom.gamma[idx].max())
    lam = float(mom.lam[:, idx][:, :, idx].max())
    return gam, lam


def functionals(nu: CouplingTable, region: Iterable[str], model: FiniteSpinModel) -> tuple[float, float]:
    """(gamma_D, lambda_D): worst disagreement and worst disagreement-times-h over ``region``."""
    idx = [nu.graph.index(v) for v in region]
    return region_functionals(moments(nu, model), idx)


def lemma_slacks(before: Moments, after: Moments, g: Graph, site: str,
                 params: ContractionParams, K: float) -> tuple[float, float, float, float]:
    """Slacks (rhs - lhs) of the four one-step bounds for R at ``site``.

    Returns the minimum over the free indices of each bound: disagreement at
    ``site``; h at ``site`` against disagreement elsewhere; disagreement at
    ``site`` against h elsewhere; both at ``site``.
    """
    l = g.index(site)
    nb = [g.index(u) for u in g.neighbors(site)]
    kap = np.array([params.kappa[(site, u)] for u in g.neighbors(site)])
    cc = np.array([params.c[(site, u)] for u in g.neighbors(site)])
    gb, lb = before.gamma, before.lam
    ga, la = after.gamma, after.lam
    others = [k for k in range(len(g)) if k != l]

    rhs_dis = kap @ gb[nb] + lb[:, nb][:, :, nb].sum() / K
    s_dis = rhs_dis - ga[l]

    s_hs = s_ho = math.inf
    for i in range(2):
        for k in others:
            rhs_hs = gb[k] + cc @ lb[i, k, nb]
            s_hs = min(s_hs, rhs_hs - la[i, k, l])
            rhs_ho = lb[i, nb, k].sum()
            s_ho = min(s_ho, rhs_ho - la[i, l, k])
    s_j = math.inf
    for i in range(2):
        rhs_j = gb[nb].sum() + (lb[i][np.ix_(nb, nb)] @ cc).sum()
        s_j = min(s_j, rhs_j - la[i, l, l])
    return float(s_dis), float(s_hs), float(s_ho), float(s_j)


@dataclass(frozen=True)
class ApplicationRecord:
    vertex: str
    gamma_before: float
    gamma_after: float
    lambda_before: float
    lambda_after: float
    slack_disagree: float
    slack_h_site: float
    slack_h_other: float
    slack_joint: float
    y_mass: float

    @property
    def min_slack(self) -> float:
        return min(self.slack_disagree, self.slack_h_site, self.slack_h_other, self.slack_joint)


@dataclass
class SweepDiagnostics:
    records: list[ApplicationRecord] = field(default_factory=list)

    @property
    def min_slack(self) -> float:
        return min((r.min_slack for r in self.records), default=math.inf)

    @property
    def max_y_mass(self) -> float:
        return max((r.y_mass for r in self.records), default=0.0)


def sweep_order(partition: ColorPartition, region: Optional[Iterable[str]] = None) -> list[str]:
    """Class V_0 first, then V_1, ...; ascending id within each class."""
    keep = None if region is None else set(region)
    return [v for cls in partition.classes for v in sorted(cls) if keep is None or v in keep]


def sweep(nu: CouplingTable, partition: ColorPartition, model: FiniteSpinModel,
          params: Optional[ContractionParams] = None, K: Optional[float] = None,
          region: Optional[Iterable[str]] = None) -> tuple[CouplingTable, SweepDiagnostics]:
    """Apply R at every vertex (of ``region``) in chromatic order.

    With ``params`` and ``K`` the one-step bound slacks are recorded for every
    application; otherwise they are reported as +inf.
    """
    diag = SweepDiagnostics()
    track = params is not None and K is not None
    g = nu.graph
    mom = moments(nu, model)
    for v in sweep_order(partition, region):
        new = apply_R(nu, v, model)
        new_mom = moments(new, model)
        slacks = lemma_slacks(mom, new_mom, g, v, params, K) if track else (math.inf,) * 4
        diag.records.append(ApplicationRecord(
            v, float(mom.gamma.max()), float(new_mom.gamma.max()),
            float(mom.lam.max()), float(new_mom.lam.max()), *slacks,
            outside_support_mass(new, v)))
        nu, mom = new, new_mom
    return nu, diag


def transformed_norm(gamma: float, lam: float, xi: float) -> float:
    return max(xi * gamma, lam)


@dataclass(frozen=True)
class TrajectoryRow:
    n: int
    gamma: float
    lam: float
    norm: Optional[float]
    min_slack: float
    matrix_slack: float = math.inf


@dataclass
class Trajectory:
    rows: list[TrajectoryRow] = field(default_factory=list)
    events: list[str] = field(default_factory=list)
    final: Optional[CouplingTable] = None

    @property
    def falsified(self) -> bool:
        return bool(self.events)


def iterate(nu0: CouplingTable, partition: ColorPartition, model: FiniteSpinModel,
            cert: UniquenessCertificate, params: ContractionParams, tol: float = 1e-9,
            max_sweeps: int = 50, strict: bool = False, checks: bool = True,
            slack_tol: float = SLACK_TOL, contraction_tol: float = CONTRACTION_TOL) -> Trajectory:
    """Repeated full sweeps until gamma < tol or ``max_sweeps``.

    When ``checks`` is on (the caller asserts the model passed membership
    verification), every one-step bound, the componentwise matrix bound and the
    contraction of max(xi*gamma, lambda) by r_K are checked; violations are
    collected in ``events`` and raised with ``strict``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    M = cert.M
    xi = cert.xi
    unique = cert.verdict is Verdict.UNIQUE
    nu = nu0
    traj = Trajectory()
    gam, lam = region_functionals(moments(nu, model), range(nu.n))
    norm = transformed_norm(gam, lam, xi) if xi is not None else None
    traj.rows.append(TrajectoryRow(0, gam, lam, norm, math.inf))
    n = 0
    while n < max_sweeps and gam >= tol:
        n += 1
        nu, diag = sweep(nu, partition, model, params, cert.K)
        g_new, l_new = region_functionals(moments(nu, model), range(nu.n))
        mslack = math.inf
        new_norm = None
        if M is not None:
            bound = M @ np.array([gam, lam])
            mslack = float(min(bound[0] - g_new, bound[1] - l_new))
        if xi is not None:
            new_norm = transformed_norm(g_new, l_new, xi)
        if checks:
            if diag.min_slack < -slack_tol:
                traj.events.append(f"sweep {n}: one-step bound slack {diag.min_slack:.3e}")
            if unique and mslack < -slack_tol:
                traj.events.append(f"sweep {n}: matrix bound slack {mslack:.3e}")
            if unique and new_norm > (cert.r_K + contraction_tol) * norm:
                traj.events.append(f"sweep {n}: norm ratio {new_norm / norm:.12g} exceeds r_K {cert.r_K:.12g}")
        traj.rows.append(TrajectoryRow(n, g_new, l_new, new_norm, diag.min_slack, mslack))
        gam, lam, norm = g_new, l_new, new_norm
    traj.final = nu
    if strict and traj.events:
        raise FalsificationError("; ".join(traj.events))
    return traj


@dataclass
class LocalizedRun:
    """Shell trajectory for one conditioning configuration."""

    x: dict
    weight: float
    pairs: list[tuple[float, float]]
    shell_slack: float
    phi: list[float]
    gamma_center_final: float


def localized_sweep(mu: ExactMeasure, model: FiniteSpinModel, partition: ColorPartition, center: str,
                    N: int, M: np.ndarray, f: Optional[Observable] = None,
                    cap: int = DEFAULT_CAP) -> list[LocalizedRun]:
    """Reconstruct on shrinking shells around ``center`` for every outside configuration.

    For each x on the complement of D_{N-1}, start from mu^x (x) mu and at step
    s = 1..N-1 sweep over D_{N-s-1}, recording (gamma, lambda) on that shell
    and the slack of the componentwise bound by M applied to the previous
    shell's pair. With ``f`` (an observable at ``center``) the mixing function
    Phi(x) is evaluated from every intermediate coupling.
    """
    g = mu.graph
    check_cap(mu.q, 2 * len(g), cap)
    D = shells(g, center, N)
    outer = D[-1]
    ci = g.index(center)
    runs = []
    for x in outside_configurations(g, outer, mu.q):
        idx = tuple(x[v] if v in x else slice(None) for v in g.vertices)
        weight = float(mu.weights[idx].sum())
        mux = conditional_measure(mu, outer, x)
        nu = product_coupling(mux, mu, cap)
        mom = moments(nu, model)
        pair = region_functionals(mom, [g.index(v) for v in D[N - 1]])
        pairs = [pair]
        phis = [_phi(nu, ci, f)] if f is not None else []
        worst = math.inf
        for s in range(1, N):
            region = D[N - s - 1]
            nu, _ = sweep(nu, partition, model, region=region)
            mom = moments(nu, model)
            new = region_functionals(mom, [g.index(v) for v in region])
            bound = M @ np.array(pair)
            worst = min(worst, float(bound[0] - new[0]), float(bound[1] - new[1]))
            pairs.append(new)
            pair = new
            if f is not None:
                phis.append(_phi(nu, ci, f))
        runs.append(LocalizedRun(x, weight, pairs, worst, phis, float(mom.gamma[ci])))
    return runs


def _phi(nu: CouplingTable, ci: int, f: Observable) -> float:
    n = nu.n
    mx = nu.weights.sum(axis=tuple(k for k in range(2 * n) if k != ci))
    my = nu.weights.sum(axis=tuple(k for k in range(2 * n) if k != n + ci))
    return float(mx @ f.values - my @ f.values)
