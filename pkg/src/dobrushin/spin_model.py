"""Finite-alphabet Gibbs specifications built from pair potentials.

Spins are stored as integer indices into ``model.alphabet``. The one-site
conditional at ``l`` given its neighbors is

    pi_l(xi | x) ~ sigma(xi) * exp(sum_{l' ~ l} W_{l l'}(xi, x_{l'})).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np

from .criterion import ContractionParams
from .graph import Graph


class ModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiniteSpinModel:
    """Reference weights, pair potentials and weight function h on a finite alphabet.

    ``potentials`` maps an undirected edge ``(u, v)`` with ``u < v`` to a table
    ``W[a, b] = W_uv(alphabet[a], alphabet[b])``. Edges without an entry carry
    the zero potential.
    """

    alphabet: tuple[str, ...]
    ref_weights: np.ndarray
    potentials: Mapping[tuple[str, str], np.ndarray]
    h_values: np.ndarray

    def __post_init__(self):
        q = len(self.alphabet)
        if q < 1 or len(set(self.alphabet)) != q:
            raise ModelError("alphabet must be nonempty with distinct symbols")
        sigma = np.asarray(self.ref_weights, dtype=float)
        h = np.asarray(self.h_values, dtype=float)
        if sigma.shape != (q,) or h.shape != (q,):
            raise ModelError("ref_weights and h_values need one entry per symbol")
        if (sigma <= 0).any() or abs(math.fsum(sigma) - 1.0) > 1e-12:
            raise ModelError("ref_weights must be strictly positive and sum to 1")
        if (h < 0).any():
            raise ModelError("h_values must be nonnegative")
        pots = {}
        for (u, v), table in self.potentials.items():
            table = np.asarray(table, dtype=float)
            if table.shape != (q, q):
                raise ModelError(f"potential on ({u}, {v}) must be a {q}x{q} table")
            if u > v:
                u, v, table = v, u, table.T
            if (u, v) in pots:
                raise ModelError(f"potential on ({u}, {v}) given twice")
            pots[(u, v)] = table
        object.__setattr__(self, "ref_weights", sigma)
        object.__setattr__(self, "h_values", h)
        object.__setattr__(self, "potentials", pots)

    @property
    def q(self) -> int:
        return len(self.alphabet)

    def symbol_index(self, s) -> int:
        if isinstance(s, (int, np.integer)) and not isinstance(s, bool):
            if 0 <= s < self.q:
                return int(s)
        elif str(s) in self.alphabet:
            return self.alphabet.index(str(s))
        raise ModelError(f"unknown spin symbol {s!r}")

    def potential(self, u: str, v: str) -> np.ndarray:
        """Table oriented as W_uv(xi_u, xi_v)."""
        if u < v:
            t = self.potentials.get((u, v))
            return np.zeros((self.q, self.q)) if t is None else t
        t = self.potentials.get((v, u))
        return np.zeros((self.q, self.q)) if t is None else t.T

    def validate(self, g: Graph) -> None:
        edges = set(g.edges())
        for e in self.potentials:
            if e not in edges:
                raise ModelError(f"potential given for {e}, which is not an edge of the graph")

    @classmethod
    def ising(cls, g: Graph, beta: float, h_values=(1.0, 1.0)) -> "FiniteSpinModel":
        """Symbols ("-1", "+1"), uniform reference weights, W(a, b) = beta * a * b."""
        s = np.array([-1.0, 1.0])
        table = beta * np.outer(s, s)
        return cls(("-1", "+1"), np.array([0.5, 0.5]), {e: table for e in g.edges()},
                   np.asarray(h_values, dtype=float))


def conditional_table(model: FiniteSpinModel, g: Graph, site: str) -> np.ndarray:
    """All conditionals at ``site``: array of shape (q,)*deg + (q,).

    Leading axes index the neighbor symbols in ``g.neighbors(site)`` order.
    """
    nbrs = g.neighbors(site)
    d, q = len(nbrs), model.q
    logw = np.broadcast_to(np.log(model.ref_weights), (q,) * d + (q,)).copy()
    for j, u in enumerate(nbrs):
        w = model.potential(site, u).T  # [x_u, xi]
        shape = [1] * (d + 1)
        shape[j] = q
        shape[d] = q
        logw = logw + w.reshape(shape)
    logw -= logw.max(axis=-1, keepdims=True)
    p = np.exp(logw)
    return p / p.sum(axis=-1, keepdims=True)


def conditional(model: FiniteSpinModel, g: Graph, site: str, boundary: Mapping) -> np.ndarray:
    """pi_site given the neighbor symbols in ``boundary`` (extra keys are ignored)."""
    idx = []
    for u in g.neighbors(site):
        if u not in boundary:
            raise ModelError(f"boundary assigns no symbol to neighbor {u!r} of {site!r}")
        idx.append(model.symbol_index(boundary[u]))
    return conditional_table(model, g, site)[tuple(idx)]


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ModelError("distributions live on different alphabets")
    return 0.5 * float(np.abs(p - q).sum())


def admissible_symbols(model: FiniteSpinModel, K: float) -> np.ndarray:
    return np.flatnonzero(model.h_values <= K)


class KappaEstimate(NamedTuple):
    value: float
    vacuous: bool


def estimate_kappa_entry(model: FiniteSpinModel, g: Graph, site: str, nbr: str, K: float) -> KappaEstimate:
    """Largest TV change of pi_site when only ``nbr`` flips, with all neighbors in {h <= K}."""
    nbrs = g.neighbors(site)
    if nbr not in nbrs:
        raise ModelError(f"{nbr!r} is not a neighbor of {site!r}")
    S = admissible_symbols(model, K)
    if S.size == 0:
        return KappaEstimate(0.0, True)
    T = conditional_table(model, g, site)
    T = T[np.ix_(*([S] * len(nbrs)), np.arange(model.q))]
    T = np.moveaxis(T, nbrs.index(nbr), 0)
    diff = 0.5 * np.abs(T[:, None] - T[None, :]).sum(axis=-1)
    return KappaEstimate(float(diff.max()), False)


def estimate_kappa(model: FiniteSpinModel, g: Graph, K: float) -> dict[tuple[str, str], float]:
    """Exact per-directed-edge estimates; usable directly as ``ContractionParams.kappa``."""
    return {(v, u): estimate_kappa_entry(model, g, v, u, K).value for v, u in g.directed_edges()}


def local_h_moments(model: FiniteSpinModel, g: Graph) -> dict[str, float]:
    """Per-site max over boundaries of pi_site(h)."""
    return {v: float((conditional_table(model, g, v) @ model.h_values).max()) for v in g.vertices}


@dataclass
class SiteMembership:
    site: str
    kappa_slack: float
    kappa_worst: Optional[tuple[dict, dict]]
    multi_site: bool
    h_slack: float
    h_worst: dict
    vacuous: bool = False


@dataclass
class MembershipReport:
    K: float
    tol: float
    sites: list[SiteMembership] = field(default_factory=list)

    @property
    def kappa_ok(self) -> bool:
        return all(s.kappa_slack >= -self.tol for s in self.sites)

    @property
    def h_ok(self) -> bool:
        return all(s.h_slack >= -self.tol for s in self.sites)

    @property
    def passed(self) -> bool:
        return self.kappa_ok and self.h_ok

    def failures(self) -> list[str]:
        out = []
        for s in self.sites:
            if s.kappa_slack < -self.tol:
                out.append(f"site {s.site}: kappa bound violated (slack {s.kappa_slack:.6g})")
            if s.h_slack < -self.tol:
                out.append(f"site {s.site}: moment bound violated (slack {s.h_slack:.6g})")
        return out


MULTI_SITE_MAX_DEGREE = 3


def verify_membership(model: FiniteSpinModel, g: Graph, K: float, params: ContractionParams,
                      tol: float = 1e-12) -> MembershipReport:
    """Check the kappa bound on X_l(h, K) and the moment bound at every site.

    Sites of degree <= 3 are checked against every admissible pair of boundaries;
    higher degrees only against pairs differing at a single neighbor.
    """
    report = MembershipReport(float(K), tol)
    S = admissible_symbols(model, K)
    h = model.h_values
    sym = model.alphabet
    for v in g.vertices:
        nbrs = g.neighbors(v)
        d = len(nbrs)
        T = conditional_table(model, g, v)
        kap = np.array([params.kappa[(v, u)] for u in nbrs])
        cc = np.array([params.c[(v, u)] for u in nbrs])

        # moment bound over every boundary
        flat = T.reshape(-1, model.q)
        configs = np.array(list(itertools.product(range(model.q), repeat=d)))
        lhs = flat @ h
        rhs = 1.0 + (cc[None, :] * h[configs]).sum(axis=1)
        k = int(np.argmin(rhs - lhs))
        h_slack = float(rhs[k] - lhs[k])
        h_worst = {u: sym[configs[k, j]] for j, u in enumerate(nbrs)}

        multi = d <= MULTI_SITE_MAX_DEGREE
        if S.size == 0:
            report.sites.append(SiteMembership(v, 0.0, None, multi, h_slack, h_worst, vacuous=True))
            continue
        adm = np.array(list(itertools.product(S, repeat=d)))
        P = T[tuple(adm.T)]
        if multi:
            ia, ib = np.meshgrid(np.arange(len(adm)), np.arange(len(adm)), indexing="ij")
            ia, ib = ia.ravel(), ib.ravel()
        else:
            pairs = [(a, b) for a in range(len(adm)) for b in range(len(adm))
                     if (adm[a] != adm[b]).sum() <= 1]
            ia, ib = (np.array(t) for t in zip(*pairs))
        tv = 0.5 * np.abs(P[ia] - P[ib]).sum(axis=1)
        bound = ((adm[ia] != adm[ib]) * kap[None, :]).sum(axis=1)
        k = int(np.argmin(bound - tv))
        kappa_slack = float(bound[k] - tv[k])
        worst = ({u: sym[adm[ia[k], j]] for j, u in enumerate(nbrs)},
                 {u: sym[adm[ib[k], j]] for j, u in enumerate(nbrs)})
        report.sites.append(SiteMembership(v, kappa_slack, worst, multi, h_slack, h_worst))
    return report
