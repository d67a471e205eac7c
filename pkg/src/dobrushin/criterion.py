"""Closed-form evaluation of the uniqueness criterion.

Given the row-sum norms of the interaction matrices (kappa_bar, c_bar), the
maximum degree and the number of color classes, this module evaluates the
threshold K*, the 2x2 contraction matrix M(K), its spectral radius r_K and the
correlation-decay constants, and bundles them into a certificate.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .graph import Graph, greedy_color, max_degree


class CriterionError(ValueError):
    """Inputs outside the domain where the closed forms are defined."""


class InadmissibleError(CriterionError):
    """kappa_bar >= 1, or c_bar outside (0, 1/Delta^chi)."""


class NoCertificateError(CriterionError):
    """Raised when r_K >= 1, so no decay constants exist."""


class Verdict(str, enum.Enum):
    UNIQUE = "Unique"
    INDETERMINATE = "Indeterminate"
    INADMISSIBLE = "Inadmissible"


Edge = tuple[str, str]


@dataclass(frozen=True)
class ContractionParams:
    """Interaction matrices on directed edges plus the graph constants.

    ``kappa[(l, l2)]`` bounds the influence of neighbor ``l2`` on site ``l``;
    ``c[(l, l2)]`` is the moment-control coefficient for the same pair.
    """

    kappa: Mapping[Edge, float]
    c: Mapping[Edge, float]
    delta: int
    chi: int

    @classmethod
    def from_graph(cls, g: Graph, kappa, c, chi: Optional[int] = None) -> "ContractionParams":
        """Build params for ``g``; scalars are spread uniformly over directed edges.

        ``chi`` defaults to the class count of :func:`greedy_color`, which is
        also the partition the sweeps use; a smaller override is rejected.
        """
        edges = g.directed_edges()
        kap = _spread(kappa, edges, "kappa")
        cc = _spread(c, edges, "c")
        greedy = greedy_color(g).class_count
        if chi is None:
            chi = greedy
        elif chi < greedy:
            raise CriterionError(f"chi = {chi} is below the {greedy} classes of the sweep coloring")
        return cls(kap, cc, max_degree(g), int(chi))


def _spread(value, edges, name) -> dict[Edge, float]:
    if isinstance(value, Mapping):
        missing = [e for e in edges if e not in value]
        if missing:
            raise CriterionError(f"{name} has no entry for directed edge {missing[0]}")
        out = {e: float(value[e]) for e in edges}
    else:
        out = {e: float(value) for e in edges}
    bad = [e for e, v in out.items() if not v >= 0.0]
    if bad:
        raise CriterionError(f"{name}{bad[0]} is negative")
    return out


@dataclass(frozen=True)
class Norms:
    kappa_bar: float
    c_bar: float
    kappa_ok: bool
    c_ok: bool

    @property
    def admissible(self) -> bool:
        return self.kappa_ok and self.c_ok

    def reasons(self) -> list[str]:
        out = []
        if not self.kappa_ok:
            out.append("inadmissible-kappa")
        if not self.c_ok:
            out.append("inadmissible-c")
        return out


def norms(params: ContractionParams, g: Graph) -> Norms:
    """Row-sum suprema of kappa and c over the sites of ``g``, with admissibility flags."""
    kbar = max(sum(params.kappa[(v, u)] for u in g.neighbors(v)) for v in g.vertices)
    cbar = max(sum(params.c[(v, u)] for u in g.neighbors(v)) for v in g.vertices)
    kappa_ok = kbar < 1.0
    c_ok = 0.0 < cbar < params.delta ** (-params.chi)
    return Norms(kbar, cbar, kappa_ok, c_ok)


def check_admissible(n: Norms) -> None:
    if not n.admissible:
        raise InadmissibleError(", ".join(n.reasons()))


def a_constant(kappa_bar: float, delta: int, chi: int) -> float:
    return 2.0 * delta ** (chi + 1) / (1.0 - kappa_bar)


def k_star_branches(kappa_bar: float, c_bar: float, delta: int, chi: int) -> tuple[float, float]:
    if delta < 2:
        raise CriterionError(f"maximum degree must be at least 2, got {delta}")
    if c_bar <= 0.0:
        raise CriterionError("c_bar must be positive")
    if kappa_bar >= 1.0:
        raise CriterionError("kappa_bar must be below 1")
    cd = c_bar * delta**chi
    if cd >= 1.0:
        raise CriterionError("c_bar * Delta^chi must be below 1")
    first = 4.0 * delta ** (chi + 1) / (c_bar * (1.0 - kappa_bar))
    second = (2.0 * delta ** (chi + 1) * (2.0 * delta ** (chi - 1) + 1.0 - cd)
              / ((1.0 - kappa_bar) ** 2 * (1.0 - cd)))
    return first, second


def k_star(kappa_bar: float, c_bar: float, delta: int, chi: int) -> float:
    """Threshold above which K certifies uniqueness."""
    return max(k_star_branches(kappa_bar, c_bar, delta, chi))


def contraction_matrix(kappa_bar, c_bar, delta, chi, A, K) -> np.ndarray:
    """M(K) bounding one full chromatic sweep: (gamma, lambda) <= M(K) (gamma0, lambda0)."""
    if K <= 0:
        raise CriterionError("K must be positive")
    aK = A / K
    return np.array([[kappa_bar + aK, 2.0 * aK],
                     [float(delta) ** (chi - 1), c_bar * float(delta) ** chi]])


def spectral_radius(M) -> float:
    """Largest eigenvalue of a nonnegative 2x2 matrix, in closed form."""
    M = np.asarray(M, dtype=float)
    if M.shape != (2, 2) or (M < 0).any():
        raise CriterionError("expected a nonnegative 2x2 matrix")
    a, b = (float(x) for x in M[0])
    c, d = (float(x) for x in M[1])
    return 0.5 * (a + d + math.sqrt((a - d) ** 2 + 4.0 * b * c))


def radius_diagnostic(kappa_bar, c_bar, delta, chi, A, K) -> float:
    # Radical carries 8 Delta^chi A/K rather than the eigenvalue's 8 Delta^(chi-1) A/K.
    a = kappa_bar + A / K
    d = c_bar * delta**chi
    return 0.5 * (a + d + math.sqrt((a - d) ** 2 + 8.0 * delta**chi * A / K))


def decay_constants(r_K, kappa_bar, c_bar, delta, chi, A, K, mu_h) -> tuple[float, float, float]:
    """Return (xi, alpha_K, C_K) for a contracting r_K.

    ``mu_h`` is the sup over sites of the h-moment of the state.
    """
    if not r_K < 1.0:
        raise NoCertificateError(f"r_K = {r_K!r} is not below 1")
    if mu_h < 0:
        raise CriterionError("mu_h must be nonnegative")
    gap = r_K - c_bar * delta**chi
    if not gap > 0.0:
        raise CriterionError("degenerate xi: r_K <= c_bar * Delta^chi")
    xi = delta ** (chi - 1) / gap
    alpha = -math.log(r_K)
    C = 2.0 / r_K * max(1.0, mu_h / xi)
    return xi, alpha, C


def xi_second_form(r_K, kappa_bar, A, K) -> float:
    return (r_K - kappa_bar - A / K) / (2.0 * A / K)


def transform_matrix(xi: float) -> np.ndarray:
    return np.diag([xi, 1.0])


@dataclass(frozen=True)
class UniquenessCertificate:
    K: float
    K_star: Optional[float]
    A: Optional[float]
    M: Optional[np.ndarray]
    r_K: Optional[float]
    xi: Optional[float]
    alpha_K: Optional[float]
    C_K: Optional[float]
    verdict: Verdict
    kappa_bar: float
    c_bar: float
    delta: int
    chi: int
    mu_h: float
    r_K_diagnostic: Optional[float] = None
    reasons: tuple[str, ...] = field(default=())

    def as_dict(self) -> dict:
        m = None if self.M is None else [[float(x) for x in row] for row in self.M]
        return {
            "K": self.K, "K_star": self.K_star, "A": self.A, "M": m, "r_K": self.r_K,
            "xi": self.xi, "alpha_K": self.alpha_K, "C_K": self.C_K,
            "verdict": self.verdict.value,
            "inputs": {"kappa_bar": self.kappa_bar, "c_bar": self.c_bar,
                       "delta": self.delta, "chi": self.chi, "mu_h": self.mu_h},
            "r_K_diagnostic": self.r_K_diagnostic,
            "reasons": list(self.reasons),
        }


def certify(params: ContractionParams, g: Graph, K: float, mu_h: float = 1.0) -> UniquenessCertificate:
    """Evaluate the criterion for ``params`` on ``g`` at level ``K``.

    Unique iff the norms are admissible, K > K* and r_K < 1; Indeterminate if
    admissible with K <= K*; Inadmissible otherwise.
    """
    if params.delta < 2:
        raise CriterionError(
            f"maximum degree {params.delta} < 2: the criterion needs Delta >= 2 (single-edge graphs are excluded)")
    if K <= 0:
        raise CriterionError("K must be positive")
    n = norms(params, g)
    base = dict(K=float(K), kappa_bar=n.kappa_bar, c_bar=n.c_bar, delta=params.delta,
                chi=params.chi, mu_h=float(mu_h))
    if not n.admissible:
        return UniquenessCertificate(K_star=None, A=None, M=None, r_K=None, xi=None, alpha_K=None,
                                     C_K=None, verdict=Verdict.INADMISSIBLE,
                                     reasons=tuple(n.reasons()), **base)
    kb, cb, d, chi = n.kappa_bar, n.c_bar, params.delta, params.chi
    ks = k_star(kb, cb, d, chi)
    A = a_constant(kb, d, chi)
    M = contraction_matrix(kb, cb, d, chi, A, K)
    r = spectral_radius(M)
    xi = alpha = C = None
    if r < 1.0 and r > cb * d**chi:
        xi, alpha, C = decay_constants(r, kb, cb, d, chi, A, K, mu_h)
    if K > ks and r < 1.0:
        verdict, reasons = Verdict.UNIQUE, ()
    else:
        verdict = Verdict.INDETERMINATE
        reasons = ("K <= K_star",) if K <= ks else ("r_K >= 1",)
    return UniquenessCertificate(K_star=ks, A=A, M=M, r_K=r, xi=xi, alpha_K=alpha, C_K=C,
                                 verdict=verdict, r_K_diagnostic=radius_diagnostic(kb, cb, d, chi, A, K),
                                 reasons=reasons, **base)
