"""Brute-force Gibbs measures on small graphs.

Measures are dense arrays of shape (q,)*|L|, axis i being the spin at
``g.vertices[i]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import Graph
from .spin_model import FiniteSpinModel, conditional_table

DEFAULT_CAP = 2**22


class StateSpaceError(RuntimeError):
    """The dense state space exceeds the configured cap."""


def check_cap(q: int, n_axes: int, cap: int = DEFAULT_CAP) -> None:
    size = q**n_axes
    if size > cap:
        raise StateSpaceError(f"state space of {q}^{n_axes} = {size} entries exceeds cap {cap}")


@dataclass(frozen=True, eq=False)
class ExactMeasure:
    graph: Graph
    q: int
    weights: np.ndarray

    def marginal(self, site: str) -> np.ndarray:
        i = self.graph.index(site)
        axes = tuple(a for a in range(self.weights.ndim) if a != i)
        return self.weights.sum(axis=axes)

    def expect(self, obs: "Observable") -> float:
        return float(self.marginal(obs.site) @ obs.values)

    def total_mass(self) -> float:
        return math.fsum(self.weights.ravel())


@dataclass(frozen=True)
class Observable:
    """Bounded function of the spin at a single site."""

    site: str
    values: np.ndarray

    @property
    def sup_norm(self) -> float:
        return float(np.abs(self.values).max())


def broadcast_site_table(table: np.ndarray, axes: Sequence[int], ndim: int) -> np.ndarray:
    """Place the axes of ``table`` at positions ``axes`` of an ``ndim``-array (size-1 elsewhere)."""
    order = np.argsort(axes)
    t = np.transpose(table, order)
    shape = [1] * ndim
    for ax, n in zip(sorted(axes), t.shape):
        shape[ax] = n
    return t.reshape(shape)


def exact_gibbs(model: FiniteSpinModel, g: Graph, cap: int = DEFAULT_CAP) -> ExactMeasure:
    """Free-boundary Gibbs measure: sigma-product times exp(sum of edge potentials)."""
    n, q = len(g), model.q
    check_cap(q, n, cap)
    logw = np.zeros((q,) * n)
    logsig = np.log(model.ref_weights)
    for i in range(n):
        logw = logw + broadcast_site_table(logsig, [i], n)
    for u, v in g.edges():
        logw = logw + broadcast_site_table(model.potential(u, v), [g.index(u), g.index(v)], n)
    logw -= logw.max()
    w = np.exp(logw)
    return ExactMeasure(g, q, w / w.sum())


def product_measure(g: Graph, p: np.ndarray) -> ExactMeasure:
    """i.i.d. measure with single-site law ``p``."""
    n = len(g)
    w = np.ones((len(p),) * n)
    for i in range(n):
        w = w * broadcast_site_table(np.asarray(p, dtype=float), [i], n)
    return ExactMeasure(g, len(p), w)


def site_kernel(model: FiniteSpinModel, g: Graph, site: str, ndim: int, offset: int = 0) -> np.ndarray:
    """Conditional table at ``site`` broadcast over an ``ndim`` array whose vertex axes start at ``offset``."""
    axes = [offset + g.index(u) for u in g.neighbors(site)] + [offset + g.index(site)]
    return broadcast_site_table(conditional_table(model, g, site), axes, ndim)


def check_consistency(mu: ExactMeasure, model: FiniteSpinModel) -> float:
    """Largest |mu(x) - (resample site l from pi_l) mu (x)| over sites l and singletons x."""
    g = mu.graph
    n = len(g)
    worst = 0.0
    for v in g.vertices:
        i = g.index(v)
        resampled = mu.weights.sum(axis=i, keepdims=True) * site_kernel(model, g, v, n)
        worst = max(worst, float(np.abs(resampled - mu.weights).max()))
    return worst


def h_moment(mu: ExactMeasure, model: FiniteSpinModel) -> float:
    return max(float(mu.marginal(v) @ model.h_values) for v in mu.graph.vertices)


def covariance(mu: ExactMeasure, f: Observable, g_obs: Observable) -> float:
    g = mu.graph
    i, j = g.index(f.site), g.index(g_obs.site)
    if i == j:
        m = mu.marginal(f.site)
        fg = float(m @ (f.values * g_obs.values))
    else:
        axes = tuple(a for a in range(len(g)) if a not in (i, j))
        pair = mu.weights.sum(axis=axes)
        if i > j:
            pair = pair.T
        fg = float(f.values @ pair @ g_obs.values)
    return fg - mu.expect(f) * mu.expect(g_obs)


def conditional_measure(mu: ExactMeasure, region: Iterable[str], x: Mapping[str, int]) -> ExactMeasure:
    """mu conditioned on the spins outside ``region`` being those of ``x`` (symbol indices)."""
    g = mu.graph
    region = set(region)
    idx = []
    for v in g.vertices:
        if v in region:
            idx.append(slice(None))
        else:
            idx.append(int(x[v]))
    idx = tuple(idx)
    w = np.zeros_like(mu.weights)
    w[idx] = mu.weights[idx]
    total = w.sum()
    if total <= 0:
        raise ValueError("conditioning configuration has zero mass")
    return ExactMeasure(g, mu.q, w / total)


def outside_configurations(g: Graph, region: Iterable[str], q: int):
    """Iterate over assignments {vertex: index} of the vertices not in ``region``, ascending."""
    region = set(region)
    outside = [v for v in g.vertices if v not in region]
    for combo in itertools.product(range(q), repeat=len(outside)):
        yield dict(zip(outside, combo))
