"""TOML model specs: graph, spin model, criterion data and numerics.

See ``docs/model_file.md`` for the schema.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .criterion import ContractionParams
from .gibbs import DEFAULT_CAP
from .graph import Graph, GraphError, build_graph
from .spin_model import FiniteSpinModel, ModelError, estimate_kappa


class ConfigError(ValueError):
    """Malformed spec; the message starts with the offending key path."""


@dataclass(frozen=True)
class Numerics:
    exact_tol: float = 1e-12
    slack_tol: float = 1e-10
    cap: int = DEFAULT_CAP


@dataclass
class ModelSpec:
    graph: Graph
    model: FiniteSpinModel
    K: float
    kappa: Any  # "auto", a scalar, or {(site, nbr): value}
    c: Any
    chi: Optional[int] = None
    mu_h: Optional[float] = None
    observable_values: Optional[np.ndarray] = None
    numerics: Numerics = field(default_factory=Numerics)

    def params(self, K: Optional[float] = None) -> ContractionParams:
        K = self.K if K is None else K
        kappa = estimate_kappa(self.model, self.graph, K) if self.kappa == "auto" else self.kappa
        return ContractionParams.from_graph(self.graph, kappa, self.c, self.chi)


def _get(table: dict, key: str, where: str, kind=None, default=...):
    if key not in table:
        if default is ...:
            raise ConfigError(f"{where}.{key}: missing")
        return default
    value = table[key]
    if kind is not None and not isinstance(value, kind):
        raise ConfigError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
    return value


def _number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _vector(value, n: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != n:
        raise ConfigError(f"{where}: expected a list of {n} numbers")
    return np.array([_number(v, f"{where}[{i}]") for i, v in enumerate(value)])


def _table(value, n: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != n:
        raise ConfigError(f"{where}: expected {n} rows")
    return np.array([_vector(row, n, f"{where}[{i}]") for i, row in enumerate(value)])


def _edge_values(section: dict, key: str, g: Graph, where: str):
    """Scalar, "auto" (kappa only) or a table with ``default`` and ``entries``."""
    value = _get(section, key, where)
    if isinstance(value, str):
        if key == "kappa" and value == "auto":
            return "auto"
        raise ConfigError(f"{where}.{key}: unknown keyword {value!r}")
    if isinstance(value, dict):
        default = value.get("default")
        out = {}
        for e in g.directed_edges():
            if default is not None:
                out[e] = _number(default, f"{where}.{key}.default")
        for i, ent in enumerate(_get(value, "entries", f"{where}.{key}", list, [])):
            loc = f"{where}.{key}.entries[{i}]"
            site = str(_get(ent, "site", loc))
            nbr = str(_get(ent, "neighbor", loc))
            if (site, nbr) not in set(g.directed_edges()):
                raise ConfigError(f"{loc}: ({site}, {nbr}) is not an edge")
            out[(site, nbr)] = _number(_get(ent, "value", loc), f"{loc}.value")
        missing = [e for e in g.directed_edges() if e not in out]
        if missing:
            raise ConfigError(f"{where}.{key}: no value for directed edge {missing[0]}")
        return out
    return _number(value, f"{where}.{key}")


def parse_spec(data: dict) -> ModelSpec:
    try:
        return _parse(data)
    except (GraphError, ModelError) as exc:
        raise ConfigError(str(exc)) from exc


def _parse(data: dict) -> ModelSpec:
    gsec = _get(data, "graph", "spec", dict)
    edges = _get(gsec, "edges", "graph", list)
    for i, e in enumerate(edges):
        if not isinstance(e, list) or len(e) != 2:
            raise ConfigError(f"graph.edges[{i}]: expected a pair of vertex ids")
    try:
        g = build_graph(edges)
    except GraphError as exc:
        raise ConfigError(f"graph.edges: {exc}") from exc

    msec = _get(data, "model", "spec", dict)
    alphabet = tuple(str(s) for s in _get(msec, "alphabet", "model", list))
    q = len(alphabet)
    if q == 0:
        raise ConfigError("model.alphabet: empty")
    if "ref_weights" in msec:
        sigma = _vector(msec["ref_weights"], q, "model.ref_weights")
    else:
        sigma = np.full(q, 1.0 / q)
    h = _vector(_get(msec, "h", "model"), q, "model.h")

    default = None
    if "ising_beta" in msec and "potential" in msec:
        raise ConfigError("model: give either ising_beta or potential, not both")
    if "ising_beta" in msec:
        beta = _number(msec["ising_beta"], "model.ising_beta")
        try:
            vals = np.array([float(s) for s in alphabet])
        except ValueError:
            raise ConfigError("model.ising_beta: alphabet symbols must be numeric") from None
        default = beta * np.outer(vals, vals)
    elif "potential" in msec:
        default = _table(msec["potential"], q, "model.potential")
    pots = {}
    if default is not None:
        pots = {e: default for e in g.edges()}
    edge_set = set(g.edges())
    for i, ent in enumerate(_get(msec, "edge_potentials", "model", list, [])):
        loc = f"model.edge_potentials[{i}]"
        e = _get(ent, "edge", loc, list)
        if len(e) != 2:
            raise ConfigError(f"{loc}.edge: expected a pair")
        u, v = str(e[0]), str(e[1])
        table = _table(_get(ent, "table", loc), q, f"{loc}.table")
        if u > v:
            u, v, table = v, u, table.T
        if (u, v) not in edge_set:
            raise ConfigError(f"{loc}.edge: ({u}, {v}) is not an edge of the graph")
        pots[(u, v)] = table
    model = FiniteSpinModel(alphabet, sigma, pots, h)

    csec = _get(data, "criterion", "spec", dict)
    K = _number(_get(csec, "K", "criterion"), "criterion.K")
    if K <= 0:
        raise ConfigError("criterion.K: must be positive")
    kappa = _edge_values(csec, "kappa", g, "criterion")
    c = _edge_values(csec, "c", g, "criterion")
    chi = _get(csec, "chi", "criterion", int, None)
    mu_h = csec.get("mu_h")
    mu_h = None if mu_h is None else _number(mu_h, "criterion.mu_h")

    obs = None
    osec = data.get("observables")
    if osec is not None:
        obs = _vector(_get(osec, "values", "observables"), q, "observables.values")

    nsec = data.get("numerics", {})
    numerics = Numerics(
        exact_tol=_number(nsec.get("exact_tol", 1e-12), "numerics.exact_tol"),
        slack_tol=_number(nsec.get("slack_tol", 1e-10), "numerics.slack_tol"),
        cap=int(_number(nsec.get("cap", DEFAULT_CAP), "numerics.cap")),
    )
    return ModelSpec(g, model, K, kappa, c, chi, mu_h, obs, numerics)


def load_spec(path) -> ModelSpec:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return parse_spec(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
