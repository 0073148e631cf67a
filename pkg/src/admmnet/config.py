"""Experiment configuration: INI-style files with [graph], [objective],
[admm] and optional [checks] sections.

Example::

    [graph]
    kind = complete
    n = 3

    [objective]
    preset = estimation

    [admm]
    c = 1.0
    T = 200
    engine = node
    init = zero

Explicit objectives replace the preset line with ``kind`` plus per-node
values: ``a`` (one entry per node, rows separated by ';' when the
dimension exceeds 1), ``w`` (scalar or per-node) and ``tau`` for the
l1-regularized kind. ``c = auto`` selects the certificate-optimal penalty,
which requires curvature metadata on every node.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigParseError
from .graph import Graph, generate_graph, laplacian, read_graph_file
from .objectives import (
    L1Quadratic,
    NetworkProblem,
    Quadratic,
    estimation_objectives,
)


@dataclass(frozen=True)
class GraphSpec:
    kind: str = "complete"
    n: int = 3
    d: int | None = None
    p: float | None = None
    seed: int | None = None
    path: str | None = None


@dataclass(frozen=True)
class ObjectiveSpec:
    preset: str | None = "estimation"
    kind: str = "quadratic"
    targets: tuple | None = None  # set when explicit
    weights: tuple | None = None
    tau: float = 0.0
    dimension: int = 1


@dataclass(frozen=True)
class AdmmSpec:
    c: float | str = 1.0  # float or "auto"
    T: int = 200
    engine: str = "node"
    init: str = "zero"


@dataclass(frozen=True)
class ChecksSpec:
    sublinear: bool = True
    contraction: bool = True
    recurrence: bool = True
    psd: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphSpec = field(default_factory=GraphSpec)
    objective: ObjectiveSpec = field(default_factory=ObjectiveSpec)
    admm: AdmmSpec = field(default_factory=AdmmSpec)
    checks: ChecksSpec = field(default_factory=ChecksSpec)


def _floats(text: str) -> list[float]:
    parts = text.replace(",", " ").split()
    return [float(p) for p in parts]


def parse_experiment_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigParseError(f"cannot read config: {exc}") from exc
    except configparser.Error as exc:
        lineno = getattr(exc, "lineno", None)
        raise ConfigParseError(str(exc), lineno=lineno) from exc
    try:
        return _build_config(parser)
    except (ValueError, KeyError) as exc:
        raise ConfigParseError(f"invalid config value: {exc}") from exc


def _build_config(parser: configparser.ConfigParser) -> ExperimentConfig:
    gsec = parser["graph"] if parser.has_section("graph") else {}
    graph = GraphSpec(
        kind=gsec.get("kind", "complete"),
        n=int(gsec.get("n", 3)),
        d=int(gsec["d"]) if "d" in gsec else None,
        p=float(gsec["p"]) if "p" in gsec else None,
        seed=int(gsec["seed"]) if "seed" in gsec else None,
        path=gsec.get("path"),
    )

    osec = parser["objective"] if parser.has_section("objective") else {}
    dimension = int(osec.get("dimension", 1))
    preset = osec.get("preset")
    targets = weights = None
    tau = float(osec.get("tau", 0.0))
    kind = osec.get("kind", "quadratic")
    if preset is None and "a" in osec:
        rows = [r for r in osec["a"].split(";") if r.strip()]
        targets = tuple(tuple(_floats(r)) for r in rows)
        if dimension == 1 and len(rows) == 1:
            targets = tuple((v,) for v in _floats(osec["a"]))
        weights_raw = _floats(osec.get("w", "1"))
        weights = tuple(weights_raw)
    elif preset is None:
        preset = "estimation"
    objective = ObjectiveSpec(
        preset=preset, kind=kind, targets=targets, weights=weights, tau=tau, dimension=dimension
    )

    asec = parser["admm"] if parser.has_section("admm") else {}
    c_raw = asec.get("c", "1.0")
    c: float | str = "auto" if c_raw.strip().lower() == "auto" else float(c_raw)
    admm = AdmmSpec(
        c=c,
        T=int(asec.get("T", 200)),
        engine=asec.get("engine", "node"),
        init=asec.get("init", "zero"),
    )
    if admm.engine not in ("node", "edge"):
        raise ConfigParseError(f"engine must be node or edge, got {admm.engine!r}")
    if admm.init != "zero":
        raise ConfigParseError(f"config files support zero init only, got {admm.init!r}")
    if admm.T < 1:
        raise ConfigParseError(f"T must be >= 1, got {admm.T}")

    csec = parser["checks"] if parser.has_section("checks") else {}

    def _flag(key: str) -> bool:
        return str(csec.get(key, "true")).strip().lower() in ("1", "true", "yes", "on")

    checks = ChecksSpec(
        sublinear=_flag("sublinear"),
        contraction=_flag("contraction"),
        recurrence=_flag("recurrence"),
        psd=_flag("psd"),
    )
    return ExperimentConfig(graph=graph, objective=objective, admm=admm, checks=checks)


def build_graph_from_spec(spec: GraphSpec) -> Graph:
    if spec.kind == "file":
        if not spec.path:
            raise ConfigParseError("graph kind 'file' requires a path")
        return read_graph_file(spec.path)
    return generate_graph(spec.kind, spec.n, d=spec.d, p=spec.p, seed=spec.seed)


def build_problem(cfg: ExperimentConfig, graph: Graph | None = None) -> NetworkProblem:
    g = graph if graph is not None else build_graph_from_spec(cfg.graph)
    spec = cfg.objective
    if spec.preset == "estimation":
        objectives = estimation_objectives(g.n, spec.dimension)
    elif spec.preset is not None:
        raise ConfigParseError(f"unknown objective preset {spec.preset!r}")
    else:
        if spec.targets is None or len(spec.targets) != g.n:
            raise ConfigParseError(f"need one target per node ({g.n}), got {spec.targets}")
        weights = spec.weights or (1.0,) * g.n
        if len(weights) == 1:
            weights = weights * g.n
        if len(weights) != g.n:
            raise ConfigParseError(f"need one weight per node ({g.n}), got {len(weights)}")
        objectives = []
        for a, w in zip(spec.targets, weights):
            target = np.asarray(a, dtype=float)
            if target.shape != (spec.dimension,):
                raise ConfigParseError(
                    f"target {a} does not match dimension {spec.dimension}"
                )
            if spec.kind == "quadratic":
                objectives.append(Quadratic(target=target, weight=w))
            elif spec.kind == "l1_quadratic":
                objectives.append(L1Quadratic(target=target, weight=w, tau=spec.tau))
            else:
                raise ConfigParseError(f"unknown objective kind {spec.kind!r}")
        objectives = tuple(objectives)
    return NetworkProblem(graph=g, comm=laplacian(g), objectives=tuple(objectives))
