"""Local convex objectives with value, (sub)gradient and proximal maps.

Three kinds are supported:

* :class:`Quadratic`          (w/2) |x - a|^2
* :class:`L1Quadratic`        (w/2) |x - a|^2 + tau |x|_1
* :class:`CustomSmooth`       user callables with declared curvature

plus :class:`NetworkProblem` (graph + communication matrix + one objective
per node) and a centralized oracle solver that produces the consensus
optimum used as ground truth by every certificate check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    DimensionMismatchError,
    InnerSolverNoConvergenceError,
    MissingCurvatureMetadataError,
    OracleNoConvergenceError,
)
from .graph import CommunicationMatrix, Graph, laplacian

PROX_RTOL = 1e-10  # optimality residual <= PROX_RTOL * rho * (1 + |v|)
ORACLE_TOL = 1e-12
ORACLE_MAX_ITERS = 500_000


def soft_threshold(v: np.ndarray, t: float) -> np.ndarray:
    """Elementwise sign(v) * max(|v| - t, 0)."""
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


class LocalObjective:
    """Interface shared by all objective kinds."""

    dimension: int

    def _vec(self, x) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dimension,):
            raise DimensionMismatchError(f"expected shape ({self.dimension},), got {x.shape}")
        return x

    def value(self, x) -> float:
        raise NotImplementedError

    def gradient(self, x) -> np.ndarray:
        """Gradient, or a valid subgradient for nonsmooth kinds."""
        raise NotImplementedError

    def prox(self, v, rho: float) -> np.ndarray:
        """argmin_x f(x) + (rho/2) |x - v|^2 for rho > 0."""
        raise NotImplementedError

    # curvature metadata; None when unknown / not applicable
    strong_convexity: float | None = None
    gradient_lipschitz: float | None = None

    # split used by the centralized oracle
    l1_weight: float = 0.0
    smooth_lipschitz: float = 0.0

    def smooth_gradient(self, x) -> np.ndarray:
        return self.gradient(x)


@dataclass(frozen=True)
class Quadratic(LocalObjective):
    """(weight/2) |x - target|^2."""

    target: np.ndarray = field(repr=False)
    weight: float = 1.0

    kind = "quadratic"

    def __post_init__(self):
        object.__setattr__(self, "target", np.atleast_1d(np.asarray(self.target, dtype=float)))
        if self.weight < 0:
            raise ValueError("weight must be nonnegative")

    @property
    def dimension(self) -> int:
        return self.target.shape[0]

    @property
    def strong_convexity(self) -> float | None:
        return self.weight if self.weight > 0 else None

    @property
    def gradient_lipschitz(self) -> float:
        return self.weight

    @property
    def smooth_lipschitz(self) -> float:
        return self.weight

    def value(self, x) -> float:
        x = self._vec(x)
        diff = x - self.target
        return 0.5 * self.weight * float(diff @ diff)

    def gradient(self, x) -> np.ndarray:
        return self.weight * (self._vec(x) - self.target)

    def prox(self, v, rho: float) -> np.ndarray:
        v = self._vec(v)
        if rho <= 0:
            raise ValueError("rho must be positive")
        return (self.weight * self.target + rho * v) / (self.weight + rho)


@dataclass(frozen=True)
class L1Quadratic(LocalObjective):
    """(weight/2) |x - target|^2 + tau |x|_1.

    The quadratic part is isotropic, so the prox is an exact soft threshold
    of the combined quadratic minimizer. ``gradient`` returns the
    subgradient with sign(0) = 0 on the l1 part.
    """

    target: np.ndarray = field(repr=False)
    weight: float = 1.0
    tau: float = 0.0

    kind = "l1_quadratic"

    def __post_init__(self):
        object.__setattr__(self, "target", np.atleast_1d(np.asarray(self.target, dtype=float)))
        if self.weight < 0 or self.tau < 0:
            raise ValueError("weight and tau must be nonnegative")

    @property
    def dimension(self) -> int:
        return self.target.shape[0]

    @property
    def strong_convexity(self) -> float | None:
        return self.weight if self.weight > 0 else None

    @property
    def gradient_lipschitz(self) -> float | None:
        # nonsmooth unless the l1 term vanishes
        return self.weight if self.tau == 0 else None

    @property
    def smooth_lipschitz(self) -> float:
        return self.weight

    @property
    def l1_weight(self) -> float:
        return self.tau

    def value(self, x) -> float:
        x = self._vec(x)
        diff = x - self.target
        return 0.5 * self.weight * float(diff @ diff) + self.tau * float(np.sum(np.abs(x)))

    def gradient(self, x) -> np.ndarray:
        x = self._vec(x)
        return self.weight * (x - self.target) + self.tau * np.sign(x)

    def smooth_gradient(self, x) -> np.ndarray:
        return self.weight * (self._vec(x) - self.target)

    def prox(self, v, rho: float) -> np.ndarray:
        v = self._vec(v)
        if rho <= 0:
            raise ValueError("rho must be positive")
        u = (self.weight * self.target + rho * v) / (self.weight + rho)
        return soft_threshold(u, self.tau / (self.weight + rho))


@dataclass(frozen=True)
class CustomSmooth(LocalObjective):
    """Smooth objective given by callables, with declared curvature.

    The prox has no closed form; it is solved by gradient iterations on the
    rho-strongly-convex subproblem with step 1/(L + rho).
    """

    value_fn: Callable[[np.ndarray], float] = field(repr=False)
    grad_fn: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    dim: int = 1
    nu: float | None = None
    lipschitz: float | None = None

    kind = "custom_smooth"

    @property
    def dimension(self) -> int:
        return self.dim

    @property
    def strong_convexity(self) -> float | None:
        return self.nu

    @property
    def gradient_lipschitz(self) -> float | None:
        return self.lipschitz

    @property
    def smooth_lipschitz(self) -> float:
        if self.lipschitz is None:
            raise MissingCurvatureMetadataError("custom objective needs a Lipschitz constant")
        return self.lipschitz

    def value(self, x) -> float:
        return float(self.value_fn(self._vec(x)))

    def gradient(self, x) -> np.ndarray:
        return np.asarray(self.grad_fn(self._vec(x)), dtype=float)

    def prox(self, v, rho: float) -> np.ndarray:
        v = self._vec(v)
        if rho <= 0:
            raise ValueError("rho must be positive")
        if self.lipschitz is None:
            raise MissingCurvatureMetadataError("custom objective needs a Lipschitz constant")
        step = 1.0 / (self.lipschitz + rho)
        target = PROX_RTOL * rho * (1.0 + float(np.linalg.norm(v)))
        x = v.copy()
        for _ in range(100_000):
            g = self.gradient(x) + rho * (x - v)
            if float(np.linalg.norm(g)) <= 0.5 * target:
                break
            x_new = x - step * g
            if float(np.linalg.norm(x_new - x)) <= 1e-13:
                x = x_new
                break
            x = x_new
        residual = float(np.linalg.norm(self.gradient(x) + rho * (x - v)))
        if residual > target:
            raise InnerSolverNoConvergenceError("prox inner solver stalled", residual)
        return x


@dataclass(frozen=True)
class NetworkProblem:
    """Graph + communication matrix + one local objective per node."""

    graph: Graph
    comm: CommunicationMatrix
    objectives: tuple[LocalObjective, ...]

    def __post_init__(self):
        object.__setattr__(self, "objectives", tuple(self.objectives))
        if len(self.objectives) != self.graph.n:
            raise DimensionMismatchError(
                f"{len(self.objectives)} objectives for {self.graph.n} nodes"
            )
        if self.comm.n != self.graph.n:
            raise DimensionMismatchError("communication matrix size does not match graph")
        dims = {o.dimension for o in self.objectives}
        if len(dims) != 1:
            raise DimensionMismatchError(f"mixed objective dimensions {sorted(dims)}")

    @property
    def n(self) -> int:
        return self.graph.n

    @property
    def dimension(self) -> int:
        return self.objectives[0].dimension

    def f_value(self, X: np.ndarray) -> float:
        """Sum of local objective values over the rows of an (n, d) iterate."""
        return float(sum(f.value(X[i]) for i, f in enumerate(self.objectives)))

    def is_smooth(self) -> bool:
        return all(o.gradient_lipschitz is not None for o in self.objectives)


def estimation_objectives(n: int, dimension: int = 1) -> tuple[Quadratic, ...]:
    """Scalar-estimation preset: node i holds (1/2)|x - (i+1)|^2."""
    return tuple(Quadratic(target=np.full(dimension, float(i + 1)), weight=1.0) for i in range(n))


def estimation_problem(g: Graph, dimension: int = 1) -> NetworkProblem:
    return NetworkProblem(graph=g, comm=laplacian(g), objectives=estimation_objectives(g.n, dimension))


@dataclass(frozen=True)
class AggregateInfo:
    """Aggregate curvature and the subgradient bound at the optimum."""

    strong_convexity: float | None
    lipschitz: float | None
    condition_number: float | None
    subgrad_bound: float | None


@dataclass(frozen=True)
class OptimalPoint:
    """Consensus optimum from the centralized oracle.

    ``x_star`` is (n, d) with identical rows; ``subgrad`` stacks one valid
    subgradient per node whose node-sum is the oracle residual.
    """

    x_star: np.ndarray = field(repr=False)
    f_star: float = 0.0
    subgrad: np.ndarray = field(repr=False, default=None)
    residual: float = 0.0


def require_curvature(problem: NetworkProblem) -> tuple[float, float]:
    """Aggregate (strong convexity, Lipschitz) or raise MissingCurvatureMetadataError."""
    nus = [o.strong_convexity for o in problem.objectives]
    lips = [o.gradient_lipschitz for o in problem.objectives]
    if any(v is None for v in nus) or any(v is None for v in lips):
        raise MissingCurvatureMetadataError(
            "every local objective must declare strong convexity and a Lipschitz gradient"
        )
    return min(nus), max(lips)


def aggregate(problem: NetworkProblem, optimal: OptimalPoint | None = None) -> AggregateInfo:
    nus = [o.strong_convexity for o in problem.objectives]
    lips = [o.gradient_lipschitz for o in problem.objectives]
    nu = None if any(v is None for v in nus) else float(min(nus))
    lip = None if any(v is None for v in lips) else float(max(lips))
    kappa = None if (nu is None or lip is None or nu <= 0) else lip / nu
    bound = None if optimal is None else float(np.linalg.norm(optimal.subgrad))
    return AggregateInfo(strong_convexity=nu, lipschitz=lip, condition_number=kappa, subgrad_bound=bound)


def central_solve(problem: NetworkProblem) -> OptimalPoint:
    """Solve min_x sum_i f_i(x) on R^d and stack the result.

    Pure quadratics use the exact weighted-mean closed form; any mix with
    l1 terms or custom smooth objectives runs proximal-gradient iterations
    with step 1/(sum of smooth Lipschitz constants) down to a residual of
    1e-12. The per-node subgradients recorded in the result share a single
    l1 sign vector, so their node-sum equals the reported residual.
    """
    objs = problem.objectives
    d = problem.dimension

    if all(isinstance(o, Quadratic) for o in objs):
        wsum = sum(o.weight for o in objs)
        if wsum > 0:
            xbar = sum(o.weight * o.target for o in objs) / wsum
        else:
            xbar = np.zeros(d)
        subgrad = np.stack([o.weight * (xbar - o.target) for o in objs])
        residual = float(np.linalg.norm(subgrad.sum(axis=0)))
        return _stacked(problem, xbar, subgrad, residual)

    lip_total = sum(o.smooth_lipschitz for o in objs)
    tau_total = sum(o.l1_weight for o in objs)
    if lip_total == 0.0:
        # no smooth curvature at all: the l1 sum is minimized at 0
        xbar = np.zeros(d)
        xi = np.zeros(d)
        subgrad = np.stack([o.smooth_gradient(xbar) + o.l1_weight * xi for o in objs])
        return _stacked(problem, xbar, subgrad, float(np.linalg.norm(subgrad.sum(axis=0))))

    eta = 1.0 / lip_total
    x = np.zeros(d)
    xi = np.zeros(d)
    residual = np.inf
    for _ in range(ORACLE_MAX_ITERS):
        gs = sum(o.smooth_gradient(x) for o in objs)
        u = x - eta * gs
        x_new = soft_threshold(u, eta * tau_total) if tau_total > 0 else u
        if tau_total > 0:
            xi = (u - x_new) / (eta * tau_total)
        gs_new = sum(o.smooth_gradient(x_new) for o in objs)
        residual = float(np.linalg.norm(gs_new + tau_total * xi))
        x = x_new
        if residual <= ORACLE_TOL:
            break
    else:
        raise OracleNoConvergenceError(f"oracle residual {residual:.3e} after {ORACLE_MAX_ITERS} iterations")

    subgrad = np.stack([o.smooth_gradient(x) + o.l1_weight * xi for o in objs])
    return _stacked(problem, x, subgrad, residual)


def _stacked(problem: NetworkProblem, xbar: np.ndarray, subgrad: np.ndarray, residual: float) -> OptimalPoint:
    x_star = np.tile(xbar, (problem.n, 1))
    return OptimalPoint(
        x_star=x_star,
        f_star=problem.f_value(x_star),
        subgrad=subgrad,
        residual=residual,
    )
