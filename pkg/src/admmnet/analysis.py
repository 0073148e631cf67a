"""Convergence certificates and their numerical verification.

Certified quantities, writing lam_min for the smallest nonzero eigenvalue
of the weighted Gram matrix and lam_max for the largest eigenvalue of the
metric block:

* ergodic (sublinear) bounds for zero-initialized runs,
    |F(xhat(T)) - F*| <= (c/2T) |x*|^2 lam_max + (2/cT) U^2 / lam_min
    |Q xhat(T)|       <= (1/2T) |x*|^2 lam_max + (1/2T) (2 + 2U^2/(c^2 lam_min))
  where U bounds the subgradient stack at the optimum;
* a per-iteration contraction of the squared metric distance
    |q(t+1) - q*|_G^2 <= 1/(1 + gain) |q(t) - q*|_G^2
  with gain = min{ 2 beta nu / (c lam_max (1 + 2/lam_min)),
                   (1 - beta) c lam_min / L };
* the penalty maximizing that gain, with the closed forms
    best balance = c^2 lam_max (2 + lam_min) / (2 nu L + c^2 lam_max (2 + lam_min))
    best penalty = sqrt(2 nu L / (lam_max (2 + lam_min)))
    best gain    = (1/2) sqrt(2 lam_min^2 / (lam_max (2 + lam_min)) / kappa)
* degree/connectivity relaxations of the spectral quantities when the
  communication matrix is the graph Laplacian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundViolatedError,
    ContractionViolatedError,
    InvalidBetaError,
    InvalidCError,
    MissingCurvatureMetadataError,
    NotLaplacianError,
    OptimizationBracketFailureError,
)
from .admm import AdmmTrace
from .graph import CommunicationMatrix, Graph, laplacian
from .objectives import NetworkProblem, OptimalPoint
from .spectral import SpectralData, compute_spectral_data

BOUND_SLACK = 1e-9  # additive slack absorbing eigensolver and prox noise


# --- auxiliary sequences ---------------------------------------------------


@dataclass(frozen=True)
class AuxSequences:
    """Running sums of Q x and squared metric distances along a trace.

    ``dual_ref`` solves  Q dual_ref = -(1/c) subgrad(x*)  within the column
    span of Q; ``metric_dist_sq[t]`` is
    |r(t) - dual_ref|^2 + |x(t) - x*|^2 weighted by the metric block.
    """

    running_qx: np.ndarray = field(repr=False)  # (T+1, n, d)
    dual_ref: np.ndarray = field(repr=False)  # (n, d)
    metric_dist_sq: np.ndarray = field(repr=False)  # (T+1,)
    dual_ref_residual: float = 0.0
    span_residual: float = 0.0


def _pinv_sqrt_apply(spectral: SpectralData, B: np.ndarray) -> np.ndarray:
    """Apply the pseudoinverse of the Gram square root columnwise.

    Only eigenvalues above 1e-9 of the largest are inverted, which pins the
    result to the column span and annihilates the consensus direction.
    """
    vals = spectral.eig_gram.eigenvalues
    vecs = spectral.eig_gram.eigenvectors
    thresh = 1e-9 * float(vals[-1])
    inv = np.where(vals > thresh, 1.0 / np.sqrt(np.clip(vals, 1e-300, None)), 0.0)
    return vecs @ (inv[:, None] * (vecs.T @ B))


def _metric_dist_sq(spectral: SpectralData, r_diff: np.ndarray, x_diff: np.ndarray) -> float:
    """|r_diff|^2 + x_diff' (metric block) x_diff, stacked over columns."""
    quad = float(np.sum(x_diff * (spectral.metric_block @ x_diff)))
    return float(np.sum(r_diff * r_diff)) + quad


def aux_sequences(trace: AdmmTrace, spectral: SpectralData, optimal: OptimalPoint, c: float) -> AuxSequences:
    Q = spectral.gram_sqrt
    T = trace.T
    running = np.empty_like(trace.xs)
    running[0] = Q @ trace.xs[0]
    for t in range(1, T + 1):
        running[t] = running[t - 1] + Q @ trace.xs[t]

    dual_ref = -(1.0 / c) * _pinv_sqrt_apply(spectral, optimal.subgrad)
    dual_resid = float(np.linalg.norm(Q @ dual_ref + (1.0 / c) * optimal.subgrad))
    span = dual_ref - _project_span(spectral, dual_ref)
    span_resid = float(np.linalg.norm(span))

    dist = np.empty(T + 1)
    for t in range(T + 1):
        dist[t] = _metric_dist_sq(spectral, running[t] - dual_ref, trace.xs[t] - optimal.x_star)
    return AuxSequences(
        running_qx=running,
        dual_ref=dual_ref,
        metric_dist_sq=dist,
        dual_ref_residual=dual_resid,
        span_residual=span_resid,
    )


def _project_span(spectral: SpectralData, B: np.ndarray) -> np.ndarray:
    vals = spectral.eig_gram.eigenvalues
    vecs = spectral.eig_gram.eigenvectors
    thresh = 1e-9 * float(vals[-1])
    keep = (vals > thresh).astype(float)
    return vecs @ (keep[:, None] * (vecs.T @ B))


# --- linear rate certificates ----------------------------------------------


@dataclass(frozen=True)
class RateCertificate:
    penalty: float  # c in use
    balance: float  # weight splitting the two contraction terms
    gain: float  # per-iteration contraction increment
    rate: float  # 1 / (1 + gain)
    best_penalty: float
    best_balance: float
    best_gain: float
    best_rate: float
    condition_number: float
    min_pos_eig_gram: float
    max_eig_metric: float


def contraction_gain(nu: float, lipschitz: float, c: float, balance: float, spectral) -> float:
    """min of the two admissible contraction terms at penalty c and the given balance."""
    if not (0.0 < balance < 1.0):
        raise InvalidBetaError(f"balance must lie in (0,1), got {balance}")
    if c <= 0.0:
        raise InvalidCError(f"penalty must be positive, got {c}")
    if nu <= 0.0 or lipschitz < nu:
        raise MissingCurvatureMetadataError(f"need 0 < nu <= L, got nu={nu}, L={lipschitz}")
    lam_min = spectral.min_pos_eig_gram
    lam_max = spectral.max_eig_metric
    term1 = 2.0 * balance * nu / (c * lam_max * (1.0 + 2.0 / lam_min))
    term2 = (1.0 - balance) * c * lam_min / lipschitz
    return min(term1, term2)


def balance_star(nu: float, lipschitz: float, c: float, spectral) -> float:
    """The balance equating the two contraction terms at penalty c."""
    if c <= 0.0:
        raise InvalidCError(f"penalty must be positive, got {c}")
    lam_min = spectral.min_pos_eig_gram
    lam_max = spectral.max_eig_metric
    a = c * c * lam_max * (2.0 + lam_min)
    return a / (2.0 * nu * lipschitz + a)


def _gain_at(nu: float, lipschitz: float, c: float, spectral) -> float:
    """Contraction gain with the balance optimized at this penalty."""
    lam_min = spectral.min_pos_eig_gram
    lam_max = spectral.max_eig_metric
    return 2.0 * nu * lam_min * c / (2.0 * nu * lipschitz + c * c * lam_max * (2.0 + lam_min))


def optimize_rate(nu: float, lipschitz: float, spectral, c: float | None = None) -> RateCertificate:
    """Build the rate certificate, optimizing the penalty by golden section.

    The numeric optimizer runs on log(penalty) over the bracket
    [1e-6, 1e6] sqrt(nu L) to relative precision 1e-12 and is cross-checked
    against the closed forms; disagreement above 1e-6 relative raises.
    """
    if nu <= 0.0 or lipschitz < nu:
        raise MissingCurvatureMetadataError(f"need 0 < nu <= L, got nu={nu}, L={lipschitz}")
    lam_min = spectral.min_pos_eig_gram
    lam_max = spectral.max_eig_metric
    kappa = lipschitz / nu

    scale = math.sqrt(nu * lipschitz)
    lo, hi = math.log(1e-6 * scale), math.log(1e6 * scale)
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1 = _gain_at(nu, lipschitz, math.exp(x1), spectral)
    f2 = _gain_at(nu, lipschitz, math.exp(x2), spectral)
    while (b - a) > 1e-12:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = _gain_at(nu, lipschitz, math.exp(x2), spectral)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = _gain_at(nu, lipschitz, math.exp(x1), spectral)
    c_numeric = math.exp((a + b) / 2.0)
    gain_numeric = _gain_at(nu, lipschitz, c_numeric, spectral)

    best_penalty = math.sqrt(2.0 * nu * lipschitz / (lam_max * (2.0 + lam_min)))
    best_gain = 0.5 * math.sqrt(2.0 * lam_min * lam_min / (lam_max * (2.0 + lam_min)) / kappa)
    if not (lo <= math.log(best_penalty) <= hi):
        raise OptimizationBracketFailureError(
            f"closed-form penalty {best_penalty:.3e} outside the search bracket"
        )
    if abs(gain_numeric - best_gain) > 1e-6 * best_gain:
        raise OptimizationBracketFailureError(
            f"numeric gain {gain_numeric:.12g} disagrees with closed form {best_gain:.12g}"
        )

    penalty = best_penalty if c is None else float(c)
    balance = balance_star(nu, lipschitz, penalty, spectral)
    gain = contraction_gain(nu, lipschitz, penalty, balance, spectral)
    return RateCertificate(
        penalty=penalty,
        balance=balance,
        gain=gain,
        rate=1.0 / (1.0 + gain),
        best_penalty=best_penalty,
        best_balance=balance_star(nu, lipschitz, best_penalty, spectral),
        best_gain=best_gain,
        best_rate=1.0 / (1.0 + best_gain),
        condition_number=kappa,
        min_pos_eig_gram=lam_min,
        max_eig_metric=lam_max,
    )


# --- sublinear bounds --------------------------------------------------------


@dataclass(frozen=True)
class SublinearBound:
    """O(1/T) envelopes for the ergodic objective gap and feasibility."""

    subgrad_bound: float
    min_pos_eig_gram: float
    max_eig_metric: float
    x_star_norm_sq: float
    penalty: float

    def objective_bound(self, T: int) -> float:
        c = self.penalty
        return (c / (2.0 * T)) * self.x_star_norm_sq * self.max_eig_metric + (
            2.0 / (c * T)
        ) * self.subgrad_bound**2 / self.min_pos_eig_gram

    def feasibility_bound(self, T: int) -> float:
        c = self.penalty
        return (1.0 / (2.0 * T)) * self.x_star_norm_sq * self.max_eig_metric + (
            1.0 / (2.0 * T)
        ) * (2.0 + 2.0 * self.subgrad_bound**2 / (c * c * self.min_pos_eig_gram))


def sublinear_bounds(subgrad_bound: float, spectral: SpectralData, x_star: np.ndarray, c: float) -> SublinearBound:
    return SublinearBound(
        subgrad_bound=float(subgrad_bound),
        min_pos_eig_gram=spectral.min_pos_eig_gram,
        max_eig_metric=spectral.max_eig_metric,
        x_star_norm_sq=float(np.sum(np.asarray(x_star) ** 2)),
        penalty=float(c),
    )


@dataclass(frozen=True)
class SublinearReport:
    obj_gap: np.ndarray = field(repr=False)  # |F(xhat(T)) - F*| for T = 1..T
    obj_bound: np.ndarray = field(repr=False)
    feasibility: np.ndarray = field(repr=False)  # |Q xhat(T)|
    feas_bound: np.ndarray = field(repr=False)
    ok: bool = True


def sublinear_check(
    trace: AdmmTrace,
    bounds: SublinearBound,
    optimal: OptimalPoint,
    spectral: SpectralData,
    problem: NetworkProblem,
) -> SublinearReport:
    """Verify both ergodic envelopes at every T of a zero-initialized run."""
    T = trace.T
    Q = spectral.gram_sqrt
    obj_gap = np.empty(T)
    obj_bound = np.empty(T)
    feas = np.empty(T)
    feas_bound = np.empty(T)
    for t in range(1, T + 1):
        xhat = trace.ergodic[t]
        obj_gap[t - 1] = abs(problem.f_value(xhat) - optimal.f_star)
        obj_bound[t - 1] = bounds.objective_bound(t)
        feas[t - 1] = float(np.linalg.norm(Q @ xhat))
        feas_bound[t - 1] = bounds.feasibility_bound(t)
        if obj_gap[t - 1] > obj_bound[t - 1] + BOUND_SLACK:
            raise BoundViolatedError(t, obj_gap[t - 1], obj_bound[t - 1], what="objective bound")
        if feas[t - 1] > feas_bound[t - 1] + BOUND_SLACK:
            raise BoundViolatedError(t, feas[t - 1], feas_bound[t - 1], what="feasibility bound")
    return SublinearReport(obj_gap=obj_gap, obj_bound=obj_bound, feasibility=feas, feas_bound=feas_bound)


def gap_inequality_check(
    trace: AdmmTrace,
    spectral: SpectralData,
    optimal: OptimalPoint,
    problem: NetworkProblem,
    c: float,
    r: np.ndarray | None = None,
) -> np.ndarray:
    """Per-round margins of the one-step gap inequality that telescopes
    into the sublinear bounds.

    For a reference vector r (default 0), every round must satisfy
    (2/c)(F(x(t+1)) - F*) + 2 <r, Q x(t+1)>
      <= dist(t) - dist(t+1) - step(t)
    where the distances are squared metric distances to (r, x*). Returns
    rhs - lhs per round and raises BoundViolatedError when negative beyond
    the shared slack.
    """
    Q = spectral.gram_sqrt
    if r is None:
        r = np.zeros_like(optimal.x_star)
    aux_run = np.empty_like(trace.xs)
    aux_run[0] = Q @ trace.xs[0]
    for t in range(1, trace.T + 1):
        aux_run[t] = aux_run[t - 1] + Q @ trace.xs[t]
    dist = np.empty(trace.T + 1)
    for t in range(trace.T + 1):
        dist[t] = _metric_dist_sq(spectral, aux_run[t] - r, trace.xs[t] - optimal.x_star)
    margins = np.empty(trace.T)
    for t in range(trace.T):
        step = _metric_dist_sq(spectral, aux_run[t] - aux_run[t + 1], trace.xs[t] - trace.xs[t + 1])
        lhs = (2.0 / c) * (problem.f_value(trace.xs[t + 1]) - optimal.f_star) + 2.0 * float(
            np.sum(r * (Q @ trace.xs[t + 1]))
        )
        rhs = dist[t] - dist[t + 1] - step
        margins[t] = rhs - lhs
        if margins[t] < -BOUND_SLACK * max(1.0, abs(rhs)):
            raise BoundViolatedError(t + 1, lhs, rhs, what="one-step gap inequality")
    return margins


# --- contraction check -------------------------------------------------------


@dataclass(frozen=True)
class ContractionReport:
    ratios: np.ndarray = field(repr=False)  # nan where the denominator vanished
    bound: float = 1.0
    checked: int = 0
    converged: bool = False


def contraction_check(
    trace: AdmmTrace,
    aux: AuxSequences,
    cert: RateCertificate,
    denom_floor: float = 1e-24,
) -> ContractionReport:
    """Assert the per-iteration metric contraction at the certificate rate."""
    dist = aux.metric_dist_sq
    bound = 1.0 / (1.0 + cert.gain)
    ratios = np.full(trace.T, np.nan)
    checked = 0
    for t in range(trace.T):
        if dist[t] < denom_floor:
            continue
        ratios[t] = dist[t + 1] / dist[t]
        checked += 1
        if ratios[t] > bound + BOUND_SLACK:
            raise ContractionViolatedError(t, float(ratios[t]), bound)
    return ContractionReport(ratios=ratios, bound=bound, checked=checked, converged=checked < trace.T)


# --- Laplacian network bounds ------------------------------------------------


@dataclass(frozen=True)
class LaplacianBounds:
    """Degree/connectivity relaxations, all of which must dominate the spectra."""

    d_max: int
    d_min: int
    algebraic_connectivity: float
    min_pos_eig_gram: float
    max_eig_metric: float
    sandwich_low: float  # a(G)^2 / (d_max + 1) <= lam_min
    sandwich_high: float  # lam_min <= a(G)^2 / (d_min + 1)
    metric_eig_bound: float  # lam_max <= d_max (d_max + 1) + 4 d_max^2/(d_min + 1)
    relaxed_metric_eig: float  # lam_max <= 4 d_max^2
    relaxed_inv_gram_eig: float  # 1/lam_min <= 2 d_max / a(G)^2
    complexity_lhs: float  # lam_max (2 + lam_min) / lam_min^2
    complexity_coeff: float  # 16 d_max^4 / (d_min a(G)^2)
    iteration_coefficient: float | None  # sqrt(kappa * complexity_coeff) when curvature known
    ok: bool


def laplacian_network_bounds(
    g: Graph,
    comm: CommunicationMatrix | None = None,
    nu: float | None = None,
    lipschitz: float | None = None,
) -> LaplacianBounds:
    if comm is None:
        comm = laplacian(g)
    if comm.source != "laplacian":
        raise NotLaplacianError("degree/connectivity bounds hold for the graph Laplacian only")
    sd = compute_spectral_data(comm, g)
    a = sd.algebraic_connectivity
    dmax, dmin = g.d_max, g.d_min
    lam_min, lam_max = sd.min_pos_eig_gram, sd.max_eig_metric

    low = a * a / (dmax + 1.0)
    high = a * a / (dmin + 1.0)
    metric_bound = dmax * (dmax + 1.0) + 4.0 * dmax * dmax / (dmin + 1.0)
    relaxed_metric = 4.0 * dmax * dmax
    relaxed_inv = 2.0 * dmax / (a * a)
    lhs = lam_max * (2.0 + lam_min) / (lam_min * lam_min)
    coeff = 16.0 * dmax**4 / (dmin * a * a)

    tol = 1e-9
    ok = (
        lam_min >= low * (1.0 - tol) - 1e-12
        and lam_min <= high * (1.0 + tol) + 1e-12
        and lam_max <= metric_bound * (1.0 + tol) + 1e-12
        and lam_max <= relaxed_metric * (1.0 + tol) + 1e-12
        and 1.0 / lam_min <= relaxed_inv * (1.0 + tol) + 1e-12
        and lhs <= coeff * (1.0 + tol) + 1e-12
    )
    iteration_coeff = None
    if nu is not None and lipschitz is not None and nu > 0:
        iteration_coeff = math.sqrt((lipschitz / nu) * coeff)
    return LaplacianBounds(
        d_max=dmax,
        d_min=dmin,
        algebraic_connectivity=a,
        min_pos_eig_gram=lam_min,
        max_eig_metric=lam_max,
        sandwich_low=low,
        sandwich_high=high,
        metric_eig_bound=metric_bound,
        relaxed_metric_eig=relaxed_metric,
        relaxed_inv_gram_eig=relaxed_inv,
        complexity_lhs=lhs,
        complexity_coeff=coeff,
        iteration_coefficient=iteration_coeff,
        ok=bool(ok),
    )
