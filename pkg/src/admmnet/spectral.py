"""Spectral quantities driving every convergence certificate.

From a communication matrix P and its graph we form

* ``col_norms_sq``  per-node squared column norms, sum_{j in N(i)} P_ji^2
* ``nbhd_sizes``    |N(i)| = degree + 1
* ``gram``          P' diag(1/|N|) P, symmetric PSD, null space span{1}
* ``gram_sqrt``     the PSD square root of ``gram``
* ``metric_block``  diag(col_norms_sq) - gram, the weight of the x part of
  the contraction metric

plus the two eigenvalues the rate certificates consume: the smallest
nonzero eigenvalue of ``gram`` and the largest eigenvalue of
``metric_block``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CertificateFailedError,
    DegenerateSpectrumError,
    EigNoConvergenceError,
    NotPSDError,
    NotSymmetricError,
)
from .graph import CommunicationMatrix, Graph, laplacian

SYMMETRY_RTOL = 1e-9
ZERO_EIG_RTOL = 1e-9  # eigenvalues <= rtol * max eigenvalue count as zero
RECON_RTOL = 1e-10


@dataclass(frozen=True)
class Eigendecomposition:
    """Ascending eigenvalues with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max(self) -> float:
        return float(self.eigenvalues[-1])


@dataclass(frozen=True)
class SpectralData:
    col_norms_sq: np.ndarray = field(repr=False)  # diagonal of M
    nbhd_sizes: np.ndarray = field(repr=False)  # diagonal of D
    gram: np.ndarray = field(repr=False)
    gram_sqrt: np.ndarray = field(repr=False)
    metric_block: np.ndarray = field(repr=False)
    eig_gram: Eigendecomposition = field(repr=False)
    eig_metric: Eigendecomposition = field(repr=False)
    min_pos_eig_gram: float
    max_eig_metric: float
    algebraic_connectivity: float

    @property
    def n(self) -> int:
        return self.gram.shape[0]


def sym_eig(S: np.ndarray) -> Eigendecomposition:
    """Eigendecomposition of a symmetric matrix with a fixed sign convention.

    Eigenvalues ascend; each eigenvector's first entry of magnitude above
    1e-12 is made positive so repeated calls are reproducible.
    """
    S = np.asarray(S, dtype=float)
    scale = float(np.linalg.norm(S, ord="fro"))
    defect = float(np.max(np.abs(S - S.T))) if S.size else 0.0
    if defect > SYMMETRY_RTOL * max(scale, 1e-300):
        raise NotSymmetricError(f"symmetry defect {defect:.3e} exceeds {SYMMETRY_RTOL:.1e} * |S|")
    try:
        vals, vecs = np.linalg.eigh((S + S.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise EigNoConvergenceError(str(exc)) from exc
    vecs = vecs.copy()
    for k in range(vecs.shape[1]):
        col = vecs[:, k]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        if nz.size and col[nz[0]] < 0:
            vecs[:, k] = -col

    recon = float(np.max(np.abs(vecs @ np.diag(vals) @ vecs.T - S)))
    spec_norm = float(np.max(np.abs(vals))) if vals.size else 0.0
    if recon > RECON_RTOL * (1.0 + spec_norm):
        raise EigNoConvergenceError(f"reconstruction error {recon:.3e} too large")
    return Eigendecomposition(eigenvalues=vals, eigenvectors=vecs)


def matrix_sqrt(W: np.ndarray) -> np.ndarray:
    """Symmetric PSD square root; eigenvalues in [-1e-10 |W|, 0) are clamped.

    Raises NotPSDError when an eigenvalue is below -1e-8 |W|.
    """
    dec = sym_eig(W)
    norm = max(abs(dec.min), abs(dec.max))
    vals = dec.eigenvalues.copy()
    if norm > 0.0 and dec.min < -1e-8 * norm:
        raise NotPSDError(f"eigenvalue {dec.min:.3e} below -1e-8 * |W| = {-1e-8 * norm:.3e}")
    vals[vals < 0.0] = 0.0
    Q = dec.eigenvectors @ np.diag(np.sqrt(vals)) @ dec.eigenvectors.T
    return (Q + Q.T) / 2.0


def algebraic_connectivity(g: Graph) -> float:
    """Second-smallest eigenvalue of the graph Laplacian (positive when connected)."""
    dec = sym_eig(laplacian(g).P)
    return float(dec.eigenvalues[1])


def compute_spectral_data(comm: CommunicationMatrix, g: Graph) -> SpectralData:
    P = comm.P
    col_norms_sq = np.sum(P * P, axis=0)
    nbhd_sizes = np.array([deg + 1.0 for deg in g.degrees])
    gram = P.T @ np.diag(1.0 / nbhd_sizes) @ P
    gram = (gram + gram.T) / 2.0

    eig_gram = sym_eig(gram)
    lam_max = eig_gram.max
    if lam_max <= 0.0:
        raise DegenerateSpectrumError("all eigenvalues of P' D^-1 P are numerically zero")
    positive = eig_gram.eigenvalues[eig_gram.eigenvalues > ZERO_EIG_RTOL * lam_max]
    if positive.size == 0:
        raise DegenerateSpectrumError("no eigenvalue above the zero threshold")
    min_pos = float(positive[0])

    # eigenvalues at or below the zero threshold are exactly zeroed so the
    # square root keeps null(Q) = span{1}; a bare nonnegative clamp would
    # inject sqrt(eps) ~ 1e-8 into the consensus direction
    vals = eig_gram.eigenvalues
    sqrt_vals = np.where(vals > ZERO_EIG_RTOL * lam_max, np.sqrt(np.clip(vals, 0.0, None)), 0.0)
    gram_sqrt = eig_gram.eigenvectors @ np.diag(sqrt_vals) @ eig_gram.eigenvectors.T
    gram_sqrt = (gram_sqrt + gram_sqrt.T) / 2.0
    recon = float(np.max(np.abs(gram_sqrt @ gram_sqrt - gram)))
    if recon > RECON_RTOL * (1.0 + lam_max):
        raise EigNoConvergenceError(f"square root reconstruction error {recon:.3e}")

    metric_block = np.diag(col_norms_sq) - gram
    eig_metric = sym_eig(metric_block)

    return SpectralData(
        col_norms_sq=col_norms_sq,
        nbhd_sizes=nbhd_sizes,
        gram=gram,
        gram_sqrt=gram_sqrt,
        metric_block=metric_block,
        eig_gram=eig_gram,
        eig_metric=eig_metric,
        min_pos_eig_gram=min_pos,
        max_eig_metric=eig_metric.max,
        algebraic_connectivity=algebraic_connectivity(g),
    )


@dataclass(frozen=True)
class PsdReport:
    """Row-wise diagonal-dominance lower bounds and eigenvalue floors.

    A nonnegative Gershgorin row minimum proves PSD outright; on irregular
    graphs rows can dip negative, in which case that witness is merely
    inconclusive (it never refutes PSD). The eigenvalue floors decide.
    """

    gersh_lower_gram: np.ndarray = field(repr=False)
    gersh_lower_metric: np.ndarray = field(repr=False)
    gersh_conclusive_gram: bool
    gersh_conclusive_metric: bool
    min_eig_gram: float
    min_eig_metric: float
    ok: bool


def psd_certificates(sd: SpectralData) -> PsdReport:
    """Certify that gram and metric_block are PSD.

    Reports the per-row Gershgorin lower bounds as a sufficient witness and
    checks the decisive condition: the smallest eigenvalue of each matrix
    must be >= -1e-10. Raises CertificateFailedError naming the offending
    eigenvalue otherwise.
    """
    lowers = []
    conclusive = []
    for mat in (sd.gram, sd.metric_block):
        diag = np.diag(mat)
        offsum = np.sum(np.abs(mat), axis=1) - np.abs(diag)
        lower = diag - offsum
        slack = 1e-12 * (1.0 + float(np.max(np.abs(diag))))
        lowers.append(lower)
        conclusive.append(bool(np.all(lower >= -slack)))
    for name, val in (("gram", sd.eig_gram.min), ("metric_block", sd.eig_metric.min)):
        if val < -1e-10:
            raise CertificateFailedError(f"min eigenvalue of {name} is {val:.3e} < -1e-10")
    return PsdReport(
        gersh_lower_gram=lowers[0],
        gersh_lower_metric=lowers[1],
        gersh_conclusive_gram=conclusive[0],
        gersh_conclusive_metric=conclusive[1],
        min_eig_gram=sd.eig_gram.min,
        min_eig_metric=sd.eig_metric.min,
        ok=True,
    )
