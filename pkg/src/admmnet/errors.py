"""Exception hierarchy for the package.

Every module raises subclasses of :class:`AdmmNetError`, so callers (in
particular the CLI) can catch one base type and map it to a nonzero exit.
"""

from __future__ import annotations


class AdmmNetError(Exception):
    """Base class for all package errors."""


# --- graph ---------------------------------------------------------------


class GraphError(AdmmNetError):
    pass


class NodeOutOfRangeError(GraphError):
    pass


class SelfLoopError(GraphError):
    pass


class DuplicateEdgeError(GraphError):
    pass


class DisconnectedError(GraphError):
    pass


class InfeasibleParamsError(GraphError):
    pass


class ConnectivityRetryExhaustedError(GraphError):
    pass


class GraphFileError(GraphError):
    """Malformed graph file; carries the offending 1-based line number."""

    def __init__(self, message: str, lineno: int | None = None):
        super().__init__(message if lineno is None else f"line {lineno}: {message}")
        self.lineno = lineno


class CommMatrixError(GraphError):
    """Communication matrix failed validation; carries the report."""

    def __init__(self, report):
        super().__init__("; ".join(v.message for v in report.violations))
        self.report = report


# --- spectral ------------------------------------------------------------


class SpectralError(AdmmNetError):
    pass


class NotSymmetricError(SpectralError):
    pass


class EigNoConvergenceError(SpectralError):
    pass


class NotPSDError(SpectralError):
    pass


class DegenerateSpectrumError(SpectralError):
    pass


class CertificateFailedError(SpectralError):
    pass


# --- objectives ----------------------------------------------------------


class ObjectiveError(AdmmNetError):
    pass


class DimensionMismatchError(ObjectiveError):
    pass


class InnerSolverNoConvergenceError(ObjectiveError):
    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class MissingCurvatureMetadataError(ObjectiveError):
    pass


class OracleNoConvergenceError(ObjectiveError):
    pass


# --- admm ----------------------------------------------------------------


class AdmmError(AdmmNetError):
    pass


class ProxFailureError(AdmmError):
    def __init__(self, node: int, cause: Exception):
        super().__init__(f"prox update failed at node {node}: {cause}")
        self.node = node


class ZeroMWeightError(AdmmError):
    def __init__(self, node: int):
        super().__init__(f"zero prox weight at node {node} (all-zero column in P)")
        self.node = node


# --- analysis ------------------------------------------------------------


class AnalysisError(AdmmNetError):
    pass


class InvalidBetaError(AnalysisError):
    pass


class InvalidCError(AnalysisError):
    pass


class OptimizationBracketFailureError(AnalysisError):
    pass


class NotLaplacianError(AnalysisError):
    pass


class ContractionViolatedError(AnalysisError):
    def __init__(self, t: int, ratio: float, bound: float):
        super().__init__(f"contraction violated at t={t}: ratio {ratio:.12g} > bound {bound:.12g}")
        self.t = t
        self.ratio = ratio
        self.bound = bound


class BoundViolatedError(AnalysisError):
    def __init__(self, T: int, lhs: float, rhs: float, what: str = "bound"):
        super().__init__(f"{what} violated at T={T}: {lhs:.12g} > {rhs:.12g}")
        self.T = T
        self.lhs = lhs
        self.rhs = rhs


# --- config / cli --------------------------------------------------------


class ConfigParseError(AdmmNetError):
    def __init__(self, message: str, lineno: int | None = None):
        super().__init__(message if lineno is None else f"line {lineno}: {message}")
        self.lineno = lineno
