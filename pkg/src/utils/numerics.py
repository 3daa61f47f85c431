"""
Shared numerical linear algebra for the realization engine.

Rank decisions, rank-revealing factorizations, pseudoinverses and subspace
bookkeeping all live here so that every caller makes rank decisions the same
way. Tolerances are always passed in explicitly; rank tolerances are relative
to the largest singular value.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from src.config.config_loader import DEFAULT_AMBIGUITY_FACTOR

logger = logging.getLogger(__name__)

ORTHONORMALITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RankDecision:
    """Outcome of a numerical rank decision, kept for reports."""

    rank: int
    singular_values: np.ndarray
    tol: float
    threshold: float
    ambiguous: bool


@dataclass(frozen=True, eq=False)
class RankFactorization:
    """
    Rank factorization H = O·R obtained from a truncated SVD.

    O = U·S^{1/2} and R = S^{1/2}·Vᵀ, truncated at the numerical rank.
    """

    O: np.ndarray
    R: np.ndarray
    singular_values: np.ndarray
    rank: int
    tol: float


@dataclass(frozen=True, eq=False)
class Subspace:
    """Linear subspace stored as an orthonormal basis matrix (ambient × dim)."""

    basis: np.ndarray

    def __post_init__(self):
        basis = np.array(self.basis, dtype=float)
        if basis.ndim != 2:
            raise ValueError(f"Subspace basis must be 2-D, got shape {basis.shape}")
        if basis.shape[1] > 0:
            gram = basis.T @ basis
            if not np.allclose(gram, np.eye(basis.shape[1]), atol=ORTHONORMALITY_TOL):
                raise ValueError("Subspace basis columns are not orthonormal")
        basis.setflags(write=False)
        object.__setattr__(self, 'basis', basis)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def span(cls, vectors: np.ndarray, tol: float) -> "Subspace":
        """Subspace spanned by the columns of ``vectors``."""
        return cls(image_basis(vectors, tol))

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls(np.zeros((ambient_dim, 0)))

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls(np.eye(ambient_dim))

    def contains(self, vectors: np.ndarray, tol: float) -> bool:
        """True if every column of ``vectors`` lies in the subspace."""
        vectors = np.atleast_2d(np.asarray(vectors, dtype=float).T).T
        if vectors.size == 0:
            return True
        residual = vectors - self.basis @ (self.basis.T @ vectors)
        scale = max(1.0, float(np.max(np.abs(vectors))))
        return float(np.max(np.abs(residual))) <= tol * scale


def singular_values(matrix: np.ndarray) -> np.ndarray:
    """Singular values in descending order; empty for empty matrices."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return np.zeros(0)
    return scipy.linalg.svdvals(matrix)


def decide_rank(values: np.ndarray, tol: float,
                ambiguity_factor: float = DEFAULT_AMBIGUITY_FACTOR) -> RankDecision:
    """
    Count singular values above ``tol``·σ_max.

    A singular value within ``ambiguity_factor`` of the threshold (on either
    side) marks the decision as ambiguous.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0 or values[0] == 0.0:
        return RankDecision(0, values, tol, 0.0, False)

    threshold = tol * values[0]
    rank = int(np.sum(values > threshold))
    near = (values > threshold / ambiguity_factor) & (values <= threshold * ambiguity_factor)
    ambiguous = bool(np.any(near))
    if ambiguous:
        logger.warning(
            f"Ambiguous rank decision: singular values {values[near]} lie within a factor "
            f"{ambiguity_factor:g} of the threshold {threshold:.3e}"
        )
    return RankDecision(rank, values, tol, threshold, ambiguous)


def numerical_rank(matrix: np.ndarray, tol: float,
                   ambiguity_factor: float = DEFAULT_AMBIGUITY_FACTOR) -> RankDecision:
    """Rank decision for ``matrix`` at relative tolerance ``tol``."""
    return decide_rank(singular_values(matrix), tol, ambiguity_factor)


def rank_factorize(matrix: np.ndarray, tol: float) -> RankFactorization:
    """
    Factorize ``matrix`` = O·R through its SVD, truncated at the numerical rank.

    Args:
        matrix: Dense real matrix (rows × cols)
        tol: Relative rank tolerance

    Returns:
        RankFactorization with O of shape (rows × r) and R of shape (r × cols)
    """
    matrix = np.asarray(matrix, dtype=float)
    rows, cols = matrix.shape
    if matrix.size == 0:
        return RankFactorization(np.zeros((rows, 0)), np.zeros((0, cols)), np.zeros(0), 0, tol)

    U, s, Vt = scipy.linalg.svd(matrix, full_matrices=False)
    rank = decide_rank(s, tol).rank
    root = np.sqrt(s[:rank])
    O = U[:, :rank] * root
    R = root[:, np.newaxis] * Vt[:rank, :]
    logger.debug(f"Rank factorization of {rows}x{cols} matrix: rank {rank}")
    return RankFactorization(O, R, s, rank, tol)


def pseudoinverse(matrix: np.ndarray, tol: float) -> np.ndarray:
    """Moore-Penrose pseudoinverse, discarding singular values below ``tol``·σ_max."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return np.zeros(matrix.shape[::-1])
    return scipy.linalg.pinv(matrix, atol=0.0, rtol=tol)


def image_basis(matrix: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of the column space of ``matrix``."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0 or not np.any(matrix):
        return np.zeros((matrix.shape[0], 0))
    return scipy.linalg.orth(matrix, rcond=tol)


def kernel_basis(matrix: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis of the null space of ``matrix``."""
    matrix = np.asarray(matrix, dtype=float)
    cols = matrix.shape[1]
    if cols == 0:
        return np.zeros((0, 0))
    if matrix.shape[0] == 0 or not np.any(matrix):
        return np.eye(cols)
    return scipy.linalg.null_space(matrix, rcond=tol)


def orth_complement(subspace: Subspace, tol: float) -> Subspace:
    """Orthogonal complement inside the ambient space."""
    if subspace.dim == 0:
        return Subspace.full(subspace.ambient_dim)
    return Subspace(kernel_basis(subspace.basis.T, tol))


def intersect(first: Subspace, second: Subspace, tol: float) -> Subspace:
    """Intersection, computed as the kernel of the stacked complement projections."""
    if first.ambient_dim != second.ambient_dim:
        raise ValueError("Cannot intersect subspaces of different ambient spaces")
    stacked = np.vstack([orth_complement(first, tol).basis.T, orth_complement(second, tol).basis.T])
    if stacked.shape[0] == 0:
        return Subspace.full(first.ambient_dim)
    return Subspace(kernel_basis(stacked, tol))


def principal_angles(first: Subspace, second: Subspace) -> np.ndarray:
    """Principal angles in [0, π/2], largest first; empty if either space is {0}."""
    if first.dim == 0 or second.dim == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(first.basis, second.basis)


def same_subspace(first: Subspace, second: Subspace, angle_tol: float) -> bool:
    """Equal dimensions and every principal angle below ``angle_tol``."""
    if first.dim != second.dim:
        return False
    angles = principal_angles(first, second)
    return angles.size == 0 or float(np.max(angles)) < angle_tol


def relative_residual(residual: np.ndarray, reference_scale: Optional[float] = None) -> float:
    """Max-norm of ``residual`` divided by max(1, reference scale)."""
    residual = np.asarray(residual, dtype=float)
    if residual.size == 0:
        return 0.0
    scale = 1.0 if reference_scale is None else max(1.0, float(reference_scale))
    return float(np.max(np.abs(residual))) / scale
