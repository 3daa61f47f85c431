"""
Rational representations of families of formal power series.

A representation R = ({A_σ}, B, C) over the alphabet 1..X with index set J
represents the family Ψ = {S_j} when S_j(w) = C·A_w·B_j for every word w.
This module holds the reachability/observability machinery, the reductions,
minimization, and the two ways of reading a representation off a Hankel
matrix (explicit column basis, and SVD factorization).
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from src.config.config_loader import DEFAULT_MORPHISM_TOL, DEFAULT_RANK_TOL
from src.core.errors import (
    DimensionMismatchError,
    HypothesisViolatedError,
    NotIsomorphicError,
    OutOfDepthError,
    ShiftInconsistencyError,
)
from src.core.hankel import HankelBlockMatrix, enumerate_words, word_count
from src.core.lss import ModeWord, word_matrix_product
from src.utils.numerics import (
    Subspace,
    image_basis,
    numerical_rank,
    orth_complement,
    pseudoinverse,
    rank_factorize,
    relative_residual,
)

logger = logging.getLogger(__name__)

IndexLabel = Hashable


class SeriesFamily:
    """
    Family Ψ = {S_j : j ∈ J} of ℝ^powo-valued series over the alphabet 1..X.

    Values come from ``source(j, word)`` and are cached as read-only arrays,
    so a caller cannot alter a cached coefficient. A finite ``depth`` turns
    longer words into OutOfDepthError.
    """

    def __init__(self, alphabet_size: int, index_set: Sequence[IndexLabel], powo: int,
                 source: Callable[[IndexLabel, ModeWord], np.ndarray],
                 depth: Optional[int] = None):
        if alphabet_size < 1:
            raise ValueError(f"Alphabet size must be ≥ 1, got {alphabet_size}")
        self.alphabet_size = alphabet_size
        self.index_set = tuple(index_set)
        self.powo = powo
        self.depth = depth
        self._source = source
        self._members = set(self.index_set)
        self._cache: Dict[Tuple[IndexLabel, ModeWord], np.ndarray] = {}

    def __repr__(self) -> str:
        depth = "lazy" if self.depth is None else f"depth={self.depth}"
        return f"SeriesFamily(X={self.alphabet_size}, |J|={len(self.index_set)}, powo={self.powo}, {depth})"

    def s(self, j: IndexLabel, word: ModeWord) -> np.ndarray:
        """Coefficient S_j(word)."""
        if j not in self._members:
            raise KeyError(f"Index {j!r} is not in the family's index set")
        word.check_modes(self.alphabet_size)
        if self.depth is not None and len(word) > self.depth:
            raise OutOfDepthError(f"Word '{word}' exceeds the series depth {self.depth}")
        key = (j, word)
        if key not in self._cache:
            value = np.array(self._source(j, word), dtype=float).reshape(self.powo)
            value.setflags(write=False)
            self._cache[key] = value
        return self._cache[key]

    def max_abs(self, depth: int) -> float:
        """Largest coefficient magnitude over words up to ``depth``."""
        values = [np.max(np.abs(self.s(j, w))) if self.powo else 0.0
                  for w in enumerate_words(self.alphabet_size, depth) for j in self.index_set]
        return float(max(values, default=0.0))


def family_residual(first: SeriesFamily, second: SeriesFamily, depth: int) -> float:
    """Max coefficient difference up to ``depth``, relative to max(1, largest coefficient of ``first``)."""
    if (first.alphabet_size, first.index_set, first.powo) != (second.alphabet_size, second.index_set, second.powo):
        raise DimensionMismatchError("Series families have different alphabets, index sets or dimensions")
    worst = 0.0
    for word in enumerate_words(first.alphabet_size, depth):
        for j in first.index_set:
            worst = max(worst, float(np.max(np.abs(first.s(j, word) - second.s(j, word)), initial=0.0)))
    return relative_residual(np.array([worst]), first.max_abs(depth))


@dataclass(frozen=True, eq=False)
class RationalRepresentation:
    """
    R = ({A_σ}, B, C, J).

    ``B`` is a dim × |J| matrix whose k-th column is B_j for j = index_set[k].
    """

    A: Tuple[np.ndarray, ...]
    B: np.ndarray
    C: np.ndarray
    index_set: Tuple[IndexLabel, ...]

    def __post_init__(self):
        A = tuple(np.array(a, dtype=float) for a in self.A)
        B = np.array(self.B, dtype=float)
        C = np.array(self.C, dtype=float)
        index_set = tuple(self.index_set)

        if not A:
            raise DimensionMismatchError("A representation needs at least one letter")
        dim = A[0].shape[0] if A[0].ndim == 2 else -1
        for sigma, a in enumerate(A, start=1):
            if a.shape != (dim, dim):
                raise DimensionMismatchError(f"A_{sigma} has shape {a.shape}, expected ({dim}, {dim})")
        if B.shape != (dim, len(index_set)):
            raise DimensionMismatchError(f"B has shape {B.shape}, expected ({dim}, {len(index_set)})")
        if C.ndim != 2 or C.shape[1] != dim:
            raise DimensionMismatchError(f"C has shape {C.shape}, expected (powo, {dim})")

        for array in (*A, B, C):
            array.setflags(write=False)
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'B', B)
        object.__setattr__(self, 'C', C)
        object.__setattr__(self, 'index_set', index_set)

    def __repr__(self) -> str:
        return (f"RationalRepresentation(dim={self.dim}, X={self.alphabet_size}, "
                f"|J|={len(self.index_set)}, powo={self.powo})")

    @property
    def dim(self) -> int:
        return self.A[0].shape[0]

    @property
    def alphabet_size(self) -> int:
        return len(self.A)

    @property
    def powo(self) -> int:
        return self.C.shape[0]

    def b(self, j: IndexLabel) -> np.ndarray:
        return self.B[:, self.index_set.index(j)]

    def evaluate(self, j: IndexLabel, word: ModeWord) -> np.ndarray:
        """S_j(word) = C·A_word·B_j."""
        return self.C @ word_matrix_product(self.A, word, self.dim) @ self.b(j)

    def family(self, depth: Optional[int] = None) -> SeriesFamily:
        """The represented family Ψ_R."""
        return SeriesFamily(self.alphabet_size, self.index_set, self.powo, self.evaluate, depth)

    def transform(self, T: np.ndarray) -> "RationalRepresentation":
        """Change of state basis x ↦ T·x."""
        T = np.asarray(T, dtype=float)
        T_inv = np.linalg.inv(T)
        return RationalRepresentation(
            tuple(T @ a @ T_inv for a in self.A), T @ self.B, self.C @ T_inv, self.index_set
        )

    def reach_matrix(self) -> np.ndarray:
        """[A_w·B] over all words |w| < dim, length-lexicographic."""
        blocks = [word_matrix_product(self.A, w, self.dim) @ self.B
                  for w in enumerate_words(self.alphabet_size, self.dim - 1)]
        return np.hstack(blocks) if blocks else np.zeros((self.dim, 0))

    def obs_matrix(self) -> np.ndarray:
        """[C·A_w] stacked over all words |w| < dim."""
        blocks = [self.C @ word_matrix_product(self.A, w, self.dim)
                  for w in enumerate_words(self.alphabet_size, self.dim - 1)]
        return np.vstack(blocks) if blocks else np.zeros((0, self.dim))

    @classmethod
    def zero(cls, alphabet_size: int, index_set: Sequence[IndexLabel], powo: int) -> "RationalRepresentation":
        """The zero-dimensional representation of the zero family."""
        return cls(tuple(np.zeros((0, 0)) for _ in range(alphabet_size)),
                   np.zeros((0, len(tuple(index_set)))), np.zeros((powo, 0)), tuple(index_set))


def _grow_invariant(generators: np.ndarray, maps: Sequence[np.ndarray], tol: float, kind: str) -> Subspace:
    """Smallest subspace containing ``generators`` and invariant under every map."""
    ambient = generators.shape[0]
    basis = image_basis(generators, tol)
    level = 0
    while basis.shape[1] < ambient:
        grown = image_basis(np.hstack([basis] + [a @ basis for a in maps]), tol)
        level += 1
        if grown.shape[1] == basis.shape[1]:
            break
        basis = grown
    if level > max(ambient, 1):
        raise AssertionError(f"{kind} span kept growing past {ambient} levels")
    logger.debug(f"{kind} span saturated at level {level} with dimension {basis.shape[1]}")
    return Subspace(basis)


def reach_space(representation: RationalRepresentation, tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """W_R = span{A_w·B_j}, grown breadth-first until a level adds nothing."""
    return _grow_invariant(representation.B, representation.A, tol, "Reachable")


def _observable_rows(representation: RationalRepresentation, tol: float) -> Subspace:
    """span{(C·A_w)ᵀ}: the orthogonal complement of O_R."""
    return _grow_invariant(representation.C.T, [a.T for a in representation.A], tol, "Observable")


def obs_space(representation: RationalRepresentation, tol: float = DEFAULT_RANK_TOL) -> Subspace:
    """O_R = ∩ ker C·A_w."""
    return orth_complement(_observable_rows(representation, tol), tol)


def _restrict(representation: RationalRepresentation, basis: np.ndarray) -> RationalRepresentation:
    """Compress onto the columns of an orthonormal ``basis``."""
    return RationalRepresentation(
        tuple(basis.T @ a @ basis for a in representation.A),
        basis.T @ representation.B,
        representation.C @ basis,
        representation.index_set,
    )


def reach_reduce(representation: RationalRepresentation,
                 tol: float = DEFAULT_RANK_TOL) -> Tuple[RationalRepresentation, np.ndarray]:
    """
    Restrict R to W_R.

    Returns:
        (R_r, V) where V (dim × dim_r) embeds R_r into R: A_σ·V = V·A_σʳ
    """
    basis = reach_space(representation, tol).basis
    reduced = _restrict(representation, basis)
    logger.info(f"Reachability reduction: {representation.dim} -> {reduced.dim}")
    return reduced, basis


def obs_reduce(representation: RationalRepresentation,
               tol: float = DEFAULT_RANK_TOL) -> Tuple[RationalRepresentation, np.ndarray]:
    """
    Quotient R by O_R, realised on the orthogonal complement of O_R.

    Returns:
        (R_o, P) where P (dim_o × dim) maps R onto R_o: P·A_σ = A_σᵒ·P
    """
    kept = _observable_rows(representation, tol).basis
    reduced = _restrict(representation, kept)
    logger.info(f"Observability reduction: {representation.dim} -> {reduced.dim}")
    return reduced, kept.T


def minimize_repr(representation: RationalRepresentation, tol: float = DEFAULT_RANK_TOL) -> RationalRepresentation:
    """Minimal representation of the same family: reach_reduce, then obs_reduce."""
    reachable, _ = reach_reduce(representation, tol)
    minimal, _ = obs_reduce(reachable, tol)
    return minimal


def is_reachable(representation: RationalRepresentation, tol: float = DEFAULT_RANK_TOL) -> bool:
    return reach_space(representation, tol).dim == representation.dim


def is_observable(representation: RationalRepresentation, tol: float = DEFAULT_RANK_TOL) -> bool:
    return obs_space(representation, tol).dim == 0


def _pivot_columns(matrix: np.ndarray, rank: int) -> List[int]:
    """Column indices chosen by QR with column pivoting."""
    _, _, pivots = scipy.linalg.qr(matrix, mode='economic', pivoting=True)
    return sorted(int(k) for k in pivots[:rank])


def repr_from_hankel(hankel: HankelBlockMatrix, tol: float = DEFAULT_RANK_TOL,
                     basis_columns: Optional[Sequence[Tuple[ModeWord, IndexLabel]]] = None,
                     dim_bound: Optional[int] = None) -> RationalRepresentation:
    """
    Representation on the column space of a finite Hankel matrix.

    The state space is spanned by chosen columns (w, j) with |w| < col_depth.
    A_σ maps column (w, j) to column (w·σ, j); B_j is column (ε, j); C reads
    the first ``powo`` rows.

    Args:
        hankel: Finite Hankel matrix of the family
        tol: Relative rank tolerance
        basis_columns: Explicit (word, j) labels to use as basis; chosen by
            pivoted QR when omitted
        dim_bound: Known upper bound on the minimal dimension; enables the
            depth and rank checks of the stabilization hypothesis

    Raises:
        ShiftInconsistencyError: If shifted columns fall outside the matrix
            or disagree with the shift maps
        HypothesisViolatedError: If the rank exceeds ``dim_bound``
    """
    X, J, powo = hankel.alphabet_size, hankel.index_set, hankel.powo
    data = hankel.data
    rank = numerical_rank(data, tol).rank

    if dim_bound is not None:
        if rank > dim_bound:
            raise HypothesisViolatedError(
                f"Hankel rank {rank} exceeds the dimension bound {dim_bound}", float(rank - dim_bound)
            )
        if min(hankel.row_depth, hankel.col_depth - 1) < dim_bound - 1:
            raise OutOfDepthError(
                f"Depths ({hankel.row_depth}, {hankel.col_depth}) are too shallow for dimension bound {dim_bound}"
            )
    if rank == 0:
        return RationalRepresentation.zero(X, J, powo)
    if hankel.col_depth < 1:
        raise ShiftInconsistencyError("Column depth 0 leaves no room for shifted columns")

    shiftable = word_count(X, hankel.col_depth - 1) * len(J)
    if basis_columns is None:
        chosen = _pivot_columns(data[:, :shiftable], rank)
    else:
        if len(basis_columns) != rank:
            raise DimensionMismatchError(f"{len(basis_columns)} basis columns given for rank {rank}")
        chosen = [hankel.cols.position(word, j) for word, j in basis_columns]
        if max(chosen) >= shiftable:
            raise ShiftInconsistencyError("Basis columns must have words shorter than the column depth")

    basis = data[:, chosen]
    if numerical_rank(basis, tol).rank < rank:
        raise ShiftInconsistencyError("Chosen columns do not span the Hankel column space")
    logger.debug(f"Hankel basis columns: {[hankel.column_labels()[k] for k in chosen]}")

    scale = float(np.max(np.abs(data)))
    solve_pinv = pseudoinverse(basis, tol)

    def coordinates(columns: np.ndarray) -> np.ndarray:
        coords = solve_pinv @ columns
        residual = relative_residual(basis @ coords - columns, scale)
        if residual > np.sqrt(tol):
            raise ShiftInconsistencyError(
                f"Hankel columns leave the chosen column space (residual {residual:.3e})"
            )
        return coords

    # Coordinates of every shiftable column, then of its σ-shift
    source = enumerate_words(X, hankel.col_depth - 1)
    base_coords = coordinates(data[:, :shiftable])
    A = []
    for sigma in range(1, X + 1):
        targets = [hankel.cols.position(w + ModeWord.of(sigma), j) for w in source for j in J]
        shifted = coordinates(data[:, targets])
        a = shifted @ pseudoinverse(base_coords, tol)
        mismatch = relative_residual(a @ base_coords - shifted, float(np.max(np.abs(shifted), initial=0.0)))
        if mismatch > np.sqrt(tol):
            raise ShiftInconsistencyError(
                f"Shift by letter {sigma} is inconsistent on the Hankel columns (residual {mismatch:.3e})"
            )
        A.append(a)

    B = base_coords[:, :len(J)]
    C = basis[:powo, :]
    return RationalRepresentation(tuple(A), B, C, J)


def realization_algorithm(hankel: HankelBlockMatrix, tol: float = DEFAULT_RANK_TOL) -> RationalRepresentation:
    """
    Representation from an SVD factorization H_{N,N+1} = O·R̂.

    R̄ holds the columns (w, j) with |w| ≤ col_depth − 1 and R̂_σ the columns
    (w·σ, j) in the same order; A_σ = R̂_σ·R̄⁺, B = first |J| columns of R̂,
    C = first powo rows of O.
    """
    X, J, powo = hankel.alphabet_size, hankel.index_set, hankel.powo
    if hankel.col_depth < 1:
        raise OutOfDepthError("The factorization needs column depth ≥ 1")

    factorization = rank_factorize(hankel.data, tol)
    if factorization.rank == 0:
        return RationalRepresentation.zero(X, J, powo)

    R_hat = factorization.R
    source = enumerate_words(X, hankel.col_depth - 1)
    R_bar = R_hat[:, :word_count(X, hankel.col_depth - 1) * len(J)]
    R_bar_pinv = pseudoinverse(R_bar, tol)

    A = []
    for sigma in range(1, X + 1):
        targets = [hankel.cols.position(w + ModeWord.of(sigma), j) for w in source for j in J]
        A.append(R_hat[:, targets] @ R_bar_pinv)

    logger.info(f"Factorization realization: rank {factorization.rank}")
    return RationalRepresentation(tuple(A), R_hat[:, :len(J)], factorization.O[:powo, :], J)


def morphism_residuals(source: RationalRepresentation, target: RationalRepresentation,
                       T: np.ndarray) -> Dict[str, float]:
    """Relative residuals of T·A_σ = Ã_σ·T, T·B = B̃, C̃·T = C."""
    scale = max(
        float(np.max(np.abs(array), initial=0.0))
        for array in (*source.A, *target.A, source.B, target.B, source.C, target.C)
    )
    residuals = {
        'B': relative_residual(T @ source.B - target.B, scale),
        'C': relative_residual(target.C @ T - source.C, scale),
    }
    for sigma, (a, a_target) in enumerate(zip(source.A, target.A), start=1):
        residuals[f'A_{sigma}'] = relative_residual(T @ a - a_target @ T, scale)
    return residuals


def repr_isomorphism(first: RationalRepresentation, second: RationalRepresentation,
                     tol: float = DEFAULT_MORPHISM_TOL) -> np.ndarray:
    """
    Isomorphism T with T·R1 = R2 between minimal representations.

    T solves T·[A_w B_j] = [Ã_w B̃_j] (|w| < dim) in the least-squares sense;
    every morphism equation is then checked within ``tol``.

    Raises:
        NotIsomorphicError: On dimension mismatch, singular T, or residuals above ``tol``
    """
    if (first.alphabet_size, first.index_set, first.powo) != (second.alphabet_size, second.index_set, second.powo):
        raise NotIsomorphicError("Representations have different alphabets, index sets or readout sizes")
    if first.dim != second.dim:
        raise NotIsomorphicError(f"Dimensions differ: {first.dim} vs {second.dim}")
    if first.dim == 0:
        return np.zeros((0, 0))

    reach_first = first.reach_matrix()
    reach_second = second.reach_matrix()
    solution, *_ = np.linalg.lstsq(reach_first.T, reach_second.T, rcond=None)
    T = solution.T

    if numerical_rank(T, tol).rank < first.dim:
        raise NotIsomorphicError("Recovered map is singular; the representations are not both minimal")

    residuals = morphism_residuals(first, second, T)
    worst = max(residuals.values())
    if worst > tol:
        failing = max(residuals, key=residuals.get)
        raise NotIsomorphicError(f"Morphism equation {failing} fails with residual {worst:.3e}", worst)
    logger.info(f"Representations are isomorphic (max residual {worst:.3e})")
    return T
