"""
Realization algorithms for switched systems.

Rank tests, the reachability/observability reductions and minimization,
systems read off a Hankel matrix (explicit column basis or SVD
factorization), and isomorphism of minimal systems. Every reduction runs
through the rational-representation engine via the bridge.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.config.config_loader import (
    DEFAULT_AMBIGUITY_FACTOR,
    DEFAULT_MORPHISM_TOL,
    DEFAULT_RANK_TOL,
    DEFAULT_VALIDATION_TOL,
)
from src.core.bridge import lss_of_repr, repr_of_lss
from src.core.errors import DimensionMismatchError, HypothesisViolatedError, NotIsomorphicError
from src.core.hankel import HankelBlockMatrix, IndexLabel, build_hankel, lss_index_set
from src.core.lss import LssMorphism, ModeWord, SwitchedLinearSystem, check_morphism
from src.core.markov import MarkovFamily
from src.core.rational import (
    obs_reduce,
    reach_reduce,
    realization_algorithm,
    repr_from_hankel,
    repr_isomorphism,
)
from src.utils.numerics import RankDecision, numerical_rank, relative_residual

logger = logging.getLogger(__name__)


def reach_matrix(system: SwitchedLinearSystem) -> np.ndarray:
    """R(Σ) = [A_v·B̃] over words |v| < n, B̃ = [x0, B_1, …, B_D]."""
    return repr_of_lss(system).reach_matrix()


def obs_matrix(system: SwitchedLinearSystem) -> np.ndarray:
    """O(Σ) = [C̃·A_v] stacked over words |v| < n, C̃ = [C_1; …; C_D]."""
    return repr_of_lss(system).obs_matrix()


def reachability_rank(system: SwitchedLinearSystem, tol: float = DEFAULT_RANK_TOL,
                      ambiguity_factor: float = DEFAULT_AMBIGUITY_FACTOR) -> RankDecision:
    return numerical_rank(reach_matrix(system), tol, ambiguity_factor)


def observability_rank(system: SwitchedLinearSystem, tol: float = DEFAULT_RANK_TOL,
                       ambiguity_factor: float = DEFAULT_AMBIGUITY_FACTOR) -> RankDecision:
    return numerical_rank(obs_matrix(system), tol, ambiguity_factor)


def is_span_reachable(system: SwitchedLinearSystem, tol: float = DEFAULT_RANK_TOL) -> bool:
    """Rank R(Σ) = n; vacuously true for n = 0."""
    return system.n == 0 or reachability_rank(system, tol).rank == system.n


def is_observable(system: SwitchedLinearSystem, tol: float = DEFAULT_RANK_TOL) -> bool:
    """Rank O(Σ) = n; vacuously true for n = 0."""
    return system.n == 0 or observability_rank(system, tol).rank == system.n


def is_minimal(system: SwitchedLinearSystem, tol: float = DEFAULT_RANK_TOL) -> bool:
    return is_span_reachable(system, tol) and is_observable(system, tol)


def _morphism(source: SwitchedLinearSystem, target: SwitchedLinearSystem, T: np.ndarray,
              morphism_tol: float) -> LssMorphism:
    return LssMorphism(T, check_morphism(source, target, T, morphism_tol))


def reach_reduce_lss(system: SwitchedLinearSystem,
                     tol: float = DEFAULT_RANK_TOL,
                     morphism_tol: float = DEFAULT_MORPHISM_TOL) -> Tuple[SwitchedLinearSystem, LssMorphism]:
    """
    Span-reachable part of Σ.

    Returns:
        (Σ_r, V) with V: Σ_r → Σ the embedding of the reachable subspace
    """
    reduced, embedding = reach_reduce(repr_of_lss(system), tol)
    reachable = lss_of_repr(reduced)
    return reachable, _morphism(reachable, system, embedding, morphism_tol)


def obs_reduce_lss(system: SwitchedLinearSystem,
                   tol: float = DEFAULT_RANK_TOL,
                   morphism_tol: float = DEFAULT_MORPHISM_TOL) -> Tuple[SwitchedLinearSystem, LssMorphism]:
    """
    Observable quotient of Σ.

    Returns:
        (Σ_o, P) with P: Σ → Σ_o the projection onto the observable part
    """
    reduced, projection = obs_reduce(repr_of_lss(system), tol)
    observable = lss_of_repr(reduced)
    return observable, _morphism(system, observable, projection, morphism_tol)


@dataclass(frozen=True, eq=False)
class Reduction:
    """
    Minimization as a span of morphisms Σ ← Σ_r → Σ_min.

    ``embedding`` maps Σ_r into Σ and ``quotient`` maps Σ_r onto Σ_min;
    every morphism report is checked against ``morphism_tol``.
    """

    source: SwitchedLinearSystem
    reachable: SwitchedLinearSystem
    system: SwitchedLinearSystem
    embedding: LssMorphism
    quotient: LssMorphism
    morphism_tol: float = DEFAULT_MORPHISM_TOL

    def direct_morphism(self) -> Optional[LssMorphism]:
        """
        A single morphism between Σ and Σ_min when one exists.

        Σ_min → Σ when the quotient step removed nothing, Σ → Σ_min when Σ
        was already span-reachable; None otherwise.
        """
        V, U = self.embedding.T, self.quotient.T
        if self.reachable.n == self.system.n:
            return _morphism(self.system, self.source, V @ np.linalg.inv(U) if U.size else V[:, :0],
                             self.morphism_tol)
        if self.reachable.n == self.source.n:
            return _morphism(self.source, self.system, U @ np.linalg.inv(V), self.morphism_tol)
        return None


def reduce_lss(system: SwitchedLinearSystem, tol: float = DEFAULT_RANK_TOL,
               morphism_tol: float = DEFAULT_MORPHISM_TOL) -> Reduction:
    """Minimal realization of y_Σ together with its reduction maps."""
    reachable_repr, embedding = reach_reduce(repr_of_lss(system), tol)
    minimal_repr, quotient = obs_reduce(reachable_repr, tol)
    reachable = lss_of_repr(reachable_repr)
    minimal_system = lss_of_repr(minimal_repr)
    logger.info(f"Minimization: {system.n} -> {reachable.n} (reachable) -> {minimal_system.n} (minimal)")
    return Reduction(
        source=system,
        reachable=reachable,
        system=minimal_system,
        embedding=_morphism(reachable, system, embedding, morphism_tol),
        quotient=_morphism(reachable, minimal_system, quotient, morphism_tol),
        morphism_tol=morphism_tol,
    )


def minimize_lss(system: SwitchedLinearSystem, tol: float = DEFAULT_RANK_TOL) -> SwitchedLinearSystem:
    """Span-reachable, observable system with the same input-output map."""
    return reduce_lss(system, tol).system


def _check_hankel_dims(hankel: HankelBlockMatrix, dims: Tuple[int, int, int]) -> None:
    D, m, p = dims
    if (hankel.alphabet_size, hankel.powo, hankel.index_set) != (D, p * D, lss_index_set(D, m)):
        raise DimensionMismatchError(
            f"Hankel matrix does not match dims (D, m, p) = {dims}: alphabet {hankel.alphabet_size}, "
            f"row block {hankel.powo}, {len(hankel.index_set)} column offsets"
        )


def lss_from_hankel(hankel: HankelBlockMatrix, dims: Tuple[int, int, int],
                    tol: float = DEFAULT_RANK_TOL,
                    basis_columns: Optional[Sequence[Tuple[ModeWord, IndexLabel]]] = None,
                    dim_bound: Optional[int] = None) -> SwitchedLinearSystem:
    """
    Minimal system on the column space of H_f.

    x0 comes from column (ε, 0), B_q from columns (ε, (q, l)), C_q from rows
    (ε, p(q−1)+1 … pq), and A_q shifts column (w, j) to (w·q, j).
    """
    _check_hankel_dims(hankel, dims)
    return lss_of_repr(repr_from_hankel(hankel, tol, basis_columns, dim_bound))


@dataclass(frozen=True, eq=False)
class RealizationResult:
    """Output of the factorization realization with its validation record."""

    system: SwitchedLinearSystem
    rank: RankDecision
    residual: float
    tolerances: Dict[str, float] = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return self.system.n


def markov_residual(system: SwitchedLinearSystem, markov: MarkovFamily, depth: int) -> float:
    """Max Markov-parameter difference up to ``depth``, relative to the data's largest entry."""
    produced = MarkovFamily.from_system(system)
    worst, scale = 0.0, 0.0
    for kind, word, value in markov.truncate(depth).items():
        other = produced.s0(word) if kind == 'S0' else produced.s(word)
        worst = max(worst, float(np.max(np.abs(other - value), initial=0.0)))
        scale = max(scale, float(np.max(np.abs(value), initial=0.0)))
    return relative_residual(np.array([worst]), scale)


def algorithm_1(hankel: HankelBlockMatrix, dims: Tuple[int, int, int],
                tol: float = DEFAULT_RANK_TOL,
                validation_tol: float = DEFAULT_VALIDATION_TOL,
                markov: Optional[MarkovFamily] = None,
                ambiguity_factor: float = DEFAULT_AMBIGUITY_FACTOR) -> RealizationResult:
    """
    Minimal realization from H_{f,N,N+1} via H = O·R̂.

    [x0, B_1, …, B_D] are the first mD+1 columns of R̂, [C_1; …; C_D] the
    first pD rows of O, and A_q = R̂_q·R̄⁺. The rank-stabilization hypothesis
    cannot be checked from finite data, so the produced system is validated
    afterwards: its own Hankel matrix at the same depths must reproduce the
    input, and so must its Markov parameters when ``markov`` is given.

    Raises:
        HypothesisViolatedError: If the validation residual exceeds ``validation_tol``
    """
    _check_hankel_dims(hankel, dims)
    decision = numerical_rank(hankel.data, tol, ambiguity_factor)
    system = lss_of_repr(realization_algorithm(hankel, tol))

    rebuilt = build_hankel(MarkovFamily.from_system(system), hankel.row_depth, hankel.col_depth)
    residual = relative_residual(rebuilt.data - hankel.data, float(np.max(np.abs(hankel.data), initial=0.0)))
    if markov is not None and markov.depth is not None:
        residual = max(residual, markov_residual(system, markov, markov.depth))

    tolerances = {'rank_tol': tol, 'validation_tol': validation_tol}
    logger.info(f"Factorization realization: n={system.n}, validation residual {residual:.3e}")
    if residual > validation_tol:
        raise HypothesisViolatedError(
            f"Realized system reproduces the data only up to residual {residual:.3e} "
            f"(tolerance {validation_tol:g}); the Hankel depth is likely below rank stabilization",
            residual,
        )
    return RealizationResult(system, decision, residual, tolerances)


def lss_isomorphism(first: SwitchedLinearSystem, second: SwitchedLinearSystem,
                    tol: float = DEFAULT_MORPHISM_TOL) -> LssMorphism:
    """
    Isomorphism T: Σ1 → Σ2 between minimal systems.

    Raises:
        NotIsomorphicError: If no invertible T satisfies the morphism equations
    """
    if first.dims != second.dims:
        raise NotIsomorphicError(f"Systems differ in (D, m, p): {first.dims} vs {second.dims}")
    T = repr_isomorphism(repr_of_lss(first), repr_of_lss(second), tol)
    report = check_morphism(first, second, T, tol)
    if not report.holds:
        raise NotIsomorphicError(
            f"Recovered map fails the morphism equations (residual {report.max_residual:.3e})",
            report.max_residual,
        )
    return LssMorphism(T, report)
