"""
Dictionary between switched systems and rational representations.

Input-output map f  ->  series family Ψ_f over the alphabet 1..D, index set J_f
System Σ            ->  representation R_Σ = ({A_q}, [x0 B_1 … B_D], [C_1; …; C_D])
Representation R    ->  system Σ_R (inverse of the above)
"""

import logging
from typing import Tuple

import numpy as np

from src.core.errors import DimensionMismatchError
from src.core.hankel import IndexLabel, lss_index_set
from src.core.lss import ModeWord, SwitchedLinearSystem
from src.core.markov import MarkovFamily
from src.core.rational import RationalRepresentation, SeriesFamily

logger = logging.getLogger(__name__)

__all__ = ['lss_index_set', 'psi_from_markov', 'repr_of_lss', 'lss_of_repr', 'lss_dims_of_repr']


def psi_from_markov(markov: MarkovFamily) -> SeriesFamily:
    """
    Ψ_f with coefficients in ℝ^{pD}.

    𝕊_0(w) stacks S0(w·q) over q; 𝕊_(q,j)(w) stacks S_j(q·w·q') over q'.
    A depth-L Markov table yields a family of depth L − 2.
    """
    D, m, p = markov.D, markov.m, markov.p

    def source(label: IndexLabel, word: ModeWord) -> np.ndarray:
        if label == 0:
            return np.concatenate([markov.s0(word + ModeWord.of(q)) for q in range(1, D + 1)])
        q0, j = label
        return np.concatenate([markov.sj(q0, word, q, j) for q in range(1, D + 1)])

    depth = None if markov.depth is None else markov.depth - 2
    return SeriesFamily(D, lss_index_set(D, m), p * D, source, depth)


def repr_of_lss(system: SwitchedLinearSystem) -> RationalRepresentation:
    """R_Σ: B_0 = x0, B_(q,l) = column l of B_q, C = [C_1; …; C_D]."""
    B = np.hstack([system.x0.reshape(-1, 1), *system.B])
    C = np.vstack(system.C)
    return RationalRepresentation(system.A, B, C, lss_index_set(system.D, system.m))


def lss_dims_of_repr(representation: RationalRepresentation) -> Tuple[int, int, int]:
    """(D, m, p) encoded by a representation over J_f, or DimensionMismatchError."""
    D = representation.alphabet_size
    if representation.powo % D != 0 or representation.powo == 0:
        raise DimensionMismatchError(
            f"Readout has {representation.powo} rows, not a positive multiple of D={D}"
        )
    if (len(representation.index_set) - 1) % D != 0 or len(representation.index_set) <= 1:
        raise DimensionMismatchError(
            f"Index set of size {len(representation.index_set)} does not have the form mD + 1"
        )
    p = representation.powo // D
    m = (len(representation.index_set) - 1) // D
    if representation.index_set != lss_index_set(D, m):
        raise DimensionMismatchError(f"Index set {representation.index_set} is not J_f for D={D}, m={m}")
    return D, m, p


def lss_of_repr(representation: RationalRepresentation) -> SwitchedLinearSystem:
    """Σ_R: x0 = B_0, B_q = [B_(q,1) … B_(q,m)], C_q = rows (q−1)p+1 … qp of C."""
    D, m, p = lss_dims_of_repr(representation)
    B = representation.B
    C = representation.C
    return SwitchedLinearSystem(
        A=representation.A,
        B=tuple(B[:, 1 + (q - 1) * m:1 + q * m] for q in range(1, D + 1)),
        C=tuple(C[(q - 1) * p:q * p, :] for q in range(1, D + 1)),
        x0=B[:, 0],
    )
