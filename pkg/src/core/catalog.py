"""
Golden example systems and input-output maps.

reachability-gap: a 3-state, single-input, single-output system with two
    modes that is observable but not span-reachable, plus its 2-state
    minimal form.
rank-two-series: the closed-form input-output map realized by that minimal
    form, given directly through its Markov parameters. Its Hankel matrix
    has exactly two distinct non-zero columns.
"""

from typing import Dict, List, Tuple

import numpy as np

from src.core.lss import IoOracle, ModeWord, SwitchedLinearSystem
from src.core.markov import MarkovFamily, words_of_length

CATALOG: Dict[str, str] = {
    'reachability-gap': "3-state observable, non-span-reachable system and its 2-state minimal form",
    'rank-two-series': "Closed-form Markov parameters of a map whose Hankel matrix has rank 2",
}


def reachability_gap_system() -> SwitchedLinearSystem:
    """3-state system whose reachable states all have third coordinate 0."""
    return SwitchedLinearSystem(
        A=(
            np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 1.0]]),
            np.array([[0.0, 1.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]]),
        ),
        B=(np.zeros((3, 1)), np.array([[0.0], [1.0], [0.0]])),
        C=(np.array([[1.0, 0.0, 0.0]]), np.array([[0.0, 0.0, 1.0]])),
        x0=np.array([0.0, 1.0, 0.0]),
    )


def reachability_gap_minimal() -> SwitchedLinearSystem:
    """Minimal 2-state realization of the same input-output map."""
    return SwitchedLinearSystem(
        A=(
            np.array([[0.0, 0.0], [1.0, 0.0]]),
            np.array([[1.0, 0.0], [1.0, 0.0]]),
        ),
        B=(np.zeros((2, 1)), np.array([[1.0], [0.0]])),
        C=(np.array([[0.0, 1.0]]), np.zeros((1, 2))),
        x0=np.array([1.0, 0.0]),
    )


def _is_rank_two_word(word: ModeWord) -> bool:
    """word = 2^{t-1}1 or 2^{t-2}11 with t = |word| ≥ 2."""
    t = len(word)
    if t < 2 or word[-1] != 1:
        return False
    head = word.letters[:-1]
    return all(letter == 2 for letter in head) or (
        head[-1] == 1 and all(letter == 2 for letter in head[:-1])
    )


def rank_two_s0(word: ModeWord) -> float:
    """S0(word) = 1 iff |word| ≥ 2 and word ∈ {2^{t-1}1, 2^{t-2}11}."""
    return 1.0 if _is_rank_two_word(word) else 0.0


def rank_two_s1(word: ModeWord) -> float:
    """S1(word): same pattern, but only for |word| ≥ 3."""
    return 1.0 if len(word) > 2 and _is_rank_two_word(word) else 0.0


def rank_two_oracle() -> IoOracle:
    """f(v, u) = S0(v) + Σ_{k<t} S1(v_{k|t}) u_k on D = 2 modes, m = p = 1."""
    def respond(modes: ModeWord, inputs: np.ndarray) -> np.ndarray:
        t = len(modes) - 1
        value = rank_two_s0(modes)
        for k in range(t):
            value += rank_two_s1(modes.sub_word(k, t)) * inputs[k, 0]
        return np.array([value])

    return IoOracle(respond, D=2, m=1, p=1)


def rank_two_markov(depth: int) -> MarkovFamily:
    """Markov table of the rank-two map up to ``depth``, straight from the closed form."""
    s0_table, s_table = {}, {}
    for length in range(1, depth + 1):
        for word in words_of_length(2, length):
            s0_table[word] = np.array([rank_two_s0(word)])
            if length >= 2:
                s_table[word] = np.array([[rank_two_s1(word)]])
    return MarkovFamily(2, 1, 1, s0_table, s_table, depth)


def rank_two_basis() -> List[Tuple[ModeWord, int]]:
    """Hankel columns (ε, 0) and (1, 0); in this basis the realization is the minimal 2-state system."""
    return [(ModeWord(), 0), (ModeWord.of(1), 0)]
