"""
Markov parameters of switched-system input-output maps.

S0(v·q)      = f_{vq}(0, ..., 0)
S_j(q0·v·q)  = f_{q0vq}(e_j, 0, ..., 0) - f_{q0vq}(0, ..., 0)

A MarkovFamily is either table-backed (finite depth, built by
``extract_markov``) or lazy (oracle- or system-backed, unlimited depth).
"""

import logging
from dataclasses import dataclass
from itertools import product
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from src.config.config_loader import DEFAULT_GCR_TOL, GCR_MAX_EXPERIMENTS
from src.core.errors import DimensionMismatchError, OutOfDepthError
from src.core.lss import (
    HybridWord,
    IoOracle,
    ModeWord,
    SwitchedLinearSystem,
    word_matrix_product,
)
from src.utils.ui_helpers import create_progress_bar

logger = logging.getLogger(__name__)

__all__ = [
    'IoOracle', 'MarkovFamily', 'CombinedMarkov', 'GcrReport',
    'extract_markov', 'gcr_evaluate', 'check_gcr', 'combined_markov',
    'words_of_length', 'default_input_samples',
]


def _readonly(value, shape: Tuple[int, ...]) -> np.ndarray:
    array = np.array(value, dtype=float).reshape(shape)
    array.setflags(write=False)
    return array


def words_of_length(D: int, length: int) -> Iterator[ModeWord]:
    """All words of exactly ``length`` letters, in lexicographic order."""
    for letters in product(range(1, D + 1), repeat=length):
        yield ModeWord(letters)


class MarkovFamily:
    """
    The maps S0 and S_j of an input-output map.

    Table-backed families store S0(w) ∈ R^p for 1 ≤ |w| ≤ depth and
    S(w) = [S_1(w) … S_m(w)] ∈ R^{p×m} for 2 ≤ |w| ≤ depth; any access
    beyond ``depth`` raises OutOfDepthError. Lazy families have depth None
    and fill a private cache on first access to each word.

    Every returned value is a read-only array, so neither stored tables nor
    cached entries can be changed through the public accessors.
    """

    def __init__(self, D: int, m: int, p: int,
                 s0_table: Optional[Dict[ModeWord, np.ndarray]] = None,
                 s_table: Optional[Dict[ModeWord, np.ndarray]] = None,
                 depth: Optional[int] = None,
                 s0_source: Optional[Callable[[ModeWord], np.ndarray]] = None,
                 s_source: Optional[Callable[[ModeWord], np.ndarray]] = None):
        self.D = D
        self.m = m
        self.p = p
        self.depth = depth
        self._s0: Dict[ModeWord, np.ndarray] = {
            word: _readonly(value, (p,)) for word, value in (s0_table or {}).items()
        }
        self._s: Dict[ModeWord, np.ndarray] = {
            word: _readonly(value, (p, m)) for word, value in (s_table or {}).items()
        }
        self._s0_source = s0_source
        self._s_source = s_source

        if depth is None and (s0_source is None or s_source is None):
            raise ValueError("A lazy Markov family needs both S0 and S sources")

    def __repr__(self) -> str:
        depth = "lazy" if self.depth is None else f"depth={self.depth}"
        return f"MarkovFamily(D={self.D}, m={self.m}, p={self.p}, {depth})"

    @property
    def is_lazy(self) -> bool:
        return self.depth is None

    def _check(self, word: ModeWord, minimum: int) -> None:
        word.check_modes(self.D)
        if len(word) < minimum:
            raise ValueError(f"Markov parameter needs a word of length ≥ {minimum}, got '{word}'")
        if self.depth is not None and len(word) > self.depth:
            raise OutOfDepthError(
                f"Word '{word}' of length {len(word)} exceeds the Markov table depth {self.depth}"
            )

    def s0(self, word: ModeWord) -> np.ndarray:
        """S0(word), |word| ≥ 1."""
        self._check(word, 1)
        if word not in self._s0:
            if self._s0_source is None:
                raise OutOfDepthError(f"S0('{word}') is missing from the Markov table")
            self._s0[word] = _readonly(self._s0_source(word), (self.p,))
        return self._s0[word]

    def s(self, word: ModeWord) -> np.ndarray:
        """S(word) = [S_1(word) … S_m(word)] as a p × m matrix, |word| ≥ 2."""
        self._check(word, 2)
        if word not in self._s:
            if self._s_source is None:
                raise OutOfDepthError(f"S('{word}') is missing from the Markov table")
            self._s[word] = _readonly(self._s_source(word), (self.p, self.m))
        return self._s[word]

    def sj(self, q0: int, v: ModeWord, q: int, j: int) -> np.ndarray:
        """S_j(q0·v·q) for input channel j ∈ 1..m."""
        if not 1 <= j <= self.m:
            raise DimensionMismatchError(f"Input channel {j} out of range 1..{self.m}")
        return self.s(ModeWord.of(q0) + v + ModeWord.of(q))[:, j - 1]

    def truncate(self, depth: int) -> "MarkovFamily":
        """Table-backed copy covering words up to ``depth``."""
        if self.depth is not None and depth > self.depth:
            raise OutOfDepthError(f"Cannot extend a depth-{self.depth} table to depth {depth}")
        s0_table, s_table = {}, {}
        for length in range(1, depth + 1):
            for word in words_of_length(self.D, length):
                s0_table[word] = self.s0(word)
                if length >= 2:
                    s_table[word] = self.s(word)
        return MarkovFamily(self.D, self.m, self.p, s0_table, s_table, depth)

    def items(self) -> Iterator[Tuple[str, ModeWord, np.ndarray]]:
        """Table entries as ('S0' | 'S', word, value), by length then lexicographically."""
        if self.depth is None:
            raise OutOfDepthError("A lazy Markov family has no finite table to iterate")
        for length in range(1, self.depth + 1):
            for word in words_of_length(self.D, length):
                yield 'S0', word, self.s0(word)
                if length >= 2:
                    yield 'S', word, self.s(word)

    @classmethod
    def from_oracle(cls, oracle: IoOracle) -> "MarkovFamily":
        """Lazy family querying ``oracle`` with the two-experiment formula on demand."""
        def s0(word: ModeWord) -> np.ndarray:
            return oracle.evaluate(HybridWord.zero(word, oracle.m))

        def s(word: ModeWord) -> np.ndarray:
            base = s0(word)
            return np.column_stack([
                oracle.evaluate(HybridWord.impulse(word, oracle.m, j)) - base
                for j in range(1, oracle.m + 1)
            ])

        return cls(oracle.D, oracle.m, oracle.p, s0_source=s0, s_source=s)

    @classmethod
    def from_system(cls, system: SwitchedLinearSystem) -> "MarkovFamily":
        """Lazy family from the matrix formulas C_q A_v x0 and C_q A_v B_{q0}."""
        def s0(word: ModeWord) -> np.ndarray:
            v, q = word[:-1], word[-1]
            return system.C[q - 1] @ word_matrix_product(system.A, v, system.n) @ system.x0

        def s(word: ModeWord) -> np.ndarray:
            q0, v, q = word[0], word[1:-1], word[-1]
            return system.C[q - 1] @ word_matrix_product(system.A, v, system.n) @ system.B[q0 - 1]

        return cls(system.D, system.m, system.p, s0_source=s0, s_source=s)


@dataclass(frozen=True, eq=False)
class CombinedMarkov:
    """
    The pD × (mD+1) block M(v).

    Block-row q holds [S0(v·q), S(1·v·q), …, S(D·v·q)].
    """

    v: ModeWord
    block: np.ndarray


@dataclass(frozen=True)
class GcrReport:
    """Outcome of a finite convolution-representation check."""

    holds: bool
    max_residual: float
    experiments: int
    tol: float
    worst_word: Optional[str] = None


def extract_markov(oracle: IoOracle, depth: int, progress: bool = False) -> MarkovFamily:
    """
    Tabulate Markov parameters of ``oracle`` for every word up to ``depth``.

    Each word of length t costs one zero-input experiment plus m impulse
    experiments when t ≥ 2, so the table has D + … + D^depth entries.

    Args:
        oracle: Input-output map to query
        depth: Longest word length covered (≥ 1)
        progress: Show a tqdm progress bar over words

    Returns:
        Table-backed MarkovFamily of the given depth
    """
    if depth < 1:
        raise ValueError(f"Markov depth must be ≥ 1, got {depth}")

    D, m = oracle.D, oracle.m
    total = sum(D ** t for t in range(1, depth + 1))
    logger.info(f"Extracting Markov parameters: D={D}, depth={depth}, {total} words")

    s0_table: Dict[ModeWord, np.ndarray] = {}
    s_table: Dict[ModeWord, np.ndarray] = {}
    bar = create_progress_bar(total, "Extracting Markov parameters", unit="word") if progress else None
    try:
        for length in range(1, depth + 1):
            for word in words_of_length(D, length):
                base = oracle.evaluate(HybridWord.zero(word, m))
                s0_table[word] = base
                if length >= 2:
                    s_table[word] = np.column_stack([
                        oracle.evaluate(HybridWord.impulse(word, m, j)) - base
                        for j in range(1, m + 1)
                    ])
                if bar is not None:
                    bar.update(1)
    finally:
        if bar is not None:
            bar.close()

    return MarkovFamily(D, m, oracle.p, s0_table, s_table, depth)


def gcr_evaluate(markov: MarkovFamily, word: HybridWord) -> np.ndarray:
    """
    Convolution-representation value

        S0(v_{0|t-1} q_t) + Σ_{k<t} S(q_k v_{k+1|t-1} q_t) u_k
    """
    if word.input_dim != markov.m:
        raise DimensionMismatchError(f"Inputs have dimension {word.input_dim}, family has m={markov.m}")
    modes = word.modes
    t = len(modes) - 1
    value = markov.s0(modes).copy()
    for k in range(t):
        value += markov.s(modes.sub_word(k, t)) @ word.inputs[k]
    return value


def default_input_samples(m: int) -> List[np.ndarray]:
    """{0, e_1, …, e_m, 2e_1}: separates affine from non-affine behaviour."""
    samples = [np.zeros(m)]
    for j in range(m):
        unit = np.zeros(m)
        unit[j] = 1.0
        samples.append(unit)
    doubled = np.zeros(m)
    doubled[0] = 2.0
    samples.append(doubled)
    return samples


def _input_sequences(samples: Sequence[np.ndarray], length: int, share: int,
                     rng: np.random.Generator) -> Iterator[Tuple[np.ndarray, ...]]:
    """Every sequence when ``share`` covers them all, else ``share`` uniform random draws."""
    if len(samples) ** length <= share:
        yield from product(samples, repeat=length)
        return
    for picks in rng.integers(len(samples), size=(share, length)):
        yield tuple(samples[index] for index in picks)


def check_gcr(oracle: IoOracle, markov: MarkovFamily, depth: int,
              sample_inputs: Optional[Sequence[np.ndarray]] = None,
              tol: float = DEFAULT_GCR_TOL,
              max_experiments: int = GCR_MAX_EXPERIMENTS,
              seed: int = 0) -> GcrReport:
    """
    Compare ``oracle`` with the convolution representation built from ``markov``.

    Every mode word up to ``depth`` is crossed with per-step inputs from
    ``sample_inputs``. At most ``max_experiments`` experiments run: when
    there are more words than that, a random subset of words is checked,
    and a word whose input sequences do not fit its share of the budget
    gets uniformly drawn sequences. Unused budget passes on to longer words.
    Draws come from ``seed``, so a report is reproducible.
    Passing is necessary for a convolution representation, not sufficient.
    """
    if markov.depth is not None and depth > markov.depth:
        raise OutOfDepthError(f"Check depth {depth} exceeds the Markov table depth {markov.depth}")
    if max_experiments < 1:
        raise ValueError(f"max_experiments must be ≥ 1, got {max_experiments}")
    samples = list(sample_inputs) if sample_inputs is not None else default_input_samples(oracle.m)
    rng = np.random.default_rng(seed)

    words = [word for length in range(1, depth + 1) for word in words_of_length(oracle.D, length)]
    if len(words) > max_experiments:
        picks = np.sort(rng.choice(len(words), size=max_experiments, replace=False))
        words = [words[index] for index in picks]
        logger.info(f"Convolution check samples {len(words)} words up to length {depth}")

    worst, worst_word, count = 0.0, None, 0
    for position, word in enumerate(words):
        share = (max_experiments - count) // (len(words) - position)
        for inputs in _input_sequences(samples, len(word), share, rng):
            hybrid = HybridWord(word, np.vstack(inputs))
            residual = float(np.max(np.abs(oracle.evaluate(hybrid) - gcr_evaluate(markov, hybrid))))
            count += 1
            if residual > worst:
                worst, worst_word = residual, word.to_text(oracle.D)

    holds = worst <= tol
    if not holds:
        logger.info(f"Convolution check failed: residual {worst:.3e} on word {worst_word}")
    return GcrReport(holds, worst, count, tol, worst_word)


def combined_markov(markov: MarkovFamily, v: ModeWord) -> CombinedMarkov:
    """Assemble M(v); needs |v| + 2 within the family depth."""
    if markov.depth is not None and len(v) + 2 > markov.depth:
        raise OutOfDepthError(
            f"Combined parameter for '{v}' needs depth {len(v) + 2}, table has {markov.depth}"
        )
    D, m, p = markov.D, markov.m, markov.p
    block = np.zeros((p * D, m * D + 1))
    for q in range(1, D + 1):
        rows = slice((q - 1) * p, q * p)
        block[rows, 0] = markov.s0(v + ModeWord.of(q))
        for q0 in range(1, D + 1):
            cols = slice(1 + (q0 - 1) * m, 1 + q0 * m)
            block[rows, cols] = markov.s(ModeWord.of(q0) + v + ModeWord.of(q))
    block.setflags(write=False)
    return CombinedMarkov(v, block)
