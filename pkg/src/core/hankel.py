"""
Finite Hankel matrices of Markov parameters and of series families.

Words are enumerated length-first, then letter-wise (ε, 1, 2, 11, 12, …).
Block (r, c) of the Hankel matrix of an input-output map is the combined
Markov parameter M(v_c·v_r); rows are indexed by (v, i) with i ∈ 1..pD and
columns by (w, j) with j ∈ J_f = {0} ∪ {(q, z)}.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np

from src.config.config_loader import DEFAULT_AMBIGUITY_FACTOR, DEFAULT_RANK_TOL, HANKEL_MAX_ENTRIES
from src.core.errors import HankelSizeError, OutOfDepthError
from src.core.lss import ModeWord
from src.core.markov import MarkovFamily, combined_markov, words_of_length
from src.utils.numerics import RankDecision, numerical_rank
from src.utils.ui_helpers import create_progress_bar

logger = logging.getLogger(__name__)

IndexLabel = Hashable


def word_count(D: int, depth: int) -> int:
    """N(depth): number of words of length ≤ depth over D letters."""
    if depth < 0:
        return 0
    if D == 1:
        return depth + 1
    return (D ** (depth + 1) - 1) // (D - 1)


def enumerate_words(D: int, depth: int) -> List[ModeWord]:
    """All words of length ≤ depth in length-lexicographic order, ε first."""
    words = []
    for length in range(depth + 1):
        words.extend(words_of_length(D, length))
    return words


def word_rank(word: ModeWord, D: int) -> int:
    """0-based position of ``word`` in the length-lexicographic enumeration."""
    word.check_modes(D)
    position = 0
    for letter in word:
        position = position * D + (letter - 1)
    return word_count(D, len(word) - 1) + position


def word_unrank(position: int, D: int) -> ModeWord:
    """Inverse of word_rank."""
    if position < 0:
        raise ValueError(f"Word position must be ≥ 0, got {position}")
    length = 0
    while word_count(D, length) <= position:
        length += 1
    offset = position - word_count(D, length - 1)
    letters = []
    for _ in range(length):
        offset, digit = divmod(offset, D)
        letters.append(digit + 1)
    return ModeWord(tuple(reversed(letters)))


def lss_index_set(D: int, m: int) -> Tuple[IndexLabel, ...]:
    """J_f in canonical order: 0, (1,1) … (1,m), (2,1) … (D,m)."""
    return (0,) + tuple((q, z) for q in range(1, D + 1) for z in range(1, m + 1))


def format_index_label(label: IndexLabel) -> str:
    if isinstance(label, tuple):
        return "(" + ",".join(str(part) for part in label) + ")"
    return str(label)


@dataclass(frozen=True)
class HankelIndex:
    """
    One axis of a Hankel matrix: words up to ``depth`` crossed with ``offsets``.

    Flat indices are 1-based: flat = rank(word)·len(offsets) + position(offset) + 1.
    """

    alphabet_size: int
    depth: int
    offsets: Tuple[IndexLabel, ...]
    _positions: Dict[IndexLabel, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, '_positions', {label: k for k, label in enumerate(self.offsets)})

    @property
    def block_size(self) -> int:
        return len(self.offsets)

    @property
    def size(self) -> int:
        return word_count(self.alphabet_size, self.depth) * self.block_size

    def flat(self, word: ModeWord, offset: IndexLabel) -> int:
        if len(word) > self.depth:
            raise OutOfDepthError(f"Word '{word}' is longer than the Hankel depth {self.depth}")
        if offset not in self._positions:
            raise KeyError(f"Unknown Hankel offset {offset!r}")
        return word_rank(word, self.alphabet_size) * self.block_size + self._positions[offset] + 1

    def position(self, word: ModeWord, offset: IndexLabel) -> int:
        """0-based array position of (word, offset)."""
        return self.flat(word, offset) - 1

    def label(self, flat: int) -> Tuple[ModeWord, IndexLabel]:
        if not 1 <= flat <= self.size:
            raise IndexError(f"Flat index {flat} out of range 1..{self.size}")
        block, within = divmod(flat - 1, self.block_size)
        return word_unrank(block, self.alphabet_size), self.offsets[within]

    def labels(self) -> List[Tuple[ModeWord, IndexLabel]]:
        return [(word, offset)
                for word in enumerate_words(self.alphabet_size, self.depth)
                for offset in self.offsets]


@dataclass(frozen=True, eq=False)
class HankelBlockMatrix:
    """
    Dense finite Hankel matrix H_{L,M} with dual addressing.

    Rows: words of length ≤ row_depth crossed with 1..powo.
    Columns: words of length ≤ col_depth crossed with ``index_set``.
    """

    row_depth: int
    col_depth: int
    alphabet_size: int
    powo: int
    index_set: Tuple[IndexLabel, ...]
    data: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'index_set', tuple(self.index_set))
        data = np.array(self.data, dtype=float)
        expected = (self.rows.size, self.cols.size)
        if data.shape != expected:
            raise ValueError(f"Hankel data has shape {data.shape}, expected {expected}")
        data.setflags(write=False)
        object.__setattr__(self, 'data', data)

    @cached_property
    def rows(self) -> HankelIndex:
        return HankelIndex(self.alphabet_size, self.row_depth, tuple(range(1, self.powo + 1)))

    @cached_property
    def cols(self) -> HankelIndex:
        return HankelIndex(self.alphabet_size, self.col_depth, tuple(self.index_set))

    @property
    def shape(self) -> Tuple[int, int]:
        return self.data.shape

    def flat_entry(self, row: int, col: int) -> float:
        """Entry at 1-based flat indices."""
        return float(self.data[row - 1, col - 1])

    def entry(self, row_word: ModeWord, i: int, col_word: ModeWord, j: IndexLabel) -> float:
        return float(self.data[self.rows.position(row_word, i), self.cols.position(col_word, j)])

    def block(self, r: int, c: int) -> np.ndarray:
        """Block at 1-based block-row r and block-column c."""
        height, width = self.powo, len(self.index_set)
        return self.data[(r - 1) * height:r * height, (c - 1) * width:c * width]

    def column(self, word: ModeWord, j: IndexLabel) -> np.ndarray:
        return self.data[:, self.cols.position(word, j)]

    def submatrix(self, row_depth: int, col_depth: int) -> "HankelBlockMatrix":
        """Upper-left H_{row_depth, col_depth}."""
        if row_depth > self.row_depth or col_depth > self.col_depth:
            raise OutOfDepthError(
                f"Cannot take H_{{{row_depth},{col_depth}}} from H_{{{self.row_depth},{self.col_depth}}}"
            )
        rows = word_count(self.alphabet_size, row_depth) * self.powo
        cols = word_count(self.alphabet_size, col_depth) * len(self.index_set)
        return HankelBlockMatrix(row_depth, col_depth, self.alphabet_size, self.powo,
                                 self.index_set, self.data[:rows, :cols])

    def row_labels(self) -> List[str]:
        return [f"{word.to_text(self.alphabet_size)}:{offset}" for word, offset in self.rows.labels()]

    def column_labels(self) -> List[str]:
        return [f"{word.to_text(self.alphabet_size)}:{format_index_label(offset)}"
                for word, offset in self.cols.labels()]


def _check_size(rows: int, cols: int, max_entries: int) -> None:
    if rows * cols > max_entries:
        raise HankelSizeError(
            f"Hankel matrix would have {rows}x{cols} = {rows * cols:,} entries, above the cap "
            f"of {max_entries:,}; lower the depths or raise limits.hankel_max_entries"
        )


def build_hankel(markov: MarkovFamily, row_depth: int, col_depth: int,
                 max_entries: int = HANKEL_MAX_ENTRIES, progress: bool = False) -> HankelBlockMatrix:
    """
    Assemble H_{f,L,M} from combined Markov parameters.

    Args:
        markov: Markov parameters of f, table depth ≥ L + M + 2
        row_depth: L, longest row word
        col_depth: M, longest column word
        max_entries: Refuse to allocate more entries than this
        progress: Show a tqdm bar over block-columns

    Returns:
        HankelBlockMatrix with powo = pD and index set J_f
    """
    D, m, p = markov.D, markov.m, markov.p
    needed = row_depth + col_depth + 2
    if markov.depth is not None and markov.depth < needed:
        raise OutOfDepthError(
            f"H_{{{row_depth},{col_depth}}} needs Markov depth {needed}, table has {markov.depth}"
        )

    row_words = enumerate_words(D, row_depth)
    col_words = enumerate_words(D, col_depth)
    height, width = p * D, m * D + 1
    _check_size(len(row_words) * height, len(col_words) * width, max_entries)
    logger.info(f"Building Hankel H_{{{row_depth},{col_depth}}}: "
                f"{len(row_words) * height}x{len(col_words) * width}")

    data = np.zeros((len(row_words) * height, len(col_words) * width))
    cache: Dict[ModeWord, np.ndarray] = {}
    bar = create_progress_bar(len(col_words), "Assembling Hankel", unit="block") if progress else None
    try:
        for c, w in enumerate(col_words):
            for r, v in enumerate(row_words):
                key = w + v
                if key not in cache:
                    cache[key] = combined_markov(markov, key).block
                data[r * height:(r + 1) * height, c * width:(c + 1) * width] = cache[key]
            if bar is not None:
                bar.update(1)
    finally:
        if bar is not None:
            bar.close()

    return HankelBlockMatrix(row_depth, col_depth, D, height, lss_index_set(D, m), data)


def build_series_hankel(family, row_depth: int, col_depth: int,
                        max_entries: int = HANKEL_MAX_ENTRIES) -> HankelBlockMatrix:
    """
    Hankel of a series family: [H]_{(v,i),(w,j)} = [S_j(w·v)]_i.

    ``family`` needs ``alphabet_size``, ``index_set``, ``powo`` and ``s(j, word)``.
    """
    X, J, powo = family.alphabet_size, tuple(family.index_set), family.powo
    row_words = enumerate_words(X, row_depth)
    col_words = enumerate_words(X, col_depth)
    _check_size(len(row_words) * powo, len(col_words) * len(J), max_entries)

    data = np.zeros((len(row_words) * powo, len(col_words) * len(J)))
    for c, w in enumerate(col_words):
        for r, v in enumerate(row_words):
            word = w + v
            for k, j in enumerate(J):
                data[r * powo:(r + 1) * powo, c * len(J) + k] = family.s(j, word)
    return HankelBlockMatrix(row_depth, col_depth, X, powo, J, data)


def hankel_rank(hankel: HankelBlockMatrix, tol: float = DEFAULT_RANK_TOL,
                ambiguity_factor: float = DEFAULT_AMBIGUITY_FACTOR) -> RankDecision:
    """Numerical rank of H with its full singular spectrum."""
    decision = numerical_rank(hankel.data, tol, ambiguity_factor)
    logger.info(f"Hankel H_{{{hankel.row_depth},{hankel.col_depth}}} has numerical rank {decision.rank}")
    return decision


def rank_profile(markov: MarkovFamily, max_depth: int, tol: float = DEFAULT_RANK_TOL,
                 max_entries: int = HANKEL_MAX_ENTRIES) -> List[Tuple[int, int]]:
    """
    Ranks of H_{k,k} for k = 0..max_depth.

    The matrix is built once at the largest depth; smaller ones are its
    upper-left corners.
    """
    largest = build_hankel(markov, max_depth, max_depth, max_entries)
    return [(k, hankel_rank(largest.submatrix(k, k), tol).rank) for k in range(max_depth + 1)]


def stabilization_depth(profile: Sequence[Tuple[int, int]]) -> Optional[int]:
    """Smallest k after which the rank profile stays constant, None if it is still rising at the end."""
    if len(profile) < 2 or profile[-1][1] != profile[-2][1]:
        return None
    final = profile[-1][1]
    depth = profile[-1][0]
    for k, rank in reversed(profile):
        if rank != final:
            break
        depth = k
    return depth
