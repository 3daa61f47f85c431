"""
Discrete-time linear switched systems.

    x_{t+1} = A_{q_t} x_t + B_{q_t} u_t,    y_t = C_{q_t} x_t

Modes are 1-based on every external surface (1..D); matrices are stored in
0-based tuples. All values are immutable after construction.
"""

import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Dict, Iterable, Iterator, Optional, Sequence, Tuple

import numpy as np

from src.core.errors import DimensionMismatchError, InvalidModeError, OutOfDepthError
from src.utils.numerics import relative_residual

logger = logging.getLogger(__name__)

EPSILON_TEXT = "-"


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def _needs_commas(mode_count: int) -> bool:
    return mode_count > 9


@dataclass(frozen=True)
class ModeWord:
    """A finite word over the mode alphabet {1, ..., D}; the empty word is ε."""

    letters: Tuple[int, ...] = ()

    def __post_init__(self):
        letters = tuple(int(letter) for letter in self.letters)
        for letter in letters:
            if letter < 1:
                raise InvalidModeError(f"Mode letters start at 1, got {letter}")
        object.__setattr__(self, 'letters', letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __getitem__(self, index):
        if isinstance(index, slice):
            return ModeWord(self.letters[index])
        return self.letters[index]

    def __add__(self, other: "ModeWord") -> "ModeWord":
        return ModeWord(self.letters + tuple(other))

    def __str__(self) -> str:
        return self.to_text()

    def to_text(self, mode_count: Optional[int] = None) -> str:
        """
        Text form read back by ``parse``.

        Letters are comma-separated whenever the alphabet has more than nine
        modes, so "12" and "1,2" stay distinct. Without ``mode_count`` the
        largest letter of the word stands in for D.
        """
        if not self.letters:
            return EPSILON_TEXT
        if _needs_commas(mode_count if mode_count is not None else max(self.letters)):
            return ",".join(str(letter) for letter in self.letters)
        return "".join(str(letter) for letter in self.letters)

    def __repr__(self) -> str:
        return f"ModeWord('{self}')"

    @classmethod
    def parse(cls, text: str, mode_count: Optional[int] = None) -> "ModeWord":
        """
        Parse "-" (ε), a digit string "122" or a comma list "1,2,2".

        With ``mode_count`` above nine a comma-free token is a single letter.
        """
        text = text.strip()
        if text in (EPSILON_TEXT, ""):
            return cls()
        try:
            if "," in text or (mode_count is not None and _needs_commas(mode_count)):
                return cls(tuple(int(part) for part in text.split(",")))
            return cls(tuple(int(char) for char in text))
        except ValueError:
            raise InvalidModeError(f"Cannot parse mode word '{text}'")

    @classmethod
    def of(cls, *letters: int) -> "ModeWord":
        return cls(tuple(letters))

    def sub_word(self, start: int, stop: int) -> "ModeWord":
        """Letters ``start``..``stop`` inclusive (0-based); ε when start > stop."""
        if start > stop:
            return ModeWord()
        return ModeWord(self.letters[start:stop + 1])

    def check_modes(self, mode_count: int) -> None:
        for letter in self.letters:
            if letter > mode_count:
                raise InvalidModeError(f"Mode {letter} out of range 1..{mode_count} in word {self}")


@dataclass(frozen=True, eq=False)
class HybridWord:
    """Paired modes and input vectors (q_0, u_0)···(q_t, u_t); never empty."""

    modes: ModeWord
    inputs: np.ndarray

    def __post_init__(self):
        modes = self.modes if isinstance(self.modes, ModeWord) else ModeWord(tuple(self.modes))
        if len(modes) == 0:
            raise DimensionMismatchError("A hybrid word needs at least one letter")
        inputs = np.array(self.inputs, dtype=float)
        if inputs.ndim == 1:
            inputs = inputs.reshape(len(modes), -1)
        if inputs.ndim != 2 or inputs.shape[0] != len(modes):
            raise DimensionMismatchError(
                f"Hybrid word has {len(modes)} modes but inputs of shape {inputs.shape}"
            )
        inputs.setflags(write=False)
        object.__setattr__(self, 'modes', modes)
        object.__setattr__(self, 'inputs', inputs)

    def __len__(self) -> int:
        return len(self.modes)

    def __add__(self, other: "HybridWord") -> "HybridWord":
        return HybridWord(self.modes + other.modes, np.vstack([self.inputs, other.inputs]))

    @property
    def input_dim(self) -> int:
        return self.inputs.shape[1]

    def prefix(self, length: int) -> Optional["HybridWord"]:
        """First ``length`` letters, or None for the empty prefix."""
        if length == 0:
            return None
        return HybridWord(self.modes[:length], self.inputs[:length])

    @classmethod
    def zero(cls, modes: ModeWord, input_dim: int) -> "HybridWord":
        return cls(modes, np.zeros((len(modes), input_dim)))

    @classmethod
    def impulse(cls, modes: ModeWord, input_dim: int, channel: int, scale: float = 1.0) -> "HybridWord":
        """Input ``scale``·e_channel (1-based channel) at time 0, zero afterwards."""
        inputs = np.zeros((len(modes), input_dim))
        inputs[0, channel - 1] = scale
        return cls(modes, inputs)


@dataclass(frozen=True, eq=False)
class SwitchedLinearSystem:
    """
    Linear switched system with per-mode matrices (A_q, B_q, C_q) and x0.

    n = 0 is allowed; it realizes the identically-zero input-output map.
    """

    A: Tuple[np.ndarray, ...]
    B: Tuple[np.ndarray, ...]
    C: Tuple[np.ndarray, ...]
    x0: np.ndarray

    def __post_init__(self):
        A = tuple(_frozen(a) for a in self.A)
        B = tuple(_frozen(b) for b in self.B)
        C = tuple(_frozen(c) for c in self.C)
        x0 = _frozen(np.asarray(self.x0, dtype=float).reshape(-1))

        if not (len(A) == len(B) == len(C)) or len(A) == 0:
            raise DimensionMismatchError(
                f"A, B, C must be given for the same D ≥ 1 modes, got {len(A)}, {len(B)}, {len(C)}"
            )
        n = x0.shape[0]
        m = B[0].shape[1] if B[0].ndim == 2 else 0
        p = C[0].shape[0] if C[0].ndim == 2 else 0
        if m < 1 or p < 1:
            raise DimensionMismatchError(f"Input and output dimensions must be ≥ 1, got m={m}, p={p}")
        for q, (a, b, c) in enumerate(zip(A, B, C), start=1):
            if a.shape != (n, n) or b.shape != (n, m) or c.shape != (p, n):
                raise DimensionMismatchError(
                    f"Mode {q}: expected A {(n, n)}, B {(n, m)}, C {(p, n)}, "
                    f"got {a.shape}, {b.shape}, {c.shape}"
                )
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'B', B)
        object.__setattr__(self, 'C', C)
        object.__setattr__(self, 'x0', x0)

    @property
    def D(self) -> int:
        return len(self.A)

    @property
    def n(self) -> int:
        return self.x0.shape[0]

    @property
    def m(self) -> int:
        return self.B[0].shape[1]

    @property
    def p(self) -> int:
        return self.C[0].shape[0]

    @property
    def dims(self) -> Tuple[int, int, int]:
        """(D, m, p)"""
        return self.D, self.m, self.p

    def a(self, q: int) -> np.ndarray:
        return self.A[self._index(q)]

    def b(self, q: int) -> np.ndarray:
        return self.B[self._index(q)]

    def c(self, q: int) -> np.ndarray:
        return self.C[self._index(q)]

    def _index(self, q: int) -> int:
        if not 1 <= q <= self.D:
            raise InvalidModeError(f"Mode {q} out of range 1..{self.D}")
        return q - 1

    def transform(self, S: np.ndarray) -> "SwitchedLinearSystem":
        """State-space change of coordinates x' = S·x (S invertible)."""
        S = np.asarray(S, dtype=float)
        S_inv = np.linalg.inv(S)
        return SwitchedLinearSystem(
            A=tuple(S @ a @ S_inv for a in self.A),
            B=tuple(S @ b for b in self.B),
            C=tuple(c @ S_inv for c in self.C),
            x0=S @ self.x0,
        )

    @classmethod
    def zero(cls, D: int, m: int, p: int) -> "SwitchedLinearSystem":
        """The 0-dimensional system."""
        return cls(
            A=tuple(np.zeros((0, 0)) for _ in range(D)),
            B=tuple(np.zeros((0, m)) for _ in range(D)),
            C=tuple(np.zeros((p, 0)) for _ in range(D)),
            x0=np.zeros(0),
        )

    def __repr__(self) -> str:
        return f"SwitchedLinearSystem(D={self.D}, n={self.n}, m={self.m}, p={self.p})"


@dataclass(frozen=True, eq=False)
class MorphismReport:
    """Per-equation max-norm residuals of a morphism check."""

    holds: bool
    residuals: Dict[str, float] = field(default_factory=dict)
    tol: float = 0.0

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values(), default=0.0)


@dataclass(frozen=True, eq=False)
class LssMorphism:
    """Matrix T (n_target × n_source) intertwining two switched systems."""

    T: np.ndarray
    report: Optional[MorphismReport] = None

    def __post_init__(self):
        object.__setattr__(self, 'T', _frozen(self.T))


def word_matrix_product(matrices: Sequence[np.ndarray], word: ModeWord,
                        dimension: Optional[int] = None) -> np.ndarray:
    """
    A_w = A_{σ_k}···A_{σ_1} for w = σ_1···σ_k (last letter leftmost); A_ε = I.

    Args:
        matrices: Square matrices indexed by mode - 1
        word: Mode word
        dimension: Size of the identity for ε when ``matrices`` is empty

    Returns:
        The ordered product as an n × n matrix
    """
    n = matrices[0].shape[0] if len(matrices) else int(dimension or 0)
    word.check_modes(len(matrices))
    product = np.eye(n)
    for letter in word:
        product = matrices[letter - 1] @ product
    return product


def _check_state(system: SwitchedLinearSystem, x_init: np.ndarray) -> np.ndarray:
    x = np.asarray(x_init, dtype=float).reshape(-1)
    if x.shape[0] != system.n:
        raise DimensionMismatchError(f"Initial state has dimension {x.shape[0]}, system has n={system.n}")
    return x


def _check_word(system: SwitchedLinearSystem, word: HybridWord) -> None:
    word.modes.check_modes(system.D)
    if word.input_dim != system.m:
        raise DimensionMismatchError(f"Inputs have dimension {word.input_dim}, system has m={system.m}")


def simulate_state(system: SwitchedLinearSystem, x_init: np.ndarray,
                   word: Optional[HybridWord]) -> np.ndarray:
    """State reached from ``x_init`` after feeding ``word`` (None for ε)."""
    x = _check_state(system, x_init)
    if word is None:
        return x.copy()
    _check_word(system, word)
    for q, u in zip(word.modes, word.inputs):
        x = system.A[q - 1] @ x + system.B[q - 1] @ u
    return x


def simulate_output(system: SwitchedLinearSystem, x_init: np.ndarray, word: HybridWord) -> np.ndarray:
    """Output y_t = C_{q_t} x_t at the last time step of ``word``."""
    if word is None or len(word) == 0:
        raise DimensionMismatchError("The output is undefined on the empty word")
    x = simulate_state(system, x_init, word.prefix(len(word) - 1))
    _check_word(system, word)
    return system.C[word.modes[-1] - 1] @ x


def simulate_trajectory(system: SwitchedLinearSystem, x_init: np.ndarray, word: HybridWord) -> np.ndarray:
    """Outputs at every time step, as a (t+1) × p array."""
    x = _check_state(system, x_init)
    _check_word(system, word)
    outputs = np.zeros((len(word), system.p))
    for t, (q, u) in enumerate(zip(word.modes, word.inputs)):
        outputs[t] = system.C[q - 1] @ x
        x = system.A[q - 1] @ x + system.B[q - 1] @ u
    return outputs


def expand_output(system: SwitchedLinearSystem, x_init: np.ndarray, word: HybridWord) -> np.ndarray:
    """
    Closed-form output:

        y = C_{q_t} A_{v_{0|t-1}} x + Σ_{k<t} C_{q_t} A_{v_{k+1|t-1}} B_{q_k} u_k
    """
    x = _check_state(system, x_init)
    _check_word(system, word)
    t = len(word) - 1
    modes = word.modes
    readout = system.C[modes[t] - 1]
    y = readout @ word_matrix_product(system.A, modes.sub_word(0, t - 1), system.n) @ x
    for k in range(t):
        transfer = word_matrix_product(system.A, modes.sub_word(k + 1, t - 1), system.n)
        y = y + readout @ transfer @ system.B[modes[k] - 1] @ word.inputs[k]
    return y


@dataclass(frozen=True)
class IoOracle:
    """
    Input-output map f(v, u) -> R^p on non-empty mode words.

    Wraps any callable taking (ModeWord, inputs array of shape |v| × m) and
    checks dimensions on every call.
    """

    func: Callable[[ModeWord, np.ndarray], np.ndarray]
    D: int
    m: int
    p: int

    def __call__(self, modes: ModeWord, inputs: np.ndarray) -> np.ndarray:
        if len(modes) == 0:
            raise DimensionMismatchError("Input-output maps are defined on non-empty words only")
        modes.check_modes(self.D)
        inputs = np.asarray(inputs, dtype=float).reshape(len(modes), -1)
        if inputs.shape[1] != self.m:
            raise DimensionMismatchError(f"Oracle expects inputs in R^{self.m}, got R^{inputs.shape[1]}")
        value = np.asarray(self.func(modes, inputs), dtype=float).reshape(-1)
        if value.shape[0] != self.p:
            raise DimensionMismatchError(f"Oracle returned R^{value.shape[0]}, expected R^{self.p}")
        return value

    def evaluate(self, word: HybridWord) -> np.ndarray:
        return self(word.modes, word.inputs)

    @classmethod
    def from_experiments(cls, experiments: Dict[Tuple[ModeWord, bytes], np.ndarray],
                         D: int, m: int, p: int) -> "IoOracle":
        """
        Oracle answering from recorded experiments.

        Keys are (modes, inputs.tobytes()) for float64 input arrays; an
        unrecorded experiment raises OutOfDepthError.
        """
        def lookup(modes: ModeWord, inputs: np.ndarray) -> np.ndarray:
            key = (modes, np.ascontiguousarray(inputs, dtype=float).tobytes())
            if key not in experiments:
                raise OutOfDepthError(f"No recorded experiment for word {modes} with inputs {inputs.tolist()}")
            return experiments[key]

        return cls(lookup, D, m, p)


def io_map(system: SwitchedLinearSystem) -> IoOracle:
    """The input-output map w ↦ y_Σ(x0, w) as an oracle."""
    def respond(modes: ModeWord, inputs: np.ndarray) -> np.ndarray:
        return simulate_output(system, system.x0, HybridWord(modes, inputs))

    return IoOracle(respond, system.D, system.m, system.p)


def check_morphism(source: SwitchedLinearSystem, target: SwitchedLinearSystem,
                   T: np.ndarray, tol: float) -> MorphismReport:
    """
    Check T·x0 = x0', A'_q·T = T·A_q, B'_q = T·B_q, C'_q·T = C_q for all modes.

    Residuals are max-norms relative to max(1, largest entry of the systems).
    """
    if source.dims != target.dims:
        raise DimensionMismatchError(f"Systems differ in (D, m, p): {source.dims} vs {target.dims}")
    T = np.asarray(T, dtype=float)
    if T.shape != (target.n, source.n):
        raise DimensionMismatchError(f"Morphism must be {target.n}x{source.n}, got {T.shape}")

    scale = max([1.0] + [float(np.max(np.abs(mat))) for sys in (source, target)
                         for mat in (*sys.A, *sys.B, *sys.C, sys.x0) if mat.size])
    residuals = {
        'x0': relative_residual(T @ source.x0 - target.x0, scale),
        'A': max(relative_residual(ta @ T - T @ sa, scale) for sa, ta in zip(source.A, target.A)),
        'B': max(relative_residual(tb - T @ sb, scale) for sb, tb in zip(source.B, target.B)),
        'C': max(relative_residual(tc @ T - sc, scale) for sc, tc in zip(source.C, target.C)),
    }
    holds = all(value <= tol for value in residuals.values())
    logger.debug(f"Morphism check residuals: {residuals}")
    return MorphismReport(holds, residuals, tol)


def enumerate_hybrid_words(modes: Iterable[ModeWord], input_grid: Sequence[np.ndarray]) -> Iterator[HybridWord]:
    """Every hybrid word over ``modes`` with per-step inputs drawn from ``input_grid``."""
    for word in modes:
        if len(word) == 0:
            continue
        for inputs in product(input_grid, repeat=len(word)):
            yield HybridWord(word, np.vstack(inputs))

