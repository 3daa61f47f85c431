"""
File readers for systems, Markov tables, experiment datasets and Hankel CSVs.

Every reader raises SchemaError naming the offending field or line.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from src.core.errors import RealizationError, SchemaError
from src.core.hankel import HankelBlockMatrix, lss_index_set, word_count
from src.core.lss import IoOracle, ModeWord, SwitchedLinearSystem
from src.core.markov import MarkovFamily, words_of_length

logger = logging.getLogger(__name__)


def _parse_header(line: str, keys: Tuple[str, ...], source: str) -> Dict[str, int]:
    """Parse '# D=2 m=1 p=1 depth=6' style headers."""
    if not line.startswith('#'):
        raise SchemaError(f"missing '# {' '.join(k + '=' for k in keys)}' header", source)
    values = {}
    for token in line.lstrip('#').split():
        if '=' in token:
            key, _, raw = token.partition('=')
            try:
                values[key] = int(raw)
            except ValueError:
                raise SchemaError(f"header value '{raw}' is not an integer", f"{source}:{key}")
    missing = [key for key in keys if key not in values]
    if missing:
        raise SchemaError(f"header is missing {', '.join(missing)}", source)
    return values


def _floats(tokens: List[str], field: str) -> np.ndarray:
    try:
        return np.array([float(token) for token in tokens])
    except ValueError:
        raise SchemaError(f"expected numbers, got {' '.join(tokens)}", field)


def _word(text: str, field: str, mode_count: int) -> ModeWord:
    try:
        word = ModeWord.parse(text, mode_count)
        word.check_modes(mode_count)
        return word
    except (ValueError, RealizationError) as e:
        raise SchemaError(str(e), field)


class FileParser:
    """Reads the toolkit's on-disk formats."""

    def get_field(self, data: Dict, key: str) -> Any:
        """Required top-level field of a JSON document."""
        if not isinstance(data, dict) or key not in data:
            raise SchemaError("required field is missing", key)
        return data[key]

    def _int_field(self, data: Dict, key: str, minimum: int) -> int:
        value = self.get_field(data, key)
        if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
            raise SchemaError(f"must be an integer ≥ {minimum}, got {value!r}", key)
        return value

    def _matrix(self, raw: Any, rows: int, cols: int, field: str) -> np.ndarray:
        """Nested rows or a flat row-major list, checked against (rows, cols)."""
        try:
            array = np.array(raw, dtype=float)
        except (TypeError, ValueError):
            raise SchemaError("must be a list of numbers or of rows", field)
        if array.size != rows * cols:
            raise SchemaError(f"expected {rows}x{cols} = {rows * cols} numbers, got {array.size}", field)
        if array.ndim == 2 and array.shape != (rows, cols) and array.size:
            raise SchemaError(f"expected shape {rows}x{cols}, got {array.shape[0]}x{array.shape[1]}", field)
        return array.reshape(rows, cols)

    def _per_mode(self, data: Dict, key: str, D: int, rows: int, cols: int) -> Tuple[np.ndarray, ...]:
        raw = self.get_field(data, key)
        if not isinstance(raw, list) or len(raw) != D:
            raise SchemaError(f"must list one matrix per mode (D={D})", key)
        return tuple(self._matrix(item, rows, cols, f"{key}[{q}]") for q, item in enumerate(raw, start=1))

    def parse_system_document(self, data: Dict) -> SwitchedLinearSystem:
        """Build a system from the JSON document {"D","n","m","p","A","B","C","x0"}."""
        D = self._int_field(data, 'D', 1)
        n = self._int_field(data, 'n', 0)
        m = self._int_field(data, 'm', 1)
        p = self._int_field(data, 'p', 1)

        A = self._per_mode(data, 'A', D, n, n)
        B = self._per_mode(data, 'B', D, n, m)
        C = self._per_mode(data, 'C', D, p, n)
        x0 = self._matrix(self.get_field(data, 'x0'), n, 1, 'x0').reshape(n)
        return SwitchedLinearSystem(A=A, B=B, C=C, x0=x0)

    def parse_system(self, path: str) -> SwitchedLinearSystem:
        """Read a system JSON file."""
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise SchemaError(f"invalid JSON: {e}", Path(path).name)
        system = self.parse_system_document(data)
        logger.info(f"Loaded {system!r} from {path}")
        return system

    def parse_markov_table(self, path: str) -> MarkovFamily:
        """
        Read a Markov table dump.

        Format: '# D= m= p= depth=' header, then 'S0 <word> <p floats>' and
        'S <j> <q0> <word> <q> <p floats>' lines; ε is written '-'.
        Every parameter up to the declared depth must be present.
        """
        with open(path, 'r', encoding='utf-8') as f:
            lines = [line.strip() for line in f if line.strip()]
        if not lines:
            raise SchemaError("file is empty", Path(path).name)

        header = _parse_header(lines[0], ('D', 'm', 'p', 'depth'), 'header')
        D, m, p, depth = header['D'], header['m'], header['p'], header['depth']

        s0_table: Dict[ModeWord, np.ndarray] = {}
        s_columns: Dict[Tuple[ModeWord, int], np.ndarray] = {}
        for number, line in enumerate(lines[1:], start=2):
            if line.startswith('#'):
                continue
            tokens = line.split()
            field = f"line {number}"
            if tokens[0] == 'S0' and len(tokens) == 2 + p:
                word = _word(tokens[1], field, D)
                s0_table[word] = _floats(tokens[2:], field)
            elif tokens[0] == 'S' and len(tokens) == 5 + p:
                try:
                    j, q0, q = int(tokens[1]), int(tokens[2]), int(tokens[4])
                except ValueError:
                    raise SchemaError("channel and modes must be integers", field)
                if not 1 <= j <= m:
                    raise SchemaError(f"channel {j} out of range 1..{m}", field)
                try:
                    word = ModeWord.of(q0) + _word(tokens[3], field, D) + ModeWord.of(q)
                except ValueError as e:
                    raise SchemaError(str(e), field)
                s_columns[(word, j)] = _floats(tokens[5:], field)
            else:
                raise SchemaError(f"expected 'S0 <word> <{p} values>' or 'S <j> <q0> <word> <q> <{p} values>'", field)

        s_table: Dict[ModeWord, np.ndarray] = {}
        for length in range(1, depth + 1):
            for word in words_of_length(D, length):
                if word not in s0_table:
                    raise SchemaError(f"S0 missing for word '{word}'", 'table')
                if length >= 2:
                    missing = [j for j in range(1, m + 1) if (word, j) not in s_columns]
                    if missing:
                        raise SchemaError(f"S_{missing[0]} missing for word '{word}'", 'table')
                    s_table[word] = np.column_stack([s_columns[(word, j)] for j in range(1, m + 1)])

        logger.info(f"Loaded Markov table D={D}, m={m}, p={p}, depth={depth} from {path}")
        return MarkovFamily(D, m, p, s0_table, s_table, depth)

    def parse_dataset(self, path: str) -> IoOracle:
        """
        Read recorded experiments.

        Format: '# D= m= p=' header, then '<word> <(|word|·m) inputs> <p outputs>'
        per line, inputs listed step by step.
        """
        with open(path, 'r', encoding='utf-8') as f:
            lines = [line.strip() for line in f if line.strip()]
        if not lines:
            raise SchemaError("file is empty", Path(path).name)

        header = _parse_header(lines[0], ('D', 'm', 'p'), 'header')
        D, m, p = header['D'], header['m'], header['p']

        experiments = {}
        for number, line in enumerate(lines[1:], start=2):
            if line.startswith('#'):
                continue
            tokens = line.split()
            field = f"line {number}"
            word = _word(tokens[0], field, D)
            if len(word) == 0:
                raise SchemaError("experiments need a non-empty word", field)
            expected = 1 + len(word) * m + p
            if len(tokens) != expected:
                raise SchemaError(f"expected {expected} tokens, got {len(tokens)}", field)
            inputs = _floats(tokens[1:1 + len(word) * m], field).reshape(len(word), m)
            experiments[(word, inputs.tobytes())] = _floats(tokens[1 + len(word) * m:], field)

        logger.info(f"Loaded {len(experiments)} experiments from {path}")
        return IoOracle.from_experiments(experiments, D, m, p)

    def parse_inputs(self, path: str, m: int) -> np.ndarray:
        """Per-step inputs from a headerless CSV, one row per step."""
        frame = pd.read_csv(path, header=None)
        if frame.shape[1] != m:
            raise SchemaError(f"expected {m} columns, got {frame.shape[1]}", Path(path).name)
        try:
            return frame.to_numpy(dtype=float)
        except ValueError:
            raise SchemaError("inputs must be numeric", Path(path).name)

    def parse_hankel_csv(self, path: str, dims: Tuple[int, int, int]) -> HankelBlockMatrix:
        """
        Read a Hankel CSV written by the exporter for known (D, m, p).

        The depths are recovered from the matrix size and the row/column
        labels are checked against them.
        """
        D, m, p = dims
        frame = pd.read_csv(path, index_col=0)
        rows, cols = frame.shape
        row_depth = self._depth_for(rows, D, p * D, 'rows')
        col_depth = self._depth_for(cols, D, m * D + 1, 'columns')

        hankel = HankelBlockMatrix(row_depth, col_depth, D, p * D, lss_index_set(D, m),
                                   frame.to_numpy(dtype=float))
        if list(frame.index.astype(str)) != hankel.row_labels():
            raise SchemaError("row labels do not match the (word:offset) layout", 'rows')
        if list(frame.columns.astype(str)) != hankel.column_labels():
            raise SchemaError("column labels do not match the (word:offset) layout", 'columns')
        logger.info(f"Loaded Hankel H_{{{row_depth},{col_depth}}} from {path}")
        return hankel

    @staticmethod
    def _depth_for(size: int, D: int, block: int, field: str) -> int:
        depth = 0
        while word_count(D, depth) * block < size:
            depth += 1
        if word_count(D, depth) * block != size:
            raise SchemaError(f"{size} is not N(L)·{block} for any depth L", field)
        return depth


def load_system(path: str) -> SwitchedLinearSystem:
    return FileParser().parse_system(path)


def load_markov(path: str) -> MarkovFamily:
    return FileParser().parse_markov_table(path)


def load_hankel(path: str, dims: Tuple[int, int, int]) -> HankelBlockMatrix:
    return FileParser().parse_hankel_csv(path, dims)


def load_dataset(path: str) -> IoOracle:
    return FileParser().parse_dataset(path)


def load_inputs(path: str, m: int) -> np.ndarray:
    return FileParser().parse_inputs(path, m)


def looks_like_hankel(path: str) -> bool:
    """Heuristic used by the CLI to tell Hankel CSVs from Markov tables."""
    return Path(path).suffix.lower() == '.csv'

