from typing import List, Tuple

import numpy as np

from src.core.lss import HybridWord, ModeWord


def parse_dims(text: str) -> Tuple[int, int, int]:
    """
    Parse a 'D,m,p' triple.

    Args:
        text: Comma-separated dimensions (e.g., '2,1,1')

    Returns:
        Tuple of (D, m, p)

    Raises:
        ValueError: If the text is not three positive integers
    """
    parts = [part.strip() for part in text.split(',')]
    if len(parts) != 3:
        raise ValueError(f"expected D,m,p, got '{text}'")
    try:
        D, m, p = (int(part) for part in parts)
    except ValueError:
        raise ValueError(f"dimensions must be integers, got '{text}'")
    if min(D, m, p) < 1:
        raise ValueError(f"dimensions must be ≥ 1, got '{text}'")
    return D, m, p


def validate_modes(letters: List[str], D: int) -> Tuple[List[int], List[str]]:
    """
    Split mode letters into valid modes and rejected tokens.

    Args:
        letters: Raw tokens (e.g., ['1', '2', '7'])
        D: Number of modes

    Returns:
        Tuple of (valid_modes, invalid_tokens)
    """
    valid = []
    invalid = []

    for letter in letters:
        token = letter.strip()
        if token.isdigit() and 1 <= int(token) <= D:
            valid.append(int(token))
        else:
            invalid.append(letter)

    return valid, invalid


def parse_switching(text: str, D: int) -> ModeWord:
    """Parse a '1,2,2' switching sequence into a non-empty ModeWord over 1..D."""
    valid, invalid = validate_modes(text.split(','), D)
    if invalid:
        raise ValueError(f"invalid modes {', '.join(invalid)} (expected 1..{D})")
    if not valid:
        raise ValueError("the switching sequence is empty")
    return ModeWord(tuple(valid))


def build_hybrid_word(modes: ModeWord, inputs: np.ndarray, m: int) -> HybridWord:
    """Pair modes with inputs, defaulting to zero inputs when none are given."""
    if inputs is None:
        return HybridWord.zero(modes, m)
    if inputs.shape != (len(modes), m):
        raise ValueError(f"inputs have shape {inputs.shape}, expected ({len(modes)}, {m})")
    return HybridWord(modes, inputs)
