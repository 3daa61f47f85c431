"""
UI helpers for the switched-system realization toolkit.

Provides centralized console feedback using Rich and tqdm so that every
CLI command reports ranks, residuals and matrices the same way.
"""

from typing import Dict, Iterable, Optional, Sequence

import numpy as np
from rich.console import Console
from rich.table import Table
from tqdm import tqdm

# Global console instance for consistent styling
console = Console()


def print_success(message: str):
    """Print success message in green"""
    console.print(f"✓ {message}", style="green")


def print_error(message: str):
    """Print error message in red"""
    console.print(f"✗ {message}", style="red")


def print_warning(message: str):
    """Print warning message in yellow"""
    console.print(f"⚠ {message}", style="yellow")


def print_info(message: str):
    """Print info message in blue"""
    console.print(f"ℹ {message}", style="blue")


def create_progress_bar(total: int, description: str, unit: str = "word"):
    """
    Create a progress bar for tracking operations.

    Args:
        total: Total number of items to process
        description: Description text for the progress bar
        unit: Name of one processed item

    Returns:
        tqdm progress bar instance
    """
    return tqdm(
        total=total,
        desc=description,
        unit=unit,
        bar_format='{l_bar}{bar}| {n_fmt}/{total_fmt} [{elapsed}<{remaining}]'
    )


def format_float(value: float) -> str:
    """Full double precision, shortest round-tripping form."""
    return repr(float(value))


def format_vector(values: Iterable[float]) -> str:
    return " ".join(format_float(v) for v in values)


def print_matrix(name: str, matrix: np.ndarray):
    """Print a labelled matrix row by row in full precision."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    console.print(f"{name} ({matrix.shape[0]}×{matrix.shape[1]}):", style="bold")
    if matrix.size == 0:
        console.print("  []", style="white")
        return
    for row in matrix:
        console.print(f"  [{format_vector(row)}]", style="white", markup=False)


def print_tolerances(tolerances: Dict[str, float]):
    """Echo the tolerances a report was computed with."""
    echoed = ", ".join(f"{key}={value:g}" for key, value in tolerances.items())
    console.print(f"Tolerances: {echoed}", style="dim")


def print_singular_values(values: Sequence[float], threshold: Optional[float] = None):
    """One line of singular values, with the rank threshold when known."""
    line = format_vector(values) if len(values) else "(none)"
    suffix = f"  (threshold {threshold:.3e})" if threshold is not None else ""
    console.print(f"  singular values: {line}{suffix}", style="white", markup=False)


def print_report_table(title: str, rows: Sequence[Sequence[str]], columns: Sequence[str]):
    """Render a simple rich table of string cells."""
    table = Table(title=title, show_lines=False)
    for column in columns:
        table.add_column(column)
    for row in rows:
        table.add_row(*row)
    console.print(table)


def yes_no(flag: bool) -> str:
    return "yes" if flag else "no"
