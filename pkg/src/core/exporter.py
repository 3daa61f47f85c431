"""
File writers for systems, Markov tables and Hankel matrices.

Numbers are written in full double precision so that every file read back
reproduces the in-memory values exactly.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from openpyxl import load_workbook
from openpyxl.styles import Alignment, Font, PatternFill
from openpyxl.utils import get_column_letter

from src.config.config_loader import OUTPUT_DIR
from src.core.hankel import HankelBlockMatrix, format_index_label
from src.core.lss import SwitchedLinearSystem
from src.core.markov import MarkovFamily

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
HANKEL_SHEET = "Hankel"
INDEX_SHEET = "Index"


def _number(value: float) -> str:
    return repr(float(value))


class ResultExporter:
    """Writes results under ``output_dir`` unless given absolute paths."""

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = Path(output_dir) if output_dir else Path(OUTPUT_DIR)

    def _resolve(self, path: str) -> Path:
        """Relative bare filenames land in the output directory; other paths are used as given."""
        target = Path(path)
        if not target.is_absolute() and target.parent == Path('.'):
            target = self.output_dir / target
        target.parent.mkdir(parents=True, exist_ok=True)
        return target

    def system_document(self, system: SwitchedLinearSystem) -> Dict:
        """JSON-ready document with nested rows."""
        return {
            'D': system.D,
            'n': system.n,
            'm': system.m,
            'p': system.p,
            'A': [a.tolist() for a in system.A],
            'B': [b.tolist() for b in system.B],
            'C': [c.tolist() for c in system.C],
            'x0': system.x0.tolist(),
        }

    def export_system(self, system: SwitchedLinearSystem, path: str) -> str:
        target = self._resolve(path)
        with open(target, 'w', encoding='utf-8') as f:
            json.dump(self.system_document(system), f, indent=2)
            f.write('\n')
        logger.info(f"Wrote {system!r} to {target}")
        return str(target.absolute())

    def markov_lines(self, markov: MarkovFamily) -> List[str]:
        """Text dump lines, header first."""
        lines = [f"# D={markov.D} m={markov.m} p={markov.p} depth={markov.depth}"]
        for kind, word, value in markov.items():
            if kind == 'S0':
                lines.append(f"S0 {word.to_text(markov.D)} " + " ".join(_number(v) for v in value))
                continue
            inner = word.sub_word(1, len(word) - 2)
            for j in range(1, markov.m + 1):
                values = " ".join(_number(v) for v in value[:, j - 1])
                lines.append(f"S {j} {word[0]} {inner.to_text(markov.D)} {word[-1]} {values}")
        return lines

    def export_markov(self, markov: MarkovFamily, path: str) -> str:
        target = self._resolve(path)
        target.write_text("\n".join(self.markov_lines(markov)) + "\n", encoding='utf-8')
        logger.info(f"Wrote Markov table of depth {markov.depth} to {target}")
        return str(target.absolute())

    def hankel_frame(self, hankel: HankelBlockMatrix) -> pd.DataFrame:
        return pd.DataFrame(hankel.data, index=hankel.row_labels(), columns=hankel.column_labels())

    def index_frame(self, hankel: HankelBlockMatrix) -> pd.DataFrame:
        """Flat 1-based index ↔ (word, offset) for both axes."""
        records = []
        for axis, index in (('row', hankel.rows), ('column', hankel.cols)):
            for flat, (word, offset) in enumerate(index.labels(), start=1):
                records.append({'axis': axis, 'flat': flat,
                                'word': word.to_text(hankel.alphabet_size),
                                'offset': format_index_label(offset)})
        return pd.DataFrame.from_records(records, columns=['axis', 'flat', 'word', 'offset'])

    def export_hankel_csv(self, hankel: HankelBlockMatrix, path: str) -> Dict[str, str]:
        """
        Write the matrix CSV and its ``<stem>_index.csv`` sidecar.

        Returns:
            Dict with 'matrix' and 'index' absolute paths
        """
        target = self._resolve(path)
        sidecar = target.with_name(target.stem + '_index.csv')
        self.hankel_frame(hankel).to_csv(target, float_format=FLOAT_FORMAT)
        self.index_frame(hankel).to_csv(sidecar, index=False)
        logger.info(f"Wrote {hankel.shape[0]}x{hankel.shape[1]} Hankel matrix to {target}")
        return {'matrix': str(target.absolute()), 'index': str(sidecar.absolute())}

    def _format_workbook(self, file_path: Path):
        """Header styling, column widths and frozen panes."""
        try:
            workbook = load_workbook(file_path)

            header_font = Font(bold=True, color="FFFFFF")
            header_fill = PatternFill(start_color="366092", end_color="366092", fill_type="solid")
            header_alignment = Alignment(horizontal="center", vertical="center")

            for worksheet in workbook.worksheets:
                for cell in next(worksheet.iter_rows(min_row=1, max_row=1)):
                    cell.font = header_font
                    cell.fill = header_fill
                    cell.alignment = header_alignment
                for column in worksheet.columns:
                    letter = get_column_letter(column[0].column)
                    longest = max(len(str(cell.value)) for cell in column if cell.value is not None)
                    worksheet.column_dimensions[letter].width = min(longest + 2, 24)
                worksheet.freeze_panes = "B2" if worksheet.title == HANKEL_SHEET else "A2"

            workbook.save(file_path)
            logger.info("Applied workbook formatting")
        except Exception as e:
            logger.warning(f"Workbook written without formatting: {e}")

    def export_hankel_xlsx(self, hankel: HankelBlockMatrix, path: str) -> str:
        """Labelled workbook with the matrix and the index sheet."""
        target = self._resolve(path)
        with pd.ExcelWriter(target, engine='openpyxl', mode='w') as writer:
            self.hankel_frame(hankel).to_excel(writer, sheet_name=HANKEL_SHEET)
            self.index_frame(hankel).to_excel(writer, sheet_name=INDEX_SHEET, index=False)
        self._format_workbook(target)
        logger.info(f"Wrote Hankel workbook to {target}")
        return str(target.absolute())

    def export_matrix_csv(self, matrix: np.ndarray, path: str) -> str:
        """Plain headerless CSV of a matrix, e.g. a morphism."""
        target = self._resolve(path)
        pd.DataFrame(np.atleast_2d(matrix)).to_csv(target, header=False, index=False, float_format=FLOAT_FORMAT)
        return str(target.absolute())

    def get_file_size(self, path: str) -> Optional[int]:
        """Size of a written file in bytes."""
        target = Path(path)
        if target.exists():
            return target.stat().st_size
        return None

