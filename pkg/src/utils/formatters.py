"""
Number and table formatting utilities.
"""
import math
import re
from typing import Iterable, List, Optional, Sequence

from config.settings import CSV_FLOAT_FORMAT

_SUPERSCRIPTS = str.maketrans("-0123456789", "⁻⁰¹²³⁴⁵⁶⁷⁸⁹")


class Formatters:
    """Data formatting functions."""

    @staticmethod
    def format_float(value: float) -> str:
        """17 significant digits, enough to round-trip any double."""
        return CSV_FLOAT_FORMAT % value

    @staticmethod
    def format_scientific(value: Optional[float], digits: int = 4) -> str:
        """Table style mantissa·10^exponent, e.g. 1.844·10⁻²."""
        if value is None or (isinstance(value, float) and math.isnan(value)):
            return "-"
        if value == 0:
            return "0"
        exponent = int(math.floor(math.log10(abs(value))))
        mantissa = value / 10 ** exponent
        # rounding can push the mantissa to 10.0
        if round(abs(mantissa), digits - 1) >= 10:
            mantissa /= 10
            exponent += 1
        text = f"{mantissa:.{digits - 1}f}"
        if exponent == 0:
            return text
        return f"{text}·10{str(exponent).translate(_SUPERSCRIPTS)}"

    @staticmethod
    def slug(label: str) -> str:
        """File-name safe version of a method label."""
        text = re.sub(r"[^A-Za-z0-9._-]+", "_", label.strip()).strip("_")
        return text or "method"

    @staticmethod
    def format_summary_rows(rows: Iterable[dict]) -> List[List[str]]:
        """Summary table (header first) for console display."""
        table = [["Method", "Parameters", "Mean rel. error", "StD rel. error"]]
        for row in rows:
            table.append([
                str(row["method"]),
                str(row["parameters"]),
                Formatters.format_scientific(row["mean"]),
                Formatters.format_scientific(row["std"]),
            ])
        return table

    @staticmethod
    def format_table(rows: Sequence[Sequence[str]]) -> str:
        """Left-aligned columns separated by two spaces; the first row is underlined."""
        if not rows:
            return ""
        widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip() for row in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines)
