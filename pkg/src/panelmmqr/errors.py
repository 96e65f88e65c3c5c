"""Exception hierarchy.

Every error carries an ``error_class`` tag; the CLI maps the tag to a
stable exit code and prints it on a single machine-readable line.
"""

from __future__ import annotations


class PanelMMQRError(Exception):
    error_class = "error"


class ParseError(PanelMMQRError):
    """Malformed input file. ``line`` is 1-based when known."""

    error_class = "parse"

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}:"
            if line is not None:
                where += f"{line}:"
            where += " "
        super().__init__(where + message)
        self.path = path
        self.line = line


class SchemaError(PanelMMQRError):
    error_class = "schema"


class DomainError(SchemaError):
    """A transform was applied outside its domain (e.g. log of a nonpositive value).

    ``cells`` lists the offending ``(unit, quarter)`` pairs.
    """

    def __init__(self, message: str, cells: list[tuple[object, object]]):
        shown = ", ".join(f"{u}@{q}" for u, q in cells[:5])
        more = f" (+{len(cells) - 5} more)" if len(cells) > 5 else ""
        super().__init__(f"{message}: {shown}{more}")
        self.cells = cells


class RankError(PanelMMQRError):
    error_class = "rank"

    def __init__(self, message: str, columns: tuple[str, ...] = ()):
        super().__init__(message)
        self.columns = columns


class PositivityError(PanelMMQRError):
    error_class = "positivity"

    def __init__(self, count: int, minimum: float):
        super().__init__(
            f"fitted scale is nonpositive in {count} cell(s); minimum {minimum!r}"
        )
        self.count = count
        self.minimum = minimum


class InferenceError(PanelMMQRError):
    error_class = "inference"


class Table2Mismatch(PanelMMQRError):
    error_class = "table2"


EXIT_CODES = {
    "parse": 3,
    "schema": 4,
    "rank": 5,
    "positivity": 6,
    "inference": 7,
    "table2": 8,
    "io": 9,
}
