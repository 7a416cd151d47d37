"""Text grammars and table formatting shared by the CLI and the service.

Complex scalars use the grammar `a+bi` / `a-bi` with no spaces (either part
may be omitted); vectors are comma-separated scalars. CSV cells print floats
with 17 significant digits so identical runs are byte-identical.
"""

from __future__ import annotations

import io
from typing import Sequence

from .errors import PreconditionError


def parse_complex(text: str) -> complex:
    s = text.strip()
    if not s:
        raise PreconditionError("complex: empty token")
    if " " in s:
        raise PreconditionError(f"complex: no spaces allowed in {text!r}")
    try:
        if s[-1] not in "iI":
            return complex(float(s), 0.0)
        body = s[:-1]
        split = 0
        for pos in range(len(body) - 1, 0, -1):
            if body[pos] in "+-" and body[pos - 1] not in "eE":
                split = pos
                break
        re_part, im_part = body[:split], body[split:]
        if im_part in ("", "+", "-"):
            im_part += "1"
        return complex(float(re_part) if re_part else 0.0, float(im_part))
    except ValueError as exc:
        raise PreconditionError(
            f"complex: cannot parse {text!r} (grammar: a+bi, a-bi, a, bi)"
        ) from exc


def parse_complex_vector(text: str) -> list[complex]:
    return [parse_complex(tok) for tok in text.split(",")]


def format_complex(value: complex) -> str:
    # repr of a float is the shortest digit string that parses back exactly
    sign = "+" if value.imag >= 0 else "-"
    return f"{value.real!r}{sign}{abs(value.imag)!r}i"


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.16e}"
    return str(value)


def render_csv(columns: Sequence[str], rows: Sequence[Sequence]) -> str:
    out = io.StringIO()
    out.write(",".join(columns))
    out.write("\n")
    for row in rows:
        out.write(",".join(format_cell(cell) for cell in row))
        out.write("\n")
    return out.getvalue()
