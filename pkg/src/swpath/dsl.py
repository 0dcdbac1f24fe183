"""Pathway-layout DSL: a small line-oriented language for pin layouts.

Statements (one per line, '#' starts a comment):

    GRID <rows> <cols> <pitch>
    FILL <row> <col>
    WALL (<row>,<col>)-(<row>,<col>)
    PRESET straight|tjunction|corner key=value ...
    TRANSDUCER <1|2|3> at (<y>,<z>)

Lengths carry a unit suffix (``mm`` or ``m``). WALL runs must be straight or
at 45 degrees and are rasterized inclusively. A PRESET statement places the
corresponding parametric pattern centered on the declared grid; programs may
contain at most one. All diagnostics carry a 1-based line and column.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import layout
from .layout import PinGrid, SceneGeometry, Transducer


@dataclass(frozen=True)
class SourceLocation:
    line: int
    column: int

    def __str__(self):
        return f"{self.line}:{self.column}"


class LayoutError(Exception):
    """Parse or validation failure with a source location."""

    def __init__(self, message: str, location: SourceLocation):
        self.message = message
        self.location = location
        super().__init__(f"{location}: {message}")


_LENGTH_RE = re.compile(r"^([-+]?\d+(?:\.\d*)?(?:[eE][-+]?\d+)?)(mm|m)$")
_INT_RE = re.compile(r"^[-+]?\d+$")
_PAIR_RE = re.compile(r"^\(([^,()]+),([^,()]+)\)$")
_WALL_RE = re.compile(r"^\(([^,()]+),([^,()]+)\)-\(([^,()]+),([^,()]+)\)$")


def _parse_length(token: str, loc: SourceLocation) -> float:
    m = _LENGTH_RE.match(token)
    if not m:
        raise LayoutError(f"expected a length with mm/m suffix, got {token!r}", loc)
    value = float(m.group(1))
    return value * 1e-3 if m.group(2) == "mm" else value


def _parse_int(token: str, loc: SourceLocation, what: str) -> int:
    if not _INT_RE.match(token):
        raise LayoutError(f"expected an integer {what}, got {token!r}", loc)
    return int(token)


class _Line:
    """One source line split into tokens with column tracking."""

    def __init__(self, text: str, lineno: int):
        self.lineno = lineno
        code = text.split("#", 1)[0]
        self.tokens: list[tuple[str, int]] = [
            (m.group(0), m.start() + 1) for m in re.finditer(r"\S+", code)
        ]
        self.pos = 0

    def loc(self, index: int | None = None) -> SourceLocation:
        idx = self.pos if index is None else index
        col = self.tokens[idx][1] if idx < len(self.tokens) else (
            self.tokens[-1][1] + len(self.tokens[-1][0]) if self.tokens else 1
        )
        return SourceLocation(self.lineno, col)

    def take(self, what: str) -> tuple[str, SourceLocation]:
        if self.pos >= len(self.tokens):
            raise LayoutError(f"missing {what}", self.loc())
        tok, col = self.tokens[self.pos]
        self.pos += 1
        return tok, SourceLocation(self.lineno, col)

    def done(self) -> None:
        if self.pos < len(self.tokens):
            tok, col = self.tokens[self.pos]
            raise LayoutError(f"unexpected trailing token {tok!r}", SourceLocation(self.lineno, col))


def _preset_args(line: _Line) -> dict[str, tuple[str, SourceLocation]]:
    args = {}
    while line.pos < len(line.tokens):
        tok, loc = line.take("key=value argument")
        if "=" not in tok:
            raise LayoutError(f"expected key=value, got {tok!r}", loc)
        key, value = tok.split("=", 1)
        if key in args:
            raise LayoutError(f"duplicate argument {key!r}", loc)
        args[key] = (value, loc)
    return args


def _build_preset(name: str, args: dict, pitch: float, loc: SourceLocation) -> PinGrid:
    def length(key, default=None):
        if key in args:
            return _parse_length(*args.pop(key))
        if default is None:
            raise LayoutError(f"preset {name!r} requires {key}=<length>", loc)
        return default

    def integer(key, default=None):
        if key in args:
            v, l = args.pop(key)
            return _parse_int(v, l, key)
        if default is None:
            raise LayoutError(f"preset {name!r} requires {key}=<int>", loc)
        return default

    try:
        if name == "straight":
            grid = layout.preset_straight(
                width_wc=length("width", 10e-3),
                length=length("length", 100e-3),
                layers=integer("layers", 1),
                pitch_ws=pitch,
            )
        elif name == "tjunction":
            mode, mloc = args.pop("mode", ("straight", loc))
            if mode not in ("straight", "turn"):
                raise LayoutError(f"mode must be straight or turn, got {mode!r}", mloc)
            grid = layout.preset_tjunction(
                mode, width_wc=length("width", 10e-3),
                arm_length=length("arm", 60e-3), pitch_ws=pitch,
            )
        elif name == "corner":
            grid = layout.preset_corner(
                integer("k"), width_wc=length("width", 10e-3),
                arm_in=length("arm_in", 50e-3), arm_out=length("arm_out", 45e-3),
                pitch_ws=pitch,
            )
        else:
            raise LayoutError(f"unknown preset {name!r}", loc)
    except ValueError as exc:
        raise LayoutError(str(exc), loc) from exc
    if args:
        key = next(iter(args))
        raise LayoutError(f"unknown argument {key!r} for preset {name!r}", args[key][1])
    return grid


def _embed_centered(target: PinGrid, pattern: PinGrid, loc: SourceLocation) -> None:
    if not pattern.filled:
        return
    rs = [r for r, _ in pattern.filled]
    cs = [c for _, c in pattern.filled]
    dr = (target.rows - (max(rs) - min(rs) + 1)) // 2 - min(rs)
    dc = (target.cols - (max(cs) - min(cs) + 1)) // 2 - min(cs)
    for (r, c) in pattern.filled:
        rr, cc = r + dr, c + dc
        if not (0 <= rr < target.rows and 0 <= cc < target.cols):
            raise LayoutError(
                f"preset does not fit: pin ({rr}, {cc}) outside "
                f"{target.rows}x{target.cols} grid", loc,
            )
        target.fill(rr, cc)


def parse_layout(text: str) -> tuple[PinGrid, SceneGeometry]:
    """Parse a layout program; raises LayoutError with source location."""
    grid: PinGrid | None = None
    grid_loc: SourceLocation | None = None
    preset_seen: str | None = None
    transducers: dict[int, Transducer] = {}

    def need_grid(loc: SourceLocation) -> PinGrid:
        if grid is None:
            raise LayoutError("GRID must be declared before this statement", loc)
        return grid

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _Line(raw, lineno)
        if not line.tokens:
            continue
        keyword, kw_loc = line.take("statement keyword")
        stmt = keyword.upper()
        if stmt == "GRID":
            if grid is not None:
                raise LayoutError(
                    f"duplicate GRID (first declared at {grid_loc})", kw_loc)
            rows_t, rloc = line.take("row count")
            cols_t, cloc = line.take("column count")
            pitch_t, ploc = line.take("pitch")
            rows = _parse_int(rows_t, rloc, "row count")
            cols = _parse_int(cols_t, cloc, "column count")
            pitch = _parse_length(pitch_t, ploc)
            line.done()
            try:
                grid = PinGrid(rows=rows, cols=cols, pitch_ws=pitch)
            except ValueError as exc:
                raise LayoutError(str(exc), kw_loc) from exc
            grid_loc = kw_loc
        elif stmt == "FILL":
            g = need_grid(kw_loc)
            r_t, rloc = line.take("row index")
            c_t, cloc = line.take("column index")
            r = _parse_int(r_t, rloc, "row index")
            c = _parse_int(c_t, cloc, "column index")
            line.done()
            try:
                g.fill(r, c)
            except IndexError as exc:
                raise LayoutError(str(exc), rloc) from exc
        elif stmt == "WALL":
            g = need_grid(kw_loc)
            span_t, sloc = line.take("wall span")
            line.done()
            m = _WALL_RE.match(span_t)
            if not m:
                raise LayoutError(
                    f"expected (r,c)-(r,c), got {span_t!r}", sloc)
            r0, c0, r1, c1 = (_parse_int(t.strip(), sloc, "index") for t in m.groups())
            try:
                g.fill_line(r0, c0, r1, c1)
            except (IndexError, ValueError) as exc:
                raise LayoutError(str(exc), sloc) from exc
        elif stmt == "PRESET":
            g = need_grid(kw_loc)
            name_t, nloc = line.take("preset name")
            args = _preset_args(line)
            if preset_seen is not None:
                raise LayoutError(
                    f"conflicting presets: {name_t!r} after {preset_seen!r}", kw_loc)
            pattern = _build_preset(name_t, args, g.pitch_ws, nloc)
            _embed_centered(g, pattern, nloc)
            preset_seen = name_t
        elif stmt == "TRANSDUCER":
            need_grid(kw_loc)
            idx_t, iloc = line.take("transducer index")
            at_t, aloc = line.take("'at'")
            pos_t, ploc = line.take("position")
            line.done()
            idx = _parse_int(idx_t, iloc, "transducer index")
            if idx not in (1, 2, 3):
                raise LayoutError(f"transducer index must be 1, 2 or 3, got {idx}", iloc)
            if at_t.lower() != "at":
                raise LayoutError(f"expected 'at', got {at_t!r}", aloc)
            m = _PAIR_RE.match(pos_t)
            if not m:
                raise LayoutError(f"expected (y,z) position, got {pos_t!r}", ploc)
            y = _parse_length(m.group(1).strip(), ploc)
            z = _parse_length(m.group(2).strip(), ploc)
            if idx in transducers:
                raise LayoutError(f"transducer {idx} already placed", iloc)
            transducers[idx] = Transducer(index=idx, y=y, z=z)
        else:
            raise LayoutError(f"unknown statement {keyword!r}", kw_loc)

    if grid is None:
        raise LayoutError("program declares no GRID", SourceLocation(1, 1))
    margin = grid.pitch_ws
    geometry = SceneGeometry(
        y_extent=(grid.origin[0] - margin, grid.origin[0] + grid.rows * grid.pitch_ws + margin),
        z_extent=(grid.origin[1] - margin, grid.origin[1] + grid.cols * grid.pitch_ws + margin),
        transducers=transducers,
    )
    return grid, geometry


def _format_length(meters: float) -> str:
    mm = meters * 1e3
    if abs(mm - round(mm)) < 1e-9:
        return f"{int(round(mm))}mm"
    return f"{mm:.6g}mm"


def unparse(grid: PinGrid, geometry: SceneGeometry | None = None) -> str:
    """Canonical program text: GRID, sorted FILLs, then transducers."""
    lines = [f"GRID {grid.rows} {grid.cols} {_format_length(grid.pitch_ws)}"]
    lines.extend(f"FILL {r} {c}" for (r, c) in sorted(grid.filled))
    if geometry is not None:
        for idx in sorted(geometry.transducers):
            t = geometry.transducers[idx]
            lines.append(
                f"TRANSDUCER {idx} at ({_format_length(t.y)},{_format_length(t.z)})")
    return "\n".join(lines) + "\n"
