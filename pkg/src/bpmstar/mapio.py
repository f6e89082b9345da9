"""Reading and writing instances.

Two formats are supported:

* MovingAI benchmark pair: a `.map` file (``type octile`` header, then the
  grid with ``.`` passable and ``@``/``T`` blocked) plus a `.scen` file whose
  tab-separated rows carry start col, start row, goal col, goal row in
  fields 4-7.
* A self-contained internal text format: first line ``H W``, then H rows of
  ``.``/``@``, then one ``sr sc gr gc`` line per agent.
"""
from __future__ import annotations

from .domain import Cell, GridMap, Instance


class ParseError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


def _decode(data: bytes | str) -> list[str]:
    if isinstance(data, bytes):
        data = data.decode("ascii")
    return data.splitlines()


def parse_map(map_text: bytes | str) -> GridMap:
    """Parse a MovingAI `.map` file."""
    lines = _decode(map_text)
    if len(lines) < 4:
        raise ParseError("map file too short for a MovingAI header")
    header: dict[str, str] = {}
    for idx in range(3):
        parts = lines[idx].split()
        if not parts:
            raise ParseError("empty header line", line=idx + 1)
        header[parts[0].lower()] = parts[1] if len(parts) > 1 else ""
    if "type" not in header:
        raise ParseError("missing 'type' header", line=1)
    try:
        height = int(header["height"])
        width = int(header["width"])
    except (KeyError, ValueError):
        raise ParseError("missing or malformed height/width header")
    if lines[3].strip().lower() != "map":
        raise ParseError("expected 'map' keyword", line=4)
    rows = lines[4 : 4 + height]
    if len(rows) < height or any(l.strip() for l in lines[4 + height :]):
        raise ParseError(
            f"map body must have exactly {height} rows", line=4 + len(rows)
        )
    obstacles = set()
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(
                f"row width {len(row)} does not match header width {width}",
                line=5 + r,
            )
        for c, ch in enumerate(row):
            if ch in "@T":
                obstacles.add((r, c))
            elif ch != ".":
                raise ParseError(f"unknown map character {ch!r}", line=5 + r)
    return GridMap(width=width, height=height, obstacles=frozenset(obstacles))


def parse_scen(scen_text: bytes | str, n_agents: int) -> tuple[list[Cell], list[Cell]]:
    """Take the first n_agents start/goal pairs from a MovingAI `.scen` file."""
    lines = _decode(scen_text)
    starts: list[Cell] = []
    goals: list[Cell] = []
    for idx, line in enumerate(lines):
        if not line.strip() or line.lower().startswith("version"):
            continue
        fields = line.split("\t")
        if len(fields) == 1:
            fields = line.split()
        if len(fields) < 8:
            raise ParseError("scenario row has fewer than 8 fields", line=idx + 1)
        try:
            s_col, s_row, g_col, g_row = (int(v) for v in fields[4:8])
        except ValueError:
            raise ParseError("non-integer coordinate field", line=idx + 1)
        starts.append((s_row, s_col))
        goals.append((g_row, g_col))
        if len(starts) == n_agents:
            return starts, goals
    raise ParseError(
        f"scenario file has only {len(starts)} usable rows, need {n_agents}"
    )


def load_instance(map_text: bytes | str, scen_text: bytes | str, n_agents: int) -> Instance:
    """Build an Instance from MovingAI map and scenario texts."""
    if n_agents < 1:
        raise ValueError("n_agents must be >= 1")
    grid = parse_map(map_text)
    starts, goals = parse_scen(scen_text, n_agents)
    for label, cells in (("start", starts), ("goal", goals)):
        for cell in cells:
            if not grid.passable(cell):
                raise ParseError(f"{label} {cell} is an obstacle or out of bounds")
    return Instance(grid=grid, starts=tuple(starts), goals=tuple(goals))


def write_movingai(instance: Instance) -> tuple[bytes, bytes]:
    """Render an instance as a MovingAI (map_bytes, scen_bytes) pair."""
    grid = instance.grid
    rows = [
        "".join(
            "@" if (r, c) in grid.obstacles else "." for c in range(grid.width)
        )
        for r in range(grid.height)
    ]
    map_text = "\n".join(
        ["type octile", f"height {grid.height}", f"width {grid.width}", "map", *rows]
    ) + "\n"
    scen_lines = ["version 1"]
    for (sr, sc), (gr, gc) in zip(instance.starts, instance.goals):
        # bucket, map name and optimal length are fillers; only fields 4-7 matter.
        scen_lines.append(
            f"0\tmap\t{grid.width}\t{grid.height}\t{sc}\t{sr}\t{gc}\t{gr}\t0"
        )
    return map_text.encode("ascii"), ("\n".join(scen_lines) + "\n").encode("ascii")


def write_instance(instance: Instance) -> bytes:
    """Render an instance in the internal single-file format."""
    grid = instance.grid
    lines = [f"{grid.height} {grid.width}"]
    for r in range(grid.height):
        lines.append(
            "".join("@" if (r, c) in grid.obstacles else "." for c in range(grid.width))
        )
    for (sr, sc), (gr, gc) in zip(instance.starts, instance.goals):
        lines.append(f"{sr} {sc} {gr} {gc}")
    return ("\n".join(lines) + "\n").encode("ascii")


def load_internal(data: bytes | str) -> Instance:
    """Parse the internal single-file format produced by write_instance."""
    lines = [l for l in _decode(data) if l.strip()]
    if not lines:
        raise ParseError("empty instance file")
    try:
        height, width = (int(v) for v in lines[0].split())
    except ValueError:
        raise ParseError("first line must be 'H W'", line=1)
    if len(lines) < 1 + height:
        raise ParseError(f"expected {height} map rows", line=len(lines))
    obstacles = set()
    for r in range(height):
        row = lines[1 + r]
        if len(row) != width:
            raise ParseError(f"map row has width {len(row)}, expected {width}", line=2 + r)
        for c, ch in enumerate(row):
            if ch == "@":
                obstacles.add((r, c))
            elif ch != ".":
                raise ParseError(f"unknown map character {ch!r}", line=2 + r)
    starts: list[Cell] = []
    goals: list[Cell] = []
    for idx, line in enumerate(lines[1 + height :]):
        try:
            sr, sc, gr, gc = (int(v) for v in line.split())
        except ValueError:
            raise ParseError("agent line must be 'sr sc gr gc'", line=2 + height + idx)
        starts.append((sr, sc))
        goals.append((gr, gc))
    if not starts:
        raise ParseError("instance file has no agent lines")
    grid = GridMap(width=width, height=height, obstacles=frozenset(obstacles))
    return Instance(grid=grid, starts=tuple(starts), goals=tuple(goals))
