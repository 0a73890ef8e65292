"""Bundled experiment tables and the plain-text dataset format.

File format (UTF-8, comma separated, ``#`` starts a comment line)::

    # name: budden            <- optional metadata: name, source, note
    sx,sy,N,nxx               <- header of an xxy-family file
    15,7.1,332,304
    ...

or, for a single die::

    heights,10,11.5,7.61,5.39,11.5,10     <- header line: heights or sides
    scale,16.45                           <- required with heights only
    counts,207,135,466,828,133,181

``sides,A,B,C`` describes a homogeneous cuboid (six faces, numbered as in
:mod:`gibbsdice.model`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .errors import DatasetError, GibbsDiceError
from .estimation import TossCounts, XxyObservation
from .model import CuboidSpec, GeneralDieSpec, Normalization, cuboid_energies, general_energies

BUILTIN = ("control-I", "control-II", "budden", "heilbronner", "ushape-I", "ushape-II")
XXY_HEADER = ("sx", "sy", "N", "nxx")
META_KEYS = ("name", "source", "note")


@dataclass(frozen=True)
class ExperimentRecord:
    name: str = ""
    source: str = ""
    note: str = ""
    die: Union[CuboidSpec, GeneralDieSpec, None] = None
    counts: Optional[TossCounts] = None
    observations: Optional[tuple[XxyObservation, ...]] = None

    @property
    def kind(self) -> str:
        if self.observations is not None:
            return "xxy"
        return "cuboid" if isinstance(self.die, CuboidSpec) else "general"

    def energies(self, norm: Union[Normalization, str, None] = None) -> np.ndarray:
        """State energies of a single-die record.

        Cuboids default to the half-diagonal normalization; general dice
        always use their explicit scale.
        """
        if self.kind == "xxy":
            raise DatasetError("xxy families have per-cuboid energies; use the observations")
        if isinstance(self.die, CuboidSpec):
            return cuboid_energies(self.die, norm or Normalization.HALF_DIAGONAL)
        return general_energies(self.die)


def _fmt(x) -> str:
    x = float(x)
    return str(int(x)) if x.is_integer() else repr(x)


def serialize_experiment(record: ExperimentRecord) -> str:
    lines = [f"# {key}: {getattr(record, key)}" for key in META_KEYS if getattr(record, key)]
    if record.kind == "xxy":
        lines.append(",".join(XXY_HEADER))
        for o in record.observations:
            lines.append(f"{_fmt(o.sx)},{_fmt(o.sy)},{o.N},{o.nxx}")
    else:
        if isinstance(record.die, CuboidSpec):
            lines.append("sides," + ",".join(_fmt(s) for s in record.die.sides))
        else:
            lines.append("heights," + ",".join(_fmt(h) for h in record.die.heights))
            lines.append(f"scale,{_fmt(record.die.scale)}")
        lines.append("counts," + ",".join(str(c) for c in record.counts.counts))
    return "\n".join(lines) + "\n"


def _number(text: str, where: str, integer=False):
    text = text.strip()
    try:
        value = int(text) if integer else float(text)
    except ValueError:
        kind = "an integer" if integer else "a number"
        raise DatasetError(f"{where}: expected {kind}, got {text!r}") from None
    if not integer and not math.isfinite(value):
        raise DatasetError(f"{where}: value must be finite, got {text!r}")
    return value


def parse_experiment(text: str) -> ExperimentRecord:
    """Parse dataset file content; errors name the offending line and column."""
    meta = {}
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].partition(":")
            if sep and key.strip() in META_KEYS and key.strip() not in meta:
                meta[key.strip()] = value.strip()
            continue
        rows.append((lineno, [c.strip() for c in line.split(",")]))
    if not rows:
        raise DatasetError("no header line found")
    lineno, header = rows[0]
    if tuple(header) == XXY_HEADER:
        return ExperimentRecord(**meta, observations=_parse_xxy(rows[1:]))
    if header[0] in ("sides", "heights"):
        return _parse_die(rows, meta)
    raise DatasetError(
        f"line {lineno}: malformed header {','.join(header)!r}; expected "
        f"'{','.join(XXY_HEADER)}' or a 'heights'/'sides' line"
    )


def _parse_xxy(rows) -> tuple[XxyObservation, ...]:
    obs = []
    for lineno, cells in rows:
        if len(cells) != len(XXY_HEADER):
            raise DatasetError(f"line {lineno}: expected {len(XXY_HEADER)} columns, got {len(cells)}")
        sx, sy = (_number(c, f"line {lineno}, column {col}") for c, col in zip(cells[:2], XXY_HEADER))
        N = _number(cells[2], f"line {lineno}, column N", integer=True)
        nxx = _number(cells[3], f"line {lineno}, column nxx", integer=True)
        for col, v in (("sx", sx), ("sy", sy)):
            if v <= 0:
                raise DatasetError(f"line {lineno}, column {col}: length must be positive, got {v:g}")
        if N < 1:
            raise DatasetError(f"line {lineno}, column N: must be >= 1, got {N}")
        if nxx < 0:
            raise DatasetError(f"line {lineno}, column nxx: negative count {nxx}")
        if nxx > N:
            raise DatasetError(f"line {lineno}, column nxx: nxx={nxx} exceeds N={N}")
        obs.append(XxyObservation(sx, sy, N, nxx))
    if not obs:
        raise DatasetError("xxy dataset has no data rows")
    return tuple(obs)


def _parse_die(rows, meta) -> ExperimentRecord:
    fields = {}
    for lineno, cells in rows:
        key = cells[0]
        if key not in ("sides", "heights", "scale", "counts"):
            raise DatasetError(f"line {lineno}: unknown row label {key!r}")
        if key in fields:
            raise DatasetError(f"line {lineno}: duplicate {key!r} row")
        fields[key] = (lineno, cells[1:])
    if "sides" in fields and "heights" in fields:
        raise DatasetError("give either 'sides' or 'heights', not both")
    if "counts" not in fields:
        raise DatasetError("missing 'counts' row")

    c_line, c_cells = fields["counts"]
    counts = [_number(c, f"line {c_line}, column {i + 1}", integer=True) for i, c in enumerate(c_cells)]
    for i, c in enumerate(counts):
        if c < 0:
            raise DatasetError(f"line {c_line}, column {i + 1}: negative count {c}")

    try:
        if "sides" in fields:
            s_line, s_cells = fields["sides"]
            if len(s_cells) != 3:
                raise DatasetError(f"line {s_line}: 'sides' needs 3 values, got {len(s_cells)}")
            sides = [_number(c, f"line {s_line}, column {i + 1}") for i, c in enumerate(s_cells)]
            _positive(sides, s_line)
            die = CuboidSpec(*sides)
            k = 6
        else:
            h_line, h_cells = fields["heights"]
            heights = [_number(c, f"line {h_line}, column {i + 1}") for i, c in enumerate(h_cells)]
            _positive(heights, h_line)
            if "scale" not in fields:
                raise DatasetError("missing 'scale' row (required with 'heights')")
            sc_line, sc_cells = fields["scale"]
            if len(sc_cells) != 1:
                raise DatasetError(f"line {sc_line}: 'scale' needs exactly one value")
            scale = _number(sc_cells[0], f"line {sc_line}, column 1")
            _positive([scale], sc_line)
            die = GeneralDieSpec(tuple(heights), scale)
            k = die.k
    except DatasetError:
        raise
    except GibbsDiceError as exc:
        raise DatasetError(str(exc)) from None

    if len(counts) != k:
        raise DatasetError(f"line {c_line}: die has {k} states but {len(counts)} counts were given")
    if sum(counts) < 1:
        raise DatasetError(f"line {c_line}: no observations")
    return ExperimentRecord(**meta, die=die, counts=TossCounts(tuple(counts)))


def _positive(values, lineno):
    for i, v in enumerate(values):
        if v <= 0:
            raise DatasetError(f"line {lineno}, column {i + 1}: length must be positive, got {v:g}")


def load_experiment(path: Union[str, Path]) -> ExperimentRecord:
    return parse_experiment(Path(path).read_text(encoding="utf-8"))


def builtin_text(name: str) -> str:
    lookup = {b.lower(): b for b in BUILTIN}
    canonical = lookup.get(str(name).lower())
    if canonical is None:
        raise DatasetError(f"unknown dataset {name!r}; available: {', '.join(BUILTIN)}")
    return resources.files("gibbsdice").joinpath("data", f"{canonical}.csv").read_text(encoding="utf-8")


def load_builtin(name: str) -> ExperimentRecord:
    """One of the bundled experiments, see :data:`BUILTIN`."""
    return parse_experiment(builtin_text(name))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def reconstruct_counts(percentages: Sequence[float], N: int) -> tuple[int, ...]:
    """Integer counts summing to ``N`` from frequencies published in percent.

    Starts from ``round(f * N)``.  A nonzero residual is removed one toss at a
    time from the largest cell whose published percentage survives the change;
    if no such cell exists the whole residual goes to the largest cell.
    """
    f = [float(p) for p in percentages]
    n = [_round_half_up(p * N / 100.0) for p in f]

    def keeps(i, value):
        return abs(_round_half_up(1000.0 * value / N) / 10.0 - f[i]) < 1e-9

    residual = N - sum(n)
    while residual:
        step = 1 if residual > 0 else -1
        order = sorted(range(len(n)), key=lambda i: -n[i])
        for i in order:
            if keeps(i, n[i] + step):
                n[i] += step
                residual -= step
                break
        else:
            n[order[0]] += residual
            residual = 0
    return tuple(n)
