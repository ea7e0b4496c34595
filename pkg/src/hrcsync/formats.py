"""Versioned line-delimited text formats (traces and label files).

Every file starts with a header line ``# hrcsync <kind> v<N>``; readers
reject other kinds and unknown versions. Floats are written with ``repr`` so
a read/write cycle is byte-exact.
"""

from __future__ import annotations

from typing import Iterable, Iterator, TextIO

from .world_types import Intent


class FormatError(ValueError):
    """Malformed or unsupported input file."""

    def __init__(self, msg: str, line: int | None = None):
        super().__init__(f"line {line}: {msg}" if line is not None else msg)
        self.line = line


def header(kind: str, version: int = 1) -> str:
    return f"# hrcsync {kind} v{version}"


def check_header(line: str, kind: str, supported=(1,)) -> int:
    parts = line.strip().split()
    if len(parts) != 4 or parts[:2] != ["#", "hrcsync"] or parts[2] != kind:
        raise FormatError(f"expected a '{header(kind)}' header, got {line.strip()!r}", 1)
    try:
        v = int(parts[3].lstrip("v"))
    except ValueError:
        raise FormatError(f"bad version field {parts[3]!r}", 1) from None
    if v not in supported:
        raise FormatError(f"unsupported {kind} version {v}", 1)
    return v


def f(x: float) -> str:
    return repr(float(x))


def _rows(fh: TextIO, kind: str, ncols: int | None = None) -> Iterator[tuple[int, list[str]]]:
    first = fh.readline()
    if not first:
        raise FormatError(f"empty {kind} file")
    check_header(first, kind)
    for no, line in enumerate(fh, start=2):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        cols = line.split(",")
        if ncols is not None and len(cols) != ncols:
            raise FormatError(f"expected {ncols} fields, got {len(cols)}", no)
        yield no, cols


def _floats(cols, no):
    try:
        return [float(c) for c in cols]
    except ValueError as e:
        raise FormatError(str(e), no) from None


# gaze trace: t,ox,oy,oz,dx,dy,dz

GAZE_KIND = "gaze-trace"


def write_gaze_trace(fh: TextIO, samples: Iterable) -> None:
    fh.write(header(GAZE_KIND) + "\n")
    for s in samples:
        fh.write(",".join(f(v) for v in (s.t, *s.origin, *s.direction)) + "\n")


def read_gaze_trace(fh: TextIO) -> Iterator:
    from .gaze import GazeSample

    for no, cols in _rows(fh, GAZE_KIND, 7):
        v = _floats(cols, no)
        try:
            yield GazeSample(v[0], tuple(v[1:4]), tuple(v[4:7]))
        except ValueError as e:
            raise FormatError(str(e), no) from None


# IMU trace: t,sensor,ax,ay,az,gx,gy,gz,mx,my,mz

IMU_KIND = "imu-trace"


def write_imu_trace(fh: TextIO, samples: Iterable) -> None:
    fh.write(header(IMU_KIND) + "\n")
    for s in samples:
        fh.write(",".join([f(s.t), s.sensor, *(f(v) for v in s.values)]) + "\n")


def read_imu_trace(fh: TextIO) -> Iterator:
    from .imu.frames import ImuSample

    for no, cols in _rows(fh, IMU_KIND, 11):
        v = _floats([cols[0], *cols[2:]], no)
        try:
            yield ImuSample(v[0], cols[1], tuple(v[1:4]), tuple(v[4:7]), tuple(v[7:10]))
        except ValueError as e:
            raise FormatError(str(e), no) from None


# label file: t,label

LABEL_KIND = "labels"


def write_labels(fh: TextIO, labels: Iterable[tuple[float, Intent]]) -> None:
    fh.write(header(LABEL_KIND) + "\n")
    for t, lab in labels:
        fh.write(f"{f(t)},{Intent(lab).value}\n")


def read_labels(fh: TextIO) -> list[tuple[float, Intent]]:
    out = []
    for no, cols in _rows(fh, LABEL_KIND, 2):
        try:
            out.append((float(cols[0]), Intent(cols[1])))
        except ValueError as e:
            raise FormatError(str(e), no) from None
    return out
