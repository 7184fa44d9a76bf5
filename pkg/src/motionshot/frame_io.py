"""Luma-frame ingestion for uncompressed video.

Three containers are understood:

* Y4M streams (``YUV4MPEG2`` header, ``FRAME`` delimited, 8-bit 4:2:0 or mono)
* headerless planar I420 files, dimensions supplied by the caller
* directories of binary P5 PGM images, ordered by the number in the filename

Only the luma plane is returned. Chroma is skipped on read.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

Y4M_MAGIC = b"YUV4MPEG2"
FRAME_MARKER = b"FRAME"

# Accepted Y4M chroma tags, mapped to their plane layout family.
_Y4M_COLORSPACES = {
    "420": "420",
    "420jpeg": "420",
    "420paldv": "420",
    "420mpeg2": "420",
    "mono": "mono",
}

MIN_FRAME_SIDE = 16


class FrameIOError(Exception):
    """Base class for every input error raised while reading video."""


class UnknownFormat(FrameIOError):
    pass


class DimensionMismatch(FrameIOError):
    pass


class UnsupportedColorspace(FrameIOError):
    pass


class IndexOutOfRange(FrameIOError, IndexError):
    pass


class IoFailure(FrameIOError):
    pass


class MissingFrameMarker(FrameIOError):
    pass


class FrameTooSmall(FrameIOError):
    pass


class SourceFormat(str, enum.Enum):
    Y4M = "y4m"
    RAW_YUV420 = "yuv420"
    PGM_SEQUENCE = "pgm"


@dataclass(frozen=True)
class Frame:
    """One 8-bit luma plane. ``luma`` has shape ``(height, width)``."""

    index: int
    luma: np.ndarray = field(repr=False)

    def __post_init__(self):
        luma = np.asarray(self.luma)
        if luma.ndim != 2:
            raise ValueError(f"luma must be 2-D, got shape {luma.shape}")
        if luma.dtype != np.uint8:
            if luma.size and (luma.min() < 0 or luma.max() > 255):
                raise ValueError("luma samples must lie in [0, 255]")
            luma = luma.astype(np.uint8)
        h, w = luma.shape
        if w < MIN_FRAME_SIDE or h < MIN_FRAME_SIDE:
            raise FrameTooSmall(f"frame {w}x{h} is below {MIN_FRAME_SIDE}x{MIN_FRAME_SIDE}")
        luma = np.ascontiguousarray(luma)
        luma.flags.writeable = False
        object.__setattr__(self, "luma", luma)

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @property
    def height(self) -> int:
        return self.luma.shape[0]

    def crop(self, x0: int, y0: int, width: int, height: int) -> "Frame":
        return Frame(self.index, self.luma[y0:y0 + height, x0:x0 + width])


@dataclass(frozen=True)
class SourceDescriptor:
    """Immutable description of an opened source.

    ``offsets`` holds the byte offset of every frame's luma plane (Y4M and
    raw) or is empty for PGM sequences, where ``files`` lists the images.
    """

    path: Path
    format: SourceFormat
    width: int
    height: int
    frame_count: int
    offsets: tuple[int, ...] = ()
    files: tuple[Path, ...] = ()
    marker_offsets: tuple[int, ...] = ()


def _yuv420_frame_bytes(width: int, height: int) -> int:
    return width * height + 2 * ((width + 1) // 2) * ((height + 1) // 2)


def _parse_y4m_header(line: bytes) -> tuple[int, int, str]:
    tokens = line.decode("ascii", errors="replace").split()
    if not tokens or tokens[0] != Y4M_MAGIC.decode():
        raise UnknownFormat("missing YUV4MPEG2 magic")
    width = height = None
    colorspace = "420jpeg"
    for tok in tokens[1:]:
        key, val = tok[0], tok[1:]
        if key in "WH":
            try:
                num = int(val)
            except ValueError:
                raise UnknownFormat(f"bad Y4M header token {tok!r}") from None
            if key == "W":
                width = num
            else:
                height = num
        elif key == "C":
            colorspace = val
        # F, I, A, X tokens do not affect luma extraction
    if width is None or height is None:
        raise UnknownFormat("Y4M header lacks W or H")
    if colorspace not in _Y4M_COLORSPACES:
        raise UnsupportedColorspace(f"Y4M colorspace C{colorspace} is not supported")
    return width, height, _Y4M_COLORSPACES[colorspace]


def _open_y4m(path: Path) -> SourceDescriptor:
    size = path.stat().st_size
    with open(path, "rb") as fh:
        header = fh.readline()
        if not header.endswith(b"\n"):
            raise UnknownFormat("unterminated Y4M header")
        width, height, family = _parse_y4m_header(header)
        luma_bytes = width * height
        payload = luma_bytes if family == "mono" else _yuv420_frame_bytes(width, height)
        offsets = []
        markers = []
        pos = fh.tell()
        while pos < size:
            fh.seek(pos)
            line = fh.readline(256)
            if not line.startswith(FRAME_MARKER) or not line.endswith(b"\n"):
                raise MissingFrameMarker(f"expected FRAME marker at byte {pos}")
            markers.append(pos)
            start = pos + len(line)
            if start + payload > size:
                raise IoFailure(f"truncated frame {len(offsets)} at byte {start}")
            offsets.append(start)
            pos = start + payload
    return SourceDescriptor(
        path=path,
        format=SourceFormat.Y4M,
        width=width,
        height=height,
        frame_count=len(offsets),
        offsets=tuple(offsets),
        marker_offsets=tuple(markers),
    )


def _open_raw(path: Path, width: int | None, height: int | None) -> SourceDescriptor:
    if not width or not height:
        raise UnknownFormat(f"{path}: raw YUV input needs --width and --height")
    frame_bytes = _yuv420_frame_bytes(width, height)
    size = path.stat().st_size
    if size % frame_bytes:
        raise DimensionMismatch(
            f"{path}: {size} bytes is not a multiple of the {width}x{height} "
            f"I420 frame size ({frame_bytes} bytes)"
        )
    count = size // frame_bytes
    return SourceDescriptor(
        path=path,
        format=SourceFormat.RAW_YUV420,
        width=width,
        height=height,
        frame_count=count,
        offsets=tuple(i * frame_bytes for i in range(count)),
    )


_NUMBER = re.compile(r"(\d+)")


def _pgm_sort_key(p: Path):
    nums = _NUMBER.findall(p.stem)
    # files without a number sort after numbered ones
    return (0, int(nums[-1]), p.name) if nums else (1, 0, p.name)


def _read_pgm_header(fh) -> tuple[int, int, int]:
    """Parse a P5 header, leaving ``fh`` at the first raster byte."""
    tokens: list[bytes] = []
    magic = fh.read(2)
    if magic != b"P5":
        raise UnknownFormat("not a binary PGM (P5) file")
    while len(tokens) < 3:
        ch = fh.read(1)
        if not ch:
            raise IoFailure("truncated PGM header")
        if ch == b"#":
            fh.readline()
        elif ch.isspace():
            continue
        else:
            tok = ch
            while True:
                ch = fh.read(1)
                if not ch or ch.isspace():
                    break
                if ch == b"#":
                    fh.readline()
                    break
                tok += ch
            tokens.append(tok)
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise IoFailure(f"malformed PGM header: {exc}") from None
    if maxval != 255:
        raise UnsupportedColorspace(f"PGM maxval {maxval} is not supported (need 255)")
    return width, height, maxval


def _open_pgm(path: Path) -> SourceDescriptor:
    if path.is_dir():
        files = sorted((p for p in path.iterdir() if p.suffix.lower() == ".pgm"), key=_pgm_sort_key)
    else:
        files = [path]
    if not files:
        raise UnknownFormat(f"{path}: no .pgm files found")
    dims = None
    for f in files:
        with open(f, "rb") as fh:
            w, h, _ = _read_pgm_header(fh)
        if dims is None:
            dims = (w, h)
        elif dims != (w, h):
            raise DimensionMismatch(f"{f}: {w}x{h} differs from {dims[0]}x{dims[1]}")
    return SourceDescriptor(
        path=path,
        format=SourceFormat.PGM_SEQUENCE,
        width=dims[0],
        height=dims[1],
        frame_count=len(files),
        files=tuple(files),
    )


def detect_format(path: Path, width: int | None = None, height: int | None = None) -> SourceFormat:
    if path.is_dir() or path.suffix.lower() == ".pgm":
        return SourceFormat.PGM_SEQUENCE
    with open(path, "rb") as fh:
        head = fh.read(len(Y4M_MAGIC))
    if head == Y4M_MAGIC:
        return SourceFormat.Y4M
    if width and height:
        return SourceFormat.RAW_YUV420
    raise UnknownFormat(f"{path}: not Y4M, not a PGM sequence, and no raw dimensions given")


def open_source(
    path,
    width: int | None = None,
    height: int | None = None,
    format: SourceFormat | str | None = None,
) -> SourceDescriptor:
    """Open ``path`` and resolve its dimensions and frame count.

    ``format`` forces a container; otherwise it is sniffed from the
    file contents (Y4M magic), the path (directory or ``.pgm``), or the
    presence of ``width``/``height`` hints (raw I420).
    """
    path = Path(path)
    if not path.exists():
        raise IoFailure(f"{path}: no such file or directory")
    try:
        fmt = SourceFormat(format) if format is not None else detect_format(path, width, height)
        if fmt is SourceFormat.Y4M:
            desc = _open_y4m(path)
        elif fmt is SourceFormat.RAW_YUV420:
            desc = _open_raw(path, width, height)
        else:
            desc = _open_pgm(path)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if desc.width < MIN_FRAME_SIDE or desc.height < MIN_FRAME_SIDE:
        raise FrameTooSmall(f"{path}: {desc.width}x{desc.height} is below one 16x16 macroblock")
    return desc


def read_frame(source: SourceDescriptor, index: int) -> Frame:
    """Return the luma plane of frame ``index``.

    Each call opens its own file handle, so concurrent reads are safe.
    """
    if not 0 <= index < source.frame_count:
        raise IndexOutOfRange(f"frame {index} outside [0, {source.frame_count})")
    w, h = source.width, source.height
    try:
        if source.format is SourceFormat.PGM_SEQUENCE:
            with open(source.files[index], "rb") as fh:
                fw, fh_, _ = _read_pgm_header(fh)
                if (fw, fh_) != (w, h):
                    raise DimensionMismatch(f"{source.files[index]}: size changed since open")
                data = fh.read(w * h)
        else:
            with open(source.path, "rb") as fh:
                if source.format is SourceFormat.Y4M:
                    fh.seek(source.marker_offsets[index])
                    if fh.read(len(FRAME_MARKER)) != FRAME_MARKER:
                        raise MissingFrameMarker(f"frame {index}: FRAME marker missing")
                fh.seek(source.offsets[index])
                data = fh.read(w * h)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    if len(data) != w * h:
        raise IoFailure(f"frame {index}: short read ({len(data)} of {w * h} bytes)")
    return Frame(index, np.frombuffer(data, dtype=np.uint8).reshape(h, w))


def iter_frames(source: SourceDescriptor):
    for i in range(source.frame_count):
        yield read_frame(source, i)


# --- writers, used for fixtures and round-trips -------------------------------------


def write_pgm(path, frame: Frame | np.ndarray) -> None:
    luma = frame.luma if isinstance(frame, Frame) else np.asarray(frame, dtype=np.uint8)
    h, w = luma.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(luma, dtype=np.uint8).tobytes())


def write_pgm_sequence(directory, frames, pattern: str = "frame_{:05d}.pgm") -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, fr in enumerate(frames):
        p = directory / pattern.format(i)
        write_pgm(p, fr)
        paths.append(p)
    return paths


def _planes(frame, chroma):
    luma = frame.luma if isinstance(frame, Frame) else np.asarray(frame, dtype=np.uint8)
    h, w = luma.shape
    cw, ch = (w + 1) // 2, (h + 1) // 2
    if chroma is None:
        chroma = np.full((2, ch, cw), 128, dtype=np.uint8)
    chroma = np.asarray(chroma, dtype=np.uint8).reshape(2, ch, cw)
    return luma, chroma


def write_raw_yuv420(path, frames, chroma=None) -> None:
    """Write frames as headerless I420. ``chroma`` (if given) is reused for every frame."""
    with open(path, "wb") as fh:
        for fr in frames:
            luma, ch = _planes(fr, chroma)
            fh.write(np.ascontiguousarray(luma).tobytes())
            fh.write(ch.tobytes())


def write_y4m(path, frames, fps: str = "25:1", colorspace: str = "420jpeg", chroma=None) -> None:
    frames = list(frames)
    if not frames:
        raise ValueError("cannot write an empty Y4M stream")
    first = frames[0].luma if isinstance(frames[0], Frame) else np.asarray(frames[0])
    h, w = first.shape
    with open(path, "wb") as fh:
        fh.write(f"YUV4MPEG2 W{w} H{h} F{fps} Ip A1:1 C{colorspace}\n".encode())
        for fr in frames:
            luma, ch = _planes(fr, chroma)
            fh.write(FRAME_MARKER + b"\n")
            fh.write(np.ascontiguousarray(luma).tobytes())
            if colorspace != "mono":
                fh.write(ch.tobytes())


__all__ = [
    "DimensionMismatch",
    "Frame",
    "FrameIOError",
    "FrameTooSmall",
    "IndexOutOfRange",
    "IoFailure",
    "MissingFrameMarker",
    "SourceDescriptor",
    "SourceFormat",
    "UnknownFormat",
    "UnsupportedColorspace",
    "detect_format",
    "iter_frames",
    "open_source",
    "read_frame",
    "write_pgm",
    "write_pgm_sequence",
    "write_raw_yuv420",
    "write_y4m",
]
