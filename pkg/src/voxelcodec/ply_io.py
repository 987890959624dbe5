"""PLY point-cloud reader/writer.

Reads ASCII and binary little-endian PLY vertex data; the writer always
emits binary little-endian float32, which keeps voxel coordinates exact
(they stay far below 2^24).
"""

import numpy as np

from .errors import PlyParseError, UnsupportedFormatError

_SCALAR_TYPES = {
    "char": "i1", "int8": "i1",
    "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2",
    "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4",
    "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4",
    "double": "f8", "float64": "f8",
}


class _Element:
    def __init__(self, name, count, line):
        self.name = name
        self.count = count
        self.line = line
        self.properties = []  # (name, numpy type char) scalars only
        self.has_list = False


def _parse_header(data):
    """Returns (format, elements, body offset). Raises on malformed input."""
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise PlyParseError("not a PLY file (missing 'ply'/'end_header')", line=1)
    nl = data.find(b"\n", end)
    if nl < 0:
        raise PlyParseError("missing newline after end_header")
    header_text = data[:nl].decode("ascii", errors="replace")
    body_offset = nl + 1

    fmt = None
    elements = []
    for lineno, raw in enumerate(header_text.splitlines(), start=1):
        line = raw.strip()
        if lineno == 1:
            if line != "ply":
                raise PlyParseError("first line must be 'ply'", line=lineno)
            continue
        if not line or line.startswith(("comment", "obj_info")):
            continue
        if line == "end_header":
            break
        fields = line.split()
        if fields[0] == "format":
            if len(fields) < 2:
                raise PlyParseError("malformed format line", line=lineno)
            if fields[1] == "ascii":
                fmt = "ascii"
            elif fields[1] == "binary_little_endian":
                fmt = "binary_le"
            elif fields[1] == "binary_big_endian":
                raise UnsupportedFormatError("big-endian PLY is not supported")
            else:
                raise PlyParseError(f"unknown format '{fields[1]}'", line=lineno)
        elif fields[0] == "element":
            if len(fields) != 3:
                raise PlyParseError("malformed element line", line=lineno)
            try:
                count = int(fields[2])
            except ValueError:
                raise PlyParseError("element count is not an integer", line=lineno)
            if count < 0:
                raise PlyParseError("negative element count", line=lineno)
            elements.append(_Element(fields[1], count, lineno))
        elif fields[0] == "property":
            if not elements:
                raise PlyParseError("property before any element", line=lineno)
            if len(fields) >= 2 and fields[1] == "list":
                elements[-1].has_list = True
                continue
            if len(fields) != 3:
                raise PlyParseError("malformed property line", line=lineno)
            ptype = _SCALAR_TYPES.get(fields[1])
            if ptype is None:
                raise PlyParseError(f"unknown property type '{fields[1]}'", line=lineno)
            elements[-1].properties.append((fields[2], ptype))
        else:
            raise PlyParseError(f"unrecognized header keyword '{fields[0]}'", line=lineno)
    if fmt is None:
        raise PlyParseError("header has no format line")
    return fmt, elements, body_offset


def read_ply(path):
    """Read vertex coordinates from a PLY file.

    Returns an (N, 3) float64 array of x, y, z; all other vertex
    properties are skipped. N may be 0.
    """
    with open(path, "rb") as fh:
        data = fh.read()
    fmt, elements, offset = _parse_header(data)

    vertex = None
    preceding = []
    for el in elements:
        if el.name == "vertex":
            vertex = el
            break
        preceding.append(el)
    if vertex is None:
        raise PlyParseError("no 'element vertex' in header")
    if vertex.has_list:
        raise PlyParseError("list properties on the vertex element are not supported",
                            line=vertex.line)
    names = [n for n, _ in vertex.properties]
    for axis in ("x", "y", "z"):
        if axis not in names:
            raise PlyParseError(f"vertex element lacks '{axis}' property", line=vertex.line)

    if fmt == "ascii":
        text = data[offset:].decode("ascii", errors="replace").splitlines()
        skip = sum(el.count for el in preceding)
        rows = text[skip:skip + vertex.count]
        if len(rows) < vertex.count:
            raise PlyParseError(
                f"expected {vertex.count} vertex rows, found {len(rows)}")
        cols = [names.index(a) for a in ("x", "y", "z")]
        out = np.empty((vertex.count, 3), dtype=np.float64)
        for i, row in enumerate(rows):
            parts = row.split()
            if len(parts) < len(names):
                raise PlyParseError(f"vertex row {i} has {len(parts)} fields, "
                                    f"expected {len(names)}")
            try:
                for j, c in enumerate(cols):
                    out[i, j] = float(parts[c])
            except ValueError:
                raise PlyParseError(f"vertex row {i} has a non-numeric coordinate")
        return out

    # binary little-endian
    pos = offset
    for el in preceding:
        if el.has_list:
            raise PlyParseError(
                f"cannot skip element '{el.name}' with list properties in binary PLY",
                line=el.line)
        pos += el.count * sum(np.dtype("<" + t).itemsize for _, t in el.properties)
    dtype = np.dtype([(n, "<" + t) for n, t in vertex.properties])
    need = vertex.count * dtype.itemsize
    if len(data) - pos < need:
        raise PlyParseError(
            f"truncated binary payload at byte {len(data)}: need {need} bytes "
            f"from offset {pos}")
    rec = np.frombuffer(data, dtype=dtype, count=vertex.count, offset=pos)
    out = np.empty((vertex.count, 3), dtype=np.float64)
    for j, axis in enumerate(("x", "y", "z")):
        out[:, j] = rec[axis].astype(np.float64)
    return out


def write_ply(path, points):
    """Write an (N, 3) array as binary little-endian float32 PLY."""
    pts = np.asarray(points, dtype=np.float32)
    if pts.ndim != 2 or pts.shape[1] != 3:
        raise PlyParseError("points must be an (N, 3) array")
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {len(pts)}\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        "end_header\n"
    )
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(np.ascontiguousarray(pts).astype("<f4").tobytes())
