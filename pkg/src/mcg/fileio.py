"""On-disk formats: PGM/PPM images, label maps, contour maps, hierarchies,
proposals, front parameters, and metric curves.

All binary formats are little-endian and round-trip exactly; images are lossy
only through the /255 quantization. Writes go through a temp file + rename so
a crashed run never leaves a half-written artifact.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from . import grids
from .errors import FormatError, IoError, ParameterError
from .hierarchy import Merge, Ucm

LABELMAP_MAGIC = b"MCGL"
CONTOURMAP_MAGIC = b"MCGC"
FORMAT_VERSION = 1

CURVE_HEADER = "n_proposals,j_i,recall_050,recall_070,recall_085"


def atomic_write(path: str | os.PathLike, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


# ----------------------------------------------------------------------
# Images (binary PGM P5 / PPM P6, maxval 255)
# ----------------------------------------------------------------------

def _read_pnm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    """Read `count` whitespace-separated integer tokens after the magic,
    skipping '#' comments; returns tokens and the payload offset."""
    tokens: list[int] = []
    i = 2  # past the 2-byte magic
    n = len(data)
    while len(tokens) < count:
        while i < n and data[i:i + 1].isspace():
            i += 1
        if i < n and data[i] == ord("#"):
            while i < n and data[i] not in (0x0A, 0x0D):
                i += 1
            continue
        start = i
        while i < n and not data[i:i + 1].isspace():
            i += 1
        tok = data[start:i]
        if not tok.isdigit():
            raise FormatError(f"malformed image header token {tok!r}")
        tokens.append(int(tok))
    if i >= n:
        raise FormatError("image header ends before payload")
    return tokens, i + 1  # single whitespace byte separates header and payload


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Load a binary PGM/PPM into an (H, W, C) float array in [0, 1]."""
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read image {path}: {exc}") from exc
    magic = data[:2]
    if magic == b"P5":
        channels = 1
    elif magic == b"P6":
        channels = 3
    else:
        raise FormatError(f"unsupported image magic {magic!r} in {path}")
    (width, height, maxval), offset = _read_pnm_tokens(data, 3)
    if maxval != 255:
        raise FormatError(f"only maxval 255 supported, got {maxval}")
    expected = height * width * channels
    payload = data[offset:offset + expected]
    if len(payload) < expected:
        raise IoError(
            f"truncated image payload: expected {expected} bytes, got {len(payload)}"
        )
    arr = np.frombuffer(payload, dtype=np.uint8, count=expected).astype(np.float64)
    return (arr / 255.0).reshape(height, width, channels)


def save_image(path: str | os.PathLike, img: np.ndarray) -> None:
    """Write an (H, W, C) float array in [0, 1] as binary PGM/PPM."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    h, w, c = img.shape
    if c == 1:
        magic = b"P5"
    elif c == 3:
        magic = b"P6"
    else:
        raise ParameterError(f"images must have 1 or 3 channels, got {c}")
    quantized = np.clip(np.rint(img * 255.0), 0, 255).astype(np.uint8)
    header = magic + f"\n{w} {h}\n255\n".encode("ascii")
    atomic_write(path, header + quantized.tobytes())


# ----------------------------------------------------------------------
# Label maps
# ----------------------------------------------------------------------

def labelmap_bytes(labels: np.ndarray) -> bytes:
    labels = np.asarray(labels)
    h, w = labels.shape
    if labels.min() < 0:
        raise ParameterError("label maps are non-negative")
    head = LABELMAP_MAGIC + bytes([FORMAT_VERSION])
    head += np.array([h, w], dtype="<u4").tobytes()
    return head + labels.astype("<u4").tobytes()


def save_labelmap(labels: np.ndarray, path: str | os.PathLike) -> None:
    atomic_write(path, labelmap_bytes(labels))


def _parse_labelmap(data: bytes, path) -> tuple[np.ndarray, int]:
    if data[:4] != LABELMAP_MAGIC:
        raise FormatError(f"bad label map magic {data[:4]!r} in {path}")
    if len(data) < 13:
        raise IoError(f"truncated label map header in {path}")
    if data[4] != FORMAT_VERSION:
        raise FormatError(f"unsupported label map version {data[4]} in {path}")
    h, w = np.frombuffer(data[5:13], dtype="<u4")
    end = 13 + 4 * int(h) * int(w)
    if len(data) < end:
        raise IoError(f"truncated label map payload in {path}")
    labels = np.frombuffer(data[13:end], dtype="<u4").astype(grids.LABEL_DTYPE)
    return labels.reshape(int(h), int(w)), end


def load_labelmap(path: str | os.PathLike) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read label map {path}: {exc}") from exc
    labels, _ = _parse_labelmap(data, path)
    return labels


def load_instance_gt(path: str | os.PathLike) -> np.ndarray:
    """Instance ground truth stored in the label map format; 0 = background.

    Ids must be contiguous but, unlike a canonical label map, an instance may
    consist of several connected components.
    """
    labels = load_labelmap(path)
    ids = np.unique(labels)
    expected = np.arange(ids[0], ids[-1] + 1) if len(ids) else ids
    if len(ids) and (ids[0] not in (0, 1) or not np.array_equal(ids, expected)):
        raise FormatError(f"instance ids must be contiguous from 0, got {ids.tolist()}")
    return labels


# ----------------------------------------------------------------------
# Contour maps
# ----------------------------------------------------------------------

def save_contourmap(cm: np.ndarray, path: str | os.PathLike) -> None:
    h, w = grids.grid_shape_of_contour(np.asarray(cm))
    head = CONTOURMAP_MAGIC + bytes([FORMAT_VERSION])
    head += np.array([h, w], dtype="<u4").tobytes()
    atomic_write(path, head + np.asarray(cm, dtype="<f4").tobytes())


def load_contourmap(path: str | os.PathLike) -> np.ndarray:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read contour map {path}: {exc}") from exc
    if data[:4] != CONTOURMAP_MAGIC:
        raise FormatError(f"bad contour map magic {data[:4]!r} in {path}")
    if data[4] != FORMAT_VERSION:
        raise FormatError(f"unsupported contour map version {data[4]} in {path}")
    h, w = (int(v) for v in np.frombuffer(data[5:13], dtype="<u4"))
    count = (2 * h - 1) * (2 * w - 1)
    end = 13 + 4 * count
    if len(data) < end:
        raise IoError(f"truncated contour map payload in {path}")
    vals = np.frombuffer(data[13:end], dtype="<f4").astype(np.float64)
    return vals.reshape(2 * h - 1, 2 * w - 1)


# ----------------------------------------------------------------------
# Hierarchies
# ----------------------------------------------------------------------

def ucm_bytes(u: Ucm) -> bytes:
    merges = [
        {"id": m.node_id, "children": list(m.children), "lambda": m.level}
        for m in u.merges
    ]
    blob = json.dumps({"merges": merges}, sort_keys=True, separators=(",", ":"))
    return labelmap_bytes(u.finest) + blob.encode("utf-8")


def save_ucm(u: Ucm, path: str | os.PathLike) -> None:
    atomic_write(path, ucm_bytes(u))


def load_ucm(path: str | os.PathLike) -> Ucm:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read hierarchy {path}: {exc}") from exc
    finest, offset = _parse_labelmap(data, path)
    try:
        doc = json.loads(data[offset:].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FormatError(f"bad merge list JSON in {path}: {exc}") from exc
    merges = tuple(
        Merge(int(m["id"]), tuple(int(c) for c in m["children"]), float(m["lambda"]))
        for m in doc["merges"]
    )
    return Ucm(finest, merges)


# ----------------------------------------------------------------------
# Proposals (JSON lines), front parameters, curves
# ----------------------------------------------------------------------

def proposal_lines(records: list[dict]) -> str:
    lines = []
    for rec in records:
        lines.append(json.dumps(
            {
                "hierarchy": int(rec["hierarchy"]),
                "nodes": [int(n) for n in rec["nodes"]],
                "rank": int(rec["rank"]),
                "score": None if rec.get("score") is None else float(rec["score"]),
            },
            sort_keys=True,
            separators=(",", ":"),
        ))
    return "".join(line + "\n" for line in lines)


def save_proposals(records: list[dict], path: str | os.PathLike) -> None:
    atomic_write(path, proposal_lines(records).encode("utf-8"))


def load_proposals(path: str | os.PathLike) -> list[dict]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read proposals {path}: {exc}") from exc
    records = []
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"bad proposal JSON at {path}:{line_no}: {exc}") from exc
        records.append(rec)
    return records


def save_front_params(counts: dict[str, int], config_hash: str,
                      path: str | os.PathLike) -> None:
    doc = {
        "lists": [{"id": key, "n": int(counts[key])} for key in counts],
        "config_hash": config_hash,
    }
    atomic_write(path, json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8"))


def load_front_params(path: str | os.PathLike) -> tuple[dict[str, int], str]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read front params {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad front params JSON in {path}: {exc}") from exc
    counts = {entry["id"]: int(entry["n"]) for entry in doc["lists"]}
    return counts, doc.get("config_hash", "")


def eigenbasis_csv(basis) -> str:
    """Debug dump of an eigenbasis: eigenvalue header row, one row per pixel."""
    k = len(basis.eigenvalues)
    lines = [",".join(f"eigenvalue_{j}={basis.eigenvalues[j]:.12g}" for j in range(k))]
    for row in np.asarray(basis.vectors):
        lines.append(",".join(f"{v:.12g}" for v in row))
    return "".join(line + "\n" for line in lines)


def curve_csv(rows: list[tuple[int, float, float, float, float]]) -> str:
    lines = [CURVE_HEADER]
    for n, j_i, r050, r070, r085 in rows:
        lines.append(f"{int(n)},{j_i:.6f},{r050:.6f},{r070:.6f},{r085:.6f}")
    return "".join(line + "\n" for line in lines)


def save_curve(rows: list[tuple[int, float, float, float, float]],
               path: str | os.PathLike) -> None:
    atomic_write(path, curve_csv(rows).encode("utf-8"))
