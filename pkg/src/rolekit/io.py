"""File formats: matrix CSV, role lists, PGM heatmaps, reports and manifests."""

import hashlib
import json
import platform
from pathlib import Path

import numpy as np

from . import __version__, _kernels


def fmt(x):
    """17 significant digits: exact round trip for doubles."""
    return format(float(x), ".17g")


def matrix_to_csv(M):
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return "".join(",".join(fmt(x) for x in row) + "\n" for row in M)


def read_matrix_csv(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def roles_to_text(g, labels):
    return "".join(f"{g.label(i)} {int(r)}\n" for i, r in enumerate(labels))


def counts_to_csv(g, counts):
    k = counts.shape[1]
    lines = ["node," + ",".join(f"role{c}" for c in range(k))]
    for i, row in enumerate(counts):
        lines.append(g.label(i) + "," + ",".join(str(int(x)) for x in row))
    return "\n".join(lines) + "\n"


def heatmap_pgm(M, invert=False):
    """Plain P2 greymap, 8-bit, min-max scaled; darker pixels are smaller values.

    ``invert`` flips the scale (used for sparsity patterns, where stored
    entries are drawn dark).
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    lo, hi = float(np.min(M)), float(np.max(M))
    scaled = np.zeros_like(M) if hi == lo else (M - lo) / (hi - lo)
    if invert:
        scaled = 1.0 - scaled
    pix = np.rint(255 * scaled).astype(int)
    h, w = pix.shape
    body = "\n".join(" ".join(str(p) for p in row) for row in pix)
    return f"P2\n{w} {h}\n255\n{body}\n"


def report_text(d):
    return "".join(f"{k}={v}\n" for k, v in d.items())


def write_text(path, text):
    Path(path).write_text(text, encoding="utf-8")


def write_json(path, doc):
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def file_digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def manifest(command, params, inputs=(), seeds=None, wall_time=None, outputs=()):
    return {
        "command": command,
        "parameters": params,
        "seeds": seeds or {},
        "inputs": {str(p): file_digest(p) for p in inputs},
        "outputs": [str(p) for p in outputs],
        "version": __version__,
        "backend": _kernels.backend(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "wall_time_s": wall_time,
    }
