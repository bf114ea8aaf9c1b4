"""Batch relation kernels: a numba-jitted hot path with a pure-numpy fallback.

The numba path is used when importable; set ``STREETDIPOLE_NO_NUMBA=1`` to
force the numpy path.  Letter indices follow ``codes.LETTERS`` ("lrsebif").

Both paths work on float64 arrays.  For integer-valued coordinates below
~1e6 every intermediate product fits the float64 integer range, so the
classification is exact with ``tol=0.0``; pass a relative ``tol`` (e.g. 1e-9)
when coordinates carry float noise.
"""

from __future__ import annotations

import os

import numpy as np

from .codes import LETTERS, SIGMA

L, R, S, E, B, I, F = range(7)

SIGMA_IDX = np.array([LETTERS.index(SIGMA[c]) for c in LETTERS], dtype=np.uint8)
CONVERSE_COLS = np.array([2, 3, 0, 1])

_numba_relate = None
_numba_failed = False


def _use_numba() -> bool:
    if os.environ.get("STREETDIPOLE_NO_NUMBA", "").strip() not in ("", "0"):
        return False
    return _ensure_numba() is not None


def _ensure_numba():
    """Compile the numba kernel once per process; None when unavailable."""
    global _numba_relate, _numba_failed
    if _numba_relate is not None or _numba_failed:
        return _numba_relate
    try:
        from numba import njit
    except ImportError:
        _numba_failed = True
        return None

    @njit(cache=False)
    def _point_class(sx, sy, ex, ey, px, py, tol):
        dx = ex - sx
        dy = ey - sy
        rx = px - sx
        ry = py - sy
        cross = dx * ry - dy * rx
        thresh = tol * (abs(dx) + abs(dy)) * (abs(rx) + abs(ry))
        if cross > thresh:
            return np.uint8(0)  # l
        if cross < -thresh:
            return np.uint8(1)  # r
        if px == sx and py == sy:
            return np.uint8(2)  # s
        if px == ex and py == ey:
            return np.uint8(3)  # e
        if dx * rx + dy * ry < 0.0:
            return np.uint8(4)  # b
        if dx * (px - ex) + dy * (py - ey) > 0.0:
            return np.uint8(6)  # f
        return np.uint8(5)  # i

    @njit(cache=False)
    def _relate(a, b, tol, out):
        for k in range(a.shape[0]):
            asx, asy, aex, aey = a[k, 0], a[k, 1], a[k, 2], a[k, 3]
            bsx, bsy, bex, bey = b[k, 0], b[k, 1], b[k, 2], b[k, 3]
            out[k, 0] = _point_class(asx, asy, aex, aey, bsx, bsy, tol)
            out[k, 1] = _point_class(asx, asy, aex, aey, bex, bey, tol)
            out[k, 2] = _point_class(bsx, bsy, bex, bey, asx, asy, tol)
            out[k, 3] = _point_class(bsx, bsy, bex, bey, aex, aey, tol)

    _numba_relate = _relate
    return _numba_relate


def point_class_batch_numpy(d: np.ndarray, p: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Vectorised point classification; ``d`` is (N, 4), ``p`` is (N, 2)."""
    sx, sy, ex, ey = d[:, 0], d[:, 1], d[:, 2], d[:, 3]
    px, py = p[:, 0], p[:, 1]
    dx = ex - sx
    dy = ey - sy
    rx = px - sx
    ry = py - sy
    cross = dx * ry - dy * rx
    thresh = tol * (np.abs(dx) + np.abs(dy)) * (np.abs(rx) + np.abs(ry))
    out = np.full(cross.shape, I, dtype=np.uint8)
    # apply in increasing precedence; later assignments win
    out[dx * rx + dy * ry < 0.0] = B
    out[dx * (px - ex) + dy * (py - ey) > 0.0] = F
    out[(px == sx) & (py == sy)] = S
    out[(px == ex) & (py == ey)] = E
    out[cross > thresh] = L
    out[cross < -thresh] = R
    return out


def relate_batch_numpy(a: np.ndarray, b: np.ndarray, tol: float = 0.0) -> np.ndarray:
    out = np.empty((a.shape[0], 4), dtype=np.uint8)
    out[:, 0] = point_class_batch_numpy(a, b[:, 0:2], tol)
    out[:, 1] = point_class_batch_numpy(a, b[:, 2:4], tol)
    out[:, 2] = point_class_batch_numpy(b, a[:, 0:2], tol)
    out[:, 3] = point_class_batch_numpy(b, a[:, 2:4], tol)
    return out


def relate_batch_numba(a: np.ndarray, b: np.ndarray, tol: float = 0.0) -> np.ndarray:
    kernel = _ensure_numba()
    if kernel is None:
        raise RuntimeError("numba is not available")
    out = np.empty((a.shape[0], 4), dtype=np.uint8)
    kernel(
        np.ascontiguousarray(a, dtype=np.float64),
        np.ascontiguousarray(b, dtype=np.float64),
        float(tol),
        out,
    )
    return out


def relate_batch(a: np.ndarray, b: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Relation letters for N dipole pairs; rows of ``a``/``b`` are (sx, sy, ex, ey)."""
    if _use_numba():
        return relate_batch_numba(a, b, tol)
    return relate_batch_numpy(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64), tol)


def active_backend() -> str:
    """Name of the kernel backend the next relate_batch call will use."""
    return "numba" if _use_numba() else "numpy"


def pack_codes(letters: np.ndarray) -> np.ndarray:
    """Pack (N, 4) letter indices into one uint16 per code (base-7 digits)."""
    letters = letters.astype(np.uint16)
    return ((letters[:, 0] * 7 + letters[:, 1]) * 7 + letters[:, 2]) * 7 + letters[:, 3]


def unpack_code(packed: int) -> str:
    digits = []
    for _ in range(4):
        digits.append(int(packed % 7))
        packed //= 7
    return "".join(LETTERS[d] for d in reversed(digits))


def codes_to_strings(letters: np.ndarray) -> set[str]:
    """Distinct 4-letter code strings present in an (N, 4) letter array."""
    return {unpack_code(int(v)) for v in np.unique(pack_codes(letters))}
