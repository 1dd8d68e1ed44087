"""Marker detection: Laplacian-of-Gaussian response, local maxima, sub-pixel refinement.

Image coordinates are ``(u, v)`` = (column, row); arrays are indexed ``[v, u]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DomainError


@dataclass(frozen=True)
class LoGParams:
    sigma: float = 2.0
    response_threshold: float = 10.0
    border_margin: int | None = None

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be > 0")
        need = math.ceil(3 * self.sigma)
        if self.border_margin is None:
            object.__setattr__(self, "border_margin", need)
        elif self.border_margin < need:
            raise DomainError(f"border_margin must be >= ceil(3 * sigma) = {need}")


@dataclass(frozen=True)
class MarkerDetection:
    u: float
    v: float
    response: float
    peak: tuple[int, int]
    flagged: bool = False

    @property
    def center(self) -> np.ndarray:
        return np.array([self.u, self.v])


def sigma_for_marker_radius(radius_px: float) -> float:
    """LoG scale at which a blob of the given image radius responds most strongly."""
    return radius_px / math.sqrt(2)


def gaussian_kernel(sigma: float) -> np.ndarray:
    r = int(math.ceil(4 * sigma))
    x = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2 * sigma * sigma))
    return k / k.sum()


def gaussian_smooth(img: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with clamp-to-edge borders."""
    k = gaussian_kernel(sigma)
    tmp = ndimage.correlate1d(np.asarray(img, dtype=np.float64), k, axis=1, mode="nearest")
    return ndimage.correlate1d(tmp, k, axis=0, mode="nearest")


def laplacian(img: np.ndarray) -> np.ndarray:
    """Five-point discrete Laplacian with clamp-to-edge borders."""
    p = np.pad(img, 1, mode="edge")
    return p[:-2, 1:-1] + p[2:, 1:-1] + p[1:-1, :-2] + p[1:-1, 2:] - 4.0 * img


def log_filter(img, sigma: float) -> np.ndarray:
    """Scale-normalized negative LoG; bright blobs give positive peaks."""
    img = np.asarray(img, dtype=np.float64)
    if img.size == 0:
        raise DomainError("image is empty")
    if not sigma > 0:
        raise DomainError("sigma must be > 0")
    return -(sigma * sigma) * laplacian(gaussian_smooth(img, sigma))


def threshold_from_reference(img, sigma: float, fraction: float = 0.1) -> float:
    """Response threshold as a fraction of a reference image's peak response."""
    return float(fraction * log_filter(img, sigma).max())


def detect_local_maxima(resp: np.ndarray, params: LoGParams) -> list[tuple[int, int]]:
    """Strict 8-neighbour maxima above threshold and outside the border margin.

    Returns ``(u, v)`` integer peaks ordered by descending response.
    """
    h, w = resp.shape
    m = max(params.border_margin, 1)
    if h - 2 * m <= 0 or w - 2 * m <= 0:
        return []
    c = resp[m : h - m, m : w - m]
    mask = c > params.response_threshold
    for dv in (-1, 0, 1):
        for du in (-1, 0, 1):
            if dv == 0 and du == 0:
                continue
            mask &= c > resp[m + dv : h - m + dv, m + du : w - m + du]
    vs, us = np.nonzero(mask)
    vs, us = vs + m, us + m
    order = np.lexsort((us, vs, -resp[vs, us]))
    return [(int(us[i]), int(vs[i])) for i in order]


_OFFSETS = np.array([(du, dv) for dv in (-1, 0, 1) for du in (-1, 0, 1)], dtype=np.float64)
_DESIGN = np.column_stack(
    [
        np.ones(9),
        _OFFSETS[:, 0],
        _OFFSETS[:, 1],
        _OFFSETS[:, 0] ** 2,
        _OFFSETS[:, 0] * _OFFSETS[:, 1],
        _OFFSETS[:, 1] ** 2,
    ]
)
_PINV = np.linalg.pinv(_DESIGN)


def fit_quadratic_3x3(patch: np.ndarray) -> np.ndarray:
    """Least-squares ``c0 + c1 u + c2 v + c3 u^2 + c4 uv + c5 v^2`` over a 3x3 patch."""
    return _PINV @ np.asarray(patch, dtype=np.float64).reshape(9)


def refine_subpixel(resp: np.ndarray, peak: tuple[int, int]) -> tuple[np.ndarray, bool]:
    """Sub-pixel centre of an integer peak.

    Returns ``(center, flagged)``. ``flagged`` is set when the fitted quadratic
    has no maximum (the integer peak is returned) or when the vertex offset had
    to be clamped to half a pixel.
    """
    u, v = peak
    h, w = resp.shape
    if not (1 <= u < w - 1 and 1 <= v < h - 1):
        raise DomainError("peak must be at least one pixel from the border")
    c = fit_quadratic_3x3(resp[v - 1 : v + 2, u - 1 : u + 2])
    hess = np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])
    if not (hess[0, 0] < 0 and np.linalg.det(hess) > 0):
        return np.array([float(u), float(v)]), True
    off = np.linalg.solve(hess, -c[1:3])
    clamped = np.clip(off, -0.5, 0.5)
    return np.array([u + clamped[0], v + clamped[1]]), bool(np.any(clamped != off))


def refine_many(resp: np.ndarray, peaks) -> tuple[np.ndarray, np.ndarray]:
    """Batched :func:`refine_subpixel`; returns ((N, 2) centres, (N,) flags)."""
    pk = np.asarray(peaks, dtype=np.intp).reshape(-1, 2)
    if len(pk) == 0:
        return np.zeros((0, 2)), np.zeros(0, dtype=bool)
    h, w = resp.shape
    u, v = pk[:, 0], pk[:, 1]
    if np.any((u < 1) | (u >= w - 1) | (v < 1) | (v >= h - 1)):
        raise DomainError("peak must be at least one pixel from the border")
    patches = np.stack([resp[v + int(dv), u + int(du)] for du, dv in _OFFSETS], axis=1)
    c = patches @ _PINV.T
    a, b, e = 2 * c[:, 3], c[:, 4], 2 * c[:, 5]
    det = a * e - b * b
    ok = (a < 0) & (det > 0)
    safe = np.where(ok, det, 1.0)
    # closed-form 2x2 solve of hess @ off = -grad
    off_u = (-e * c[:, 1] + b * c[:, 2]) / safe
    off_v = (b * c[:, 1] - a * c[:, 2]) / safe
    off = np.where(ok[:, None], np.column_stack([off_u, off_v]), 0.0)
    clamped = np.clip(off, -0.5, 0.5)
    flags = ~ok | np.any(clamped != off, axis=1)
    return pk + clamped, flags


def detect_markers(img, params: LoGParams) -> list[MarkerDetection]:
    resp = log_filter(img, params.sigma)
    peaks = detect_local_maxima(resp, params)
    centers, flags = refine_many(resp, peaks)
    return [
        MarkerDetection(float(c[0]), float(c[1]), float(resp[p[1], p[0]]), p, bool(f))
        for p, c, f in zip(peaks, centers, flags)
    ]


def detections_array(dets: list[MarkerDetection]) -> np.ndarray:
    """(N, 3) array of ``u, v, response``."""
    if not dets:
        return np.zeros((0, 3))
    return np.array([(d.u, d.v, d.response) for d in dets])
