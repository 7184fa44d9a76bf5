"""Deterministic synthetic sequences used by tests, benchmarks and demos."""

from __future__ import annotations

import numpy as np

from .frame_io import Frame


def _gaussian_kernel(sigma: float) -> np.ndarray:
    radius = max(1, int(round(3 * sigma)))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def smooth_texture(height: int, width: int, seed: int = 0, sigma: float = 3.0) -> np.ndarray:
    """Band-limited random texture stretched to the full 8-bit range.

    Smoothness gives block matching a usable SAD gradient, so descent
    searches converge on the true displacement.
    """
    rng = np.random.default_rng(seed)
    pad = int(round(3 * sigma)) + 1
    noise = rng.standard_normal((height + 2 * pad, width + 2 * pad))
    k = _gaussian_kernel(sigma)
    img = np.apply_along_axis(np.convolve, 1, noise, k, mode="same")
    img = np.apply_along_axis(np.convolve, 0, img, k, mode="same")
    img = img[pad:pad + height, pad:pad + width]
    img -= img.min()
    img *= 255.0 / img.max()
    return np.rint(img).astype(np.uint8)


def noise_plane(height: int, width: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 256, size=(height, width), dtype=np.uint8)


def constant_sequence(n: int, height: int = 64, width: int = 64, value: int = 128) -> list[Frame]:
    plane = np.full((height, width), value, dtype=np.uint8)
    return [Frame(i, plane) for i in range(n)]


def static_sequence(n: int, height: int = 64, width: int = 64, seed: int = 0) -> list[Frame]:
    plane = smooth_texture(height, width, seed)
    return [Frame(i, plane) for i in range(n)]


def panning_sequence(
    n: int, height: int = 128, width: int = 128, dx: int = 3, dy: int = 0, seed: int = 0
) -> list[Frame]:
    """Window sliding over a larger texture by ``(dx, dy)`` px per frame.

    Frame ``k`` is the texture crop at offset ``(k*dy, k*dx)``, so for the
    pair (reference ``t``, current ``t+s``) every block's match lies at
    displacement ``(s*dx, s*dy)``.
    """
    if dx < 0 or dy < 0:
        raise ValueError("panning offsets must be non-negative")
    big = smooth_texture(height + dy * (n - 1), width + dx * (n - 1), seed)
    return [Frame(k, big[k * dy:k * dy + height, k * dx:k * dx + width]) for k in range(n)]


def translation_pair(height: int = 64, width: int = 64, dx: int = 3, dy: int = 0, seed: int = 0):
    """``(current, reference)`` with ``reference`` shifted so block match is ``(dx, dy)``.

    ``reference[r + dy, c + dx] == current[r, c]``; uncovered rows/columns
    are filled with a constant.
    """
    cur = smooth_texture(height, width, seed)
    ref = np.full_like(cur, 77)
    ys, yd = (slice(0, height - dy), slice(dy, height)) if dy >= 0 else (slice(-dy, height), slice(0, height + dy))
    xs, xd = (slice(0, width - dx), slice(dx, width)) if dx >= 0 else (slice(-dx, width), slice(0, width + dx))
    ref[yd, xd] = cur[ys, xs]
    return Frame(1, cur), Frame(0, ref)


def interior_mask(rows: int, cols: int, block: int, width: int, height: int, dx: int, dy: int) -> np.ndarray:
    """Blocks whose ``(dx, dy)``-displaced match lies fully inside the frame."""
    r = np.arange(rows)[:, None] * block
    c = np.arange(cols)[None, :] * block
    return (r + dy >= 0) & (r + dy + block <= height) & (c + dx >= 0) & (c + dx + block <= width)


def cut_sequence(
    n: int = 60, cut: int = 30, height: int = 64, width: int = 64, seed: int = 0
) -> list[Frame]:
    """Static texture for frames ``[0, cut)``, fresh random noise per frame after."""
    rng = np.random.default_rng(seed)
    still = smooth_texture(height, width, seed)
    frames = []
    for k in range(n):
        plane = still if k < cut else noise_plane(height, width, rng)
        frames.append(Frame(k, plane))
    return frames


def two_scene_sequence(
    n_a: int = 6, n_b: int = 6, height: int = 64, width: int = 64, seed: int = 0
) -> list[Frame]:
    """Static image A repeated ``n_a`` times, then static image B ``n_b`` times."""
    a = smooth_texture(height, width, seed)
    b = smooth_texture(height, width, seed + 1000)
    return [Frame(k, a if k < n_a else b) for k in range(n_a + n_b)]
