"""Pure-Python/numpy block-matching kernels.

Same signatures and bit-identical results as the compiled ``_kernels``
module; used when the extension is unavailable.

Every kernel takes ``cur``/``ref`` as C-contiguous ``uint8`` planes of
equal shape, and returns ``(vectors, cost, points)`` where ``vectors`` is
an ``(N, M, 2)`` int32 array of ``(x, y)``, ``cost`` an ``(N, M)`` int64
SAD grid and ``points`` an ``(N, M)`` int32 count of evaluated
candidates.
"""

import numpy as np

ARPS_MAX_REFINE = 64


def _tie_key(x, y):
    return (abs(x) + abs(y), y, x)


def _window_order(p):
    """All displacements in the window, in tie-break order."""
    cands = [(x, y) for y in range(-p, p + 1) for x in range(-p, p + 1)]
    cands.sort(key=lambda d: _tie_key(*d))
    return cands


def stage1_points(predicted=None):
    """First-stage ARPS candidates for a left-neighbour prediction (None for column 0)."""
    px, py = predicted or (0, 0)
    step = max(abs(px), abs(py)) or 2
    pts = [(0, 0), (step, 0), (-step, 0), (0, step), (0, -step)]
    if predicted is not None and (px, py) not in pts:
        pts.append((px, py))
    return pts


def es_field(cur, ref, block, p):
    h, w = cur.shape
    n, m = h // block, w // block
    hu, wu = n * block, m * block
    cur_u = cur[:hu, :wu].astype(np.int32)
    padded = np.zeros((h + 2 * p, w + 2 * p), dtype=np.int32)
    padded[p:p + h, p:p + w] = ref
    rows = np.arange(n)[:, None] * block
    cols = np.arange(m)[None, :] * block

    best = np.full((n, m), np.iinfo(np.int64).max, dtype=np.int64)
    vec = np.zeros((n, m, 2), dtype=np.int32)
    points = np.zeros((n, m), dtype=np.int32)
    for x, y in _window_order(p):
        valid = (rows + y >= 0) & (rows + y + block <= h) & (cols + x >= 0) & (cols + x + block <= w)
        if not valid.any():
            continue
        shifted = padded[p + y:p + y + hu, p + x:p + x + wu]
        sad = np.abs(cur_u - shifted).reshape(n, block, m, block).sum(axis=(1, 3), dtype=np.int64)
        points += valid
        # strict '<' keeps the earlier (preferred) displacement on equal SAD
        better = valid & (sad < best)
        best[better] = sad[better]
        vec[better] = (x, y)
    return vec, best, points


def _block_sad(cur, ref, r, c, x, y, block):
    a = cur[r:r + block, c:c + block].astype(np.int32)
    b = ref[r + y:r + y + block, c + x:c + x + block].astype(np.int32)
    return int(np.abs(a - b).sum())


def arps_field(cur, ref, block, p):
    h, w = cur.shape
    n, m = h // block, w // block
    vec = np.zeros((n, m, 2), dtype=np.int32)
    cost = np.zeros((n, m), dtype=np.int64)
    points = np.zeros((n, m), dtype=np.int32)

    for i in range(n):
        r = i * block
        px = py = 0
        for j in range(m):
            c = j * block
            seen = {}

            def probe(x, y):
                if (x, y) in seen:
                    return
                if abs(x) > p or abs(y) > p:
                    return
                if r + y < 0 or r + y + block > h or c + x < 0 or c + x + block > w:
                    return
                seen[(x, y)] = _block_sad(cur, ref, r, c, x, y, block)

            def key(d):
                return (seen[d],) + _tie_key(*d)

            for x, y in stage1_points((px, py) if j > 0 else None):
                probe(x, y)
            center = min(seen, key=key)

            for _ in range(ARPS_MAX_REFINE):
                cx, cy = center
                for x, y in ((cx + 1, cy), (cx - 1, cy), (cx, cy + 1), (cx, cy - 1)):
                    probe(x, y)
                ring = [d for d in (center, (cx + 1, cy), (cx - 1, cy), (cx, cy + 1), (cx, cy - 1)) if d in seen]
                nxt = min(ring, key=key)
                if nxt == center:
                    break
                center = nxt

            vec[i, j] = center
            cost[i, j] = seen[center]
            points[i, j] = len(seen)
            px, py = center
    return vec, cost, points
