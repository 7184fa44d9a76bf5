import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from motionshot.block_matching import (
    BlockGridSpec,
    MotionVectorField,
    arps_search,
    exhaustive_search,
    motion_compensate,
    psnr,
    read_field_csv,
    stage1_points,
    search_stats,
    write_field_csv,
)
from motionshot.frame_io import DimensionMismatch, Frame
from motionshot.synthetic import interior_mask, smooth_texture, translation_pair


def brute_force_block(cur, ref, r, c, block, p):
    """Independent oracle: score every in-frame candidate with plain loops."""
    h, w = ref.shape
    best = None
    count = 0
    for y, x in itertools.product(range(-p, p + 1), repeat=2):
        if not (0 <= r + y and r + y + block <= h and 0 <= c + x and c + x + block <= w):
            continue
        count += 1
        sad = 0
        for u in range(block):
            for v in range(block):
                sad += abs(int(cur[r + u, c + v]) - int(ref[r + y + u, c + x + v]))
        key = (sad, abs(x) + abs(y), y, x)
        if best is None or key < best[0]:
            best = (key, (x, y))
    return best[1], best[0][0], count


def noise(rng, h, w):
    return rng.integers(0, 256, (h, w), dtype=np.uint8)


# --- exhaustive search --------------------------------------------------------------


def test_es_identical_frames(backend, rng):
    f = noise(rng, 48, 64)
    field = exhaustive_search(f, f, backend=backend)
    assert not field.vectors.any()
    assert not field.cost.any()


def test_es_reference_shifted_right(backend):
    cur, ref = translation_pair(64, 64, dx=3, dy=0, seed=4)
    field = exhaustive_search(cur, ref, BlockGridSpec(16, 7), backend=backend)
    m = interior_mask(field.rows, field.cols, 16, 64, 64, 3, 0)
    assert (field.x[m] == 3).all() and (field.y[m] == 0).all()
    assert (field.cost[m] == 0).all()


def test_es_single_block_frame_has_one_candidate(backend, rng):
    # a lone block touches every border, so only the zero displacement is in-frame
    a, b = noise(rng, 16, 16), noise(rng, 16, 16)
    field = exhaustive_search(a, b, BlockGridSpec(16, 1), backend=backend)
    assert field.vectors.tolist() == [[[0, 0]]]
    assert field.search_points.tolist() == [[1]]
    assert field.cost[0, 0] == int(np.abs(a.astype(int) - b.astype(int)).sum())


def test_es_nine_candidate_hand_enumeration(backend):
    # 24x24 frame with 8px blocks: the center block sees all 9 candidates of p=1
    rng = np.random.default_rng(99)
    cur = rng.integers(0, 256, (24, 24), dtype=np.uint8)
    ref = rng.integers(0, 256, (24, 24), dtype=np.uint8)
    ref[7:15, 9:17] = cur[8:16, 8:16]  # plant an exact match at (x, y) = (1, -1)
    field = exhaustive_search(cur, ref, BlockGridSpec(8, 1), backend=backend)
    sads = {}
    for y in (-1, 0, 1):
        for x in (-1, 0, 1):
            blk = ref[8 + y:16 + y, 8 + x:16 + x].astype(int)
            sads[(x, y)] = int(np.abs(cur[8:16, 8:16].astype(int) - blk).sum())
    assert len(sads) == 9 and sads[(1, -1)] == 0
    assert field.search_points[1, 1] == 9
    assert tuple(field.vectors[1, 1]) == (1, -1)
    assert field.cost[1, 1] == 0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), h=st.integers(16, 40), w=st.integers(16, 40), p=st.integers(1, 4))
def test_es_matches_brute_force(seed, h, w, p):
    rng = np.random.default_rng(seed)
    cur, ref = noise(rng, h, w), noise(rng, h, w)
    ref[:, : w // 2] = ref[:, : w // 2] // 64  # coarse region makes SAD ties likely
    cur[:, : w // 2] = cur[:, : w // 2] // 64
    block = 8
    field = exhaustive_search(cur, ref, BlockGridSpec(block, p))
    for i in range(field.rows):
        for j in range(field.cols):
            vec, sad, count = brute_force_block(cur, ref, i * block, j * block, block, p)
            assert tuple(field.vectors[i, j]) == vec
            assert field.cost[i, j] == sad
            assert field.search_points[i, j] == count


def test_es_tie_prefers_zero_motion(backend):
    flat = np.full((48, 48), 90, np.uint8)
    field = exhaustive_search(flat, flat, backend=backend)
    assert not field.vectors.any()


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        exhaustive_search(np.zeros((32, 32), np.uint8), np.zeros((32, 48), np.uint8))
    with pytest.raises(DimensionMismatch):
        arps_search(np.zeros((32, 32), np.uint8), np.zeros((48, 32), np.uint8))


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        BlockGridSpec(3, 7)
    with pytest.raises(ValueError):
        BlockGridSpec(16, 0)
    spec = BlockGridSpec()
    assert spec.grid_shape(352, 288) == (18, 22)
    assert spec.grid_shape(100, 40) == (2, 6)
    assert spec.usable_size(100, 40) == (96, 32)


# --- ARPS ---------------------------------------------------------------------------


def test_arps_identical_frames(backend, rng):
    f = noise(rng, 64, 80)
    field = arps_search(f, f, backend=backend)
    assert not field.vectors.any()
    assert not field.cost.any()
    assert (field.search_points <= 6 + 4).all()
    assert search_stats(field).avg_search_points <= 10


def test_arps_first_stage_rood_size():
    pts = stage1_points((3, -2))
    assert pts == [(0, 0), (3, 0), (-3, 0), (0, 3), (0, -3), (3, -2)]
    assert stage1_points(None) == [(0, 0), (2, 0), (-2, 0), (0, 2), (0, -2)]
    assert stage1_points((0, 0)) == stage1_points(None)
    # prediction on the rood is not listed twice
    assert stage1_points((0, -5)) == [(0, 0), (5, 0), (-5, 0), (0, 5), (0, -5)]


def test_arps_follows_left_predictor(backend):
    cur, ref = translation_pair(64, 80, dx=3, dy=-2, seed=21)
    field = arps_search(cur, ref, BlockGridSpec(16, 7), backend=backend)
    m = interior_mask(field.rows, field.cols, 16, 80, 64, 3, -2)
    assert (field.x[m] == 3).all() and (field.y[m] == -2).all()
    # with the left prediction (3, -2): 6 first-stage probes, then one unit rood of 4,
    # minus any probe that would leave the frame
    probes = stage1_points((3, -2)) + [(4, -2), (2, -2), (3, -1), (3, -3)]
    for i, j in zip(*np.nonzero(m)):
        if j > 0 and m[i, j - 1]:
            r, c = 16 * i, 16 * j
            inside = [(x, y) for x, y in probes if 0 <= r + y <= 64 - 16 and 0 <= c + x <= 80 - 16]
            assert field.search_points[i, j] == len(inside)


def _arps_reference(cur, ref, block, p):
    """Straightforward re-implementation used only to check probe counts."""
    h, w = cur.shape
    n, m = h // block, w // block
    out = {}
    for i in range(n):
        pred = None
        for j in range(m):
            r, c = i * block, j * block
            seen = {}

            def probe(x, y):
                if (x, y) in seen or abs(x) > p or abs(y) > p:
                    return
                if not (0 <= r + y <= h - block and 0 <= c + x <= w - block):
                    return
                a = cur[r:r + block, c:c + block].astype(int)
                b = ref[r + y:r + y + block, c + x:c + x + block].astype(int)
                seen[(x, y)] = int(np.abs(a - b).sum())

            s = max(abs(pred[0]), abs(pred[1])) if pred else 0
            s = s or 2
            for d in [(0, 0), (s, 0), (-s, 0), (0, s), (0, -s)] + ([pred] if pred else []):
                probe(*d)

            def key(d):
                return (seen[d], abs(d[0]) + abs(d[1]), d[1], d[0])

            best = min(seen, key=key)
            while True:
                x, y = best
                for d in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]:
                    probe(*d)
                new = min(seen, key=key)
                if new == best:
                    break
                best = new
            out[(i, j)] = (best, seen[best], len(seen))
            pred = best
    return out


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), smooth=st.booleans(), p=st.integers(1, 7))
def test_arps_matches_reference_walk(seed, smooth, p):
    rng = np.random.default_rng(seed)
    if smooth:
        big = smooth_texture(60, 60, seed=seed % 1000)
        dx, dy = rng.integers(0, 6, 2)
        cur, ref = big[dy:dy + 48, dx:dx + 48], big[:48, :48]
    else:
        cur, ref = noise(rng, 48, 48), noise(rng, 48, 48)
    cur, ref = np.ascontiguousarray(cur), np.ascontiguousarray(ref)
    field = arps_search(cur, ref, BlockGridSpec(8, p))
    expected = _arps_reference(cur, ref, 8, p)
    for (i, j), (vec, sad, count) in expected.items():
        assert tuple(field.vectors[i, j]) == vec
        assert field.cost[i, j] == sad
        assert field.search_points[i, j] == count


def test_arps_translation_agrees_with_es(backend):
    big = smooth_texture(128, 160, seed=11)
    cur, ref = Frame(1, big[:, 6:134]), Frame(0, big[:, :128])
    es = exhaustive_search(cur, ref, backend=backend)
    ar = arps_search(cur, ref, backend=backend)
    m = interior_mask(es.rows, es.cols, 16, 128, 128, 6, 0)
    assert (es.x[m] == 6).all() and (es.cost[m] == 0).all()
    assert (ar.x[m] == 6).all() and (ar.y[m] == 0).all()
    assert np.array_equal(ar.cost[m], es.cost[m])


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    h=st.integers(16, 72),
    w=st.integers(16, 72),
    block=st.sampled_from([4, 8, 16]),
    p=st.integers(1, 9),
)
def test_search_invariants(seed, h, w, block, p):
    rng = np.random.default_rng(seed)
    cur, ref = noise(rng, h, w), noise(rng, h, w)
    spec = BlockGridSpec(block, p)
    es = exhaustive_search(cur, ref, spec)
    ar = arps_search(cur, ref, spec)
    for f in (es, ar):
        assert (np.abs(f.vectors) <= p).all()
        assert (f.search_points >= 1).all()
        r = np.arange(f.rows)[:, None] * block + f.y
        c = np.arange(f.cols)[None, :] * block + f.x
        assert (r >= 0).all() and (r + block <= h).all() and (c >= 0).all() and (c + block <= w).all()
    assert (es.cost <= ar.cost).all()
    assert search_stats(ar).avg_search_points < spec.window_points
    assert search_stats(es).avg_search_points <= spec.window_points
    again = arps_search(cur, ref, spec)
    assert np.array_equal(again.vectors, ar.vectors) and np.array_equal(again.search_points, ar.search_points)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10_000), dx=st.integers(-7, 7), dy=st.integers(-7, 7))
def test_es_translation_recovery(seed, dx, dy):
    cur, ref = translation_pair(64, 64, dx=dx, dy=dy, seed=seed)
    field = exhaustive_search(cur, ref)
    m = interior_mask(field.rows, field.cols, 16, 64, 64, dx, dy)
    assert (field.x[m] == dx).all() and (field.y[m] == dy).all() and (field.cost[m] == 0).all()


def test_backends_bit_identical():
    from motionshot._backend import available_backends

    if len(available_backends()) < 2:
        pytest.skip("compiled kernels not built")
    rng = np.random.default_rng(5)
    for _ in range(10):
        h, w = rng.integers(16, 100, 2)
        cur, ref = noise(rng, h, w), noise(rng, h, w)
        spec = BlockGridSpec(int(rng.choice([4, 8, 16])), int(rng.integers(1, 8)))
        for search in (exhaustive_search, arps_search):
            a = search(cur, ref, spec, backend="python")
            b = search(cur, ref, spec, backend="cython")
            assert np.array_equal(a.vectors, b.vectors)
            assert np.array_equal(a.cost, b.cost)
            assert np.array_equal(a.search_points, b.search_points)


# --- compensation, PSNR, stats --------------------------------------------------------


def test_compensate_zero_field_is_identity(rng):
    ref = Frame(0, noise(rng, 40, 50))
    field = MotionVectorField.from_vectors(np.zeros((2, 3, 2)), BlockGridSpec(16, 7))
    field = MotionVectorField(field.spec, 50, 40, field.vectors, field.cost, field.search_points)
    assert np.array_equal(motion_compensate(ref, field).luma, ref.luma)


def test_compensate_single_block_shift(rng):
    ref = noise(rng, 16, 32)
    vec = np.array([[[1, 0], [0, 0]]])
    field = MotionVectorField(BlockGridSpec(16, 7), 32, 16, vec, np.zeros((1, 2)), np.ones((1, 2)))
    out = motion_compensate(ref, field).luma
    assert np.array_equal(out[:, :16], ref[:, 1:17])
    assert np.array_equal(out[:, 16:], ref[:, 16:])


def test_compensate_translation_reconstructs_current(backend):
    cur, ref = translation_pair(72, 70, dx=-2, dy=3, seed=8)
    field = exhaustive_search(cur, ref, backend=backend)
    comp = motion_compensate(ref, field)
    m = interior_mask(field.rows, field.cols, 16, 70, 72, -2, 3)
    for i, j in zip(*np.nonzero(m)):
        sl = np.s_[i * 16:(i + 1) * 16, j * 16:(j + 1) * 16]
        assert np.array_equal(comp.luma[sl], cur.luma[sl])
    # cropped margins come straight from the reference
    assert np.array_equal(comp.luma[64:, :], ref.luma[64:, :])
    assert np.array_equal(comp.luma[:, 64:], ref.luma[:, 64:])


def test_compensate_rejects_foreign_field(rng):
    field = exhaustive_search(noise(rng, 32, 32), noise(rng, 32, 32))
    with pytest.raises(DimensionMismatch):
        motion_compensate(noise(rng, 48, 32), field)


def test_psnr_values():
    a = np.full((16, 16), 128, np.uint8)
    assert psnr(a, a) == math.inf
    assert psnr(np.zeros((16, 16), np.uint8), np.full((16, 16), 255, np.uint8)) == 0.0
    # MSE 4 -> 10*log10(65025/4)
    assert psnr(a, np.full((16, 16), 130, np.uint8)) == pytest.approx(10 * math.log10(65025 / 4))
    assert psnr(a, np.full((16, 16), 130, np.uint8)) == pytest.approx(42.11, abs=5e-3)


def test_psnr_usable_area_only():
    a = np.zeros((20, 20), np.uint8)
    b = a.copy()
    b[16:, :] = 200
    assert psnr(a, b, block_size=16) == math.inf
    assert psnr(a, b) < math.inf
    with pytest.raises(DimensionMismatch):
        psnr(a, np.zeros((20, 21), np.uint8))


def test_search_stats_values(rng):
    f = MotionVectorField.from_vectors(np.zeros((2, 2, 2)))
    f = MotionVectorField(f.spec, 32, 32, f.vectors, np.array([[1, 2], [3, 4]]), np.full((2, 2), 6))
    s = search_stats(f)
    assert s.avg_search_points == 6.0 and s.total_sad == 10
    big = noise(rng, 96, 96)
    es = exhaustive_search(big, big).subgrid(slice(1, -1), slice(1, -1))
    assert search_stats(es).avg_search_points == 225.0


def test_arps_cheaper_than_es(rng, backend):
    for _ in range(5):
        a, b = noise(rng, 64, 64), noise(rng, 64, 64)
        es = exhaustive_search(a, b, backend=backend)
        ar = arps_search(a, b, backend=backend)
        assert search_stats(ar).avg_search_points < search_stats(es).avg_search_points


def test_field_csv_roundtrip(rng):
    import io

    field = arps_search(noise(rng, 48, 64), noise(rng, 48, 64))
    buf = io.StringIO()
    write_field_csv(field, buf)
    assert buf.getvalue().splitlines()[0] == "i,j,x,y,sad,points"
    back = read_field_csv(io.StringIO(buf.getvalue()))
    assert np.array_equal(back.vectors, field.vectors)
    assert np.array_equal(back.cost, field.cost)
    assert np.array_equal(back.search_points, field.search_points)
    d = field.to_dict()
    assert len(d["blocks"]) == field.rows * field.cols
