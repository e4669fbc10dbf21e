import io
import math

import numpy as np
import pytest

from fiberdim import (
    Constant,
    DepthLimit,
    DomainError,
    Periodic,
    PerturbedSequence,
    RandomAnnulus,
    SignSchedule,
    at,
    composed_forward_residual,
    delta,
    iter_leaf_blocks,
    julia_cloud,
    motion_pair,
    pullback_leaves,
    resolution_bound,
    roundtrip_check,
    word_of,
    write_cloud_csv,
)
from oracles import brute_leaves

CONST50 = Constant(50)
LOG50 = math.log(50.0)


def test_depth_one_leaves():
    leaves = list(pullback_leaves(CONST50, 0, 1))
    assert [(lf.word, lf.point) for lf in leaves] == [("0", 1 + 0j), ("1", -1 + 0j)]
    for lf in leaves:
        assert lf.log_deriv == pytest.approx(LOG50, rel=1e-15)
        assert lf.fiber == 0 and lf.depth == 1


def test_all_zero_word_is_fixed_point():
    leaves = {lf.word: lf for lf in pullback_leaves(CONST50, 0, 3)}
    assert leaves["000"].point == 1 + 0j
    assert leaves["000"].log_deriv == pytest.approx(3 * LOG50, rel=1e-14)


def test_depth_two_points():
    cloud = julia_cloud(CONST50, 2)
    expected = {1.0, -1.0, math.sqrt(0.92), -math.sqrt(0.92)}
    assert set(np.round(cloud.points.real, 12)) == {round(v, 12) for v in expected}
    assert np.allclose(cloud.points.imag, 0.0)
    # the depth-2 forward round trip is still well conditioned in float64
    assert composed_forward_residual(CONST50, 0, 2) <= 1e-12


def test_leaf_count_and_word_order():
    n = 10
    words = [lf.word for lf in pullback_leaves(CONST50, 0, n)]
    assert len(words) == 2**n
    assert words == sorted(words)
    assert len(set(words)) == 2**n


def test_matches_bruteforce_enumeration():
    seq = Periodic((50, 60 + 10j, -45))
    n = 5
    params = [at(seq, k) for k in range(1, n + 1)]
    expected = brute_leaves(params)
    for lf in pullback_leaves(seq, 0, n):
        z, deriv = expected[lf.word]
        assert lf.point == pytest.approx(z, rel=1e-13, abs=1e-13)
        assert lf.log_deriv == pytest.approx(math.log(deriv), rel=1e-12)


def test_fiber_offset_uses_shifted_parameters():
    seq = Periodic((50, 60 + 10j, -45))
    j = 2
    n = 4
    params = [at(seq, k) for k in range(j + 1, j + n + 1)]
    expected = brute_leaves(params)
    for lf in pullback_leaves(seq, j, n):
        z, deriv = expected[lf.word]
        assert lf.point == pytest.approx(z, rel=1e-13, abs=1e-13)
        assert lf.log_deriv == pytest.approx(math.log(deriv), rel=1e-12)


def test_blocked_traversal_matches_single_block():
    seq = RandomAnnulus(seed=11, min_mod=44, max_mod=70)
    n = 9
    whole = np.concatenate([pts for _, pts, _ in iter_leaf_blocks(seq, 0, n)])
    pieces = []
    starts = []
    for start, pts, _ in iter_leaf_blocks(seq, 0, n, block_log2=3):
        starts.append(start)
        pieces.append(pts)
    assert starts == list(range(0, 2**n, 2**3))
    assert np.array_equal(np.concatenate(pieces), whole)


def test_trapping_and_first_bit_disk():
    n = 11
    for start, pts, _ in iter_leaf_blocks(CONST50, 0, n):
        first_bit = ((start + np.arange(pts.size)) >> (n - 1)) & 1
        centers = np.where(first_bit == 0, 1.0, -1.0)
        assert float(np.abs(pts - centers).max()) <= 1 / 3


def test_roundtrip_certificate():
    report = roundtrip_check(CONST50, 0, 14)
    assert report.edge_residual_max <= 1e-13
    assert report.certified_leaf_error <= 1e-9
    # the literal composed form is only usable at very small depth
    assert composed_forward_residual(CONST50, 0, 3) <= 1e-9


def test_separation_at_brute_force_depth():
    n = 8
    pts = julia_cloud(CONST50, n).points
    diff = np.abs(pts[:, None] - pts[None, :])
    np.fill_diagonal(diff, np.inf)
    closest = float(diff.min())
    analytic = (4 / 3) * (3 / (4 * 50.0)) ** (n - 1)
    assert closest >= analytic
    assert closest >= resolution_bound(CONST50, n + 1)
    assert np.unique(pts).size == 2**n


def test_resolution_bound_covers_refinements():
    # every depth-(d+6) leaf lies within the depth-d bound of some depth-d leaf
    d = 6
    coarse = julia_cloud(CONST50, d).points
    fine = julia_cloud(CONST50, d + 6).points
    bound = resolution_bound(CONST50, d)
    dist = np.abs(fine[:, None] - coarse[None, :]).min(axis=1)
    assert float(dist.max()) <= bound


def test_resolution_bound_value():
    assert resolution_bound(CONST50, 5) == pytest.approx((2 / 3) * (3 / 100) ** 5, rel=1e-14)


def test_motion_pair_trivial_cases():
    pert0 = PerturbedSequence(CONST50, SignSchedule(2, 2, 1), 0.0)
    for word in ("0", "10", "0110"):
        zb, zp = motion_pair(word, CONST50, pert0)
        assert zb == zp
    pert = PerturbedSequence(CONST50, SignSchedule(2, 2, 1), 0.07)
    zb, zp = motion_pair("0" * 9, CONST50, pert)
    assert zb == 1 + 0j and zp == 1 + 0j


def test_motion_pair_bound():
    pert = PerturbedSequence(CONST50, SignSchedule(2, 2, 1), 0.01)
    zb, zp = motion_pair("10", CONST50, pert)
    assert abs(zb - zp) <= delta(0.01) / 9


def test_motion_speed_over_all_leaves():
    for x in (0.01, 0.1):
        pert = PerturbedSequence(CONST50, SignSchedule(2, 2, 1), x)
        bound = delta(x) / 9
        ratio_bound = delta(x) / 6
        blocks_base = iter_leaf_blocks(CONST50, 0, 12)
        blocks_pert = iter_leaf_blocks(pert, 0, 12)
        for (_, pb, _), (_, pp, _) in zip(blocks_base, blocks_pert):
            assert float(np.abs(pp - pb).max()) <= bound + 1e-12
            assert float(np.abs(np.log(np.abs(pp) / np.abs(pb))).max()) <= ratio_bound + 1e-12


def test_depth_cap(monkeypatch):
    monkeypatch.setenv("FIBERDIM_DEPTH_LIMIT", "6")
    with pytest.raises(DepthLimit):
        list(iter_leaf_blocks(CONST50, 0, 7))
    assert len(list(pullback_leaves(CONST50, 0, 6))) == 64


def test_anchor_domain():
    with pytest.raises(DomainError):
        julia_cloud(CONST50, 3, anchor=0.0)


def test_cloud_csv_format():
    cloud = julia_cloud(CONST50, 1)
    buf = io.StringIO()
    write_cloud_csv(cloud, buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "word,re,im,log_deriv"
    assert lines[1] == f"0,1,0,{LOG50:.17g}"
    assert lines[2].startswith("1,-1,")
    assert len(lines) == 3


def test_word_of():
    assert word_of(0, 3) == "000"
    assert word_of(5, 3) == "101"
    assert word_of(0, 0) == ""


def test_spherical_log_derivs_telescope():
    # the conformal factors cancel along the orbit, so the accumulated
    # spherical value equals the planar one plus a leaf-level correction
    seq = Periodic((50, 60 + 10j, -45))
    anchor = 1.1 + 0.05j
    n = 8
    planar = np.concatenate([lds for _, _, lds in iter_leaf_blocks(seq, 0, n, anchor)])
    spherical = np.concatenate(
        [lds for _, _, lds in iter_leaf_blocks(seq, 0, n, anchor, metric="spherical")]
    )
    pts = julia_cloud(seq, n, anchor).points
    expected = planar + np.log1p(np.abs(pts) ** 2) - math.log1p(abs(anchor) ** 2)
    assert np.allclose(spherical, expected, rtol=0, atol=1e-11)
