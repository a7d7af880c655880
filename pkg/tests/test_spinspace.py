"""Configuration encoding, flips, and track classification."""

import pytest

from spintrack import (
    MAX_SPINS,
    ConfigClass,
    SideAssignment,
    classify,
    classify_all,
    complement,
    flip_neighbors,
    flip_partner,
    mirror,
    spin_sum,
    spin_sums,
    symmetric_sides,
)


def test_flip_partner_examples():
    assert flip_partner(0b0000, 2, 4) == 0b0100
    assert flip_partner(0b0101, 0, 4) == 0b0100
    assert flip_partner(0b01, 1, 2) == 0b11


@pytest.mark.parametrize("n", [1, 2, 3, 6, 12])
def test_flip_partner_involution_and_single_bit(n):
    for mask in range(1 << n):
        for j in range(n):
            once = flip_partner(mask, j, n)
            assert flip_partner(once, j, n) == mask
            assert (once ^ mask).bit_count() == 1
            assert (once ^ mask) == 1 << j


def test_flip_partner_range_errors():
    with pytest.raises(IndexError):
        flip_partner(0, 4, 4)
    with pytest.raises(IndexError):
        flip_partner(0, -1, 4)
    with pytest.raises(ValueError):
        flip_partner(0b10000, 0, 4)  # mask wider than N


def test_spin_sum_examples():
    assert spin_sum(0b0000, 4) == -4
    assert spin_sum(0b1111, 4) == 4
    assert spin_sum(0b0011, 4) == 0


@pytest.mark.parametrize("n", [1, 4, 8])
def test_spin_sum_complement_antisymmetry(n):
    for mask in range(1 << n):
        assert spin_sum(mask, n) + spin_sum(complement(mask, n), n) == 0


def test_spin_sums_vector_matches_scalar():
    n = 6
    vec = spin_sums(n)
    assert vec.shape == (64,)
    for mask in range(64):
        assert vec[mask] == spin_sum(mask, n)


def test_num_spins_cap():
    with pytest.raises(ValueError):
        spin_sums(MAX_SPINS + 1)
    with pytest.raises(ValueError):
        symmetric_sides(0)


def test_flip_neighbors_examples():
    assert flip_neighbors(0b00, 2) == [(0, 0b01), (1, 0b10)]
    assert flip_neighbors(0b01, 2) == [(0, 0b00), (1, 0b11)]
    for mask in range(16):
        assert len(flip_neighbors(mask, 4)) == 4


def test_classify_examples():
    sides = symmetric_sides(4)  # (L, L, R, R)
    assert classify(0b0000, sides) is ConfigClass.UNCHANGED
    assert classify(0b0011, sides) is ConfigClass.LEFT_TRACK
    assert classify(0b1100, sides) is ConfigClass.RIGHT_TRACK
    assert classify(0b0101, sides) is ConfigClass.MULTIPLE_TRACKS
    assert classify(0b0100, sides) is ConfigClass.ONE_SPIN


@pytest.mark.parametrize("n", [2, 4, 6, 8, 12])
def test_classify_partitions_all_masks(n):
    sides = symmetric_sides(n)
    half = n // 2
    counts = {tag: 0 for tag in ConfigClass}
    for mask in range(1 << n):
        counts[classify(mask, sides)] += 1
    assert counts[ConfigClass.UNCHANGED] == 1
    assert counts[ConfigClass.ONE_SPIN] == n
    # subsets of one side with >= 2 elements
    one_side_tracks = (1 << half) - 1 - half
    assert counts[ConfigClass.LEFT_TRACK] == one_side_tracks
    assert counts[ConfigClass.RIGHT_TRACK] == one_side_tracks
    assert sum(counts.values()) == 1 << n


@pytest.mark.parametrize("n", [2, 4, 8])
def test_classify_all_matches_scalar(n):
    sides = symmetric_sides(n)
    tags = classify_all(sides)
    assert tags.shape == (1 << n,)
    for mask in range(1 << n):
        assert tags[mask] == classify(mask, sides)


def test_classify_all_is_readonly_and_cached():
    sides = symmetric_sides(4)
    tags = classify_all(sides)
    assert classify_all(sides) is tags
    with pytest.raises(ValueError):
        tags[0] = 3


@pytest.mark.parametrize("n", [2, 4, 6])
def test_mirror_swaps_track_sides(n):
    sides = symmetric_sides(n)
    swap = {
        ConfigClass.LEFT_TRACK: ConfigClass.RIGHT_TRACK,
        ConfigClass.RIGHT_TRACK: ConfigClass.LEFT_TRACK,
    }
    for mask in range(1 << n):
        tag = classify(mask, sides)
        mirrored = classify(mirror(mask, n), sides)
        assert mirrored == swap.get(tag, tag)


def test_side_assignment_masks():
    sides = SideAssignment((-1, -1, 1, 1))
    assert sides.left_mask == 0b0011
    assert sides.right_mask == 0b1100
    with pytest.raises(ValueError):
        SideAssignment((0, 1))


def test_uniform_distribution_class_weights():
    # brute-force enumeration of the 16 masks at p = 1/16 each
    sides = symmetric_sides(4)
    weights = {tag: 0.0 for tag in ConfigClass}
    for mask in range(16):
        weights[classify(mask, sides)] += 1.0 / 16.0
    assert weights[ConfigClass.UNCHANGED] == pytest.approx(1 / 16)
    assert weights[ConfigClass.ONE_SPIN] == pytest.approx(4 / 16)
    assert weights[ConfigClass.LEFT_TRACK] == pytest.approx(1 / 16)
    assert weights[ConfigClass.RIGHT_TRACK] == pytest.approx(1 / 16)
    assert weights[ConfigClass.MULTIPLE_TRACKS] == pytest.approx(9 / 16)
