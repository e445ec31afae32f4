"""Interior-permutation forms: generation, counts, label propagation."""

import itertools
from math import factorial

import numpy as np
import pytest

from archaug.arch_core import (
    IN,
    NULL,
    OUT,
    Architecture,
    InvalidArchitectureError,
    isomorphic,
    op,
    pad,
    random_architecture,
    space_nb101,
    validate,
)
from archaug.augment import (
    AugmentationBatch,
    InteriorPermutation,
    augment_all,
    label_propagate,
    permute,
)


def arch(adj, types):
    return Architecture(np.array(adj, dtype=np.int8), tuple(types))


@pytest.fixture
def five_layer():
    adj = [
        [0, 1, 0, 0, 1],
        [0, 0, 1, 0, 0],
        [0, 0, 0, 0, 1],
        [0, 0, 0, 0, 0],
        [0, 0, 0, 0, 0],
    ]
    return arch(adj, [IN, op(1), op(0), NULL, OUT])


class TestInteriorPermutation:
    def test_identity(self):
        p = InteriorPermutation.identity(5)
        assert p.mapping == (1, 2, 3, 4, 5)
        assert p.is_identity

    def test_rejects_non_bijection(self):
        with pytest.raises(ValueError):
            InteriorPermutation((1, 1, 3))
        with pytest.raises(ValueError):
            InteriorPermutation((0, 1, 2))

    def test_from_rank_matches_lexicographic_order(self):
        listed = list(itertools.permutations(range(1, 5)))
        for rank, expect in enumerate(listed):
            assert InteriorPermutation.from_rank(rank, 4).mapping == expect

    def test_from_rank_bounds(self):
        with pytest.raises(ValueError):
            InteriorPermutation.from_rank(6, 3)
        with pytest.raises(ValueError):
            InteriorPermutation.from_rank(-1, 3)

    def test_inverse_composes_to_identity(self):
        p = InteriorPermutation((3, 1, 2))
        q = p.inverse()
        composed = tuple(p.mapping[q.mapping[i] - 1] for i in range(3))
        assert composed == (1, 2, 3)

    def test_full_extends_with_fixed_endpoints(self):
        p = InteriorPermutation((2, 1))
        assert p.full(4).tolist() == [0, 2, 1, 3]
        with pytest.raises(ValueError):
            p.full(5)


class TestPermute:
    def test_identity_is_noop(self, five_layer):
        p = InteriorPermutation.identity(3)
        assert permute(five_layer, p) == five_layer

    def test_swap_last_two_interior(self, five_layer):
        # swap 0-based positions 2 and 3 of the 5-layer cell: the Null
        # layer moves up one slot and the rows/columns move with it
        p = InteriorPermutation((1, 3, 2))
        moved = permute(five_layer, p)
        assert [t.tag for t in moved.types] == ["in", "op", "null", "op", "out"]
        expect = np.array(
            [
                [0, 1, 0, 0, 1],
                [0, 0, 0, 1, 0],
                [0, 0, 0, 0, 0],
                [0, 0, 0, 0, 1],
                [0, 0, 0, 0, 0],
            ],
            dtype=np.int8,
        )
        assert np.array_equal(moved.adjacency, expect)

    def test_permuted_form_is_isomorphic(self):
        space = space_nb101()
        rng = np.random.default_rng(11)
        for _ in range(20):
            a = random_architecture(space, rng)
            mapping = tuple(rng.permutation(np.arange(1, 6)).tolist())
            b = permute(a, InteriorPermutation(mapping))
            assert validate(b, augmented=True).ok
            assert isomorphic(a, b)

    def test_inverse_round_trip_is_exact(self):
        space = space_nb101()
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = random_architecture(space, rng)
            p = InteriorPermutation(tuple(rng.permutation(np.arange(1, 6)).tolist()))
            assert permute(permute(a, p), p.inverse()) == a

    def test_rejects_cyclic_input(self):
        adj = [
            [0, 1, 0, 0],
            [0, 0, 1, 1],
            [0, 1, 0, 1],
            [0, 0, 0, 0],
        ]
        bad = arch(adj, [IN, op(0), op(0), OUT])
        with pytest.raises(InvalidArchitectureError):
            permute(bad, InteriorPermutation((2, 1)))


class TestAugmentAll:
    def test_minimal_cell_has_single_form(self):
        a = arch([[0, 1], [0, 0]], [IN, OUT])
        batch = augment_all(a)
        assert batch.count == 1
        assert batch.members == (a,)

    def test_full_count_seven_layers(self):
        space = space_nb101()
        a = random_architecture(space, np.random.default_rng(0))
        batch = augment_all(a)
        assert batch.count == factorial(5) == 120
        assert batch.members[0] == a

    def test_full_count_eight_layers(self):
        space = space_nb101()
        a = pad(random_architecture(space, np.random.default_rng(1)), 8)
        assert augment_all(a).count == factorial(6) == 720

    def test_members_validate_in_augmented_mode(self):
        a = random_architecture(space_nb101(), np.random.default_rng(2))
        for m in augment_all(a).members:
            assert validate(m, augmented=True).ok

    def test_type_multiset_is_invariant(self):
        a = random_architecture(space_nb101(), np.random.default_rng(4))
        want = sorted((t.tag, t.op_id) for t in a.types)
        for m in augment_all(a).members:
            assert sorted((t.tag, t.op_id) for t in m.types) == want

    def test_limit_zero_returns_original_only(self):
        a = random_architecture(space_nb101(), np.random.default_rng(5))
        batch = augment_all(a, limit=0)
        assert batch.members == (a,)

    def test_limit_counts_extras_beyond_original(self):
        a = random_architecture(space_nb101(), np.random.default_rng(6))
        assert augment_all(a, limit=30, seed=9).count == 31

    def test_limit_capped_at_full_batch(self):
        a = random_architecture(space_nb101(), np.random.default_rng(7))
        assert augment_all(a, limit=10_000).count == 120

    def test_limit_sampling_is_seeded(self):
        a = random_architecture(space_nb101(), np.random.default_rng(8))
        one = augment_all(a, limit=10, seed=42)
        two = augment_all(a, limit=10, seed=42)
        other = augment_all(a, limit=10, seed=43)
        assert one.members == two.members
        assert one.members != other.members

    def test_duplicates_kept_by_default(self):
        # two identical interior ops make every swap of them a duplicate
        adj = np.zeros((4, 4), dtype=np.int8)
        adj[0, 1] = adj[0, 2] = adj[1, 3] = adj[2, 3] = 1
        a = arch(adj, [IN, op(0), op(0), OUT])
        batch = augment_all(a)
        assert batch.count == 2
        assert batch.members[0] == batch.members[1]

    def test_dedup_flag_drops_duplicates(self):
        adj = np.zeros((4, 4), dtype=np.int8)
        adj[0, 1] = adj[0, 2] = adj[1, 3] = adj[2, 3] = 1
        a = arch(adj, [IN, op(0), op(0), OUT])
        assert augment_all(a, dedup=True).count == 1

    def test_layer_ceiling_enforced(self):
        n = 13
        adj = np.zeros((n, n), dtype=np.int8)
        adj[0, n - 1] = 1
        a = arch(adj, [IN] + [NULL] * (n - 2) + [OUT])
        with pytest.raises(ValueError):
            augment_all(a)

    def test_invalid_input_rejected(self):
        a = arch([[0, 0], [0, 0]], [IN, OUT])
        with pytest.raises(InvalidArchitectureError):
            augment_all(a)


class TestLabelPropagate:
    def test_every_member_gets_the_label(self):
        a = random_architecture(space_nb101(), np.random.default_rng(10))
        batch = augment_all(a)
        rows = label_propagate(batch, 0.94)
        assert len(rows) == 120
        assert all(y == 0.94 for _, y in rows)
        assert rows[0][0] == a

    def test_single_member_batch(self):
        a = arch([[0, 1], [0, 0]], [IN, OUT])
        rows = label_propagate(augment_all(a), 0.5)
        assert rows == [(a, 0.5)]

    def test_empty_batch_rejected(self):
        a = arch([[0, 1], [0, 0]], [IN, OUT])
        with pytest.raises(ValueError):
            label_propagate(AugmentationBatch(a, ()), 0.1)
