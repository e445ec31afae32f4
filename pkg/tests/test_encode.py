"""Feature encodings: reduction, one-hot layout, hard baseline."""

import numpy as np
import pytest

from archaug.arch_core import (
    IN,
    NULL,
    OUT,
    Architecture,
    Space,
    op,
    pad,
    random_architecture,
    space_nb101,
)
from archaug.augment import InteriorPermutation, permute
from archaug.encode import (
    EncodedVector,
    encode_hard,
    encode_onehot,
    feature_matrix,
    hard_int_map,
    hard_length,
    one_hot,
    onehot_length,
    reconstruct,
    reduce,
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


def space_201_shape():
    return Space("edges", 8, ("a", "b", "c", "d"))


class TestReduce:
    def test_seven_layer_shapes(self):
        a = random_architecture(space_nb101(), np.random.default_rng(0))
        radj, rtypes = reduce(a)
        assert radj.shape == (6, 6)
        assert len(rtypes) == 5

    def test_minimal_cell(self):
        a = arch([[0, 1], [0, 0]], [IN, OUT])
        radj, rtypes = reduce(a)
        assert radj.shape == (1, 1)
        assert radj[0, 0] == 1
        assert rtypes == ()

    def test_round_trip_is_identity(self):
        rng = np.random.default_rng(1)
        space = space_nb101()
        for _ in range(25):
            a = random_architecture(space, rng)
            assert reconstruct(*reduce(a)) == a

    def test_reconstruct_size_mismatch(self):
        with pytest.raises(ValueError):
            reconstruct(np.zeros((3, 3), dtype=np.int8), (op(0),))


class TestOneHot:
    def test_three_ops_identity_blocks(self):
        got = one_hot((op(0), op(1), op(2)), 3)
        assert got.tolist() == [1, 0, 0, 0, 1, 0, 0, 0, 1]

    def test_null_is_zero_block(self):
        assert one_hot((NULL,), 3).tolist() == [0, 0, 0]

    def test_block_sums_are_binary(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            k = int(rng.integers(0, 6))
            types = tuple(
                NULL if rng.random() < 0.3 else op(int(rng.integers(0, 3)))
                for _ in range(k)
            )
            v = one_hot(types, 3)
            blocks = v.reshape(-1, 3) if k else v.reshape(0, 3)
            assert set(blocks.sum(axis=1).tolist()) <= {0, 1}

    def test_rejects_unreduced_types(self):
        with pytest.raises(ValueError):
            one_hot((IN, op(0)), 3)

    def test_rejects_out_of_vocab(self):
        with pytest.raises(ValueError):
            one_hot((op(3),), 3)


class TestEncodeOnehot:
    def test_length_nb101(self):
        a = random_architecture(space_nb101(), np.random.default_rng(3))
        v = encode_onehot(a, space_nb101())
        assert len(v) == onehot_length(space_nb101()) == 51

    def test_length_nb201_shape(self):
        space = space_201_shape()
        a = pad(
            arch([[0, 1], [0, 0]], [IN, OUT]),
            8,
        )
        v = encode_onehot(a, space)
        assert len(v) == onehot_length(space) == 73

    def test_values_binary(self):
        a = random_architecture(space_nb101(), np.random.default_rng(4))
        v = encode_onehot(a, space_nb101())
        assert set(np.unique(v.values).tolist()) <= {0, 1}

    def test_layout_five_layer(self, five_layer):
        space = Space("tiny", 5, ("x", "y", "z"))
        v = encode_onehot(five_layer, space)
        adj_part = five_layer.adjacency[:4, 1:].reshape(-1)
        assert v.values[:16].tolist() == adj_part.tolist()
        # interior types op(1), op(0), Null as three 3-wide blocks
        assert v.values[16:].tolist() == [0, 1, 0, 1, 0, 0, 0, 0, 0]

    def test_homogeneous_forms_differ(self, five_layer):
        space = Space("tiny", 5, ("x", "y", "z"))
        moved = permute(five_layer, InteriorPermutation((1, 3, 2)))
        a = encode_onehot(five_layer, space)
        b = encode_onehot(moved, space)
        assert not np.array_equal(a.values, b.values)

    def test_wrong_layer_count_rejected(self, five_layer):
        with pytest.raises(ValueError):
            encode_onehot(five_layer, space_nb101())


class TestEncodeHard:
    def test_length_is_layers_squared(self):
        a = random_architecture(space_nb101(), np.random.default_rng(5))
        v = encode_hard(a, space_nb101())
        assert len(v) == hard_length(space_nb101()) == 49

    def test_int_map_values(self):
        codes = hard_int_map((IN, op(0), op(2), NULL, OUT), 3)
        assert codes.tolist() == [0, 1, 3, 0, 0]

    def test_zero_adjacency_gives_zero_vector(self):
        # validation is off; the zero matrix exercises the product rule alone
        a = arch(np.zeros((3, 3), dtype=np.int8), [IN, op(0), OUT])
        v = encode_hard(a, Space("tiny", 3, ("x",)), checked=False)
        assert not v.values.any()

    def test_row_orientation_carries_target_code(self, five_layer):
        space = Space("tiny", 5, ("x", "y", "z"))
        v = encode_hard(five_layer, space).values.reshape(5, 5)
        codes = [0, 2, 1, 0, 0]
        for i in range(5):
            for j in range(5):
                assert v[i, j] == five_layer.adjacency[i, j] * codes[j]

    def test_col_orientation_carries_source_code(self, five_layer):
        space = Space("tiny", 5, ("x", "y", "z"))
        v = encode_hard(five_layer, space, orientation="col").values.reshape(5, 5)
        codes = [0, 2, 1, 0, 0]
        for i in range(5):
            for j in range(5):
                assert v[i, j] == five_layer.adjacency[i, j] * codes[i]

    def test_bad_orientation_rejected(self, five_layer):
        space = Space("tiny", 5, ("x", "y", "z"))
        with pytest.raises(ValueError):
            encode_hard(five_layer, space, orientation="diag")

    def test_values_within_range(self):
        space = space_nb101()
        rng = np.random.default_rng(6)
        for _ in range(20):
            v = encode_hard(random_architecture(space, rng), space)
            assert v.values.min() >= 0
            assert v.values.max() <= space.n_types


class TestInjectivity:
    def test_onehot_no_collisions_random_pairs(self):
        space = space_nb101()
        rng = np.random.default_rng(7)
        seen = {}
        for _ in range(300):
            a = random_architecture(space, rng)
            key = encode_onehot(a, space).values.tobytes()
            if key in seen:
                assert seen[key] == a
            seen[key] = a

    def test_vector_length_ignores_edge_count(self):
        space = space_nb101()
        sparse = pad(arch([[0, 1], [0, 0]], [IN, OUT]), 7)
        rng = np.random.default_rng(8)
        dense = random_architecture(space, rng, interior_ops=5)
        assert len(encode_onehot(sparse, space)) == len(encode_onehot(dense, space))


class TestFeatureMatrix:
    def test_stacks_rows(self):
        space = space_nb101()
        rng = np.random.default_rng(9)
        archs = [random_architecture(space, rng) for _ in range(5)]
        X = feature_matrix(archs, space)
        assert X.shape == (5, 51)
        assert X.dtype == np.float64

    def test_empty_input(self):
        X = feature_matrix([], space_nb101(), scheme="hard")
        assert X.shape == (0, 49)

    def test_scheme_dispatch(self):
        space = space_nb101()
        a = random_architecture(space, np.random.default_rng(10))
        assert feature_matrix([a], space, scheme="hard").shape == (1, 49)
        with pytest.raises(ValueError):
            feature_matrix([a], space, scheme="embedding")


class TestEncodedVector:
    def test_values_frozen(self):
        v = EncodedVector(np.zeros(3), "onehot", space_nb101())
        with pytest.raises(ValueError):
            v.values[0] = 1

    def test_scheme_checked(self):
        with pytest.raises(ValueError):
            EncodedVector(np.zeros(3), "fancy", space_nb101())
