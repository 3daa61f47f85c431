import numpy as np
import pytest

from src.core.errors import HankelSizeError, OutOfDepthError
from src.core.hankel import (
    HankelIndex,
    build_hankel,
    enumerate_words,
    hankel_rank,
    lss_index_set,
    rank_profile,
    stabilization_depth,
    word_count,
    word_rank,
    word_unrank,
)
from src.core.lss import ModeWord
from src.core.markov import MarkovFamily, combined_markov
from src.testing.oracle import linear_markov_sequence
from src.testing.random_systems import pad_unobservable, pad_unreachable, random_minimal_system, random_system


class TestWords:
    def test_word_count(self):
        assert word_count(2, 0) == 1
        assert word_count(2, 3) == 15
        assert word_count(3, 2) == 13
        assert word_count(1, 4) == 5

    def test_enumeration_order(self):
        assert [str(word) for word in enumerate_words(2, 2)] == ["-", "1", "2", "11", "12", "21", "22"]

    @pytest.mark.parametrize("D", [1, 2, 3])
    def test_rank_and_unrank_agree_with_enumeration(self, D):
        for position, word in enumerate(enumerate_words(D, 3)):
            assert word_rank(word, D) == position
            assert word_unrank(position, D) == word

    def test_index_set_order(self):
        assert lss_index_set(2, 2) == (0, (1, 1), (1, 2), (2, 1), (2, 2))


class TestIndex:
    def test_flat_indices_are_one_based(self):
        index = HankelIndex(2, 2, lss_index_set(2, 1))
        assert index.size == 7 * 3
        assert index.flat(ModeWord(), 0) == 1
        assert index.flat(ModeWord.of(1), (2, 1)) == 6
        assert index.label(6) == (ModeWord.of(1), (2, 1))

    def test_out_of_range(self):
        index = HankelIndex(2, 1, (1, 2))
        with pytest.raises(OutOfDepthError):
            index.flat(ModeWord.of(1, 1), 1)
        with pytest.raises(IndexError):
            index.label(0)


class TestRankTwoHankel:
    def test_rank_is_two(self, rank_two_markov):
        H = build_hankel(rank_two_markov, 3, 3)
        assert H.shape == (15 * 2, 15 * 3)
        assert hankel_rank(H, 1e-9).rank == 2

    def test_two_distinct_nonzero_columns(self, rank_two_markov):
        H = build_hankel(rank_two_markov, 3, 3)
        columns = {tuple(column) for column in H.data.T if np.any(column)}
        assert len(columns) == 2
        b2 = np.zeros(H.shape[0])
        b2[H.rows.position(ModeWord(), 1)] = 1.0
        assert tuple(b2) in columns
        assert tuple(H.column(ModeWord(), 0)) in columns

    def test_blocks_are_combined_parameters(self, rank_two_markov):
        H = build_hankel(rank_two_markov, 2, 2)
        row_word, col_word = ModeWord.of(2), ModeWord.of(1, 2)
        r = word_rank(row_word, 2) + 1
        c = word_rank(col_word, 2) + 1
        expected = combined_markov(rank_two_markov, col_word + row_word).block
        np.testing.assert_array_equal(H.block(r, c), expected)

    def test_entry_addressing(self, rank_two_markov):
        H = build_hankel(rank_two_markov, 2, 2)
        # row (v=1, q=1), column (w=2, 0): S0(2·1·1)
        assert H.entry(ModeWord.of(1), 1, ModeWord.of(2), 0) == 1.0
        row = H.rows.flat(ModeWord.of(1), 1)
        col = H.cols.flat(ModeWord.of(2), 0)
        assert H.flat_entry(row, col) == 1.0

    def test_depth_check(self, rank_two_markov):
        with pytest.raises(OutOfDepthError):
            build_hankel(rank_two_markov, 3, 4)

    def test_size_cap(self, rank_two_markov):
        with pytest.raises(HankelSizeError):
            build_hankel(rank_two_markov, 3, 3, max_entries=100)

    def test_submatrix_is_upper_left_corner(self, rank_two_markov):
        H = build_hankel(rank_two_markov, 3, 3)
        corner = H.submatrix(1, 2)
        np.testing.assert_array_equal(corner.data, build_hankel(rank_two_markov, 1, 2).data)
        with pytest.raises(OutOfDepthError):
            H.submatrix(4, 1)

    def test_labels(self, rank_two_markov):
        H = build_hankel(rank_two_markov, 1, 1)
        assert H.row_labels()[:3] == ["-:1", "-:2", "1:1"]
        assert H.column_labels()[:4] == ["-:0", "-:(1,1)", "-:(2,1)", "1:0"]

    def test_rank_profile_stabilizes(self, rank_two_markov):
        profile = rank_profile(rank_two_markov, 3)
        assert [rank for _, rank in profile][-1] == 2
        assert stabilization_depth(profile) is not None


class TestSystemHankel:
    @pytest.mark.parametrize("seed", range(5))
    def test_rank_equals_minimal_dimension(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 4))
        system = random_minimal_system(rng, n=n, D=2, m=1, p=1)
        H = build_hankel(MarkovFamily.from_system(system), n, n)
        assert hankel_rank(H).rank == n

    def test_stabilization_depth_of_growing_profile(self):
        assert stabilization_depth([(0, 1), (1, 2), (2, 3)]) is None
        assert stabilization_depth([(0, 1), (1, 2), (2, 2), (3, 2)]) == 1

    @pytest.mark.parametrize("seed", range(6))
    def test_rank_grows_then_settles_below_state_dimension(self, seed):
        rng = np.random.default_rng(seed)
        system = random_system(rng, n=int(rng.integers(1, 4)), D=2, m=1, p=1)
        system = pad_unreachable(system, 1, rng) if seed % 2 else pad_unobservable(system, 1, rng)
        ranks = [rank for _, rank in rank_profile(MarkovFamily.from_system(system), system.n + 1)]
        assert ranks == sorted(ranks)
        assert max(ranks) <= system.n
        assert all(rank == ranks[-1] for rank in ranks[system.n:])

    @pytest.mark.parametrize("seed", range(3))
    def test_single_mode_hankel_is_the_classical_block_hankel(self, seed):
        rng = np.random.default_rng(seed)
        system = random_system(rng, n=3, D=1, m=2, p=2)
        H = build_hankel(MarkovFamily.from_system(system), 2, 3)
        blocks = linear_markov_sequence(system, 6)
        classical = np.block([[blocks[i + k] for k in range(4)] for i in range(3)])
        np.testing.assert_allclose(H.data, classical, atol=1e-12)


class TestManyModes:
    def test_labels_keep_letters_apart_above_nine_modes(self):
        table = MarkovFamily.from_system(random_system(np.random.default_rng(0), n=1, D=12, m=1, p=1))
        H = build_hankel(table, 2, 0)
        labels = H.row_labels()
        assert labels[:2] == ["-:1", "-:2"]
        assert "12:1" in labels
        assert "1,2:1" in labels
        assert len(set(labels)) == len(labels)
        assert len(set(H.column_labels())) == len(H.column_labels())
