import numpy as np
import pytest

from src.core.errors import DimensionMismatchError, InvalidModeError, OutOfDepthError
from src.core.lss import (
    HybridWord,
    IoOracle,
    ModeWord,
    SwitchedLinearSystem,
    check_morphism,
    enumerate_hybrid_words,
    expand_output,
    io_map,
    simulate_output,
    simulate_state,
    simulate_trajectory,
    word_matrix_product,
)
from src.testing.random_systems import random_system


class TestModeWord:
    def test_parse_formats(self):
        assert ModeWord.parse("-") == ModeWord()
        assert ModeWord.parse("122") == ModeWord.of(1, 2, 2)
        assert ModeWord.parse("1,12,3") == ModeWord.of(1, 12, 3)

    def test_parse_rejects_garbage(self):
        with pytest.raises(InvalidModeError):
            ModeWord.parse("1a")

    def test_str_uses_commas_above_nine(self):
        assert str(ModeWord.of(1, 2)) == "12"
        assert str(ModeWord.of(10, 2)) == "10,2"
        assert str(ModeWord()) == "-"

    def test_alphabets_above_nine_always_use_commas(self):
        assert ModeWord.of(12).to_text(12) == "12"
        assert ModeWord.of(1, 2).to_text(10) == "1,2"
        assert ModeWord.of(1, 2).to_text(2) == "12"
        assert ModeWord().to_text(10) == "-"

    def test_ten_mode_words_read_back(self):
        assert ModeWord.parse("12", 12) == ModeWord.of(12)
        assert ModeWord.parse("10", 10) == ModeWord.of(10)
        assert ModeWord.parse("1,2", 10) == ModeWord.of(1, 2)
        words = [ModeWord.of(q) for q in range(1, 11)] + [ModeWord.of(1, 10), ModeWord.of(10, 1)]
        assert [ModeWord.parse(word.to_text(10), 10) for word in words] == words

    def test_sub_word_is_inclusive(self):
        word = ModeWord.of(1, 2, 3, 4)
        assert word.sub_word(1, 2) == ModeWord.of(2, 3)
        assert word.sub_word(2, 1) == ModeWord()

    def test_check_modes(self):
        with pytest.raises(InvalidModeError):
            ModeWord.of(1, 3).check_modes(2)


class TestHybridWord:
    def test_needs_a_letter(self):
        with pytest.raises(DimensionMismatchError):
            HybridWord(ModeWord(), np.zeros((0, 1)))

    def test_inputs_must_match_modes(self):
        with pytest.raises(DimensionMismatchError):
            HybridWord(ModeWord.of(1, 2), np.zeros((3, 1)))

    def test_impulse(self):
        word = HybridWord.impulse(ModeWord.of(1, 2, 1), 2, channel=2)
        assert word.inputs.tolist() == [[0.0, 1.0], [0.0, 0.0], [0.0, 0.0]]
        assert word.input_dim == 2

    def test_prefix(self):
        word = HybridWord.zero(ModeWord.of(1, 2, 1), 1)
        assert word.prefix(0) is None
        assert word.prefix(2).modes == ModeWord.of(1, 2)


class TestSystem:
    def test_dimension_checks(self):
        with pytest.raises(DimensionMismatchError):
            SwitchedLinearSystem(
                A=(np.eye(2), np.eye(3)),
                B=(np.zeros((2, 1)), np.zeros((2, 1))),
                C=(np.zeros((1, 2)), np.zeros((1, 2))),
                x0=np.zeros(2),
            )

    def test_mode_accessors(self, gap_system):
        assert gap_system.dims == (2, 1, 1)
        assert gap_system.n == 3
        np.testing.assert_array_equal(gap_system.b(2), [[0.0], [1.0], [0.0]])
        with pytest.raises(InvalidModeError):
            gap_system.a(3)

    def test_zero_dimensional_system_outputs_zero(self):
        system = SwitchedLinearSystem.zero(2, 1, 3)
        word = HybridWord(ModeWord.of(1, 2), np.ones((2, 1)))
        np.testing.assert_array_equal(simulate_output(system, system.x0, word), np.zeros(3))

    def test_matrices_are_read_only(self, gap_system):
        with pytest.raises(ValueError):
            gap_system.A[0][0, 0] = 5.0


class TestSimulation:
    def test_two_step_zero_input_output(self, gap_system):
        word = HybridWord.zero(ModeWord.of(1, 1), 1)
        assert simulate_output(gap_system, gap_system.x0, word) == pytest.approx([1.0])

    def test_single_step_output_reads_initial_state(self, gap_system):
        word = HybridWord.zero(ModeWord.of(1), 1)
        assert simulate_output(gap_system, gap_system.x0, word) == pytest.approx([0.0])

    def test_state_after_empty_word(self, gap_system):
        np.testing.assert_array_equal(simulate_state(gap_system, gap_system.x0, None), gap_system.x0)

    def test_word_product_order(self, rng):
        A = (rng.standard_normal((3, 3)), rng.standard_normal((3, 3)))
        product = word_matrix_product(A, ModeWord.of(1, 2, 2))
        np.testing.assert_allclose(product, A[1] @ A[1] @ A[0])
        np.testing.assert_array_equal(word_matrix_product(A, ModeWord()), np.eye(3))

    @pytest.mark.parametrize("seed", range(5))
    def test_word_product_reverses_concatenation(self, seed):
        rng = np.random.default_rng(seed)
        A = tuple(rng.standard_normal((3, 3)) for _ in range(3))
        u = ModeWord(tuple(int(q) for q in rng.integers(1, 4, size=3)))
        v = ModeWord(tuple(int(q) for q in rng.integers(1, 4, size=2)))
        np.testing.assert_allclose(word_matrix_product(A, u + v),
                                   word_matrix_product(A, v) @ word_matrix_product(A, u), atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_state_of_concatenated_words(self, seed):
        rng = np.random.default_rng(seed)
        system = random_system(rng, n=3, D=2, m=2, p=1)
        first = HybridWord(ModeWord.of(1, 2, 2), rng.standard_normal((3, 2)))
        second = HybridWord(ModeWord.of(2, 1), rng.standard_normal((2, 2)))
        x = rng.standard_normal(3)
        np.testing.assert_allclose(simulate_state(system, x, first + second),
                                   simulate_state(system, simulate_state(system, x, first), second),
                                   atol=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_output_is_affine_in_the_inputs(self, seed):
        rng = np.random.default_rng(seed)
        system = random_system(rng, n=3, D=2, m=2, p=2)
        modes = ModeWord.of(2, 1, 1, 2)
        u, w = rng.standard_normal((4, 2)), rng.standard_normal((4, 2))
        weight = 0.3

        def output(inputs):
            return simulate_output(system, system.x0, HybridWord(modes, inputs))

        np.testing.assert_allclose(output(weight * u + (1 - weight) * w),
                                   weight * output(u) + (1 - weight) * output(w), atol=1e-12)
        zero = output(np.zeros((4, 2)))
        np.testing.assert_allclose(output(2 * u) - zero, 2 * (output(u) - zero), atol=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_simulation_matches_closed_form(self, seed):
        rng = np.random.default_rng(seed)
        system = random_system(rng, n=3, D=3, m=2, p=2)
        modes = ModeWord(tuple(int(q) for q in rng.integers(1, 4, size=6)))
        word = HybridWord(modes, rng.standard_normal((6, 2)))
        x = rng.standard_normal(3)
        np.testing.assert_allclose(simulate_output(system, x, word), expand_output(system, x, word), atol=1e-12)

    def test_trajectory_ends_with_output(self, rng):
        system = random_system(rng, n=2, D=2, m=1, p=1)
        word = HybridWord(ModeWord.of(2, 1, 2, 2), rng.standard_normal((4, 1)))
        trajectory = simulate_trajectory(system, system.x0, word)
        assert trajectory.shape == (4, 1)
        np.testing.assert_allclose(trajectory[-1], simulate_output(system, system.x0, word))
        np.testing.assert_allclose(trajectory[0], system.C[1] @ system.x0)

    def test_rejects_wrong_input_dimension(self, gap_system):
        word = HybridWord(ModeWord.of(1, 2), np.zeros((2, 2)))
        with pytest.raises(DimensionMismatchError):
            simulate_output(gap_system, gap_system.x0, word)

    def test_rejects_wrong_state_dimension(self, gap_system):
        with pytest.raises(DimensionMismatchError):
            simulate_state(gap_system, np.zeros(2), None)


class TestOracle:
    def test_io_map_matches_simulation(self, gap_system):
        oracle = io_map(gap_system)
        word = HybridWord(ModeWord.of(2, 2, 1), np.array([[1.0], [0.0], [2.0]]))
        np.testing.assert_allclose(oracle.evaluate(word), simulate_output(gap_system, gap_system.x0, word))

    def test_rejects_empty_word(self, gap_system):
        with pytest.raises(DimensionMismatchError):
            io_map(gap_system)(ModeWord(), np.zeros((0, 1)))

    def test_checks_returned_dimension(self):
        oracle = IoOracle(lambda modes, inputs: np.zeros(2), D=1, m=1, p=1)
        with pytest.raises(DimensionMismatchError):
            oracle(ModeWord.of(1), np.zeros((1, 1)))

    def test_from_experiments(self):
        inputs = np.array([[1.0], [0.0]])
        table = {(ModeWord.of(1, 2), inputs.tobytes()): np.array([3.5])}
        oracle = IoOracle.from_experiments(table, D=2, m=1, p=1)
        assert oracle(ModeWord.of(1, 2), inputs) == pytest.approx([3.5])
        with pytest.raises(OutOfDepthError):
            oracle(ModeWord.of(2, 2), inputs)

    def test_enumerate_hybrid_words_skips_empty(self):
        grid = [np.zeros(1), np.ones(1)]
        words = list(enumerate_hybrid_words([ModeWord(), ModeWord.of(1), ModeWord.of(1, 2)], grid))
        assert len(words) == 2 + 4


class TestMorphism:
    def test_change_of_basis_is_a_morphism(self, rng):
        system = random_system(rng, n=3, D=2, m=1, p=2)
        S = rng.standard_normal((3, 3)) + 3 * np.eye(3)
        report = check_morphism(system, system.transform(S), S, 1e-9)
        assert report.holds
        assert set(report.residuals) == {'x0', 'A', 'B', 'C'}

    def test_identity_fails_between_different_systems(self, rng):
        first = random_system(rng, n=2, D=2, m=1, p=1)
        second = random_system(rng, n=2, D=2, m=1, p=1)
        report = check_morphism(first, second, np.eye(2), 1e-9)
        assert not report.holds
        assert report.max_residual > 1e-3

    def test_shape_is_checked(self, gap_system, gap_minimal):
        with pytest.raises(DimensionMismatchError):
            check_morphism(gap_minimal, gap_system, np.zeros((2, 3)), 1e-9)

    def test_empty_matrix_is_not_padded(self, gap_system, gap_minimal):
        with pytest.raises(DimensionMismatchError):
            check_morphism(gap_minimal, gap_system, np.zeros((0, 0)), 1e-9)
        with pytest.raises(DimensionMismatchError):
            check_morphism(gap_minimal, gap_system, np.zeros(0), 1e-9)

    def test_empty_matrix_between_zero_dimensional_systems(self):
        zero = SwitchedLinearSystem.zero(2, 1, 1)
        assert check_morphism(zero, zero, np.zeros((0, 0)), 1e-9).holds
