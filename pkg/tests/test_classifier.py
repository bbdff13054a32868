"""Normalization, splitting, and the end-to-end direction decision."""

import numpy as np
import pytest

from causedir import (
    Dataset,
    Direction,
    DgpConfig,
    ProblemSpec,
    decide,
    draw_sample,
    normalize,
    split,
)


def causal_dataset(n=1000, tau=1.0, seed=42):
    return draw_sample(DgpConfig(kappa="k1", tau=tau, rho=0, q=1.0, n=n, seed=seed))


class TestNormalize:
    def test_closed_form(self):
        data = Dataset.from_columns({"a": np.array([1.0, 2.0, 3.0])})
        np.testing.assert_allclose(
            normalize(data).column("a"), [-1.0, 0.0, 1.0], atol=1e-12
        )

    def test_mean_zero_variance_one(self):
        rng = np.random.default_rng(0)
        data = Dataset.from_columns({"a": rng.uniform(5, 9, 500), "b": rng.normal(2, 7, 500)})
        out = normalize(data)
        for name in ("a", "b"):
            col = out.column(name)
            assert abs(col.mean()) <= 1e-10
            assert abs(col.var(ddof=1) - 1.0) <= 1e-10

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        data = Dataset.from_columns({"a": rng.normal(3, 2, 100)})
        once = normalize(data)
        twice = normalize(once)
        np.testing.assert_allclose(twice.column("a"), once.column("a"), atol=1e-10)

    def test_constant_column_names_the_offender(self):
        data = Dataset.from_columns({"good": np.arange(5.0), "flat": np.full(5, 2.0)})
        with pytest.raises(ValueError, match="flat"):
            normalize(data)

    def test_categorical_passes_through(self):
        codes = np.array([0.0, 1.0, 0.0, 1.0, 1.0])
        data = Dataset.from_columns(
            {"a": np.arange(5.0), "c": codes}, categorical=("c",)
        )
        np.testing.assert_array_equal(normalize(data).column("c"), codes)


class TestSplit:
    def test_even_split_is_a_partition(self):
        data = Dataset.from_columns({"a": np.arange(10.0)})
        train, test = split(data, seed=4)
        assert (train.n, test.n) == (5, 5)
        combined = sorted(np.concatenate([train.column("a"), test.column("a")]))
        np.testing.assert_array_equal(combined, np.arange(10.0))

    def test_odd_split_gives_train_the_extra_row(self):
        data = Dataset.from_columns({"a": np.arange(9.0)})
        train, test = split(data, seed=0)
        assert (train.n, test.n) == (5, 4)

    def test_deterministic_given_seed(self):
        data = Dataset.from_columns({"a": np.arange(20.0)})
        t1, _ = split(data, seed=123)
        t2, _ = split(data, seed=123)
        np.testing.assert_array_equal(t1.column("a"), t2.column("a"))

    def test_seed_changes_the_split(self):
        data = Dataset.from_columns({"a": np.arange(40.0)})
        t1, _ = split(data, seed=1)
        t2, _ = split(data, seed=2)
        assert not np.array_equal(t1.column("a"), t2.column("a"))

    def test_too_small(self):
        data = Dataset.from_columns({"a": np.arange(7.0)})
        with pytest.raises(ValueError, match="at least 8"):
            split(data, seed=0)


class TestProblemSpec:
    def test_x_and_y_must_differ(self):
        with pytest.raises(ValueError):
            ProblemSpec(x="a", y="a")

    def test_roles_must_be_disjoint(self):
        with pytest.raises(ValueError):
            ProblemSpec(x="a", y="b", w=("a",))


class TestDecide:
    def test_recovers_simulated_direction(self):
        decision = decide(causal_dataset(), ProblemSpec(x="x", y="y", w=("w",), seed=42))
        assert decision.outcome is Direction.X_TO_Y
        assert decision.stat_causal < decision.stat_anticausal
        assert (decision.n_train, decision.n_test) == (500, 500)

    def test_deterministic(self):
        data = causal_dataset(n=300, seed=9)
        spec = ProblemSpec(x="x", y="y", w=("w",), seed=9)
        d1 = decide(data, spec)
        d2 = decide(data, spec)
        assert d1 == d2  # bit-for-bit, including the statistics

    def test_exchange_symmetry(self):
        data = causal_dataset(n=400, seed=11)
        forward = decide(data, ProblemSpec(x="x", y="y", w=("w",), seed=11))
        swapped = decide(data, ProblemSpec(x="y", y="x", w=("w",), seed=11))
        assert swapped.stat_causal == forward.stat_anticausal
        assert swapped.stat_anticausal == forward.stat_causal
        assert {forward.outcome, swapped.outcome} == {Direction.X_TO_Y, Direction.Y_TO_X}

    def test_exact_tie_is_inconclusive(self):
        # identical x and y values make both directions the same computation
        rng = np.random.default_rng(3)
        v = rng.normal(size=200)
        w = rng.normal(size=200)
        data = Dataset.from_columns({"x": v, "y": v.copy(), "w": w})
        decision = decide(data, ProblemSpec(x="x", y="y", w=("w",), seed=5))
        assert decision.outcome is Direction.INCONCLUSIVE
        assert decision.stat_causal == decision.stat_anticausal

    def test_unconditional_fallback_without_controls(self):
        rng = np.random.default_rng(21)
        x = rng.normal(0, np.sqrt(2), 600)
        y = x + x**2 + rng.normal(size=600)
        data = Dataset.from_columns({"x": x, "y": y})
        decision = decide(data, ProblemSpec(x="x", y="y", seed=21))
        assert decision.outcome is Direction.X_TO_Y

    def test_categorical_control(self):
        rng = np.random.default_rng(31)
        n = 500
        codes = rng.choice([0.0, 1.0, 2.0], size=n)
        x = rng.normal(0, np.sqrt(2), n)
        y = x + x**2 + codes + rng.normal(size=n)
        data = Dataset.from_columns({"x": x, "y": y, "g": codes}, categorical=("g",))
        decision = decide(data, ProblemSpec(x="x", y="y", w=("g",), seed=31))
        assert decision.outcome is Direction.X_TO_Y

    def test_unknown_column(self):
        data = causal_dataset(n=100)
        with pytest.raises(ValueError, match="nope"):
            decide(data, ProblemSpec(x="nope", y="y", w=("w",)))

    def test_failure_names_the_step(self):
        # constant x cannot be normalized
        data = Dataset.from_columns(
            {"x": np.full(50, 1.0), "y": np.arange(50.0), "w": np.arange(50.0) ** 2}
        )
        with pytest.raises(ValueError, match=r"\[normalize\]"):
            decide(data, ProblemSpec(x="x", y="y", w=("w",)))

    def test_categorical_x_rejected(self):
        data = Dataset.from_columns(
            {"x": np.tile([0.0, 1.0], 25), "y": np.arange(50.0)}, categorical=("x",)
        )
        with pytest.raises(ValueError, match="categorical"):
            decide(data, ProblemSpec(x="x", y="y"))
