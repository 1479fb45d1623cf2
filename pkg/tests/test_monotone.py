import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sparsefdr.core import ConfigError, DomainError
from sparsefdr.means_estimators import counterexample_estimate
from sparsefdr.monotone import (
    audit_monotonicity,
    format_counterexample,
    majorizes,
    nonmonotone_pair,
    sample_majorizing_pair,
    write_counterexample,
)

small = st.floats(-5, 5, allow_nan=False, allow_subnormal=False)


@st.composite
def triples(draw):
    n = draw(st.integers(1, 12))
    signs = draw(arrays(np.float64, n, elements=st.sampled_from([-1.0, 1.0])))
    mags = [draw(arrays(np.float64, n, elements=st.floats(0, 5))) for _ in range(3)]
    return [signs * m for m in mags]


class TestMajorizes:
    def test_examples(self):
        assert majorizes([2.0, -3.0], [2.0, -3.0])
        assert majorizes([2.0, -3.0], [1.0, -1.0])
        assert not majorizes([2.0, -3.0], [1.0, 1.0])
        assert not majorizes([2.0, 0.0], [2.0, 1.0])

    def test_zero_has_no_sign(self):
        assert majorizes([-1.0, 0.0], [0.0, 0.0])

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            majorizes([1.0], [1.0, 2.0])

    @given(arrays(np.float64, st.integers(1, 20), elements=small))
    def test_reflexive(self, y):
        assert majorizes(y, y)

    @given(triples())
    def test_transitive(self, vs):
        a, b, c = vs
        if majorizes(a, b) and majorizes(b, c):
            assert majorizes(a, c)

    @given(triples())
    def test_antisymmetric(self, vs):
        a, b, _ = vs
        if majorizes(a, b) and majorizes(b, a):
            np.testing.assert_array_equal(np.abs(a), np.abs(b))


class TestPairs:
    @given(st.integers(0, 2**32 - 1), st.integers(1, 30))
    def test_majorizing_by_construction(self, seed, n):
        rng = np.random.default_rng(seed)
        y, z = sample_majorizing_pair(rng.normal(size=n) * 3, rng)
        assert majorizes(y, z)

    def test_no_inflation_is_identity(self, rng):
        y, z = sample_majorizing_pair(np.zeros(10), rng, inflate_prob=0.0)
        np.testing.assert_array_equal(y, z)

    def test_reproducible(self):
        a = sample_majorizing_pair(np.ones(5), np.random.default_rng(8))
        b = sample_majorizing_pair(np.ones(5), np.random.default_rng(8))
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    @pytest.mark.parametrize("n,gamma", [(10, 2.0), (50, 2.1), (1000, 3.0)])
    def test_nonmonotone_pair(self, n, gamma):
        small_y, large_y = nonmonotone_pair(n, gamma)
        a1, a2 = small_y[:2]
        a3 = large_y[1]
        lower = gamma * (np.log(n) + np.log(n / 2)) / 2
        assert a3**2 > gamma * np.log(n) > a1**2 > a2**2 > lower
        assert majorizes(large_y, small_y)
        np.testing.assert_array_equal(counterexample_estimate(small_y, gamma).support, [0, 1])
        np.testing.assert_array_equal(counterexample_estimate(large_y, gamma).support, [1])


class TestAudit:
    @pytest.mark.parametrize("name,params", [
        ("hard_threshold", {"gamma": 2.0, "s": 7}),
        ("fixed_threshold", {"t": 2.5}),
        ("log_factorial", {"gamma": 2.1}),
        ("bh_stepup", {"q": 0.2}),
    ])
    def test_monotone_estimators_clean(self, name, params):
        report = audit_monotonicity(name, 2000, 50, seed=4, params=params)
        assert report.clean, report.summary()

    def test_counterexample_flagged(self):
        small_y, large_y = nonmonotone_pair(50, 2.1)
        report = audit_monotonicity("counterexample", 5, 50, params={"gamma": 2.1}, inject=[(large_y, small_y)])
        assert report.selection_violations >= 1
        assert report.first_trial == 0
        np.testing.assert_array_equal(report.first_counterexample[0], large_y)

    def test_top_s_is_not_monotone(self):
        # top-s evicts a selected coordinate when another one grows past it
        y = np.array([3.0, 2.0, 5.0])
        z = np.array([3.0, 2.0, 1.0])
        report = audit_monotonicity("top_s_oracle", 1, 3, params={"s_star": 2}, sparsity=1, inject=[(y, z)])
        assert report.selection_violations == 1

    def test_value_count_bounds_selection(self):
        report = audit_monotonicity("counterexample", 500, 20, seed=3, params={"gamma": 1.5})
        assert report.value_violations >= report.selection_violations
        assert report.selection_violations <= report.trials

    def test_deterministic(self):
        a = audit_monotonicity("counterexample", 300, 20, seed=9, params={"gamma": 1.5})
        b = audit_monotonicity("counterexample", 300, 20, seed=9, params={"gamma": 1.5})
        assert (a.value_violations, a.selection_violations, a.first_trial) == (
            b.value_violations, b.selection_violations, b.first_trial)

    def test_custom_callable(self):
        report = audit_monotonicity(lambda y: counterexample_estimate(y, 2.0), 10, 10)
        assert report.trials == 10

    def test_unknown_estimator(self):
        with pytest.raises(ConfigError):
            audit_monotonicity("ridge", 10, 10)

    def test_bad_trials(self):
        with pytest.raises(ConfigError):
            audit_monotonicity("fixed_threshold", 0, 10, params={"t": 1.0})

    def test_dump_full_precision(self, tmp_path):
        small_y, large_y = nonmonotone_pair(6, 2.0)
        report = audit_monotonicity("counterexample", 1, 6, params={"gamma": 2.0}, sparsity=1,
                                    inject=[(large_y, small_y)])
        text = format_counterexample(report)
        lines = text.splitlines()
        assert lines[1] == "index,y,z,beta_hat_y,beta_hat_z"
        row = lines[2].split(",")
        assert float(row[1]) == large_y[0] and float(row[2]) == small_y[0]
        path = write_counterexample(report, tmp_path / "ce.csv")
        assert path.read_text() == text

    def test_clean_dump_empty(self):
        report = audit_monotonicity("fixed_threshold", 3, 10, params={"t": 1.0})
        assert format_counterexample(report) == ""
