"""Metric counting and threshold grid search against brute-force oracles."""

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tweetevents.errors import ValidationError
from tweetevents.metrics import (
    THRESHOLD_GRID,
    Counts,
    best_threshold,
    binary_counts,
    macro_f1,
    micro,
)


def reference_prf(tp, fp, fn):
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


class TestCounts:
    def test_worked_example(self):
        c = Counts(tp=2, fp=1, fn=2)
        assert c.precision == pytest.approx(2 / 3)
        assert c.recall == pytest.approx(1 / 2)
        assert c.f1 == pytest.approx(4 / 7)

    def test_degenerate_zero(self):
        c = Counts()
        assert c.precision == 0.0 and c.recall == 0.0 and c.f1 == 0.0
        assert c.empty

    def test_perfect(self):
        c = Counts(tp=5)
        assert c.f1 == 1.0

    def test_negative_rejected(self):
        with pytest.raises(ValidationError):
            Counts(tp=-1)

    @given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
    def test_matches_reference(self, tp, fp, fn):
        c = Counts(tp, fp, fn)
        p, r, f = reference_prf(tp, fp, fn)
        assert (c.precision, c.recall, c.f1) == (p, r, f)
        assert 0.0 <= c.f1 <= 1.0


class TestMicroMacro:
    def test_micro_pools_before_dividing(self):
        parts = [Counts(1, 0, 3), Counts(3, 2, 0)]
        pooled = micro(parts)
        assert (pooled.tp, pooled.fp, pooled.fn) == (4, 2, 3)
        assert pooled.f1 == pytest.approx(2 * (4 / 6) * (4 / 7) / (4 / 6 + 4 / 7))

    def test_macro_means_f1(self):
        parts = [Counts(1, 1, 0), Counts(1, 0, 1)]
        assert macro_f1(parts) == pytest.approx((2 / 3 + 2 / 3) / 2)

    def test_macro_skips_empty_scopes(self):
        parts = [Counts(2, 0, 0), Counts(0, 0, 0)]
        assert macro_f1(parts) == 1.0

    def test_macro_all_empty(self):
        assert macro_f1([Counts(), Counts()]) == 0.0


class TestBinaryCounts:
    def test_threshold_boundary_inclusive(self):
        c = binary_counts([0.5], [1], 0.5)
        assert c.tp == 1

    def test_tallies(self):
        c = binary_counts([0.9, 0.9, 0.1, 0.1], [1, 0, 1, 0], 0.5)
        assert (c.tp, c.fp, c.fn) == (1, 1, 1)

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            binary_counts([0.5], [1, 0], 0.5)

    @given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)), min_size=1, max_size=30))
    @settings(max_examples=100, deadline=None)
    def test_threshold_monotonicity(self, pairs):
        probs = [p for p, _ in pairs]
        labels = [y for _, y in pairs]
        prev_predicted, prev_recall = None, None
        for t in THRESHOLD_GRID:
            c = binary_counts(probs, labels, t)
            predicted = c.tp + c.fp
            if prev_predicted is not None:
                assert predicted <= prev_predicted
                assert c.recall <= prev_recall + 1e-12
            prev_predicted, prev_recall = predicted, c.recall


class TestBestThreshold:
    def test_grid_values(self):
        assert THRESHOLD_GRID == (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)

    def test_worked_example_tie_breaks_small(self):
        # 0.3, 0.4 and 0.5 all give perfect F1; the smallest wins.
        assert best_threshold([0.25, 0.55, 0.85], [0, 1, 1]) == 0.3

    def test_all_correct_everywhere_selects_first(self):
        assert best_threshold([0.95, 0.99], [1, 1]) == 0.1

    def test_empty_rejected(self):
        with pytest.raises(ValidationError):
            best_threshold([], [])

    def test_matches_exhaustive_search_on_random_instances(self):
        rng = random.Random(0)
        for _ in range(100):
            n = rng.randint(1, 25)
            probs = [round(rng.random(), 3) for _ in range(n)]
            labels = [rng.randint(0, 1) for _ in range(n)]
            scored = [(binary_counts(probs, labels, t).f1, t) for t in THRESHOLD_GRID]
            best_f1 = max(f1 for f1, _ in scored)
            expected = min(t for f1, t in scored if f1 == best_f1)
            assert best_threshold(probs, labels) == expected

    def test_result_always_on_grid(self):
        rng = random.Random(1)
        for _ in range(50):
            n = rng.randint(1, 10)
            probs = [rng.random() for _ in range(n)]
            labels = [rng.randint(0, 1) for _ in range(n)]
            assert best_threshold(probs, labels) in THRESHOLD_GRID
