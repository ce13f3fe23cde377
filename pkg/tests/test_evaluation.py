import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from lusphys.evaluation import (
    TABLE2_CELLS,
    LossParams,
    acc_ci95,
    class_metrics,
    lusnet_loss,
    one_hot,
    similarity_score,
    table2_check,
)

labels = st.integers(1, 5)
triples = st.tuples(labels, labels, labels)


class TestLoss:
    def test_zero_fixed_point(self, rng):
        x = rng.random((8, 8))
        assert lusnet_loss(x, x.copy(), one_hot(3), one_hot(3)) == 0.0

    def test_defaults(self):
        assert LossParams() == LossParams(0.3, 0.7)

    def test_hand_example(self):
        x = np.full((4, 5), 0.6)
        y = np.full((4, 5), 0.5)
        y_hat = [0.5, 0.5, 0, 0, 0]
        got = lusnet_loss(x, y, one_hot(1), y_hat)
        assert got == pytest.approx(0.3 * 0.01 + 0.7 * math.log(2), abs=1e-9)
        assert got == pytest.approx(0.4882030, abs=1e-7)

    def test_true_class_zero_probability(self):
        with pytest.raises(ValueError, match="true class"):
            lusnet_loss(np.zeros((2, 2)), np.zeros((2, 2)), one_hot(2), one_hot(1))

    @pytest.mark.parametrize("y_true, y_hat", [([1, 1, 0, 0, 0], one_hot(1)),
                                                 (one_hot(1), [0.5, 0.4, 0, 0, 0]),
                                                 (one_hot(1), [1, 0, 0, 0])])
    def test_bad_vectors(self, y_true, y_hat):
        with pytest.raises(ValueError):
            lusnet_loss(np.zeros((2, 2)), np.zeros((2, 2)), y_true, y_hat)

    def test_bad_weights(self):
        with pytest.raises(ValueError):
            LossParams(-0.1, 0.7)
        with pytest.raises(ValueError):
            LossParams(0.0, 0.0)

    @given(st.just(0.0) | st.floats(0.01, 1), st.floats(0, 1), st.floats(0.01, 1),
           st.floats(0, 0.5), st.floats(0, 0.5))
    def test_non_negative_and_increasing_in_mse(self, l1, l2, p, d1, d2):
        if l1 + l2 == 0:
            return
        params = LossParams(l1, l2)
        y_hat = [p, 1 - p, 0, 0, 0]
        zero = np.zeros((3, 3))
        lo, hi = sorted((d1, d2))
        a = lusnet_loss(zero + lo, zero, one_hot(1), y_hat, params)
        b = lusnet_loss(zero + hi, zero, one_hot(1), y_hat, params)
        assert a >= 0
        if l1 > 0 and hi - lo > 1e-3:
            assert b > a


class TestSimilarity:
    def test_unanimous(self):
        assert similarity_score([(k, k, k) for k in range(1, 6)]) == 1.0

    def test_all_distinct(self):
        assert similarity_score([(1, 2, 3), (3, 4, 5)]) == 0.0

    @pytest.mark.parametrize("agree, want", [(820, 0.82), (940, 0.94)])
    def test_thousand(self, agree, want):
        t = [(1, 1, 2)] * agree + [(1, 2, 3)] * (1000 - agree)
        assert similarity_score(t) == want

    def test_empty(self):
        with pytest.raises(ValueError):
            similarity_score([])

    def test_bad_label(self):
        with pytest.raises(ValueError):
            similarity_score([(1, 2, 6)])

    @given(st.lists(triples, min_size=1, max_size=30), st.randoms())
    def test_permutation_invariant(self, ts, r):
        base = similarity_score(ts)
        shuffled = [tuple(r.sample(t, 3)) for t in ts]
        r.shuffle(shuffled)
        assert similarity_score(shuffled) == base


class TestCI:
    def test_table_row(self):
        half, lo, hi = acc_ci95(0.94, 200)
        assert half == pytest.approx(0.0329, abs=1e-4)
        assert round(half, 2) == 0.03

    def test_perfect(self):
        assert acc_ci95(1.0, 200) == (0.0, 1.0, 1.0)

    def test_half(self):
        assert acc_ci95(0.5, 200)[0] == pytest.approx(0.06930, abs=1e-5)

    def test_clamped(self):
        _, lo, hi = acc_ci95(0.99, 5)
        assert hi == 1.0 and lo >= 0

    @pytest.mark.parametrize("acc, n", [(1.1, 10), (-0.1, 10), (0.5, 0)])
    def test_domain(self, acc, n):
        with pytest.raises(ValueError):
            acc_ci95(acc, n)

    @given(st.integers(0, 1000), st.integers(1, 10_000))
    def test_symmetric(self, k, n):
        acc = k / 1000
        assert acc_ci95(acc, n)[0] == pytest.approx(acc_ci95(1 - acc, n)[0], abs=1e-12)


class TestMetrics:
    def test_perfect(self):
        per, _ = class_metrics([1, 2, 3, 4, 5], [1, 2, 3, 4, 5])
        for m in per.values():
            assert m["sensitivity"] == 1.0 and m["specificity"] == 1.0

    def test_degenerate_predictor(self):
        per, conf = class_metrics([1] * 10, [1, 2, 3, 4, 5] * 2)
        assert per[1]["sensitivity"] == 1.0 and per[1]["specificity"] == 0.0
        assert per[2]["sensitivity"] == 0.0 and per[2]["specificity"] == 1.0
        assert sum(row[0] for row in conf) == 10

    def test_undefined_ratio(self):
        per, _ = class_metrics([1, 1], [1, 1])
        assert per[2]["sensitivity"] == "n/a"
        assert per[1]["specificity"] == "n/a"

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            class_metrics([1, 2], [1])

    def test_tally_oracle(self):
        r = np.random.default_rng(500)
        pred = r.integers(1, 6, 500).tolist()
        truth = r.integers(1, 6, 500).tolist()
        per, _ = class_metrics(pred, truth)
        for k, (tp, fn, fp, tn) in oracles.tally_metrics(pred, truth).items():
            m = per[k]
            assert (m["tp"], m["fn"], m["fp"], m["tn"]) == (tp, fn, fp, tn)
            assert m["accuracy"] == (tp + tn) / 500
            assert m["sensitivity"] == tp / (tp + fn)
            assert m["specificity"] == tn / (tn + fp)


class TestTable:
    def test_cell_count(self):
        assert len(TABLE2_CELLS) == 75

    def test_check_rows_are_consistent(self):
        for row in table2_check():
            assert row["rounded"] == round(acc_ci95(row["acc"], 200)[0], 2)
            assert row["pass"] == (row["rounded"] == row["printed"])
