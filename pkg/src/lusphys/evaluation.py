"""Evaluation formulas: joint reconstruction/classification loss, annotator
agreement, binomial accuracy interval and one-vs-rest class metrics."""

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .imagecore import SeverityClass, as_image, check_same_shape

N_CLASSES = 5


@dataclass(frozen=True)
class LossParams:
    lambda1: float = 0.3
    lambda2: float = 0.7

    def __post_init__(self):
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("loss weights must be non-negative")
        if self.lambda1 + self.lambda2 <= 0:
            raise ValueError("at least one loss weight must be positive")


def lusnet_loss(x, y, y_true, y_hat, params=LossParams()):
    """``lambda1 * MSE(x, y) + lambda2 * cross_entropy(y_true, y_hat)``.

    ``y_true`` is a one-hot vector and ``y_hat`` a probability vector over
    the five classes. Natural log.
    """
    x = as_image(x, "x")
    y = as_image(y, "y")
    check_same_shape(x, y)
    t = np.asarray(y_true, dtype=float)
    p = np.asarray(y_hat, dtype=float)
    if t.shape != (N_CLASSES,) or p.shape != (N_CLASSES,):
        raise ValueError(f"class vectors must have length {N_CLASSES}")
    if not (np.all((t == 0) | (t == 1)) and t.sum() == 1):
        raise ValueError(f"y_true must be one-hot, got {t.tolist()}")
    if np.any(p < 0) or np.any(p > 1) or not math.isclose(p.sum(), 1.0, abs_tol=1e-6):
        raise ValueError(f"y_hat must be a probability vector, got {p.tolist()}")
    k = int(np.argmax(t))
    if p[k] <= 0:
        raise ValueError(f"predicted probability of the true class {k + 1} must be > 0")
    mse = float(np.mean((x - y) ** 2))
    ce = -math.log(p[k])
    return params.lambda1 * mse + params.lambda2 * ce


def one_hot(cls):
    v = np.zeros(N_CLASSES)
    v[int(SeverityClass(cls)) - 1] = 1.0
    return v


def _validate_triple(triple):
    if len(triple) != 3:
        raise ValueError(f"annotation triple must have 3 labels, got {triple!r}")
    return tuple(SeverityClass(int(v)) for v in triple)


def similarity_score(triples):
    """Fraction of triples in which at least two of three labels agree."""
    triples = [_validate_triple(t) for t in triples]
    if not triples:
        raise ValueError("similarity_score needs at least one annotation triple")
    similar = sum(1 for t in triples if Counter(t).most_common(1)[0][1] >= 2)
    return similar / len(triples)


def acc_ci95(acc, n):
    """Normal-approximation 95% interval: ``(half_width, lo, hi)``, clamped to [0, 1]."""
    if not 0 <= acc <= 1:
        raise ValueError(f"accuracy must lie in [0, 1], got {acc}")
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    half = 1.96 * math.sqrt(acc * (1 - acc) / n)
    return half, max(0.0, acc - half), min(1.0, acc + half)


def _ratio(num, den):
    return num / den if den else "n/a"


def class_metrics(pred, truth):
    """One-vs-rest accuracy, sensitivity and specificity for every class.

    Returns ``(per_class, confusion)`` where ``confusion[t-1][p-1]`` counts
    truth ``t`` predicted as ``p``. Zero-denominator ratios are ``"n/a"``.
    """
    pred = [SeverityClass(int(v)) for v in pred]
    truth = [SeverityClass(int(v)) for v in truth]
    if len(pred) != len(truth):
        raise ValueError(f"length mismatch: {len(pred)} predictions vs {len(truth)} labels")
    if not pred:
        raise ValueError("class_metrics needs at least one sample")
    conf = np.zeros((N_CLASSES, N_CLASSES), dtype=int)
    np.add.at(conf, (np.array(truth) - 1, np.array(pred) - 1), 1)
    n = len(pred)
    per_class = {}
    for k in range(N_CLASSES):
        tp = int(conf[k, k])
        fn = int(conf[k].sum()) - tp
        fp = int(conf[:, k].sum()) - tp
        tn = n - tp - fn - fp
        per_class[k + 1] = {
            "accuracy": (tp + tn) / n,
            "sensitivity": _ratio(tp, tp + fn),
            "specificity": _ratio(tn, tn + fp),
            "tp": tp,
            "fn": fn,
            "fp": fp,
            "tn": tn,
        }
    return per_class, conf.tolist()


# Every ACC cell of the ablation table as (input/architecture, backbone, class,
# ACC, printed +/-). Cells printed as "0.68±06" carry a dropped "0."; they are
# recorded here as 0.06.
TABLE2_CELLS = [
    ("Encoder only, image", "Resnet34", 1, 0.98, 0.02),
    ("Encoder only, image", "Resnet34", 2, 0.68, 0.06),
    ("Encoder only, image", "Resnet34", 3, 0.62, 0.07),
    ("Encoder only, image", "Resnet34", 4, 0.65, 0.07),
    ("Encoder only, image", "Resnet34", 5, 0.99, 0.01),
    ("Encoder only, image", "VGG16", 1, 0.99, 0.02),
    ("Encoder only, image", "VGG16", 2, 0.63, 0.07),
    ("Encoder only, image", "VGG16", 3, 0.62, 0.07),
    ("Encoder only, image", "VGG16", 4, 0.60, 0.07),
    ("Encoder only, image", "VGG16", 5, 1.00, 0.00),
    ("Encoder only, image", "InceptionV3", 1, 0.99, 0.01),
    ("Encoder only, image", "InceptionV3", 2, 0.63, 0.07),
    ("Encoder only, image", "InceptionV3", 3, 0.62, 0.07),
    ("Encoder only, image", "InceptionV3", 4, 0.60, 0.07),
    ("Encoder only, image", "InceptionV3", 5, 1.00, 0.00),
    ("Encoder only, multichannel", "Resnet34", 1, 0.99, 0.01),
    ("Encoder only, multichannel", "Resnet34", 2, 0.64, 0.07),
    ("Encoder only, multichannel", "Resnet34", 3, 0.64, 0.07),
    ("Encoder only, multichannel", "Resnet34", 4, 0.59, 0.07),
    ("Encoder only, multichannel", "Resnet34", 5, 1.00, 0.00),
    ("Encoder only, multichannel", "VGG16", 1, 0.98, 0.02),
    ("Encoder only, multichannel", "VGG16", 2, 0.65, 0.07),
    ("Encoder only, multichannel", "VGG16", 3, 0.61, 0.07),
    ("Encoder only, multichannel", "VGG16", 4, 0.65, 0.07),
    ("Encoder only, multichannel", "VGG16", 5, 1.00, 0.01),
    ("Encoder only, multichannel", "InceptionV3", 1, 0.99, 0.01),
    ("Encoder only, multichannel", "InceptionV3", 2, 0.63, 0.07),
    ("Encoder only, multichannel", "InceptionV3", 3, 0.63, 0.07),
    ("Encoder only, multichannel", "InceptionV3", 4, 0.60, 0.07),
    ("Encoder only, multichannel", "InceptionV3", 5, 1.00, 0.00),
    ("U-net, image", "Resnet34", 1, 0.99, 0.01),
    ("U-net, image", "Resnet34", 2, 0.94, 0.03),
    ("U-net, image", "Resnet34", 3, 0.96, 0.03),
    ("U-net, image", "Resnet34", 4, 0.96, 0.03),
    ("U-net, image", "Resnet34", 5, 1.00, 0.00),
    ("U-net, image", "VGG16", 1, 0.98, 0.02),
    ("U-net, image", "VGG16", 2, 0.92, 0.04),
    ("U-net, image", "VGG16", 3, 0.96, 0.03),
    ("U-net, image", "VGG16", 4, 0.95, 0.03),
    ("U-net, image", "VGG16", 5, 1.00, 0.00),
    ("U-net, image", "InceptionV3", 1, 0.99, 0.01),
    ("U-net, image", "InceptionV3", 2, 0.95, 0.03),
    ("U-net, image", "InceptionV3", 3, 0.97, 0.03),
    ("U-net, image", "InceptionV3", 4, 0.96, 0.03),
    ("U-net, image", "InceptionV3", 5, 1.00, 0.00),
    ("U-net, multichannel", "Resnet34", 1, 0.99, 0.01),
    ("U-net, multichannel", "Resnet34", 2, 0.94, 0.03),
    ("U-net, multichannel", "Resnet34", 3, 0.95, 0.03),
    ("U-net, multichannel", "Resnet34", 4, 0.95, 0.03),
    ("U-net, multichannel", "Resnet34", 5, 1.00, 0.01),
    ("U-net, multichannel", "VGG16", 1, 0.99, 0.02),
    ("U-net, multichannel", "VGG16", 2, 0.93, 0.04),
    ("U-net, multichannel", "VGG16", 3, 0.95, 0.03),
    ("U-net, multichannel", "VGG16", 4, 0.95, 0.03),
    ("U-net, multichannel", "VGG16", 5, 1.00, 0.00),
    ("U-net, multichannel", "InceptionV3", 1, 0.99, 0.01),
    ("U-net, multichannel", "InceptionV3", 2, 0.94, 0.03),
    ("U-net, multichannel", "InceptionV3", 3, 0.96, 0.03),
    ("U-net, multichannel", "InceptionV3", 4, 0.96, 0.03),
    ("U-net, multichannel", "InceptionV3", 5, 1.00, 0.00),
    ("U-net, fused", "Resnet34", 1, 0.99, 0.01),
    ("U-net, fused", "Resnet34", 2, 0.94, 0.03),
    ("U-net, fused", "Resnet34", 3, 0.95, 0.03),
    ("U-net, fused", "Resnet34", 4, 0.95, 0.03),
    ("U-net, fused", "Resnet34", 5, 1.00, 0.01),
    ("U-net, fused", "VGG16", 1, 0.99, 0.01),
    ("U-net, fused", "VGG16", 2, 0.95, 0.03),
    ("U-net, fused", "VGG16", 3, 0.96, 0.03),
    ("U-net, fused", "VGG16", 4, 0.96, 0.03),
    ("U-net, fused", "VGG16", 5, 1.00, 0.00),
    ("U-net, fused", "InceptionV3", 1, 0.99, 0.01),
    ("U-net, fused", "InceptionV3", 2, 0.93, 0.03),
    ("U-net, fused", "InceptionV3", 3, 0.95, 0.03),
    ("U-net, fused", "InceptionV3", 4, 0.95, 0.03),
    ("U-net, fused", "InceptionV3", 5, 1.00, 0.00),
]


def table2_pairs():
    """Distinct (ACC, printed +/-) pairs in the table, sorted."""
    return sorted({(acc, pm) for *_, acc, pm in TABLE2_CELLS})


def table2_check(n=200):
    """Recompute every distinct (ACC, +/-) pair; one row per pair with a pass flag."""
    rows = []
    for acc, printed in table2_pairs():
        half = acc_ci95(acc, n)[0]
        rows.append(
            {
                "acc": acc,
                "printed": printed,
                "half_width": half,
                "rounded": round(half, 2),
                "cells": sum(1 for *_, a, p in TABLE2_CELLS if (a, p) == (acc, printed)),
                "pass": round(half, 2) == printed,
            }
        )
    return rows
