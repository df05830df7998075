"""Binary state-matrix metrics."""

import numpy as np

from .errors import InputError


def _binarize(pred):
    pred = np.asarray(pred)
    if pred.dtype.kind == "f":
        return pred >= 0.5
    return pred.astype(bool)


def _check(pred, truth):
    if np.shape(pred) != np.shape(truth):
        raise InputError(f"shape mismatch: {np.shape(pred)} vs {np.shape(truth)}")


def f1_binary(pred, truth) -> float:
    """Cell-wise micro F1 = 2TP / (2TP + FP + FN).

    Probabilities are thresholded at 0.5. Returns 1.0 when both matrices are
    all zero.
    """
    _check(pred, truth)
    p = _binarize(pred)
    t = np.asarray(truth).astype(bool)
    tp = int(np.count_nonzero(p & t))
    fp = int(np.count_nonzero(p & ~t))
    fn = int(np.count_nonzero(~p & t))
    if tp + fp + fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def hamming_metric(pred, truth):
    """Mismatched cell count and the per-cell rate."""
    _check(pred, truth)
    mism = int(np.count_nonzero(_binarize(pred) != np.asarray(truth).astype(bool)))
    size = int(np.size(truth))
    return mism, (mism / size if size else 0.0)
