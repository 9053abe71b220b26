"""
Classification metrics.

F-measure is macro-averaged: every class in [0, n_classes) counts equally,
including classes that never occur. Precision, recall or F1 with a zero
denominator are taken as 0.
"""

import numpy as np


def _check_labels(true_labels, predicted_labels, n_classes: int) -> tuple[np.ndarray, np.ndarray]:
    true = np.asarray(true_labels, dtype=np.int64)
    pred = np.asarray(predicted_labels, dtype=np.int64)
    if true.shape != pred.shape or true.ndim != 1:
        raise ValueError(f"label vectors differ in shape: {true.shape} vs {pred.shape}")
    for arr in (true, pred):
        if arr.size and (arr.min() < 0 or arr.max() >= n_classes):
            raise ValueError(f"labels must lie in [0, {n_classes})")
    return true, pred


def confusion_matrix(true_labels, predicted_labels, n_classes: int) -> np.ndarray:
    """Counts with rows = true class, columns = predicted class."""
    true, pred = _check_labels(true_labels, predicted_labels, n_classes)
    return np.bincount(true * n_classes + pred, minlength=n_classes * n_classes).reshape(
        n_classes, n_classes
    )


def per_class_f_measure(true_labels, predicted_labels, n_classes: int) -> np.ndarray:
    """F1 of every class."""
    cm = confusion_matrix(true_labels, predicted_labels, n_classes)
    tp = np.diag(cm)
    predicted = cm.sum(axis=0)
    actual = cm.sum(axis=1)

    precision = np.zeros(n_classes)
    recall = np.zeros(n_classes)
    np.divide(tp, predicted, out=precision, where=predicted > 0)
    np.divide(tp, actual, out=recall, where=actual > 0)

    f1 = np.zeros(n_classes)
    denom = precision + recall
    np.divide(2 * precision * recall, denom, out=f1, where=denom > 0)
    return f1


def f_measure(true_labels, predicted_labels, n_classes: int) -> float:
    """Macro-averaged F-measure in [0, 1]."""
    per_class = per_class_f_measure(true_labels, predicted_labels, n_classes)
    return sum(per_class.tolist()) / n_classes


def classification_report(true_labels, predicted_labels, n_classes: int) -> dict:
    """Macro-F, per-class F, accuracy and confusion matrix as plain Python values."""
    cm = confusion_matrix(true_labels, predicted_labels, n_classes)
    per_class = per_class_f_measure(true_labels, predicted_labels, n_classes)
    total = int(cm.sum())
    return {
        "macro_f": sum(per_class.tolist()) / n_classes,
        "per_class_f": per_class.tolist(),
        "accuracy": float(np.trace(cm) / total) if total else 0.0,
        "confusion_matrix": cm.tolist(),
    }
