"""Topological interaction checks for multi-class label grids.

Labels are integer arrays with one class id per site. Likelihoods have shape
``(classes, *dims)``. Constraint configs use the same text format as the
``topo`` command-line tool.
"""

import numpy as np

from . import _core

__all__ = ["detect", "loss_ti", "py_detect", "py_loss_ti"]


def _labels(a, name):
    a = np.asarray(a)
    if a.dtype != np.uint8:
        if not np.issubdtype(a.dtype, np.integer):
            raise TypeError(f"{name} must hold integer class ids, got {a.dtype}")
        if a.size and (a.min() < 0 or a.max() > 255):
            raise ValueError(f"{name} has class ids outside 0..255")
        a = a.astype(np.uint8)
    if a.ndim not in (2, 3):
        raise ValueError(f"{name} must be 2D or 3D, got {a.ndim}D")
    return np.ascontiguousarray(a)


def detect(labels, constraints, conn=None, num_classes=0):
    """Critical-site mask of a label grid.

    Returns ``(mask, violations, foreground)`` where ``mask`` is a uint8 array
    of 0/1 with the labels' shape. ``conn`` overrides the config's ``conn``
    line; ``num_classes`` of 0 takes the config's ``classes`` line.
    """
    return _core.detect(_labels(labels, "labels"), constraints, conn or "", int(num_classes))


def loss_ti(likelihood, gt, constraints, surrogate="ce", conn=None):
    """Masked interaction loss with V taken from ``argmax(likelihood)``.

    Returns ``(l_ti, grad)`` where ``grad`` is dL_ti/df as float64 with the
    likelihood's shape. The mask is a constant, so ``grad`` can be fed to an
    autograd framework as the gradient of a custom term.
    """
    f = np.ascontiguousarray(np.asarray(likelihood, dtype=np.float32))
    return _core.loss_ti(f, _labels(gt, "gt"), constraints, surrogate, conn or "")


py_detect = detect
py_loss_ti = loss_ti
