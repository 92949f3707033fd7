"""Adaptive discriminator augmentation probability controller.

Tracks the overfitting heuristic r_t — the mean over a window of the last N
mini-batch sign-means E[sign(D_train)] — and nudges the augmentation
probability p by a fixed step after every observation: up when r_t exceeds
the target, down otherwise, clamped to [0, 1]. r = 0 means no overfitting,
r = 1 complete overfitting.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import EmptyWindowError, InvalidParamError, OutOfRangeError

DEFAULT_TARGET = 0.6
DEFAULT_STEP = 0.01
DEFAULT_WINDOW = 4


class AdaState:
    """Controller state: probability p, target, step size, and the window."""

    def __init__(self, target: float, step: float, n_batches: int):
        if not 0 < target < 1:
            raise InvalidParamError(f"target must lie in (0, 1), got {target}")
        if not step > 0:
            raise InvalidParamError(f"step must be > 0, got {step}")
        if n_batches < 1:
            raise InvalidParamError(f"window length must be >= 1, got {n_batches}")
        self.p = 0.0
        self.target = float(target)
        self.step = float(step)
        self.n_batches = int(n_batches)
        self.window = deque(maxlen=self.n_batches)


def new_ada(
    target: float = DEFAULT_TARGET,
    step: float = DEFAULT_STEP,
    n_batches: int = DEFAULT_WINDOW,
) -> AdaState:
    """Fresh controller with p = 0 and an empty window."""
    return AdaState(target, step, n_batches)


def observe(state: AdaState, batch_sign_mean: float) -> AdaState:
    """Push one mini-batch sign-mean and adjust p by the fixed step.

    p increases when the windowed mean r_t exceeds the target and decreases
    otherwise (ties decrease), staying clamped to [0, 1].
    """
    v = float(batch_sign_mean)
    if not -1.0 <= v <= 1.0:
        raise OutOfRangeError(f"sign-mean must lie in [-1, 1], got {v}")
    state.window.append(v)
    if r_t(state) > state.target:
        state.p = min(state.p + state.step, 1.0)
    else:
        state.p = max(state.p - state.step, 0.0)
    return state


def r_t(state: AdaState) -> float:
    """Mean of the buffered sign-means."""
    if not state.window:
        raise EmptyWindowError("no observations buffered yet")
    return sum(state.window) / len(state.window)


def sign_mean(values) -> float:
    """Reduce raw discriminator outputs to the mean of their signs."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise EmptyWindowError("cannot take the sign-mean of no outputs")
    return float(np.mean(np.sign(arr)))
