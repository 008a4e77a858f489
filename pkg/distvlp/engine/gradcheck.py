"""Central-difference gradient oracles."""

from __future__ import annotations

from typing import Callable, Iterable, Optional

import numpy as np

from .optim import Parameter
from .rng import SeededRng
from .tensor import GradientError, NonFiniteError, Tensor, no_grad

REL_FLOOR = 1e-8


def _scalar(out: Tensor) -> float:
    if out.size != 1:
        raise GradientError(f"gradient check: function must return a scalar, got shape {out.shape}")
    return out.item()


def _evaluate(f: Callable[[Tensor], Tensor], data: np.ndarray, where: str) -> float:
    try:
        with no_grad():
            return _scalar(f(Tensor(data)))
    except NonFiniteError as exc:
        raise GradientError(f"gradient check: non-finite value at {where} ({exc.op})") from exc


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), REL_FLOOR)
    return np.abs(analytic - numeric) / denom


def finite_diff_check(f: Callable[[Tensor], Tensor], x: Tensor, h: float = 1e-5) -> float:
    """Max relative error between taped and central-difference gradients of ``f`` at ``x``."""
    if not 0 < h <= 1e-2:
        raise GradientError(f"gradient check: step h must lie in (0, 1e-2], got {h}")
    base = np.array(x.data, dtype=np.float64)
    probe = Tensor(base.copy(), requires_grad=True)
    out = f(probe)
    _scalar(out)
    out.backward()
    analytic = probe.grad if probe.grad is not None else np.zeros_like(base)

    numeric = np.zeros_like(base)
    for idx in np.ndindex(base.shape):
        plus = base.copy()
        plus[idx] += h
        minus = base.copy()
        minus[idx] -= h
        numeric[idx] = (_evaluate(f, plus, f"x+h·e{idx}") - _evaluate(f, minus, f"x-h·e{idx}")) / (2 * h)
    if base.size == 0:
        return 0.0
    return float(np.max(relative_error(analytic, numeric)))


def directional_check(
    loss_fn: Callable[[], Tensor],
    params: Iterable[Parameter],
    rng: SeededRng,
    h: float = 1e-5,
    directions: int = 3,
) -> float:
    """Compare ∇L·v with a central difference along random directions ``v``.

    Checks every parameter at once, which keeps full-pipeline checks cheap.
    """
    params = list(params)
    for p in params:
        p.grad = None
    loss_fn().backward()
    grads = [p.grad if p.grad is not None else np.zeros_like(p.data) for p in params]
    originals = [p.data.copy() for p in params]
    worst = 0.0
    try:
        for _ in range(directions):
            vs = [rng.normal(p.shape) for p in params]
            analytic = float(np.sum([np.sum(g * v) for g, v in zip(grads, vs)]))
            values = []
            for sign in (1.0, -1.0):
                for p, base, v in zip(params, originals, vs):
                    p.data = base + sign * h * v
                with no_grad():
                    values.append(_scalar(loss_fn()))
            numeric = (values[0] - values[1]) / (2 * h)
            worst = max(worst, float(relative_error(np.array(analytic), np.array(numeric))))
    finally:
        for p, base in zip(params, originals):
            p.data = base
            p.grad = None
    return worst


def check_gradient_fixture(
    forward: Callable[[np.ndarray], np.ndarray],
    backward: Callable[[np.ndarray, np.ndarray], np.ndarray],
    op: str = "custom",
) -> Callable[[Tensor], Tensor]:
    """Build a single-input primitive from explicit forward/backward rules.

    Lets tests plant a deliberately wrong gradient as a negative control.
    """

    def primitive(x: Tensor) -> Tensor:
        value = forward(x.data)
        return Tensor.from_op(np.asarray(value, dtype=np.float64), (x,), lambda g: (backward(x.data, g),), op)

    return primitive


def assert_finite_grads(params: Iterable[Parameter], where: Optional[str] = None) -> None:
    for p in params:
        if p.grad is not None and not np.all(np.isfinite(p.grad)):
            raise NonFiniteError("backward", f"non-finite gradient for {p.name!r}{' in ' + where if where else ''}")
