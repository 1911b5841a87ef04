"""Central-finite-difference verification of analytic gradients."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..errors import ValidationError
from . import autodiff as ad
from .autodiff import Tensor


def grad_check(fn: Callable[[], Tensor], wrt: Sequence[Tensor], eps: float = 1e-5,
               max_coords: int = 10_000, rng: np.random.Generator | None = None) -> float:
    """Max relative error between analytic and numeric gradients.

    ``fn`` re-runs the forward pass from the current ``wrt`` tensor
    values.  Non-scalar outputs are reduced by a fixed random linear
    functional so a single backward pass covers them.  When the tensors
    hold more than ``max_coords`` coordinates a uniform random subsample
    is probed instead of every one.  The error metric per coordinate is
    |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).
    """
    if not 1e-7 <= eps <= 1e-4:
        raise ValidationError("eps must lie in [1e-7, 1e-4]")
    if rng is None:
        rng = np.random.default_rng(0)
    probe_shape = fn().data.shape
    if int(np.prod(probe_shape)) != 1:
        proj = rng.standard_normal(probe_shape)

        def scalar_fn() -> float:
            return float(ad.tsum(ad.mul(fn(), Tensor(proj))).data)

        def scalar_tensor() -> Tensor:
            return ad.tsum(ad.mul(fn(), Tensor(proj)))
    else:
        def scalar_fn() -> float:
            return float(fn().data)

        def scalar_tensor() -> Tensor:
            return ad.tsum(fn())

    for t in wrt:
        t.zero_grad()
    scalar_tensor().backward()
    analytic = [t.grad.copy() if t.grad is not None else np.zeros_like(t.data)
                for t in wrt]

    sizes = [t.data.size for t in wrt]
    total = int(np.sum(sizes))
    coords = [(ti, ci) for ti, s in enumerate(sizes) for ci in range(s)]
    if total > max_coords:
        picked = rng.choice(total, size=max_coords, replace=False)
        coords = [coords[i] for i in sorted(picked.tolist())]

    worst = 0.0
    for ti, ci in coords:
        flat = wrt[ti].data.reshape(-1)
        orig = flat[ci]
        flat[ci] = orig + eps
        f_plus = scalar_fn()
        flat[ci] = orig - eps
        f_minus = scalar_fn()
        flat[ci] = orig
        g_num = (f_plus - f_minus) / (2.0 * eps)
        g_ana = analytic[ti].reshape(-1)[ci]
        rel = abs(g_ana - g_num) / max(abs(g_ana), abs(g_num), 1e-8)
        worst = max(worst, rel)
    return worst
