"""Shared helpers for the test suite."""

import numpy as np

from lobres import BookParams, SampledPath, Strategy


def constant_book(grid, kappa, K=1.0, h=1.0, alpha=0.0, eps=0.0, **kw):
    return BookParams.build(grid, kappa, K=K, h=h, alpha=alpha, eps=eps, **kw)


def random_strategy(grid, rng, rate_scale=2.0, n_blocks=4, phi0=0.0):
    rate = SampledPath(grid, rng.normal(0.0, rate_scale, grid.n_points))
    idx = np.sort(rng.choice(grid.n_points, size=n_blocks, replace=False))
    sizes = rng.normal(0.0, 1.0, n_blocks)
    blocks = tuple((int(i), float(s)) for i, s in zip(idx, sizes) if s != 0.0)
    return Strategy(grid, rate, blocks, phi0)
