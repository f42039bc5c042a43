"""Central-difference verification of the analytic gradients."""

from __future__ import annotations

import numpy as np

from lanesig.nnet.model import ModelParams, backward, forward, init_model, loss_value


def grad_check(model: ModelParams, inputs, targets, mode="weighted", epsilon: float = 1e-5,
               *, max_params: int = 10_000, seed: int = 0, extended: bool = True,
               floor: float = 1e-12) -> float:
    """Worst relative error ``|g_a - g_n| / max(|g_a|, |g_n|, floor)``.

    Every parameter is perturbed when the model has at most ``max_params`` of
    them, otherwise a seeded subsample of that size.  With ``extended`` the
    perturbed losses are evaluated in ``np.longdouble``: float64 roundoff
    alone limits central differences to about ``1e-12`` absolute, which
    swamps the near-zero gradients a recurrent model always has somewhere.
    Even so the numeric derivative is quantised at about
    ``ulp(loss) / (2 * epsilon)``, a few 1e-15 for losses near 1, so
    gradients far below ``floor`` cannot be resolved; raising ``floor``
    turns the score into an absolute check for them.
    """
    if model.dtype != np.float64:
        raise ValueError("grad_check needs a 64-bit model")
    out = forward(model, inputs, keep_cache=True)
    analytic = backward(model, out, targets, mode)
    coords = [(name, idx) for name, arr in model.arrays().items() for idx in np.ndindex(arr.shape)]
    if len(coords) > max_params:
        pick = np.random.default_rng(seed).choice(len(coords), size=max_params, replace=False)
        coords = [coords[i] for i in np.sort(pick)]
    wide = np.longdouble if extended else np.float64
    probe = model.astype(wide)
    probe_inputs = np.asarray(getattr(inputs, "samples", inputs)).astype(wide)
    arrays = probe.arrays()
    worst = 0.0
    for name, idx in coords:
        arr = arrays[name]
        orig = arr[idx]
        arr[idx] = orig + epsilon
        up = loss_value(forward(probe, probe_inputs), targets, mode)
        arr[idx] = orig - epsilon
        down = loss_value(forward(probe, probe_inputs), targets, mode)
        arr[idx] = orig
        numeric = float((up - down) / (2 * wide(epsilon)))
        a = float(analytic[name][idx])
        err = abs(a - numeric) / max(abs(a), abs(numeric), floor)
        worst = max(worst, err)
    return float(worst)


def reference_problem(seed: int = 0, *, hidden_dim: int = 4, n_cells: int = 3, input_dim: int = 5,
                      n_lanes: int = 2, batch: int = 4, scale: float = 1.0):
    """The small float64 model and batch used to exercise ``grad_check``.

    Cells are fed already pooled, so the pooling layout only has to make the
    implied cell length even.
    """
    kernel = 1 if input_dim % 2 == 0 else 2
    model = init_model(d=input_dim - 1 + kernel, n_cells=n_cells, hidden_dim=hidden_dim,
                       n_lanes=n_lanes, pool_kernel=kernel, pool_stride=1, seed=seed,
                       dtype=np.float64)
    rng = np.random.default_rng(seed + 1)
    X = rng.normal(0.0, scale, (batch, n_cells, model.input_dim))
    y = rng.integers(0, n_lanes, size=(batch, n_cells))
    return model, X, y
