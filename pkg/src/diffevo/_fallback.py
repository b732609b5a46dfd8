"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np

GRAVITY = 9.8
MASSPOLE = 0.1
TOTAL_MASS = 1.1
HALF_LENGTH = 0.5
POLEMASS_LENGTH = 0.05
FORCE_MAG = 10.0
TAU = 0.02
THETA_LIMIT = 12.0 * 2.0 * np.pi / 360.0
X_LIMIT = 2.4

# above this many pairwise coordinate differences, switch to the
# |a|^2 + |b|^2 - 2ab expansion to bound memory
_BROADCAST_LIMIT = 1 << 24


def _sq_dists(queries, keys):
    n, d = queries.shape
    if n * keys.shape[0] * d <= _BROADCAST_LIMIT:
        diff = queries[:, None, :] - keys[None, :, :]
        return np.einsum("ijk,ijk->ij", diff, diff)
    sq = np.sum(queries**2, axis=1)[:, None] + np.sum(keys**2, axis=1)[None, :] - 2.0 * queries @ keys.T
    return np.maximum(sq, 0.0)


def origin_weights(queries, keys, log_q, alpha):
    queries = np.ascontiguousarray(queries, dtype=float)
    keys = np.ascontiguousarray(keys, dtype=float)
    log_q = np.asarray(log_q, dtype=float)
    L = log_q[None, :] - _sq_dists(queries, np.sqrt(alpha) * keys) / (2.0 * (1.0 - alpha))
    mx = np.max(L, axis=1)
    deg = mx == -np.inf
    safe = np.where(deg, 0.0, mx)
    W = np.exp(L - safe[:, None])
    W[deg] = 0.0
    total = W.sum(axis=1)
    total[deg] = 1.0
    W /= total[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -np.sum(np.where(W > 0, W * np.log(np.where(W > 0, W, 1.0)), 0.0), axis=1)
        log_norm = np.where(deg, -np.inf, mx + np.log(total))
    return W, log_norm, ent, deg


def _split(params, sizes):
    layers, off = [], 0
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        w = params[:, off : off + n_in * n_out].reshape(-1, n_out, n_in)
        off += n_in * n_out
        b = params[:, off : off + n_out]
        off += n_out
        layers.append((w, b))
    return layers


def _actions(layers, obs):
    h = obs
    for k, (w, b) in enumerate(layers):
        h = np.einsum("boi,bi->bo", w, h) + b
        if k < len(layers) - 1:
            h = np.maximum(h, 0.0)
    return (h[:, 1] > h[:, 0]).astype(np.int64)


def rollout_batch(params, sizes, init, max_steps):
    params = np.asarray(params, dtype=float)
    n, e_count = init.shape[:2]
    # flatten (individual, episode) pairs into one batch
    flat = np.repeat(params, e_count, axis=0)
    state = np.array(init, dtype=float).reshape(-1, 4)
    steps = np.zeros(len(state), dtype=np.int64)
    alive = np.arange(len(state))
    layers = _split(flat, list(sizes))
    while alive.size and steps[alive[0]] < max_steps:
        sub = [(w[alive], b[alive]) for w, b in layers]
        x, x_dot, th, th_dot = state[alive].T
        force = np.where(_actions(sub, state[alive]) == 1, FORCE_MAG, -FORCE_MAG)
        c, s = np.cos(th), np.sin(th)
        temp = (force + POLEMASS_LENGTH * th_dot * th_dot * s) / TOTAL_MASS
        th_acc = (GRAVITY * s - c * temp) / (HALF_LENGTH * (4.0 / 3.0 - MASSPOLE * c * c / TOTAL_MASS))
        x_acc = temp - POLEMASS_LENGTH * th_acc * c / TOTAL_MASS
        state[alive] = np.stack(
            [x + TAU * x_dot, x_dot + TAU * x_acc, th + TAU * th_dot, th_dot + TAU * th_acc], axis=1
        )
        steps[alive] += 1
        nx, nth = state[alive, 0], state[alive, 2]
        alive = alive[(np.abs(nx) <= X_LIMIT) & (np.abs(nth) <= THETA_LIMIT)]
    return steps.reshape(n, e_count), state.reshape(n, e_count, 4)
