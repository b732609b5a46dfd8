# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: origin-estimate weights and batched cart-pole rollouts.

Both functions mirror the pure-numpy versions in ``_fallback`` operation for
operation; see that module for the reference semantics.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, sin, cos, fabs, INFINITY, M_PI

cnp.import_array()

cdef double GRAVITY = 9.8
cdef double MASSCART = 1.0
cdef double MASSPOLE = 0.1
cdef double TOTAL_MASS = 1.1
cdef double HALF_LENGTH = 0.5
cdef double POLEMASS_LENGTH = 0.05
cdef double FORCE_MAG = 10.0
cdef double TAU = 0.02
cdef double THETA_LIMIT = 12.0 * 2.0 * M_PI / 360.0
cdef double X_LIMIT = 2.4


def origin_weights(double[:, ::1] queries, double[:, ::1] keys, double[::1] log_q, double alpha):
    """Row-normalised kernel weights.

    Returns ``(W, log_norm, entropy, degenerate)`` where ``W[i, j]`` is the
    softmax over ``j`` of ``log_q[j] - |queries[i] - sqrt(alpha) keys[j]|^2 / (2 (1 - alpha))``.
    Rows whose log-weights are all ``-inf`` are left as zeros and flagged.
    """
    cdef Py_ssize_t n = queries.shape[0], m = keys.shape[0], d = queries.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double sa = sqrt(alpha), inv2v = 1.0 / (2.0 * (1.0 - alpha))
    cdef double diff, sq, mx, total, h, w
    W_arr = np.zeros((n, m), dtype=np.float64)
    log_norm_arr = np.full(n, -np.inf)
    ent_arr = np.zeros(n)
    deg_arr = np.zeros(n, dtype=np.bool_)
    cdef double[:, ::1] W = W_arr
    cdef double[::1] log_norm = log_norm_arr
    cdef double[::1] ent = ent_arr
    cdef cnp.npy_bool[::1] deg = deg_arr
    with nogil:
        for i in range(n):
            mx = -INFINITY
            for j in range(m):
                sq = 0.0
                for k in range(d):
                    diff = queries[i, k] - sa * keys[j, k]
                    sq = sq + diff * diff
                w = log_q[j] - sq * inv2v
                W[i, j] = w
                if w > mx:
                    mx = w
            if mx == -INFINITY:
                deg[i] = 1
                for j in range(m):
                    W[i, j] = 0.0
                continue
            total = 0.0
            for j in range(m):
                w = exp(W[i, j] - mx)
                W[i, j] = w
                total = total + w
            h = 0.0
            for j in range(m):
                w = W[i, j] / total
                W[i, j] = w
                if w > 0.0:
                    h = h - w * log(w)
            log_norm[i] = mx + log(total)
            ent[i] = h
    return W_arr, log_norm_arr, ent_arr, deg_arr


cdef inline int _act(const double[::1] p, const cnp.int64_t[::1] sizes, Py_ssize_t nlayers,
                     double* a, double* b, double x0, double x1, double x2, double x3) noexcept nogil:
    cdef Py_ssize_t l, o, i, off = 0, n_in, n_out
    cdef double s
    cdef double* src = a
    cdef double* dst = b
    cdef double* tmp
    a[0] = x0; a[1] = x1; a[2] = x2; a[3] = x3
    for l in range(nlayers - 1):
        n_in = sizes[l]
        n_out = sizes[l + 1]
        for o in range(n_out):
            s = 0.0
            for i in range(n_in):
                s = s + p[off + o * n_in + i] * src[i]
            s = s + p[off + n_in * n_out + o]
            if l < nlayers - 2 and s < 0.0:
                s = 0.0
            dst[o] = s
        off = off + n_in * n_out + n_out
        tmp = src; src = dst; dst = tmp
    return 1 if src[1] > src[0] else 0


def rollout_batch(double[:, ::1] params, cnp.int64_t[::1] sizes, double[:, :, ::1] init, int max_steps):
    """Roll out every (individual, episode) pair.

    ``params`` is (N, P); ``init`` is (N, E, 4). Returns ``steps`` (N, E) and
    the terminal state (N, E, 4).
    """
    cdef Py_ssize_t n = params.shape[0], e_count = init.shape[1], nlayers = sizes.shape[0]
    cdef Py_ssize_t i, e, widest = 0, l
    cdef int step, action
    cdef double x, x_dot, th, th_dot, force, c, s, temp, th_acc, x_acc
    for l in range(nlayers):
        if sizes[l] > widest:
            widest = sizes[l]
    buf_arr = np.zeros(2 * widest)
    cdef double[::1] buf = buf_arr
    steps_arr = np.zeros((n, e_count), dtype=np.int64)
    term_arr = np.zeros((n, e_count, 4))
    cdef cnp.int64_t[:, ::1] steps = steps_arr
    cdef double[:, :, ::1] term = term_arr
    with nogil:
        for i in range(n):
            for e in range(e_count):
                x = init[i, e, 0]; x_dot = init[i, e, 1]; th = init[i, e, 2]; th_dot = init[i, e, 3]
                step = 0
                while step < max_steps:
                    action = _act(params[i], sizes, nlayers, &buf[0], &buf[widest], x, x_dot, th, th_dot)
                    force = FORCE_MAG if action == 1 else -FORCE_MAG
                    c = cos(th)
                    s = sin(th)
                    temp = (force + POLEMASS_LENGTH * th_dot * th_dot * s) / TOTAL_MASS
                    th_acc = (GRAVITY * s - c * temp) / (HALF_LENGTH * (4.0 / 3.0 - MASSPOLE * c * c / TOTAL_MASS))
                    x_acc = temp - POLEMASS_LENGTH * th_acc * c / TOTAL_MASS
                    x = x + TAU * x_dot
                    x_dot = x_dot + TAU * x_acc
                    th = th + TAU * th_dot
                    th_dot = th_dot + TAU * th_acc
                    step = step + 1
                    if fabs(x) > X_LIMIT or fabs(th) > THETA_LIMIT:
                        break
                steps[i, e] = step
                term[i, e, 0] = x; term[i, e, 1] = x_dot; term[i, e, 2] = th; term[i, e, 3] = th_dot
    return steps_arr, term_arr
