# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Langevin block kernel.

Semantics match gmlangevin._ref.ld_block step for step: same update formula,
same accumulation order over components, per-chain arithmetic independent of
batch size.  The only intentional difference from the NumPy path is the order
of the squared-distance reduction over coordinates (sequential here, pairwise
there), so the two backends are each deterministic but not bit-identical to
one another.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport exp, log, sqrt, INFINITY

cnp.import_array()


def ld_block(states, logw, means, variances, sigmas, epses, noise, out_d2=None):
    """Advance `states` in place by len(sigmas) steps; see _ref.ld_block."""
    cdef bint want_d2 = out_d2 is not None
    if not want_d2:
        out_d2 = np.empty((1, 1, 1))
    _ld_block(states, logw, means, variances, sigmas, epses, noise, out_d2, want_d2)


cdef void _ld_block(
    double[:, ::1] states,
    const double[:, ::1] logw,
    const double[:, ::1] means,
    const double[::1] variances,
    const double[::1] sigmas,
    const double[::1] epses,
    const double[:, :, ::1] noise,
    double[:, :, ::1] out_d2,
    bint want_d2,
):
    cdef Py_ssize_t B = states.shape[0]
    cdef Py_ssize_t D = states.shape[1]
    cdef Py_ssize_t K = means.shape[0]
    cdef Py_ssize_t S = sigmas.shape[0]
    cdef Py_ssize_t s, b, k, d
    cdef double sg, he, se, diff, acc, mmax, rs, x, lrk
    scratch = np.empty((6, K))
    cdef double[:, ::1] w = scratch
    # rows of w: 0=v, 1=half_D_log_v, 2=two_v, 3=lr, 4=r, 5=c
    with nogil:
        for s in range(S):
            sg = sigmas[s]
            he = 0.5 * epses[s]
            se = sqrt(epses[s])
            for k in range(K):
                w[0, k] = variances[k] + sg * sg
                w[1, k] = 0.5 * D * log(w[0, k])
                w[2, k] = 2.0 * w[0, k]
            for b in range(B):
                mmax = -INFINITY
                for k in range(K):
                    acc = 0.0
                    for d in range(D):
                        diff = states[b, d] - means[k, d]
                        acc += diff * diff
                    if want_d2:
                        out_d2[b, s, k] = acc
                    lrk = logw[b, k] - w[1, k] - acc / w[2, k]
                    w[3, k] = lrk
                    if lrk > mmax:
                        mmax = lrk
                rs = 0.0
                for k in range(K):
                    w[4, k] = exp(w[3, k] - mmax)
                    rs += w[4, k]
                for k in range(K):
                    w[5, k] = w[4, k] / (rs * w[0, k])
                for d in range(D):
                    acc = 0.0
                    for k in range(K):
                        acc += w[5, k] * (means[k, d] - states[b, d])
                    x = states[b, d] + he * acc
                    states[b, d] = x + se * noise[b, s, d]
