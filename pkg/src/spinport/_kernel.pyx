# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernel.

Mirror of ``_kernel_py``: same BitGenerator draw order, same scalar libm
arithmetic (the extension is compiled with FMA contraction disabled), so
outputs are bit-for-bit identical to the pure-Python twin for a given seed.
Keep both implementations in lockstep.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.math cimport cos, exp, log1p, sin, sqrt

from numpy.random cimport bitgen_t

import numpy as np

BACKEND = "cython"

MAX_REJECT = 1_000_000

BOTH_D1 = 0
SPLIT = 1
BOTH_D2 = 2

cdef enum:
    _BOTH_D1 = 0
    _SPLIT = 1
    _BOTH_D2 = 2

DEF _MAX_REJECT = 1000000


cdef inline double _next(bitgen_t *bg) noexcept nogil:
    return bg.next_double(bg.state)


cdef bint _draw_time(bitgen_t *bg, double t0, double tau, double delta,
                     double a2, double b2, double cr, double ci,
                     double cap, bint trivial, double *out) noexcept nogil:
    cdef double t, cf
    cdef long k
    for k in range(_MAX_REJECT):
        t = t0 - tau * log1p(-_next(bg))
        if trivial:
            out[0] = t
            return True
        cf = a2 + b2 + 2.0 * (cr * cos(delta * t) - ci * sin(delta * t))
        if _next(bg) * cap <= cf:
            out[0] = t
            return True
    return False


cdef inline void _wavepacket(double t, double t0, double tau, double delta,
                             double ab_re, double ab_im, double ar_re, double ar_im,
                             double *w_re, double *w_im) noexcept nogil:
    cdef double env, half, c, s, re, im
    env = exp(-(t - t0) / (2.0 * tau)) if t >= t0 else 0.0
    half = 0.5 * delta * t
    c = cos(half)
    s = sin(half)
    re = c * (ab_re + ar_re) + s * (ab_im - ar_im)
    im = c * (ab_im + ar_im) + s * (ar_re - ab_re)
    w_re[0] = env * re
    w_im[0] = env * im


cdef bitgen_t *_bitgen(object bit_generator):
    return <bitgen_t *> PyCapsule_GetPointer(bit_generator.capsule, "BitGenerator")


def sample_times(bit_generator, Py_ssize_t n, double t0, double tau,
                 double ab_re, double ab_im, double ar_re, double ar_im,
                 double delta):
    """Draw n detection times from a two-color exponential wavepacket."""
    cdef bitgen_t *bg = _bitgen(bit_generator)
    cdef double a2 = ab_re * ab_re + ab_im * ab_im
    cdef double b2 = ar_re * ar_re + ar_im * ar_im
    cdef double cr = ab_re * ar_re + ab_im * ar_im
    cdef double ci = ab_re * ar_im - ab_im * ar_re
    cdef double cap = (sqrt(a2) + sqrt(b2)) ** 2
    cdef bint trivial = a2 == 0.0 or b2 == 0.0
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] v = out
    cdef Py_ssize_t i
    cdef bint ok = True
    with nogil:
        for i in range(n):
            if not _draw_time(bg, t0, tau, delta, a2, b2, cr, ci, cap, trivial, &v[i]):
                ok = False
                break
    if not ok:
        raise RuntimeError("beat-factor rejection sampler failed to accept")
    return out


def sample_pair_clicks(bit_generator, Py_ssize_t n,
                       double a_t0, double a_tau,
                       double a_ab_re, double a_ab_im, double a_ar_re, double a_ar_im,
                       double b_t0, double b_tau,
                       double b_ab_re, double b_ab_im, double b_ar_re, double b_ar_im,
                       bint b_entangled, double delta, double m):
    """Sample n beam-splitter outcomes; see the pure-Python twin for the contract."""
    cdef bitgen_t *bg = _bitgen(bit_generator)

    cdef double sa_a2 = a_ab_re * a_ab_re + a_ab_im * a_ab_im
    cdef double sa_b2 = a_ar_re * a_ar_re + a_ar_im * a_ar_im
    cdef double sa_cr = a_ab_re * a_ar_re + a_ab_im * a_ar_im
    cdef double sa_ci = a_ab_re * a_ar_im - a_ab_im * a_ar_re
    cdef double sa_cap = (sqrt(sa_a2) + sqrt(sa_b2)) ** 2
    cdef bint sa_trivial = sa_a2 == 0.0 or sa_b2 == 0.0

    cdef double sb_a2, sb_b2, sb_cr, sb_ci, sb_cap
    cdef bint sb_trivial
    if b_entangled:
        sb_a2 = 1.0
        sb_b2 = 1.0
        sb_cr = 0.0
        sb_ci = 0.0
        sb_cap = 2.0
        sb_trivial = True
    else:
        sb_a2 = b_ab_re * b_ab_re + b_ab_im * b_ab_im
        sb_b2 = b_ar_re * b_ar_re + b_ar_im * b_ar_im
        sb_cr = b_ab_re * b_ar_re + b_ab_im * b_ar_im
        sb_ci = b_ab_re * b_ar_im - b_ab_im * b_ar_re
        sb_cap = (sqrt(sb_a2) + sqrt(sb_b2)) ** 2
        sb_trivial = sb_a2 == 0.0 or sb_b2 == 0.0

    outcome = np.empty(n, dtype=np.int8)
    out_t1 = np.empty(n, dtype=np.float64)
    out_t2 = np.empty(n, dtype=np.float64)
    cdef signed char[::1] oc = outcome
    cdef double[::1] v1 = out_t1
    cdef double[::1] v2 = out_t2

    cdef Py_ssize_t i
    cdef bint ok = True
    cdef double x, y, t, tp, u
    cdef double par_re, par_im, pbr_re, pbr_im, pa_t, pa_tp, ub_t, ub_tp
    cdef double xa_re, xa_im, xb_re, xb_im, ya_re, ya_im, yb_re, yb_im
    cdef double g_re, g_im, h_re, h_im, s_tot, r_int, p_split, re_aa
    with nogil:
        for i in range(n):
            if not _draw_time(bg, a_t0, a_tau, delta, sa_a2, sa_b2, sa_cr, sa_ci,
                              sa_cap, sa_trivial, &x):
                ok = False
                break
            if not _draw_time(bg, b_t0, b_tau, delta, sb_a2, sb_b2, sb_cr, sb_ci,
                              sb_cap, sb_trivial, &y):
                ok = False
                break
            if _next(bg) < 0.5:
                t = x
                tp = y
            else:
                t = y
                tp = x
            if b_entangled:
                _wavepacket(t, a_t0, a_tau, delta, a_ab_re, a_ab_im, a_ar_re, a_ar_im,
                            &par_re, &par_im)
                _wavepacket(tp, a_t0, a_tau, delta, a_ab_re, a_ab_im, a_ar_re, a_ar_im,
                            &pbr_re, &pbr_im)
                pa_t = par_re * par_re + par_im * par_im
                pa_tp = pbr_re * pbr_re + pbr_im * pbr_im
                ub_t = exp(-(t - b_t0) / (2.0 * b_tau)) if t >= b_t0 else 0.0
                ub_tp = exp(-(tp - b_t0) / (2.0 * b_tau)) if tp >= b_t0 else 0.0
                s_tot = pa_t * ub_tp * ub_tp + pa_tp * ub_t * ub_t
                re_aa = par_re * pbr_re + par_im * pbr_im
                r_int = re_aa * ub_t * ub_tp * cos(0.5 * delta * (t - tp))
            else:
                _wavepacket(t, a_t0, a_tau, delta, a_ab_re, a_ab_im, a_ar_re, a_ar_im,
                            &xa_re, &xa_im)
                _wavepacket(tp, b_t0, b_tau, delta, b_ab_re, b_ab_im, b_ar_re, b_ar_im,
                            &xb_re, &xb_im)
                _wavepacket(tp, a_t0, a_tau, delta, a_ab_re, a_ab_im, a_ar_re, a_ar_im,
                            &ya_re, &ya_im)
                _wavepacket(t, b_t0, b_tau, delta, b_ab_re, b_ab_im, b_ar_re, b_ar_im,
                            &yb_re, &yb_im)
                g_re = xa_re * xb_re - xa_im * xb_im
                g_im = xa_re * xb_im + xa_im * xb_re
                h_re = ya_re * yb_re - ya_im * yb_im
                h_im = ya_re * yb_im + ya_im * yb_re
                s_tot = g_re * g_re + g_im * g_im + h_re * h_re + h_im * h_im
                r_int = g_re * h_re + g_im * h_im
            if s_tot > 0.0:
                p_split = (s_tot - 2.0 * m * r_int) / (2.0 * s_tot)
            else:
                p_split = 0.5
            if p_split < 0.0:
                p_split = 0.0
            u = _next(bg)
            if u < p_split:
                oc[i] = _SPLIT
            elif u < p_split + 0.5 * (1.0 - p_split):
                oc[i] = _BOTH_D1
            else:
                oc[i] = _BOTH_D2
            v1[i] = t
            v2[i] = tp
    if not ok:
        raise RuntimeError("beat-factor rejection sampler failed to accept")
    return outcome, out_t1, out_t2
