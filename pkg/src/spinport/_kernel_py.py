"""Pure-Python twin of the compiled sampling kernel.

Both backends draw uniforms from the same numpy BitGenerator (one
``next_double`` per draw) in the same order and evaluate the same scalar
libm expressions, so for a given seed their outputs are bit-for-bit
identical.  Any change here must be mirrored in ``_kernel.pyx``.

Time samples come from the truncated-exponential envelope by inverse CDF,
followed by a rejection step against the two-color beat factor.  Pair
outcomes use the fact that the total two-click time distribution on a
lossless 50:50 splitter is interference-free; interference only decides how
a given time pair splits between "coincidence" and "both photons on one
detector", so the outcome is drawn from the conditional probabilities at the
sampled times.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

MAX_REJECT = 1_000_000

# Outcome codes for sample_pair_clicks.
BOTH_D1 = 0
SPLIT = 1
BOTH_D2 = 2


def _draw_time(next_u, t0, tau, delta, a2, b2, cr, ci, cap, trivial):
    for _ in range(MAX_REJECT):
        t = t0 - tau * math.log1p(-float(next_u()))
        if trivial:
            return t
        cf = a2 + b2 + 2.0 * (cr * math.cos(delta * t) - ci * math.sin(delta * t))
        if float(next_u()) * cap <= cf:
            return t
    raise RuntimeError("beat-factor rejection sampler failed to accept")


def _color_setup(ab_re, ab_im, ar_re, ar_im):
    a2 = ab_re * ab_re + ab_im * ab_im
    b2 = ar_re * ar_re + ar_im * ar_im
    cr = ab_re * ar_re + ab_im * ar_im
    ci = ab_re * ar_im - ab_im * ar_re
    cap = (math.sqrt(a2) + math.sqrt(b2)) ** 2
    trivial = a2 == 0.0 or b2 == 0.0
    return a2, b2, cr, ci, cap, trivial


def sample_times(bit_generator, n, t0, tau, ab_re, ab_im, ar_re, ar_im, delta):
    """Draw n detection times from a two-color exponential wavepacket."""
    gen = np.random.Generator(bit_generator)
    next_u = gen.random
    a2, b2, cr, ci, cap, trivial = _color_setup(ab_re, ab_im, ar_re, ar_im)
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = _draw_time(next_u, t0, tau, delta, a2, b2, cr, ci, cap, trivial)
    return out


def _wavepacket(t, t0, tau, delta, ab_re, ab_im, ar_re, ar_im):
    """Unnormalized complex wavepacket value (envelope x color factor)."""
    env = math.exp(-(t - t0) / (2.0 * tau)) if t >= t0 else 0.0
    half = 0.5 * delta * t
    c = math.cos(half)
    s = math.sin(half)
    re = c * (ab_re + ar_re) + s * (ab_im - ar_im)
    im = c * (ab_im + ar_im) + s * (ar_re - ab_re)
    return env * re, env * im


def sample_pair_clicks(
    bit_generator,
    n,
    a_t0,
    a_tau,
    a_ab_re,
    a_ab_im,
    a_ar_re,
    a_ar_im,
    b_t0,
    b_tau,
    b_ab_re,
    b_ab_im,
    b_ar_re,
    b_ar_im,
    b_entangled,
    delta,
    m,
):
    """Sample n beam-splitter outcomes for one photon pair per repetition.

    Returns (outcome int8[n], t1 float64[n], t2 float64[n]) where outcome 1
    is a coincidence with detector-1 click at t1 and detector-2 click at t2,
    and outcomes 0 / 2 put both clicks (at t1 and t2) on detector 1 / 2.
    ``b_entangled`` marks photon B as color-entangled with the spin, which
    traces its color for time sampling and averages the interference phase
    over the two color branches.
    """
    gen = np.random.Generator(bit_generator)
    next_u = gen.random
    sa = _color_setup(a_ab_re, a_ab_im, a_ar_re, a_ar_im)
    if b_entangled:
        sb = (1.0, 1.0, 0.0, 0.0, 2.0, True)
    else:
        sb = _color_setup(b_ab_re, b_ab_im, b_ar_re, b_ar_im)
    outcome = np.empty(n, dtype=np.int8)
    out_t1 = np.empty(n, dtype=np.float64)
    out_t2 = np.empty(n, dtype=np.float64)
    for i in range(n):
        x = _draw_time(next_u, a_t0, a_tau, delta, *sa)
        y = _draw_time(next_u, b_t0, b_tau, delta, *sb)
        if float(next_u()) < 0.5:
            t, tp = x, y
        else:
            t, tp = y, x
        if b_entangled:
            par_re, par_im = _wavepacket(t, a_t0, a_tau, delta, a_ab_re, a_ab_im, a_ar_re, a_ar_im)
            pbr_re, pbr_im = _wavepacket(tp, a_t0, a_tau, delta, a_ab_re, a_ab_im, a_ar_re, a_ar_im)
            pa_t = par_re * par_re + par_im * par_im
            pa_tp = pbr_re * pbr_re + pbr_im * pbr_im
            ub_t = math.exp(-(t - b_t0) / (2.0 * b_tau)) if t >= b_t0 else 0.0
            ub_tp = math.exp(-(tp - b_t0) / (2.0 * b_tau)) if tp >= b_t0 else 0.0
            s_tot = pa_t * ub_tp * ub_tp + pa_tp * ub_t * ub_t
            re_aa = par_re * pbr_re + par_im * pbr_im
            r_int = re_aa * ub_t * ub_tp * math.cos(0.5 * delta * (t - tp))
        else:
            xa_re, xa_im = _wavepacket(t, a_t0, a_tau, delta, a_ab_re, a_ab_im, a_ar_re, a_ar_im)
            xb_re, xb_im = _wavepacket(tp, b_t0, b_tau, delta, b_ab_re, b_ab_im, b_ar_re, b_ar_im)
            ya_re, ya_im = _wavepacket(tp, a_t0, a_tau, delta, a_ab_re, a_ab_im, a_ar_re, a_ar_im)
            yb_re, yb_im = _wavepacket(t, b_t0, b_tau, delta, b_ab_re, b_ab_im, b_ar_re, b_ar_im)
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
        u = float(next_u())
        if u < p_split:
            outcome[i] = SPLIT
        elif u < p_split + 0.5 * (1.0 - p_split):
            outcome[i] = BOTH_D1
        else:
            outcome[i] = BOTH_D2
        out_t1[i] = t
        out_t2[i] = tp
    return outcome, out_t1, out_t2
