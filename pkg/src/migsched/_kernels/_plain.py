"""Pure-Python/numpy round-evaluation kernels.

Fallback used when the compiled extension (``_core``) is unavailable or when
``MIGSCHED_PURE=1`` is set.  Same contract as ``_core``:

* ``seg_eval`` / ``seg_eval_grad`` evaluate a migration described by rate
  *segments*: ``y[u]`` is the rate held for ``rounds[u]`` consecutive rounds
  (segment 0 is round 0, the last segment is the stop-and-copy round).
  Gradients are taken with respect to ``ln y`` (log-rate space).
* ``grid_min`` scans a full tensor grid of per-segment rates described by
  factor tables and returns the feasible energy minimum.
"""

import numpy as np


def _segment_terms(y, n, w_bar):
    """Per-segment geometric sums: h = sum rho^r, h1 = sum r*rho^r, exit = rho^n."""
    rho = w_bar / y
    h = 1.0
    h1 = 0.0
    p = 1.0
    for r in range(1, n):
        p *= rho
        h += p
        h1 += r * p
    return h, h1, p * rho


def seg_eval(y, rounds, m0, w_bar, k0, alpha):
    """Energy and times of a segmented schedule.

    Returns ``(e_dyn, t_pre, t_sc)``: rate-dependent energy (J, without the
    setup constant), total time of all segments but the last (s), and the
    stop-and-copy segment time (s).
    """
    d = len(y)
    e_dyn = 0.0
    t_pre = 0.0
    t_sc = 0.0
    vol = m0
    for u in range(d):
        yu = float(y[u])
        h, _h1, exit_mult = _segment_terms(yu, int(rounds[u]), w_bar)
        e_dyn += k0 * yu ** (alpha - 1.0) * vol * h
        t_u = vol * h / yu
        if u < d - 1:
            t_pre += t_u
        else:
            t_sc = t_u
        vol *= exit_mult
    return e_dyn, t_pre, t_sc


def seg_eval_grad(y, rounds, m0, w_bar, k0, alpha):
    """``seg_eval`` plus log-space gradients of (e_dyn, t_pre, t_sc)."""
    d = len(y)
    e_seg = np.empty(d)
    t_seg = np.empty(d)
    de_own = np.empty(d)   # d(e_seg[u]) / d(ln y[u])
    dt_own = np.empty(d)
    vol = m0
    for u in range(d):
        yu = float(y[u])
        n = int(rounds[u])
        h, h1, exit_mult = _segment_terms(yu, n, w_bar)
        coef = k0 * yu ** (alpha - 1.0) * vol
        e_seg[u] = coef * h
        t_seg[u] = vol * h / yu
        de_own[u] = coef * ((alpha - 1.0) * h - h1)
        dt_own[u] = -vol * (h + h1) / yu
        vol *= exit_mult

    e_dyn = float(e_seg.sum())
    t_pre = float(t_seg[:-1].sum())
    t_sc = float(t_seg[-1])

    # Raising y[u] shrinks every downstream volume by the factor rho_u^n_u,
    # whose log-derivative w.r.t. ln y[u] is -n_u.
    g_e = np.empty(d)
    g_tpre = np.empty(d)
    g_tsc = np.empty(d)
    suff_e = 0.0
    suff_tpre = 0.0
    for u in range(d - 1, -1, -1):
        n = float(rounds[u])
        last = u == d - 1
        g_e[u] = de_own[u] - n * suff_e
        g_tpre[u] = (0.0 if last else dt_own[u]) - n * suff_tpre
        g_tsc[u] = dt_own[u] if last else -n * t_sc
        suff_e += e_seg[u]
        if not last:
            suff_tpre += t_seg[u]
    return e_dyn, t_pre, t_sc, g_e, g_tpre, g_tsc


# grid_min broadcasts over at most this many tail grid points at a time
_TAIL_LIMIT = 1 << 23


def grid_min(vm, te, en, m0, fixed_dt, fixed_tm, delta_dt, delta_tm):
    """Feasible energy minimum over a full tensor grid of segment rates.

    ``vm``, ``te``, ``en`` are (d, ng) tables: per segment and per grid value,
    the exit volume multiplier, time per unit entering volume, and energy per
    unit entering volume.  A grid point is feasible when its downtime and
    total-time (dynamic part + fixed stage constants) respect the deltas.

    Returns ``(best_flat_index, best_e_dyn)``; index −1 when nothing is
    feasible.
    """
    vm = np.asarray(vm, dtype=float)
    te = np.asarray(te, dtype=float)
    en = np.asarray(en, dtype=float)
    d, ng = vm.shape

    tail = 1
    while tail < d and ng ** (tail + 1) <= _TAIL_LIMIT:
        tail += 1
    head = d - tail

    # Tail factors are independent of the head indices: accumulate, from the
    # last segment backwards, energy/time per unit of volume entering the tail.
    u_e = en[d - 1]
    u_t = te[d - 1]
    u_sc = te[d - 1]
    for l in range(d - 2, head - 1, -1):
        u_e = en[l][(...,) + (None,) * (d - 1 - l)] + vm[l][(...,) + (None,) * (d - 1 - l)] * u_e
        u_t = te[l][(...,) + (None,) * (d - 1 - l)] + vm[l][(...,) + (None,) * (d - 1 - l)] * u_t
        u_sc = vm[l][(...,) + (None,) * (d - 1 - l)] * u_sc
    u_e = u_e.reshape(-1)
    u_t = u_t.reshape(-1)
    u_sc = u_sc.reshape(-1)

    best = np.inf
    best_flat = -1
    tail_size = ng ** tail
    for head_idx in np.ndindex((ng,) * head):
        e_h = 0.0
        t_h = 0.0
        w_h = m0
        for l, g in enumerate(head_idx):
            e_h += w_h * en[l, g]
            t_h += w_h * te[l, g]
            w_h *= vm[l, g]
        energy = e_h + w_h * u_e
        feas = (w_h * u_sc + fixed_dt <= delta_dt) & (t_h + w_h * u_t + fixed_tm <= delta_tm)
        if not feas.any():
            continue
        energy = np.where(feas, energy, np.inf)
        k = int(np.argmin(energy))
        if energy[k] < best:
            best = float(energy[k])
            head_flat = 0
            for g in head_idx:
                head_flat = head_flat * ng + g
            best_flat = head_flat * tail_size + k
    return best_flat, best
