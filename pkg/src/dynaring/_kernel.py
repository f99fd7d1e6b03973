"""Compiled FSYNC round loop for oblivious schedules.

Same semantics as :func:`dynaring.engine.step`, over flat arrays.  Falls back
to plain Python when numba is unavailable.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def run_rounds(edges, n, cw_tab, ccw_tab, right_is_cw, algo, pos, dirs, hmp, moved):
    """Advance ``len(edges)`` rounds.

    ``pos``, ``dirs`` and ``hmp`` have one more row than ``edges``; row 0 holds
    the starting configuration and row ``t + 1`` the configuration after round
    ``t``.  ``dirs`` is True for local ``right``.
    """
    rounds = edges.shape[0]
    k = pos.shape[1]
    count = np.zeros(n, np.int64)
    for t in range(rounds):
        for i in range(k):
            count[pos[t, i]] += 1
        for i in range(k):
            p = pos[t, i]
            d = dirs[t, i]
            cw = d == right_is_cw[i]
            if cw:
                e_dir = edges[t, cw_tab[p]]
                e_opp = edges[t, ccw_tab[p]]
            else:
                e_dir = edges[t, ccw_tab[p]]
                e_opp = edges[t, cw_tab[p]]
            others = count[p] > 1
            h = hmp[t, i]
            a = algo[i]
            flip = False
            if a == 0:
                flip = h and others
            elif a == 1:
                flip = (not others) and e_opp and not e_dir
            else:
                flip = e_opp and not e_dir
            if flip:
                d = not d
                cw = not cw
                e_dir = e_opp
            if a == 0:
                h = e_dir
            dirs[t + 1, i] = d
            hmp[t + 1, i] = h
            if e_dir:
                moved[t, i] = True
                if cw:
                    pos[t + 1, i] = (p + 1) % n
                else:
                    pos[t + 1, i] = (p - 1 + n) % n
            else:
                moved[t, i] = False
                pos[t + 1, i] = p
        for i in range(k):
            count[pos[t, i]] -= 1
