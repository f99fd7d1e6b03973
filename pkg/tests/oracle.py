"""Independent reference simulator for cross-checking the engine.

Robots are tracked by global heading rather than local direction, and the
three rules are restated in those terms.  Only the trace encoding maps back
to local left/right.
"""
from __future__ import annotations


def simulate(n, multigraph, edges_per_round, positions, right_is_cw, algorithms):
    """Return (positions per config, local dir per config, has_moved per config, moved per round)."""
    k = len(positions)
    pos = list(positions)
    # every robot starts pointing left: CW iff its right is not CW
    heading_cw = [not c for c in right_is_cw]
    flag = [False] * k
    single = n == 2 and not multigraph

    def port(u, cw):
        if single:
            return 0
        return u if cw else (u - 1) % n

    out_pos, out_dir, out_flag, out_moved = [tuple(pos)], [], [], []
    out_dir.append(tuple(h == c for h, c in zip(heading_cw, right_is_cw)))
    out_flag.append(tuple(flag))
    for present in edges_per_round:
        crowd = {u: pos.count(u) for u in pos}
        nxt, moved = [], []
        for i in range(k):
            u = pos[i]
            ahead = port(u, heading_cw[i]) in present
            behind = port(u, not heading_cw[i]) in present
            alone = crowd[u] == 1
            a = algorithms[i]
            if a == "pef3plus":
                if flag[i] and not alone:
                    heading_cw[i] = not heading_cw[i]
                    ahead = behind
                flag[i] = ahead
            elif a == "pef2":
                if alone and behind and not ahead:
                    heading_cw[i] = not heading_cw[i]
                    ahead = True
            else:
                if behind and not ahead:
                    heading_cw[i] = not heading_cw[i]
                    ahead = True
            moved.append(ahead)
            nxt.append((u + (1 if heading_cw[i] else -1)) % n if ahead else u)
        pos = nxt
        out_pos.append(tuple(pos))
        out_dir.append(tuple(h == c for h, c in zip(heading_cw, right_is_cw)))
        out_flag.append(tuple(flag))
        out_moved.append(tuple(moved))
    return out_pos, out_dir, out_flag, out_moved
