"""Vectorised numpy implementation of the simulation kernels.

Must stay bit-compatible with ``_kernels.pyx``: same arithmetic expressions,
same accumulation order (user order within a slot).
"""

import numpy as np

CSI, QOS, HYBRID = 0, 1, 2


def decode_pairs(alpha, eps, policy):
    """Two-user SIC for every row.

    alpha, eps: float64 arrays of shape (n, 2), column 0 primary, column 1 secondary.
    Returns uint8 (n, 3): primary ok, secondary ok, first stage ok.
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    eps = np.broadcast_to(np.asarray(eps, dtype=np.float64), alpha.shape)
    ap, as_ = alpha[:, 0], alpha[:, 1]
    ep, es = eps[:, 0], eps[:, 1]
    if policy == CSI:
        pf = ap >= as_
    elif policy == QOS:
        pf = np.ones(ap.shape, dtype=bool)
    elif policy == HYBRID:
        pf = ap / (1.0 + as_) >= ep
    else:
        raise ValueError(f"unknown policy code {policy}")
    first = np.where(pf, ap, as_)
    other = np.where(pf, as_, ap)
    e_first = np.where(pf, ep, es)
    e_other = np.where(pf, es, ep)
    s1 = first / (1.0 + other) >= e_first
    s2 = s1 & (other / 1.0 >= e_other)
    out = np.empty((alpha.shape[0], 3), dtype=np.uint8)
    out[:, 0] = np.where(pf, s1, s2)
    out[:, 1] = np.where(pf, s2, s1)
    out[:, 2] = s1
    return out


def orb_slots(orb, level, alpha, alpha_gb, eps_gb, eps_gf):
    """Per-slot served/collision counts for the multi-ORB semi-grant-free uplink.

    orb, level: int64 (S, K); level < 0 marks a GF user that does not transmit.
    alpha: float64 (S, K) GF received SNRs; alpha_gb: float64 (S, M); eps_gb: (M,).
    On each ORB the unique occupant of the highest occupied level (lowest
    index) pairs with the GB user under hybrid SIC, the other occupants act as
    background interference; a shared top level is a collision where only the
    GB user may still be decoded over all GF signals.
    Returns int64 (S, 3): served GB, served GF, collisions.
    """
    orb = np.asarray(orb, dtype=np.int64)
    level = np.asarray(level, dtype=np.int64)
    alpha = np.asarray(alpha, dtype=np.float64)
    alpha_gb = np.asarray(alpha_gb, dtype=np.float64)
    n_slots, n_orbs = alpha_gb.shape
    nb = n_slots * n_orbs

    tx = level >= 0
    slot_idx = np.broadcast_to(np.arange(n_slots)[:, None], level.shape)
    b = (slot_idx * n_orbs + orb)[tx]
    lv = level[tx]
    a = alpha[tx]

    n = np.bincount(b, minlength=nb)
    total = np.bincount(b, weights=a, minlength=nb)
    top = np.full(nb, np.iinfo(np.int64).max, dtype=np.int64)
    np.minimum.at(top, b, lv)
    at_top = lv == top[b]
    top_count = np.bincount(b[at_top], minlength=nb)
    surv = np.bincount(b[at_top], weights=a[at_top], minlength=nb)
    bg = np.bincount(b[~at_top], weights=a[~at_top], minlength=nb)

    agb = alpha_gb.reshape(-1)
    egb = np.tile(np.asarray(eps_gb, dtype=np.float64), n_slots)

    empty = n == 0
    single = top_count == 1
    collide = (~empty) & (~single)

    pf = agb / (1.0 + (bg + surv)) >= egb
    gf_pf = surv / (1.0 + bg) >= eps_gf
    gf_sf = surv / (1.0 + (bg + agb)) >= eps_gf
    gb_sf = gf_sf & (agb / (1.0 + bg) >= egb)

    gb_ok = np.where(empty, agb / (1.0 + 0.0) >= egb, False)
    gb_ok |= single & np.where(pf, True, gb_sf)
    gb_ok |= collide & (agb / (1.0 + total) >= egb)
    gf_ok = single & np.where(pf, gf_pf, gf_sf)

    out = np.empty((n_slots, 3), dtype=np.int64)
    out[:, 0] = gb_ok.reshape(n_slots, n_orbs).sum(axis=1)
    out[:, 1] = gf_ok.reshape(n_slots, n_orbs).sum(axis=1)
    out[:, 2] = collide.reshape(n_slots, n_orbs).sum(axis=1)
    return out
