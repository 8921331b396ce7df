# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled simulation kernels; see _kernels_py for the reference semantics."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef enum:
    CSI = 0
    QOS = 1
    HYBRID = 2


def decode_pairs(alpha, eps, int policy):
    cdef const double[:, :] a = np.asarray(alpha, dtype=np.float64)
    cdef const double[:, :] e = np.broadcast_to(np.asarray(eps, dtype=np.float64), np.shape(alpha))
    cdef Py_ssize_t n = a.shape[0], i
    if policy not in (CSI, QOS, HYBRID):
        raise ValueError(f"unknown policy code {policy}")
    out_arr = np.empty((n, 3), dtype=np.uint8)
    cdef unsigned char[:, :] out = out_arr
    cdef double ap, as_, ep, es, first, other, e_first, e_other
    cdef bint pf, s1, s2
    with nogil:
        for i in range(n):
            ap = a[i, 0]
            as_ = a[i, 1]
            ep = e[i, 0]
            es = e[i, 1]
            if policy == CSI:
                pf = ap >= as_
            elif policy == QOS:
                pf = True
            else:
                pf = ap / (1.0 + as_) >= ep
            if pf:
                first, other, e_first, e_other = ap, as_, ep, es
            else:
                first, other, e_first, e_other = as_, ap, es, ep
            s1 = first / (1.0 + other) >= e_first
            s2 = s1 and (other / 1.0 >= e_other)
            out[i, 0] = s1 if pf else s2
            out[i, 1] = s2 if pf else s1
            out[i, 2] = s1
    return out_arr


def orb_slots(orb, level, alpha, alpha_gb, eps_gb, double eps_gf):
    cdef const cnp.int64_t[:, :] o = np.asarray(orb, dtype=np.int64)
    cdef const cnp.int64_t[:, :] lv = np.asarray(level, dtype=np.int64)
    cdef const double[:, :] a = np.asarray(alpha, dtype=np.float64)
    cdef const double[:, :] agb = np.asarray(alpha_gb, dtype=np.float64)
    cdef const double[:] egb = np.asarray(eps_gb, dtype=np.float64)
    cdef Py_ssize_t n_slots = agb.shape[0], n_orbs = agb.shape[1], n_users = a.shape[1]
    cdef Py_ssize_t s, k, m

    out_arr = np.zeros((n_slots, 3), dtype=np.int64)
    cdef cnp.int64_t[:, :] out = out_arr
    cdef cnp.int64_t[:] n = np.zeros(n_orbs, dtype=np.int64)
    cdef cnp.int64_t[:] top = np.zeros(n_orbs, dtype=np.int64)
    cdef cnp.int64_t[:] top_count = np.zeros(n_orbs, dtype=np.int64)
    cdef double[:] total = np.zeros(n_orbs, dtype=np.float64)
    cdef double[:] surv = np.zeros(n_orbs, dtype=np.float64)
    cdef double[:] bg = np.zeros(n_orbs, dtype=np.float64)
    cdef cnp.int64_t big = 0x7FFFFFFFFFFFFFFF
    cdef double g, sa, b
    cdef bint gb_ok, gf_ok, pf

    with nogil:
        for s in range(n_slots):
            for m in range(n_orbs):
                n[m] = 0
                top[m] = big
                top_count[m] = 0
                total[m] = 0.0
                surv[m] = 0.0
                bg[m] = 0.0
            for k in range(n_users):
                if lv[s, k] < 0:
                    continue
                m = o[s, k]
                n[m] += 1
                total[m] += a[s, k]
                if lv[s, k] < top[m]:
                    top[m] = lv[s, k]
            for k in range(n_users):
                if lv[s, k] < 0:
                    continue
                m = o[s, k]
                if lv[s, k] == top[m]:
                    top_count[m] += 1
                    surv[m] += a[s, k]
                else:
                    bg[m] += a[s, k]
            for m in range(n_orbs):
                g = agb[s, m]
                gf_ok = False
                if n[m] == 0:
                    gb_ok = g / (1.0 + 0.0) >= egb[m]
                elif top_count[m] == 1:
                    sa = surv[m]
                    b = bg[m]
                    pf = g / (1.0 + (b + sa)) >= egb[m]
                    if pf:
                        gb_ok = True
                        gf_ok = sa / (1.0 + b) >= eps_gf
                    else:
                        gf_ok = sa / (1.0 + (b + g)) >= eps_gf
                        gb_ok = gf_ok and (g / (1.0 + b) >= egb[m])
                else:
                    gb_ok = g / (1.0 + total[m]) >= egb[m]
                    out[s, 2] += 1
                out[s, 0] += gb_ok
                out[s, 1] += gf_ok
    return out_arr
