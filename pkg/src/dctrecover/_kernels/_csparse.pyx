# cython: language_level=3
"""Compiled sparse kernels: approximate minimum degree ordering and an
up-looking LDL' factorization for symmetric quasidefinite matrices.

All index arrays are ``np.intp``; matrices are compressed-column with
sorted or unsorted row indices.  ``_fallback.py`` holds the same
algorithms in plain Python and must stay in lockstep with this file.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

ctypedef Py_ssize_t idx_t


cdef inline idx_t _flip(idx_t i) nogil:
    return -i - 2


cdef inline idx_t _wclear(idx_t mark, idx_t lemax, idx_t[::1] w, idx_t n) nogil:
    cdef idx_t k
    if mark < 2 or mark + lemax < 0:
        for k in range(n):
            if w[k] != 0:
                w[k] = 1
        mark = 2
    return mark


cdef idx_t _tdfs(idx_t j, idx_t k, idx_t[::1] head, idx_t[::1] nxt,
                 idx_t[::1] post, idx_t[::1] stack) nogil:
    cdef idx_t i, p, top = 0
    stack[0] = j
    while top >= 0:
        p = stack[top]
        i = head[p]
        if i == -1:
            top -= 1
            post[k] = p
            k += 1
        else:
            head[p] = nxt[i]
            top += 1
            stack[top] = i
    return k


def amd(idx_t n, idx_t[::1] Ap, idx_t[::1] Ai):
    """Approximate minimum degree ordering of the pattern of ``A + A'``.

    ``Ap``/``Ai`` describe an n-by-n compressed-column pattern; the
    diagonal is ignored.  Returns the fill-reducing permutation ``p`` so
    that ``A[p][:, p]`` factors with little fill.
    """
    if n == 0:
        return np.empty(0, dtype=np.intp)
    # C = pattern of A + A' without diagonal, built through scipy-free
    # counting so this kernel is self-contained.
    cdef idx_t[::1] cnt = np.zeros(n + 1, dtype=np.intp)
    cdef idx_t j, p, i, q
    for j in range(n):
        for p in range(Ap[j], Ap[j + 1]):
            i = Ai[p]
            if i != j:
                cnt[i] += 1
                cnt[j] += 1
    cdef idx_t[::1] Cp = np.zeros(n + 1, dtype=np.intp)
    for j in range(n):
        Cp[j + 1] = Cp[j] + cnt[j]
    cdef idx_t nzraw = Cp[n]
    cdef idx_t[::1] Craw = np.empty(max(nzraw, 1), dtype=np.intp)
    cdef idx_t[::1] pos = np.empty(n, dtype=np.intp)
    for j in range(n):
        pos[j] = Cp[j]
    for j in range(n):
        for p in range(Ap[j], Ap[j + 1]):
            i = Ai[p]
            if i != j:
                Craw[pos[i]] = j
                pos[i] += 1
                Craw[pos[j]] = i
                pos[j] += 1
    # remove duplicate entries per column
    cdef idx_t[::1] seen = np.full(n, -1, dtype=np.intp)
    cdef idx_t cnz = 0, start
    for j in range(n):
        start = cnz
        for p in range(Cp[j], Cp[j + 1]):
            i = Craw[p]
            if seen[i] != j:
                seen[i] = j
                Craw[cnz] = i
                cnz += 1
        Cp[j] = start
    Cp[n] = cnz

    cdef idx_t dense = <idx_t>max(16.0, 10.0 * sqrt(<double>n))
    dense = min(n - 2, dense)
    cdef idx_t nzmax = cnz + cnz // 5 + 2 * n
    cdef idx_t[::1] Ci = np.empty(max(nzmax, 1), dtype=np.intp)
    for p in range(cnz):
        Ci[p] = Craw[p]

    cdef idx_t[::1] P = np.empty(n + 1, dtype=np.intp)
    cdef idx_t[::1] ln_ = np.empty(n + 1, dtype=np.intp)
    cdef idx_t[::1] nv = np.empty(n + 1, dtype=np.intp)
    cdef idx_t[::1] nxt = np.empty(n + 1, dtype=np.intp)
    cdef idx_t[::1] head = np.empty(n + 1, dtype=np.intp)
    cdef idx_t[::1] elen = np.empty(n + 1, dtype=np.intp)
    cdef idx_t[::1] degree = np.empty(n + 1, dtype=np.intp)
    cdef idx_t[::1] w = np.empty(n + 1, dtype=np.intp)
    cdef idx_t[::1] hhead = np.empty(n + 1, dtype=np.intp)
    cdef idx_t[::1] last = P

    cdef idx_t d, k, nel = 0, mindeg = 0, lemax = 0, mark
    cdef idx_t elenk, nvk, k1, k2, k3, e, pj, ln, nvi, pk1, pk2, pk
    cdef idx_t dk, eln, wnvi, p1, p2, p3, p4, pn, h, dext, nvj, jlast
    cdef bint ok

    with nogil:
        for k in range(n):
            ln_[k] = Cp[k + 1] - Cp[k]
        ln_[n] = 0
        for i in range(n + 1):
            head[i] = -1
            last[i] = -1
            nxt[i] = -1
            hhead[i] = -1
            nv[i] = 1
            w[i] = 1
            elen[i] = 0
            degree[i] = ln_[i]
        mark = _wclear(0, 0, w, n)
        elen[n] = -2
        Cp[n] = -1
        w[n] = 0
        for i in range(n):
            d = degree[i]
            if d == 0:
                elen[i] = -2
                nel += 1
                Cp[i] = -1
                w[i] = 0
            elif d > dense:
                nv[i] = 0
                elen[i] = -1
                nel += 1
                Cp[i] = _flip(n)
                nv[n] += 1
            else:
                if head[d] != -1:
                    last[head[d]] = i
                nxt[i] = head[d]
                head[d] = i

        while nel < n:
            # select node of minimum approximate degree
            k = -1
            while mindeg < n:
                k = head[mindeg]
                if k != -1:
                    break
                mindeg += 1
            if nxt[k] != -1:
                last[nxt[k]] = -1
            head[mindeg] = nxt[k]
            elenk = elen[k]
            nvk = nv[k]
            nel += nvk

            # garbage collection
            if elenk > 0 and cnz + mindeg >= nzmax:
                for j in range(n):
                    p = Cp[j]
                    if p >= 0:
                        Cp[j] = Ci[p]
                        Ci[p] = _flip(j)
                q = 0
                p = 0
                while p < cnz:
                    j = _flip(Ci[p])
                    p += 1
                    if j >= 0:
                        Ci[q] = Cp[j]
                        Cp[j] = q
                        q += 1
                        for k3 in range(ln_[j] - 1):
                            Ci[q] = Ci[p]
                            q += 1
                            p += 1
                cnz = q

            # construct new element
            dk = 0
            nv[k] = -nvk
            p = Cp[k]
            pk1 = p if elenk == 0 else cnz
            pk2 = pk1
            for k1 in range(1, elenk + 2):
                if k1 > elenk:
                    e = k
                    pj = p
                    ln = ln_[k] - elenk
                else:
                    e = Ci[p]
                    p += 1
                    pj = Cp[e]
                    ln = ln_[e]
                for k2 in range(ln):
                    i = Ci[pj]
                    pj += 1
                    nvi = nv[i]
                    if nvi <= 0:
                        continue
                    dk += nvi
                    nv[i] = -nvi
                    Ci[pk2] = i
                    pk2 += 1
                    if nxt[i] != -1:
                        last[nxt[i]] = last[i]
                    if last[i] != -1:
                        nxt[last[i]] = nxt[i]
                    else:
                        head[degree[i]] = nxt[i]
                if e != k:
                    Cp[e] = _flip(k)
                    w[e] = 0
            if elenk != 0:
                cnz = pk2
            degree[k] = dk
            Cp[k] = pk1
            ln_[k] = pk2 - pk1
            elen[k] = -2

            # find set differences
            mark = _wclear(mark, lemax, w, n)
            for pk in range(pk1, pk2):
                i = Ci[pk]
                eln = elen[i]
                if eln <= 0:
                    continue
                nvi = -nv[i]
                wnvi = mark - nvi
                for p in range(Cp[i], Cp[i] + eln):
                    e = Ci[p]
                    if w[e] >= mark:
                        w[e] -= nvi
                    elif w[e] != 0:
                        w[e] = degree[e] + wnvi

            # degree update
            for pk in range(pk1, pk2):
                i = Ci[pk]
                p1 = Cp[i]
                p2 = p1 + elen[i] - 1
                pn = p1
                h = 0
                d = 0
                for p in range(p1, p2 + 1):
                    e = Ci[p]
                    if w[e] != 0:
                        dext = w[e] - mark
                        if dext > 0:
                            d += dext
                            Ci[pn] = e
                            pn += 1
                            h += e
                        else:
                            Cp[e] = _flip(k)
                            w[e] = 0
                elen[i] = pn - p1 + 1
                p3 = pn
                p4 = p1 + ln_[i]
                for p in range(p2 + 1, p4):
                    j = Ci[p]
                    nvj = nv[j]
                    if nvj <= 0:
                        continue
                    d += nvj
                    Ci[pn] = j
                    pn += 1
                    h += j
                if d == 0:
                    Cp[i] = _flip(k)
                    nvi = -nv[i]
                    dk -= nvi
                    nvk += nvi
                    nel += nvi
                    nv[i] = 0
                    elen[i] = -1
                else:
                    degree[i] = min(degree[i], d)
                    Ci[pn] = Ci[p3]
                    Ci[p3] = Ci[p1]
                    Ci[p1] = k
                    ln_[i] = pn - p1 + 1
                    if h < 0:
                        h = -h
                    h = h % n
                    nxt[i] = hhead[h]
                    hhead[h] = i
                    last[i] = h
            degree[k] = dk
            lemax = max(lemax, dk)
            mark = _wclear(mark + lemax, lemax, w, n)

            # supernode detection
            for pk in range(pk1, pk2):
                i = Ci[pk]
                if nv[i] >= 0:
                    continue
                h = last[i]
                i = hhead[h]
                hhead[h] = -1
                while i != -1 and nxt[i] != -1:
                    ln = ln_[i]
                    eln = elen[i]
                    for p in range(Cp[i] + 1, Cp[i] + ln):
                        w[Ci[p]] = mark
                    jlast = i
                    j = nxt[i]
                    while j != -1:
                        ok = ln_[j] == ln and elen[j] == eln
                        p = Cp[j] + 1
                        while ok and p <= Cp[j] + ln - 1:
                            if w[Ci[p]] != mark:
                                ok = False
                            p += 1
                        if ok:
                            Cp[j] = _flip(i)
                            nv[i] += nv[j]
                            nv[j] = 0
                            elen[j] = -1
                            j = nxt[j]
                            nxt[jlast] = j
                        else:
                            jlast = j
                            j = nxt[j]
                    i = nxt[i]
                    mark += 1

            # finalize new element
            p = pk1
            for pk in range(pk1, pk2):
                i = Ci[pk]
                nvi = -nv[i]
                if nvi <= 0:
                    continue
                nv[i] = nvi
                d = degree[i] + dk - nvi
                d = min(d, n - nel - nvi)
                if head[d] != -1:
                    last[head[d]] = i
                nxt[i] = head[d]
                last[i] = -1
                head[d] = i
                mindeg = min(mindeg, d)
                degree[i] = d
                Ci[p] = i
                p += 1
            nv[k] = nvk
            ln_[k] = p - pk1
            if ln_[k] == 0:
                Cp[k] = -1
                w[k] = 0
            if elenk != 0:
                cnz = p

        # postorder the assembly tree
        for i in range(n):
            Cp[i] = _flip(Cp[i])
        for j in range(n + 1):
            head[j] = -1
        j = n
        while j >= 0:
            if nv[j] <= 0:
                nxt[j] = head[Cp[j]]
                head[Cp[j]] = j
            j -= 1
        e = n
        while e >= 0:
            if nv[e] > 0 and Cp[e] != -1:
                nxt[e] = head[Cp[e]]
                head[Cp[e]] = e
            e -= 1
        k = 0
        for i in range(n + 1):
            if Cp[i] == -1:
                k = _tdfs(i, k, head, nxt, P, w)

    return np.asarray(P[:n]).copy()


def ldl_symbolic(idx_t n, idx_t[::1] Ap, idx_t[::1] Ai):
    """Elimination tree and column pointers of L for an upper-triangular
    CSC matrix (entries with row <= column).  Returns ``(parent, Lp)``."""
    cdef idx_t[::1] parent = np.empty(n, dtype=np.intp)
    cdef idx_t[::1] lnz = np.zeros(n, dtype=np.intp)
    cdef idx_t[::1] flag = np.empty(n, dtype=np.intp)
    cdef idx_t[::1] Lp = np.zeros(n + 1, dtype=np.intp)
    cdef idx_t k, p, i
    with nogil:
        for k in range(n):
            parent[k] = -1
            flag[k] = k
            for p in range(Ap[k], Ap[k + 1]):
                i = Ai[p]
                if i < k:
                    while flag[i] != k:
                        if parent[i] == -1:
                            parent[i] = k
                        lnz[i] += 1
                        flag[i] = k
                        i = parent[i]
        for k in range(n):
            Lp[k + 1] = Lp[k] + lnz[k]
    return np.asarray(parent), np.asarray(Lp)


def ldl_numeric(idx_t n, idx_t[::1] Ap, idx_t[::1] Ai, double[::1] Ax,
                idx_t[::1] Lp, idx_t[::1] parent, double[::1] signs,
                double eps, double delta):
    """Numeric LDL' of an upper-triangular CSC matrix with the pattern
    analysed by :func:`ldl_symbolic`.

    A pivot whose sign disagrees with ``signs[k]`` or whose magnitude
    falls below ``eps`` is replaced by ``signs[k] * delta``.  Returns
    ``(Li, Lx, D, nbumped)``.
    """
    cdef idx_t nnz = Lp[n]
    cdef idx_t[::1] Li = np.empty(max(nnz, 1), dtype=np.intp)
    cdef double[::1] Lx = np.empty(max(nnz, 1), dtype=np.float64)
    cdef double[::1] D = np.empty(n, dtype=np.float64)
    cdef double[::1] Y = np.zeros(n, dtype=np.float64)
    cdef idx_t[::1] pattern = np.empty(n, dtype=np.intp)
    cdef idx_t[::1] flag = np.empty(n, dtype=np.intp)
    cdef idx_t[::1] lnz = np.zeros(n, dtype=np.intp)
    cdef idx_t k, p, p2, i, top, length, nbumped = 0
    cdef double yi, lki, dk
    with nogil:
        for k in range(n):
            Y[k] = 0.0
            top = n
            flag[k] = k
            lnz[k] = 0
            for p in range(Ap[k], Ap[k + 1]):
                i = Ai[p]
                if i <= k:
                    Y[i] += Ax[p]
                    length = 0
                    while flag[i] != k:
                        pattern[length] = i
                        length += 1
                        flag[i] = k
                        i = parent[i]
                    while length > 0:
                        top -= 1
                        length -= 1
                        pattern[top] = pattern[length]
            dk = Y[k]
            Y[k] = 0.0
            while top < n:
                i = pattern[top]
                yi = Y[i]
                Y[i] = 0.0
                p2 = Lp[i] + lnz[i]
                for p in range(Lp[i], p2):
                    Y[Li[p]] -= Lx[p] * yi
                lki = yi / D[i]
                dk -= lki * yi
                Li[p2] = k
                Lx[p2] = lki
                lnz[i] += 1
                top += 1
            if dk * signs[k] < eps:
                dk = signs[k] * delta
                nbumped += 1
            D[k] = dk
    return np.asarray(Li), np.asarray(Lx), np.asarray(D), nbumped


def ldl_solve(idx_t n, idx_t[::1] Lp, idx_t[::1] Li, double[::1] Lx,
              double[::1] D, double[::1] b):
    """Solve ``L D L' x = b`` in place (no permutation)."""
    cdef idx_t j, p
    cdef double bj
    with nogil:
        for j in range(n):
            bj = b[j]
            for p in range(Lp[j], Lp[j + 1]):
                b[Li[p]] -= Lx[p] * bj
        for j in range(n):
            b[j] /= D[j]
        j = n - 1
        while j >= 0:
            bj = b[j]
            for p in range(Lp[j], Lp[j + 1]):
                bj -= Lx[p] * b[Li[p]]
            b[j] = bj
            j -= 1
