"""Pure-Python versions of the compiled sparse kernels.

Same algorithms, same visiting order, so both backends produce identical
permutations and (up to floating-point association) identical factors.
Used when the Cython extension is unavailable or explicitly disabled.
"""

import math

import numpy as np


def _flip(i):
    return -i - 2


def _wclear(mark, lemax, w, n):
    if mark < 2 or mark + lemax < 0:
        for k in range(n):
            if w[k] != 0:
                w[k] = 1
        mark = 2
    return mark


def _tdfs(j, k, head, nxt, post, stack):
    top = 0
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


def _symmetric_pattern(n, Ap, Ai):
    # preserve the compiled kernel's insertion order: it scans columns in
    # order and appends both endpoints, then drops duplicates.
    order = [[] for _ in range(n)]
    seen = [set() for _ in range(n)]
    for j in range(n):
        for p in range(Ap[j], Ap[j + 1]):
            i = Ai[p]
            if i == j:
                continue
            if j not in seen[i]:
                seen[i].add(j)
                order[i].append(j)
            if i not in seen[j]:
                seen[j].add(i)
                order[j].append(i)
    return order


def amd(n, Ap, Ai):
    """Approximate minimum degree ordering of the pattern of ``A + A'``."""
    if n == 0:
        return np.empty(0, dtype=np.intp)
    Ap = [int(v) for v in Ap]
    Ai = [int(v) for v in Ai]
    adj = _symmetric_pattern(n, Ap, Ai)
    Cp = [0] * (n + 1)
    for j in range(n):
        Cp[j + 1] = Cp[j] + len(adj[j])
    cnz = Cp[n]
    dense = int(max(16.0, 10.0 * math.sqrt(n)))
    dense = min(n - 2, dense)
    nzmax = cnz + cnz // 5 + 2 * n
    Ci = [0] * max(nzmax, 1)
    pos = 0
    for j in range(n):
        for i in adj[j]:
            Ci[pos] = i
            pos += 1

    P = [0] * (n + 1)
    ln_ = [0] * (n + 1)
    nv = [1] * (n + 1)
    nxt = [-1] * (n + 1)
    head = [-1] * (n + 1)
    elen = [0] * (n + 1)
    degree = [0] * (n + 1)
    w = [1] * (n + 1)
    hhead = [-1] * (n + 1)
    last = P

    for k in range(n):
        ln_[k] = Cp[k + 1] - Cp[k]
    for i in range(n + 1):
        last[i] = -1
        degree[i] = ln_[i]
    nel = 0
    mindeg = 0
    lemax = 0
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
                    for _ in range(ln_[j] - 1):
                        Ci[q] = Ci[p]
                        q += 1
                        p += 1
            cnz = q

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
            for _ in range(ln):
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
                h = abs(h) % n
                nxt[i] = hhead[h]
                hhead[h] = i
                last[i] = h
        degree[k] = dk
        lemax = max(lemax, dk)
        mark = _wclear(mark + lemax, lemax, w, n)

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

    for i in range(n):
        Cp[i] = _flip(Cp[i])
    for j in range(n + 1):
        head[j] = -1
    for j in range(n, -1, -1):
        if nv[j] <= 0:
            nxt[j] = head[Cp[j]]
            head[Cp[j]] = j
    for e in range(n, -1, -1):
        if nv[e] > 0 and Cp[e] != -1:
            nxt[e] = head[Cp[e]]
            head[Cp[e]] = e
    k = 0
    for i in range(n + 1):
        if Cp[i] == -1:
            k = _tdfs(i, k, head, nxt, P, w)
    return np.array(P[:n], dtype=np.intp)


def ldl_symbolic(n, Ap, Ai):
    """Elimination tree and column pointers of L; see the compiled twin."""
    Ap = Ap.tolist() if isinstance(Ap, np.ndarray) else list(Ap)
    Ai = Ai.tolist() if isinstance(Ai, np.ndarray) else list(Ai)
    parent = [-1] * n
    lnz = [0] * n
    flag = [0] * n
    for k in range(n):
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
    Lp = np.zeros(n + 1, dtype=np.intp)
    np.cumsum(lnz, out=Lp[1:])
    return np.array(parent, dtype=np.intp), Lp


def ldl_numeric(n, Ap, Ai, Ax, Lp, parent, signs, eps, delta):
    """Numeric LDL' with signed pivot regularization."""
    Ap = Ap.tolist()
    Ai = Ai.tolist()
    Ax = Ax.tolist()
    Lpl = Lp.tolist()
    parent = parent.tolist()
    signs = signs.tolist()
    nnz = Lpl[n]
    Li = [0] * max(nnz, 1)
    Lx = [0.0] * max(nnz, 1)
    D = [0.0] * n
    Y = [0.0] * n
    pattern = [0] * n
    flag = [0] * n
    lnz = [0] * n
    nbumped = 0
    for k in range(n):
        top = n
        flag[k] = k
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
            start = Lpl[i]
            p2 = start + lnz[i]
            for p in range(start, p2):
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
    return (np.array(Li, dtype=np.intp), np.array(Lx, dtype=np.float64),
            np.array(D, dtype=np.float64), nbumped)


def ldl_solve(n, Lp, Li, Lx, D, b):
    """Solve ``L D L' x = b`` in place."""
    Lp = Lp.tolist()
    Li = Li.tolist()
    Lx = Lx.tolist()
    x = b.tolist()
    for j in range(n):
        xj = x[j]
        for p in range(Lp[j], Lp[j + 1]):
            x[Li[p]] -= Lx[p] * xj
    for j in range(n):
        x[j] /= D[j]
    for j in range(n - 1, -1, -1):
        xj = x[j]
        for p in range(Lp[j], Lp[j + 1]):
            xj -= Lx[p] * x[Li[p]]
        x[j] = xj
    b[:] = x
