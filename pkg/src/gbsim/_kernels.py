"""Numba kernels shared by the linear-algebra, marginal and sampling layers.

Vertex subsets of a prefix are bitmasks over prefix *positions* (bit i is
position i, 0-based). Hafnians ignore the diagonal of their argument.
"""

import numpy as np
import numba as nb

MODE_POLY = 0
MODE_EXP = 1


@nb.njit(cache=True)
def _popcount(x):
    c = 0
    while x:
        x &= x - 1
        c += 1
    return c


@nb.njit(cache=True)
def _lowbit(x):
    i = 0
    while not (x >> i) & 1:
        i += 1
    return i


@nb.njit(cache=True)
def _nck(n, r):
    if r < 0 or r > n:
        return 0
    r = min(r, n - r)
    out = 1
    for i in range(r):
        out = out * (n - i) // (i + 1)
    return out


@nb.njit(cache=True)
def combo_masks(mask, r):
    """All r-subsets of the set bits of ``mask``, in lexicographic position order."""
    npos = _popcount(mask)
    pos = np.empty(npos, dtype=np.int64)
    t = 0
    for i in range(64):
        if (mask >> i) & 1:
            pos[t] = i
            t += 1
            if t == npos:
                break
    count = _nck(npos, r)
    out = np.empty(count, dtype=np.int64)
    if count == 0:
        return out
    idx = np.arange(r)
    for t in range(count):
        mm = 0
        for i in range(r):
            mm |= 1 << pos[idx[i]]
        out[t] = mm
        i = r - 1
        while i >= 0 and idx[i] == npos - r + i:
            i -= 1
        if i < 0:
            break
        idx[i] += 1
        for j in range(i + 1, r):
            idx[j] = idx[j - 1] + 1
    return out


# --------------------------------------------------------------------------
# Hafnians and permanents
# --------------------------------------------------------------------------


@nb.njit(cache=True)
def haf_enum_mask(A, mask):
    """Sum over all perfect matchings of the vertices in ``mask``."""
    if mask == 0:
        return 1.0 + 0.0j
    low = _lowbit(mask)
    rest = mask ^ (1 << low)
    tot = 0.0 + 0.0j
    r = rest
    while r:
        j = _lowbit(r)
        r &= r - 1
        tot += A[low, j] * haf_enum_mask(A, rest ^ (1 << j))
    return tot


@nb.njit(cache=True)
def haf_enum(A):
    n = A.shape[0]
    if n % 2:
        return 0.0 + 0.0j
    return haf_enum_mask(A, (1 << n) - 1)


@nb.njit(cache=True)
def _power_trace_coeff(B, half):
    # coefficient of t^half in exp(sum_j tr(B^j) t^j / (2j))
    d = B.shape[0]
    c = np.zeros(half + 1, dtype=np.complex128)
    P = np.eye(d, dtype=np.complex128)
    for j in range(1, half + 1):
        P = P @ B
        tr = 0.0 + 0.0j
        for i in range(d):
            tr += P[i, i]
        c[j] = tr / (2 * j)
    e = np.zeros(half + 1, dtype=np.complex128)
    e[0] = 1.0
    for p in range(1, half + 1):
        acc = 0.0 + 0.0j
        for j in range(1, p + 1):
            acc += j * c[j] * e[p - j]
        e[p] = acc / p
    return e[half]


@nb.njit(cache=True)
def haf_powertrace(A):
    """Exact hafnian with cost 2^{n/2} poly(n) (power-trace inclusion-exclusion)."""
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n % 2:
        return 0.0 + 0.0j
    half = n // 2
    tot = 0.0 + 0.0j
    for S in range(1, 1 << half):
        size = _popcount(S)
        idx = np.empty(2 * size, dtype=np.int64)
        t = 0
        for i in range(half):
            if (S >> i) & 1:
                idx[t] = 2 * i
                idx[t + 1] = 2 * i + 1
                t += 2
        # B = A_S X, X swaps the two members of each pair
        B = np.empty((2 * size, 2 * size), dtype=np.complex128)
        for r in range(2 * size):
            for q in range(size):
                B[r, 2 * q] = A[idx[r], idx[2 * q + 1]]
                B[r, 2 * q + 1] = A[idx[r], idx[2 * q]]
        val = _power_trace_coeff(B, half)
        if (half - size) % 2:
            tot -= val
        else:
            tot += val
    return tot


@nb.njit(cache=True)
def haf_fast(A):
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n % 2:
        return 0.0 + 0.0j
    if n == 2:
        return A[0, 1]
    if n == 4:
        return A[0, 1] * A[2, 3] + A[0, 2] * A[1, 3] + A[0, 3] * A[1, 2]
    return haf_powertrace(A)


@nb.njit(cache=True)
def perm_ryser(A):
    """Ryser inclusion-exclusion with Gray-code column updates."""
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    rowsum = np.zeros(n, dtype=np.complex128)
    tot = 0.0 + 0.0j
    gray_prev = 0
    for g in range(1, 1 << n):
        gray = g ^ (g >> 1)
        diff = gray ^ gray_prev
        col = _lowbit(diff)
        if gray & diff:
            for i in range(n):
                rowsum[i] += A[i, col]
        else:
            for i in range(n):
                rowsum[i] -= A[i, col]
        gray_prev = gray
        prod = 1.0 + 0.0j
        for i in range(n):
            prod *= rowsum[i]
        if (n - _popcount(gray)) % 2:
            tot -= prod
        else:
            tot += prod
    return tot


# --------------------------------------------------------------------------
# Sub-hafnian tables (exponential-space mode)
# --------------------------------------------------------------------------


@nb.njit(cache=True, nogil=True)
def haf_table(Wx):
    """Hafnians of every even position subset; odd subsets hold 0."""
    k = Wx.shape[0]
    T = np.zeros(1 << k, dtype=np.complex128)
    T[0] = 1.0
    for mask in range(1, 1 << k):
        if _popcount(mask) % 2:
            continue
        low = _lowbit(mask)
        rest = mask ^ (1 << low)
        s = 0.0 + 0.0j
        r = rest
        while r:
            j = _lowbit(r)
            r &= r - 1
            s += Wx[low, j] * T[rest ^ (1 << j)]
        T[mask] = s
    return T


@nb.njit(cache=True, nogil=True)
def extend_table(base, wnew):
    """Table for k positions from the table of the first k-1 positions.

    ``wnew[j]`` is W(x_new, x_j) for the existing positions j.
    """
    half = base.shape[0]
    T = np.zeros(2 * half, dtype=np.complex128)
    T[:half] = base
    for mask in range(half):
        if _popcount(mask) % 2 == 0:
            continue
        s = 0.0 + 0.0j
        r = mask
        while r:
            j = _lowbit(r)
            r &= r - 1
            s += wnew[j] * base[mask ^ (1 << j)]
        T[mask | half] = s
    return T


@nb.njit(cache=True, nogil=True)
def multiset_hashes(modes, zkeys):
    """Additive hash of the mode multiset of every position subset (a pre-filter only)."""
    k = modes.shape[0]
    sig = np.zeros(1 << k, dtype=np.int64)
    for mask in range(1, 1 << k):
        low = _lowbit(mask)
        sig[mask] = sig[mask ^ (1 << low)] + zkeys[modes[low]]
    return sig


@nb.njit(cache=True, nogil=True)
def delta_perm_masks(modes, A, B):
    """Per of S_{A,B}: prod of multiplicity factorials if the mode multisets match, else 0."""
    na = _popcount(A)
    if na != _popcount(B):
        return 0.0
    va = np.empty(na, dtype=np.int64)
    vb = np.empty(na, dtype=np.int64)
    t = 0
    r = A
    while r:
        j = _lowbit(r)
        r &= r - 1
        va[t] = modes[j]
        t += 1
    t = 0
    r = B
    while r:
        j = _lowbit(r)
        r &= r - 1
        vb[t] = modes[j]
        t += 1
    va.sort()
    vb.sort()
    out = 1.0
    run = 0
    for i in range(na):
        if va[i] != vb[i]:
            return 0.0
        if i > 0 and va[i] == va[i - 1]:
            run += 1
        else:
            run = 1
        out *= run
    return out


# --------------------------------------------------------------------------
# Marginal sum (hafnian/permanent decomposition)
# --------------------------------------------------------------------------


@nb.njit(cache=True, nogil=True)
def _haf_poly(Wx, mask):
    s = _popcount(mask)
    if s % 2:
        return 0.0 + 0.0j
    if s <= 8:
        return haf_enum_mask(Wx, mask)
    idx = np.empty(s, dtype=np.int64)
    t = 0
    r = mask
    while r:
        j = _lowbit(r)
        r &= r - 1
        idx[t] = j
        t += 1
    sub = np.empty((s, s), dtype=np.complex128)
    for i in range(s):
        for j in range(s):
            sub[i, j] = Wx[idx[i], idx[j]]
    return haf_powertrace(sub)


@nb.njit(cache=True, nogil=True)
def _haf_cost(mask):
    h = _popcount(mask) // 2
    return max(1.0, h ** 3 * 2.0 ** h)


@nb.njit(cache=True, nogil=True)
def marginal_sum(Wx, modes, n, coef, use_table, table, sig, collision_free):
    """Marginal q_n(x_1..x_k); ``coef`` already carries the 1/f_n normalisation.

    Returns (value, nominal operation count).
    """
    k = Wx.shape[0]
    full = (1 << k) - 1
    ops = 0.0
    lo = max(0, k - n // 2)
    total = 0.0
    comp = 0.0
    for j1 in range(lo, k // 2 + 1):
        alist = combo_masks(full, 2 * j1)
        for j2 in range(lo, j1 + 1):
            a2list = combo_masks(full, 2 * j2)
            mu_lo = max(0, 3 * k - 2 * (j1 + j2) - n)
            mu_hi = k - 2 * j1
            partial = 0.0 + 0.0j
            for a in alist:
                if use_table:
                    ha = table[a]
                    ops += 1.0
                else:
                    ha = _haf_poly(Wx, a)
                    ops += _haf_cost(a)
                if ha == 0:
                    continue
                ca = full ^ a
                for a2 in a2list:
                    if use_table:
                        ha2 = np.conj(table[a2])
                        ops += 1.0
                    else:
                        ha2 = np.conj(_haf_poly(Wx, a2))
                        ops += _haf_cost(a2)
                    ca2 = full ^ a2
                    s1 = 0.0 + 0.0j
                    for mu in range(mu_lo, mu_hi + 1):
                        if (k - mu) % 2:
                            continue
                        c = coef[j1, j2, mu]
                        if c == 0.0:
                            continue
                        temp = 0.0 + 0.0j
                        Alist = combo_masks(ca, mu)
                        if collision_free:
                            for A in Alist:
                                if A & a2:
                                    continue
                                if use_table:
                                    temp += table[ca ^ A] * np.conj(table[ca2 ^ A])
                                    ops += 2.0
                                else:
                                    temp += _haf_poly(Wx, ca ^ A) * np.conj(_haf_poly(Wx, ca2 ^ A))
                                    ops += _haf_cost(ca ^ A) + _haf_cost(ca2 ^ A)
                        else:
                            Blist = combo_masks(ca2, mu)
                            for A in Alist:
                                if use_table:
                                    he = table[ca ^ A]
                                    ops += 1.0
                                else:
                                    he = _haf_poly(Wx, ca ^ A)
                                    ops += _haf_cost(ca ^ A)
                                if he == 0:
                                    continue
                                for B in Blist:
                                    if use_table:
                                        ops += 1.0
                                        if sig[A] != sig[B]:
                                            continue
                                        p = delta_perm_masks(modes, A, B)
                                        if p == 0.0:
                                            continue
                                        temp += p * he * np.conj(table[ca2 ^ B])
                                    else:
                                        ops += mu + 1.0
                                        p = delta_perm_masks(modes, A, B)
                                        if p == 0.0:
                                            continue
                                        temp += p * he * np.conj(_haf_poly(Wx, ca2 ^ B))
                                        ops += _haf_cost(ca2 ^ B)
                        s1 += c * temp
                    partial += ha * ha2 * s1
            # (j2, j1) is the complex conjugate of (j1, j2)
            w = partial.real * 2.0 if j2 < j1 else partial.real
            y = w - comp
            t = total + y
            comp = (t - total) - y
            total = t
    return total, ops


@nb.njit(cache=True, nogil=True)
def candidate_sums(W, base, cands, n, coef, use_table, zkeys, collision_free):
    """q_n(base + (l,)) for every 0-based candidate mode l in ``cands``.

    In table mode the sub-hafnians of the base positions are tabulated once
    and extended in place for each candidate. Returns (weights, operation count).
    """
    k = base.shape[0] + 1
    x = np.empty(k, dtype=np.int64)
    x[: k - 1] = base
    Wx = np.empty((k, k), dtype=np.complex128)
    for i in range(k - 1):
        for j in range(k - 1):
            Wx[i, j] = W[base[i], base[j]]
    half = 1 << (k - 1)
    ops = 0.0
    if use_table:
        table = np.zeros(2 * half, dtype=np.complex128)
        table[:half] = haf_table(Wx[: k - 1, : k - 1].copy())
        ops += (k - 1) * 2.0 ** (k - 1)
        sig = np.zeros(2 * half, dtype=np.int64)
        sig[:half] = multiset_hashes(base, zkeys)
    else:
        table = np.zeros(1, dtype=np.complex128)
        sig = np.zeros(1, dtype=np.int64)
    out = np.zeros(cands.shape[0])
    for c in range(cands.shape[0]):
        l = cands[c]
        if collision_free:
            seen = False
            for i in range(k - 1):
                if base[i] == l:
                    seen = True
            if seen:
                continue
        x[k - 1] = l
        for i in range(k - 1):
            Wx[i, k - 1] = W[base[i], l]
            Wx[k - 1, i] = W[l, base[i]]
        Wx[k - 1, k - 1] = W[l, l]
        if use_table:
            # only subsets containing the new position change
            for mask in range(half):
                sig[mask | half] = sig[mask] + zkeys[l]
                if _popcount(mask) % 2 == 0:
                    continue
                t = 0.0 + 0.0j
                r = mask
                while r:
                    j = _lowbit(r)
                    r &= r - 1
                    t += Wx[k - 1, j] * table[mask ^ (1 << j)]
                table[mask | half] = t
            ops += k * 2.0 ** k
        v, o = marginal_sum(Wx, x, n, coef, use_table, table, sig, collision_free)
        out[c] = v
        ops += o
    return out, ops


# --------------------------------------------------------------------------
# Brute-force oracles
# --------------------------------------------------------------------------


@nb.njit(cache=True, nogil=True)
def completion_abs2_sum(W, prefix, n):
    """Sum of |Haf(W_x)|^2 over all completions of ``prefix`` to length n (0-based modes)."""
    m = W.shape[0]
    k = prefix.shape[0]
    x = np.zeros(n, dtype=np.int64)
    x[:k] = prefix
    free = n - k
    Wx = np.empty((n, n), dtype=np.complex128)
    tot = 0.0
    full = (1 << n) - 1
    while True:
        for i in range(n):
            for j in range(n):
                Wx[i, j] = W[x[i], x[j]]
        h = haf_enum_mask(Wx, full) if n > 0 else 1.0 + 0.0j
        tot += h.real * h.real + h.imag * h.imag
        # odometer over the free positions
        p = n - 1
        while p >= k:
            x[p] += 1
            if x[p] < m:
                break
            x[p] = 0
            p -= 1
        if p < k or free == 0:
            break
    return tot


@nb.njit(cache=True, nogil=True)
def haf_abs2_rows(W, xs):
    """|Haf(W_x)|^2 for each row x of ``xs`` (0-based modes)."""
    N, n = xs.shape
    out = np.empty(N, dtype=np.float64)
    sub = np.empty((n, n), dtype=np.complex128)
    for t in range(N):
        for i in range(n):
            for j in range(n):
                sub[i, j] = W[xs[t, i], xs[t, j]]
        h = haf_fast(sub)
        out[t] = h.real * h.real + h.imag * h.imag
    return out
