"""Independent reference computations used by the tests."""

import itertools
import math

import numpy as np


def random_symmetric(n, rng):
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (A + A.T) / 2


def naive_permanent(A):
    n = A.shape[0]
    return sum(np.prod([A[i, p[i]] for i in range(n)]) for p in itertools.permutations(range(n))) if n else 1.0


def multiset_count(c, r):
    """Ways to split c identical items over r labelled parts; 1 when c = r = 0."""
    if r == 0:
        return 1 if c == 0 else 0
    return math.comb(c + r - 1, c)


def multiset_count_real(c, r):
    """multiset_count for half-integer r via the gamma function."""
    if r == 0:
        return 1.0 if c == 0 else 0.0
    return math.exp(math.lgamma(c + r) - math.lgamma(c + 1) - math.lgamma(r))


def f_factor_triple_sum(k, mu, j1, j2, n, m):
    """(n-k)! times the sum over the matching counts c1, c2, c3 of the summation-path classes.

    c1 pairs on the mu same-mode paths, c2 on the (k-2j1-mu)/2 W-side paths,
    c3 on the (k-2j2-mu)/2 W*-side paths and d closed loops with weight C(m/2+d-1, d).
    """
    D2 = n - 3 * k + 2 * j1 + 2 * j2 + mu
    assert D2 % 2 == 0 and D2 >= 0
    D = D2 // 2
    r1, r2 = (k - 2 * j1 - mu) // 2, (k - 2 * j2 - mu) // 2
    tot = 0.0
    for c1 in range(D + 1):
        for c2 in range(D - c1 + 1):
            for c3 in range(D - c1 - c2 + 1):
                d = D - c1 - c2 - c3
                tot += (multiset_count(c1, mu) * multiset_count(c2, r1)
                        * multiset_count(c3, r2) * multiset_count_real(d, m / 2))
    return math.factorial(n - k) * tot


def naive_hafnian(A):
    """Recursive sum over perfect matchings, pure python."""
    n = A.shape[0]
    if n == 0:
        return 1.0 + 0j
    tot = 0j
    rest = list(range(1, n))
    for j in rest:
        keep = [i for i in rest if i != j]
        tot += A[0, j] * naive_hafnian(A[np.ix_(keep, keep)])
    return tot


def naive_marginal(W, prefix, n):
    """sum over all completions of |Haf(W_x)|^2 / (n! C((m+n)/2-1, n/2)), prefix 1-based."""
    m = W.shape[0]
    k = len(prefix)
    tot = 0.0
    for tail in itertools.product(range(m), repeat=n - k):
        idx = [p - 1 for p in prefix] + list(tail)
        tot += abs(naive_hafnian(W[np.ix_(idx, idx)])) ** 2
    fn = math.factorial(n) * math.exp(math.lgamma((m + n) / 2) - math.lgamma(n / 2 + 1) - math.lgamma(m / 2))
    return tot / fn
