"""Complex-matrix primitives: hafnian, permanent, Haar unitaries, W_s / W_x."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as K

SYMMETRY_TOL = 1e-12
UNITARY_TOL = 1e-10


class InvalidDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class Interferometer:
    """An m x m unitary U together with its symmetric product W = U U^T."""

    U: np.ndarray
    W: np.ndarray

    @property
    def m(self) -> int:
        return self.U.shape[0]

    @classmethod
    def from_unitary(cls, U: np.ndarray, check: bool = True) -> "Interferometer":
        U = np.ascontiguousarray(U, dtype=np.complex128)
        if U.ndim != 2 or U.shape[0] != U.shape[1] or U.shape[0] == 0:
            raise InvalidDimensionError(f"expected a non-empty square matrix, got {U.shape}")
        if not np.all(np.isfinite(U)):
            raise ValueError("unitary has non-finite entries")
        if check:
            dev = np.max(np.abs(U @ U.conj().T - np.eye(U.shape[0])))
            if dev > UNITARY_TOL:
                raise ValueError(f"matrix is not unitary (max deviation {dev:.2e})")
        W = U @ U.T
        W = 0.5 * (W + W.T)  # exact symmetry
        return cls(U=U, W=np.ascontiguousarray(W))


def haar_unitary(m: int, seed: int) -> Interferometer:
    """Haar-random m x m interferometer, deterministic in ``seed``.

    QR of a complex Ginibre matrix with the phases of R's diagonal moved into Q.
    """
    if m < 1:
        raise InvalidDimensionError("m must be >= 1")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return Interferometer.from_unitary(q)


def _as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.complex128)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidDimensionError(f"expected a square matrix, got shape {A.shape}")
    return A


def hafnian(A, mode: str = "fast") -> complex:
    """Hafnian of a symmetric matrix of even dimension.

    ``mode="enumeration"`` walks every perfect matching and is the reference;
    ``mode="fast"`` uses the power-trace formula, O(n^3 2^{n/2}).
    """
    A = _as_square(A)
    n = A.shape[0]
    if n % 2:
        raise InvalidDimensionError("hafnian needs an even dimension")
    if n == 0:
        return 1.0 + 0.0j
    scale = max(1.0, float(np.max(np.abs(A))))
    if np.max(np.abs(A - A.T)) > SYMMETRY_TOL * scale:
        raise ValueError("hafnian argument is not symmetric")
    A = np.ascontiguousarray(0.5 * (A + A.T))
    if mode == "enumeration":
        return complex(K.haf_enum(A))
    if mode == "fast":
        return complex(K.haf_fast(A))
    raise ValueError(f"unknown hafnian mode {mode!r}")


def permanent(A) -> complex:
    """Permanent via Ryser's formula (2^n n operations)."""
    A = np.ascontiguousarray(_as_square(A))
    return complex(K.perm_ryser(A))


def _validate_config(s: Sequence[int], m: int) -> np.ndarray:
    s = np.asarray(s, dtype=np.int64)
    if s.ndim != 1 or s.shape[0] != m:
        raise InvalidDimensionError(f"configuration has {s.shape} entries, expected {m}")
    if np.any(s < 0):
        raise ValueError("occupations must be non-negative")
    return s


def config_to_positions(s: Sequence[int]) -> np.ndarray:
    """The sorted position string (1-based) of a configuration."""
    s = np.asarray(s, dtype=np.int64)
    return np.repeat(np.arange(1, s.shape[0] + 1), s)


def submatrix_ws(W, s: Sequence[int]) -> np.ndarray:
    """Repeat row and column j of W s_j times."""
    W = _as_square(W)
    s = _validate_config(s, W.shape[0])
    idx = np.repeat(np.arange(W.shape[0]), s)
    return W[np.ix_(idx, idx)]


def submatrix_wx(W, x: Sequence[int]) -> np.ndarray:
    """W_x(i, j) = W(x_i, x_j) for a 1-based position string x."""
    W = _as_square(W)
    x = np.asarray(x, dtype=np.int64).reshape(-1)
    if x.size and (x.min() < 1 or x.max() > W.shape[0]):
        raise IndexError(f"position string entries must lie in [1, {W.shape[0]}]")
    idx = x - 1
    return W[np.ix_(idx, idx)]


def read_config(x: Sequence[int], m: int) -> np.ndarray:
    """Occupation numbers s_j = #{i : x_i = j}."""
    x = np.asarray(x, dtype=np.int64).reshape(-1)
    if x.size and (x.min() < 1 or x.max() > m):
        raise IndexError(f"position string entries must lie in [1, {m}]")
    return np.bincount(x - 1, minlength=m).astype(np.int64) if x.size else np.zeros(m, dtype=np.int64)


def save_unitary(path, U: np.ndarray) -> None:
    """JSON with ``m`` and U as row-major [re, im] pairs; W is recomputed on load."""
    U = np.asarray(U, dtype=np.complex128)
    data = {"m": int(U.shape[0]), "U": [[[float(z.real), float(z.imag)] for z in row] for row in U]}
    with open(path, "w") as fh:
        json.dump(data, fh)


def load_unitary(path) -> Interferometer:
    with open(path) as fh:
        data = json.load(fh)
    m = int(data["m"])
    U = np.array([[complex(re, im) for re, im in row] for row in data["U"]], dtype=np.complex128)
    if U.shape != (m, m):
        raise InvalidDimensionError(f"unitary file declares m={m} but holds {U.shape}")
    return Interferometer.from_unitary(U)
