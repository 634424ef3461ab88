"""Binary multiplexing operator built from Sylvester-ordered Hadamard matrices.

The sensing matrix is A = (H + 1)/2 with H the N x N Sylvester Hadamard
matrix, so A is 0/1 valued: each measurement sums roughly half the scene.
Because the first row and column of H are all ones, the first scene element
is reserved as a dark reference and the first measurement equals the total
scene brightness.

A has the closed-form inverse (2/N) H - O, where O is zero except for a one
in the top-left corner.  Both the forward and inverse maps are applied either
matrix-free through a fast transform (production path) or via explicit dense
matrices (oracle path, capped at N = 4096).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

K_MAX_DENSE = 12  # dense matrices capped at N = 2**12 = 4096


class DenseLimitError(ValueError):
    """Dense construction requested beyond the supported size cap."""


class DarkPixelError(ValueError):
    """Scene vector violates the reserved-dark-element convention."""


def _check_power_of_two(n: int) -> None:
    if n < 1 or (n & (n - 1)) != 0:
        raise ValueError(f"length must be a power of two, got {n}")


def fwht(values: np.ndarray) -> np.ndarray:
    """Walsh-Hadamard transform in natural (Sylvester) order, unnormalized.

    Iterative radix-2 butterflies with ascending stride; the reduction order
    is fixed so repeated runs are bit-identical.  Satisfies
    fwht(fwht(v)) = N * v.
    """
    a = np.array(values, dtype=np.float64)
    if a.ndim != 1:
        raise ValueError("expected a 1-d vector")
    n = a.size
    _check_power_of_two(n)
    h = 1
    while h < n:
        a = a.reshape(-1, 2, h)
        a = np.concatenate((a[:, 0, :] + a[:, 1, :], a[:, 0, :] - a[:, 1, :]), axis=1)
        a = a.reshape(n)
        h *= 2
    return a


def sylvester_hadamard(k: int) -> np.ndarray:
    """Dense N x N Hadamard matrix, N = 2**k, by Sylvester doubling.

    H(1) = [1]; each doubling maps H to [[H, H], [H, -H]].  Entries are +/-1,
    the matrix is symmetric, and H @ H.T = N * I.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k > K_MAX_DENSE:
        raise DenseLimitError(
            f"dense construction limited to k <= {K_MAX_DENSE} (N = {2 ** K_MAX_DENSE}), got k = {k}"
        )
    h = np.ones((1, 1), dtype=np.float64)
    for _ in range(k):
        h = np.block([[h, h], [h, -h]])
    return h


def binary_sensing_matrix(k: int) -> np.ndarray:
    """Dense 0/1 sensing matrix A = (H + 1) / 2 for N = 2**k."""
    return (sylvester_hadamard(k) + 1.0) / 2.0


def closed_form_inverse(k: int) -> np.ndarray:
    """Dense inverse of the sensing matrix: (2/N) H - O, O = e1 e1^T."""
    n = 2**k
    inv = (2.0 / n) * sylvester_hadamard(k)
    inv[0, 0] -= 1.0
    return inv


@dataclass(frozen=True)
class SensingOperator:
    """Multiplexing operator of a given power-of-two order.

    mode "matrix_free" routes through the fast transform; "dense_oracle"
    materializes A explicitly (test/reference path, order <= 4096).
    """

    order: int
    mode: str = "matrix_free"
    dense: np.ndarray | None = None

    @classmethod
    def create(cls, order: int, mode: str = "matrix_free") -> "SensingOperator":
        _check_power_of_two(order)
        if order < 2:
            raise ValueError("order must be at least 2")
        if mode == "matrix_free":
            return cls(order=order, mode=mode)
        if mode == "dense_oracle":
            k = order.bit_length() - 1
            return cls(order=order, mode=mode, dense=binary_sensing_matrix(k))
        raise ValueError(f"unknown mode {mode!r}")


def apply_sensing(op: SensingOperator, x: np.ndarray) -> np.ndarray:
    """Measurement vector y = A x for a scene vector x with x[0] = 0.

    y[0] equals the total brightness sum(x) exactly; it is assigned directly
    rather than left to summation-order drift in the transform.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (op.order,):
        raise ValueError(f"scene length {x.size} does not match operator order {op.order}")
    if x[0] != 0.0:
        raise DarkPixelError("first scene element is reserved and must be exactly zero")
    brightness = float(x.sum())
    if op.mode == "dense_oracle":
        y = op.dense @ x
    else:
        y = (fwht(x) + brightness) / 2.0
    y[0] = brightness
    return y


def apply_inverse(op: SensingOperator, z: np.ndarray) -> np.ndarray:
    """Reconstruction x = ((2/N) H - O) z from a measurement vector z."""
    z = np.asarray(z, dtype=np.float64)
    if z.shape != (op.order,):
        raise ValueError(f"measurement length {z.size} does not match operator order {op.order}")
    if op.mode == "dense_oracle":
        k = op.order.bit_length() - 1
        return closed_form_inverse(k) @ z
    x = (2.0 / op.order) * fwht(z)
    x[0] -= z[0]
    return x


def column_sums_off_first_row(k: int) -> np.ndarray:
    """Sums of A's columns j >= 2 excluding the first row (exact integers).

    Each such sum equals N/2 - 1: every non-reference column lights up half
    the measurement rows, minus the reference row itself.
    """
    a = binary_sensing_matrix(k).astype(np.int64)
    return a[1:, 1:].sum(axis=0)


@dataclass(frozen=True)
class ReducedInverseReport:
    """Outcome of checking the closed-form inverse of the reduced matrix.

    The reduced matrix A_R drops A's first row and column.  Its published
    inverse formula (2/(n-2)) (A_R - ((n-4)/n) (Theta - A_R)) carries an
    order parameter n that could mean either the full order N or the reduced
    order N-1; both readings are evaluated and the numerically valid one is
    reported.
    """

    order: int
    applicable: bool
    deviation_full_order: float | None
    deviation_reduced_order: float | None
    resolved_order: str | None  # "full" (n = N) or "reduced" (n = N - 1)
    passed: bool


def _reduced_formula(a_r: np.ndarray, n: float) -> np.ndarray:
    theta = np.ones_like(a_r)
    return (2.0 / (n - 2.0)) * (a_r - ((n - 4.0) / n) * (theta - a_r))


def check_reduced_inverse(k: int, tol: float = 1e-9) -> ReducedInverseReport:
    """Verify the reduced-matrix inverse formula and resolve its order parameter."""
    if k > 8:
        raise DenseLimitError("reduced-inverse check limited to k <= 8 (N = 256)")
    n = 2**k
    if n < 4:
        # N = 2 reduces to a 1 x 1 zero matrix and the formula divides by n - 2
        return ReducedInverseReport(
            order=n,
            applicable=False,
            deviation_full_order=None,
            deviation_reduced_order=None,
            resolved_order=None,
            passed=True,
        )
    a_r = binary_sensing_matrix(k)[1:, 1:]
    eye = np.eye(n - 1)
    dev_full = float(np.abs(a_r @ _reduced_formula(a_r, float(n)) - eye).max())
    dev_reduced = float(np.abs(a_r @ _reduced_formula(a_r, float(n - 1)) - eye).max())
    if dev_full <= tol:
        resolved = "full"
    elif dev_reduced <= tol:
        resolved = "reduced"
    else:
        resolved = None
    return ReducedInverseReport(
        order=n,
        applicable=True,
        deviation_full_order=dev_full,
        deviation_reduced_order=dev_reduced,
        resolved_order=resolved,
        passed=resolved is not None,
    )


def inverse_identity_deviation(k: int, corrupt: bool = False) -> float:
    """Max entrywise deviation of A @ ((2/N) H - O) from the identity.

    The product is evaluated in row blocks to bound memory at large N.  With
    corrupt=True one entry of A is flipped first (negative control: the
    deviation must then be large).
    """
    n = 2**k
    a = binary_sensing_matrix(k)
    if corrupt:
        a[1, 1] = 1.0 - a[1, 1]
    inv = closed_form_inverse(k)
    worst = 0.0
    block = 512
    for start in range(0, n, block):
        stop = min(start + block, n)
        prod = a[start:stop] @ inv
        prod[:, start:stop] -= np.eye(stop - start)
        worst = max(worst, float(np.abs(prod).max()))
    return worst
