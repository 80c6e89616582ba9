"""Dense MPS/MPO kernels behind the boundary contraction.

Conventions:

* an MPS site tensor has indices (left bond, physical, right bond);
* an MPO site tensor has indices (left bond, physical in, physical out,
  right bond); applying an MPO contracts its input leg with the state's
  physical leg;
* a :class:`BoundaryMps` represents ``(contraction of its tensors) *
  exp(log_scale)``. Keeping magnitudes in the log accumulator is what
  lets Boltzmann-weight chains with log-weights of several hundred pass
  through without overflowing.

All operations are pure: inputs are never mutated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateStateError, DimensionError, NumericError)

# Relative singular-value floor, applied on every truncation regardless
# of the bond-dimension cap. Keeps ranks honest and avoids carrying
# noise-level directions.
RANK_EPS = 1e-14


@dataclass(frozen=True)
class ContractionParams:
    """Knobs of the boundary contraction.

    Attributes:
        bond_dim: maximal virtual bond dimension kept after truncation.
        num_sweeps: rounds of single-site variational refinement run
            after the SVD truncation inside :func:`compress`.
        beta: inverse temperature of the Boltzmann weights.
    """

    bond_dim: int = 16
    num_sweeps: int = 1
    beta: float = 1.0

    def __post_init__(self):
        if self.bond_dim < 1:
            raise DimensionError(f"bond_dim must be >= 1, got {self.bond_dim}")
        if self.num_sweeps < 0:
            raise DimensionError(f"num_sweeps must be >= 0, got {self.num_sweeps}")
        if not self.beta > 0:
            raise NumericError(f"beta must be positive, got {self.beta}")


class BoundaryMps:
    """Matrix-product state over one grid row, with a log scale factor."""

    def __init__(self, tensors, log_scale: float = 0.0):
        tensors = [np.asarray(t) for t in tensors]
        if not tensors:
            raise DimensionError("an MPS needs at least one site")
        for t in tensors:
            if t.ndim != 3:
                raise DimensionError(f"site tensors must have 3 indices, got {t.shape}")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
            raise DimensionError("outer bonds must have extent 1")
        for left, right in zip(tensors, tensors[1:]):
            if left.shape[2] != right.shape[0]:
                raise DimensionError(
                    f"bond mismatch: {left.shape} next to {right.shape}")
        self.tensors = tensors
        self.log_scale = float(log_scale)

    @classmethod
    def ones(cls, phys_dims, dtype=np.float64) -> "BoundaryMps":
        """Product state of all-ones vectors (bond extents 1)."""
        return cls([np.ones((1, d, 1), dtype=dtype) for d in phys_dims])

    def __len__(self):
        return len(self.tensors)

    @property
    def phys_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[1] for t in self.tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[2] for t in self.tensors[:-1])

    def copy(self) -> "BoundaryMps":
        return BoundaryMps([t.copy() for t in self.tensors], self.log_scale)

    def normalize_scale(self) -> "BoundaryMps":
        """Divide each tensor by its largest magnitude, folding the logs
        into ``log_scale``. The represented vector is unchanged."""
        out = []
        log_scale = self.log_scale
        for t in self.tensors:
            mx = np.max(np.abs(t))
            if mx > 0 and mx != 1.0:
                out.append(t / mx)
                log_scale += math.log(mx)
            else:
                out.append(t)
        return BoundaryMps(out, log_scale)

    def __repr__(self):
        return (f"BoundaryMps(phys={self.phys_dims}, bonds={self.bond_dims}, "
                f"log_scale={self.log_scale:.3f})")


class RowMpo:
    """Matrix-product operator between two grid rows."""

    def __init__(self, tensors):
        tensors = [np.asarray(t) for t in tensors]
        if not tensors:
            raise DimensionError("an MPO needs at least one site")
        for t in tensors:
            if t.ndim != 4:
                raise DimensionError(f"MPO tensors must have 4 indices, got {t.shape}")
        if tensors[0].shape[0] != 1 or tensors[-1].shape[3] != 1:
            raise DimensionError("outer bonds must have extent 1")
        for left, right in zip(tensors, tensors[1:]):
            if left.shape[3] != right.shape[0]:
                raise DimensionError(
                    f"bond mismatch: {left.shape} next to {right.shape}")
        self.tensors = tensors

    def __len__(self):
        return len(self.tensors)

    @property
    def in_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[1] for t in self.tensors)

    @property
    def out_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[2] for t in self.tensors)

    def transpose(self) -> "RowMpo":
        """Swap input and output physical legs."""
        return RowMpo([np.swapaxes(t, 1, 2) for t in self.tensors])


def svd_truncate(matrix, bond_dim: int):
    """Rank-revealing truncated SVD.

    Returns ``(U, S, V, discarded_weight)`` with ``U @ diag(S) @ V.T``
    the best approximation of the input with rank at most ``bond_dim``,
    singular values descending, and ``discarded_weight`` the sum of the
    squared discarded singular values. Singular values below
    ``RANK_EPS`` times the largest are always dropped.
    """
    if bond_dim < 1:
        raise DimensionError(f"bond_dim must be >= 1, got {bond_dim}")
    m = np.asarray(matrix)
    if m.ndim != 2:
        raise DimensionError(f"expected a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("matrix contains non-finite entries")
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        keep = 1 if s.size else 0
    else:
        keep = int(np.count_nonzero(s > RANK_EPS * s[0]))
        keep = max(keep, 1)
    keep = min(keep, bond_dim)
    discarded = float(np.sum(s[keep:] ** 2))
    return u[:, :keep], s[:keep], vt[:keep].T, discarded


def apply_mpo(mpo: RowMpo, mps: BoundaryMps) -> BoundaryMps:
    """Exact product of an MPO with a state; bond extents multiply.

    The result is rescaled tensor-by-tensor with the magnitudes folded
    into ``log_scale``, so entries stay O(1).
    """
    if len(mpo) != len(mps) or mpo.in_dims != mps.phys_dims:
        raise DimensionError(
            f"MPO input dims {mpo.in_dims} do not match state dims {mps.phys_dims}")
    out = []
    for w, a in zip(mpo.tensors, mps.tensors):
        t = np.einsum("aiob,cid->acobd", w, a)
        out.append(t.reshape(w.shape[0] * a.shape[0], w.shape[2],
                             w.shape[3] * a.shape[2]))
    return BoundaryMps(out, mps.log_scale).normalize_scale()


def left_canonicalize(mps: BoundaryMps) -> BoundaryMps:
    """QR sweep making every tensor a left isometry.

    The state's norm is folded into ``log_scale`` (a negative overall
    sign stays in the last tensor), so the stored chain has norm 1.
    """
    tensors = []
    carry = None
    for t in mps.tensors:
        if carry is not None:
            t = np.tensordot(carry, t, axes=(1, 0))
        dl, d, dr = t.shape
        q, r = np.linalg.qr(t.reshape(dl * d, dr))
        tensors.append(q.reshape(dl, d, q.shape[1]))
        carry = r
    scale = float(carry[0, 0])
    if scale == 0.0:
        raise DegenerateStateError("cannot canonicalize a zero-norm state")
    if scale < 0:
        tensors[-1] = -tensors[-1]
    return BoundaryMps(tensors, mps.log_scale + math.log(abs(scale)))


def _fold_center(tensors, log_scale, index):
    mx = np.max(np.abs(tensors[index]))
    if mx == 0.0:
        raise DegenerateStateError("state collapsed to zero during compression")
    tensors[index] = tensors[index] / mx
    return log_scale + math.log(mx)


def _truncate_right_sweep(mps: BoundaryMps, bond_dim: int):
    """SVD-truncate a left-canonical state, sweeping right to left.

    Returns a right-canonical state (orthogonality center at site 0)
    plus the total discarded singular weight.
    """
    tensors = [t for t in mps.tensors]
    discarded = 0.0
    for i in range(len(tensors) - 1, 0, -1):
        dl, d, dr = tensors[i].shape
        u, s, v, dw = svd_truncate(tensors[i].reshape(dl, d * dr), bond_dim)
        k = s.size
        tensors[i] = v.T.reshape(k, d, dr)
        tensors[i - 1] = np.tensordot(tensors[i - 1], u * s, axes=(2, 0))
        discarded += dw
    log_scale = _fold_center(tensors, mps.log_scale, 0)
    return BoundaryMps(tensors, log_scale), discarded


def _variational_sweep(state: BoundaryMps, target: BoundaryMps) -> BoundaryMps:
    """One left-right-left round of single-site overlap maximization.

    ``state`` must be right-canonical; the result is right-canonical
    again and represents the best local approximation of ``target`` on
    the current bond dimensions. Every local update maximizes the
    normalized overlap, so sweeps never decrease the fidelity.
    """
    length = len(state)
    cs = [t for t in state.tensors]
    ts = target.tensors

    renv = [None] * (length + 1)
    renv[length] = np.ones((1, 1), dtype=ts[0].dtype)
    for i in range(length - 1, 0, -1):
        renv[i] = np.einsum("adb,AdB,bB->aA", cs[i], ts[i], renv[i + 1])

    lenv = [None] * (length + 1)
    lenv[0] = np.ones((1, 1), dtype=ts[0].dtype)
    for i in range(length):
        t = np.einsum("aA,AdB,bB->adb", lenv[i], ts[i], renv[i + 1])
        if i < length - 1:
            dl, d, dr = t.shape
            q, _ = np.linalg.qr(t.reshape(dl * d, dr))
            cs[i] = q.reshape(dl, d, q.shape[1])
            lenv[i + 1] = np.einsum("adb,AdB,aA->bB", cs[i], ts[i], lenv[i])
        else:
            cs[i] = t

    right = np.ones((1, 1), dtype=ts[0].dtype)
    for i in range(length - 1, 0, -1):
        t = np.einsum("aA,AdB,bB->adb", lenv[i], ts[i], right)
        dl, d, dr = t.shape
        q, _ = np.linalg.qr(t.reshape(dl, d * dr).T)
        cs[i] = q.T.reshape(q.shape[1], d, dr)
        right = np.einsum("adb,AdB,bB->aA", cs[i], ts[i], right)
    cs[0] = np.einsum("aA,AdB,bB->adb", lenv[0], ts[0], right)

    log_scale = _fold_center(cs, target.log_scale, 0)
    return BoundaryMps(cs, log_scale)


def _fidelity(state: BoundaryMps, target: BoundaryMps) -> float:
    v_ct, ls_ct = overlap(state, target)
    if v_ct == 0.0:
        return 0.0
    v_cc, ls_cc = overlap(state, state)
    v_tt, ls_tt = overlap(target, target)
    log_f = (2.0 * (math.log(abs(v_ct)) + ls_ct)
             - (math.log(v_cc) + ls_cc) - (math.log(v_tt) + ls_tt))
    return math.exp(log_f)


def compress(mps: BoundaryMps, params: ContractionParams):
    """Truncate a state to the configured bond dimension.

    Pipeline: left-canonicalize, SVD-truncate every bond to
    ``params.bond_dim``, then run ``params.num_sweeps`` rounds of
    single-site variational refinement against the input. The norm is
    folded into ``log_scale`` so site tensors stay O(1).

    Returns:
        ``(compressed, fidelity)`` where fidelity is the normalized
        squared overlap with the input (1 for a lossless compression).

    Raises:
        DegenerateStateError: the input represents the zero vector.
    """
    canonical = left_canonicalize(mps)
    state, _ = _truncate_right_sweep(canonical, params.bond_dim)
    for _ in range(params.num_sweeps):
        state = _variational_sweep(state, mps)
    return state, _fidelity(state, mps)


def overlap(a: BoundaryMps, b: BoundaryMps):
    """Inner product of two states.

    Returns:
        ``(value, log_scale)`` with the inner product equal to
        ``value * exp(log_scale)``; ``log_scale`` combines both states'
        accumulators plus the ladder normalization.
    """
    if len(a) != len(b) or a.phys_dims != b.phys_dims:
        raise DimensionError(
            f"cannot overlap states with dims {a.phys_dims} and {b.phys_dims}")
    v = np.ones((1, 1), dtype=np.result_type(a.tensors[0], b.tensors[0]))
    log_scale = a.log_scale + b.log_scale
    for ta, tb in zip(a.tensors, b.tensors):
        v = np.einsum("ab,adc,bdf->cf", v, ta, tb)
        mx = np.max(np.abs(v))
        if mx == 0.0:
            return 0.0, log_scale
        if not np.isfinite(mx):
            raise NumericError("overlap overflowed despite scaling")
        v = v / mx
        log_scale += math.log(mx)
    return float(v[0, 0]), log_scale
