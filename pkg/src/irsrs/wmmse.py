"""Scalar-equalizer MSE machinery behind the surrogate objective.

For a user decoding a stream with scalar equalizer g, intended inner product
a = h^H p and stage receive power T (all streams still present at that stage
plus unit noise), the mean-square error is

    eps(g) = |g|^2 T - 2 Re{g a} + 1,

minimized at g* = conj(a) / T with value eps* = I / T, where I = T - |a|^2 is
the post-removal residual.  With the weight u >= 0 applied as xi = u * eps -
log2(u), the optimal weight is u* = 1 / eps*, at which xi* = 1 - log2(1 +
SINR) -- the bridge that lets a weighted-MSE minimizer maximize rates.

The surrogate objective mirrors the weighted sum rate: each user contributes
w_i * (D_s_i + D_g_i + xi_priv_i) where D = -C are the negated common-rate
slices, and the common layers are tied in through per-layer worst-case
constraints handled by the optimizer.
"""

from dataclasses import dataclass

import numpy as np

from .model import (
    COL_GLOBAL,
    EqualizerSet,
    MmseWeightSet,
    col_group,
    col_private,
    effective_rows,
    pair_of_user,
)


class DegenerateMseError(ValueError):
    """MSE did not stay positive (corrupt inputs)."""


_EPS_FLOOR = 1e-12


@dataclass(frozen=True)
class StreamPowerReport:
    """Stage receive powers and residuals per user, all shape (2K,).

    T_* is the total power entering the stage (unit noise included); I_* what
    remains after the stage's intended stream is removed.
    """

    T_s: np.ndarray
    T_group: np.ndarray
    T_priv: np.ndarray
    I_s: np.ndarray
    I_group: np.ndarray
    I_priv: np.ndarray


@dataclass(frozen=True)
class StreamMses:
    """Minimum MSE per decoded layer, all shape (2K,)."""

    s: np.ndarray
    group: np.ndarray
    priv: np.ndarray


@dataclass(frozen=True)
class WmseReport:
    """Weighted-MSE surrogate pieces at a given operating point.

    xi_* are the per-layer costs u*eps - log2(u); xi_s_max / xi_group_max the
    worst-case values that constrain the common layers; xi_tot the per-user
    totals D_s + D_g + xi_priv entering the objective.
    """

    xi_s: np.ndarray        # (2K,)
    xi_group: np.ndarray    # (2K,)
    xi_priv: np.ndarray     # (2K,)
    xi_s_max: float
    xi_group_max: np.ndarray  # (K,) max over each pair
    xi_tot: np.ndarray      # (2K,)
    objective: float


def _stage_tables(rows, X, K):
    """Intended inner products and stage powers for all users/layers.

    Returns (a_s, a_grp, a_prv, T_s, T_grp, T_prv), each (2K,).
    """
    ip = rows @ X  # (2K, 3K+1)
    pw = np.abs(ip) ** 2
    n = 2 * K
    idx_grp = np.array([col_group(K, pair_of_user(K, i)) for i in range(n)])
    idx_prv = np.array([col_private(K, i) for i in range(n)])
    rng = np.arange(n)
    a_s = ip[:, COL_GLOBAL]
    a_grp = ip[rng, idx_grp]
    a_prv = ip[rng, idx_prv]
    T_s = pw.sum(axis=1) + 1.0
    T_grp = T_s - pw[:, COL_GLOBAL]
    T_prv = T_grp - pw[rng, idx_grp]
    return a_s, a_grp, a_prv, T_s, T_grp, T_prv


def stream_powers(ch, pre, sel, cb):
    """Stage powers T and residuals I per user for the three decoded layers."""
    K = ch.K
    rows = effective_rows(ch, sel, cb)
    a_s, a_grp, a_prv, T_s, T_grp, T_prv = _stage_tables(rows, pre.as_matrix(), K)
    return StreamPowerReport(
        T_s=T_s,
        T_group=T_grp,
        T_priv=T_prv,
        I_s=T_grp,
        I_group=T_prv,
        I_priv=T_prv - np.abs(a_prv) ** 2,
    )


def mmse_equalizers(ch, pre, sel, cb):
    """MSE-minimizing scalar equalizers g = conj(h^H p) / T per layer."""
    K = ch.K
    rows = effective_rows(ch, sel, cb)
    a_s, a_grp, a_prv, T_s, T_grp, T_prv = _stage_tables(rows, pre.as_matrix(), K)
    return EqualizerSet(
        g_s=a_s.conj() / T_s,
        g_group=a_grp.conj() / T_grp,
        g_priv=a_prv.conj() / T_prv,
    )


def mmse_values(powers):
    """Minimum MSE per layer: eps* = I / T (in (0, 1], 1 iff no signal)."""
    return StreamMses(
        s=powers.I_s / powers.T_s,
        group=powers.I_group / powers.T_group,
        priv=powers.I_priv / powers.T_priv,
    )


def optimal_weights(mses):
    """Surrogate weights u = 1 / eps*; raises if any MSE is not positive."""
    arrs = (mses.s, mses.group, mses.priv)
    if any(np.any(a <= 0) for a in arrs):
        raise DegenerateMseError("MMSE values must be positive")
    clip = [np.maximum(a, _EPS_FLOOR) for a in arrs]
    return MmseWeightSet(u_s=1.0 / clip[0], u_group=1.0 / clip[1], u_priv=1.0 / clip[2])


def _eps(g, a, T):
    """MSE eps(g) = |g|^2 T - 2 Re{g a} + 1 (vectorized over users)."""
    return (np.abs(g) ** 2) * T - 2.0 * np.real(g * a) + 1.0


def xi_layers(ch, pre, sel, cb, eq, wts):
    """Per-layer costs u*eps - log2(u), each (2K,), at fixed g and u."""
    K = ch.K
    rows = effective_rows(ch, sel, cb)
    return xi_layers_from_rows(rows, pre.as_matrix(), K, eq, wts)


def xi_layers_from_rows(rows, X, K, eq, wts):
    a_s, a_grp, a_prv, T_s, T_grp, T_prv = _stage_tables(rows, X, K)
    return (
        wts.u_s * _eps(eq.g_s, a_s, T_s) - np.log2(wts.u_s),
        wts.u_group * _eps(eq.g_group, a_grp, T_grp) - np.log2(wts.u_group),
        wts.u_priv * _eps(eq.g_priv, a_prv, T_prv) - np.log2(wts.u_priv),
    )


def xi_layers_nat_from_rows(rows, X, K, eq, wts):
    """Same costs with the natural-log weight penalty, u*eps - ln(u).

    Under this convention u = 1/eps is the exact argmin over u (the log2
    penalty would put it at 1/(eps ln2)), so the componentwise weight update
    is a true descent step; minima satisfy xi = 1 - ln(1 + SINR), i.e. rates
    in nats.  The P-dependence is identical to the log2 flavor.
    """
    a_s, a_grp, a_prv, T_s, T_grp, T_prv = _stage_tables(rows, X, K)
    return (
        wts.u_s * _eps(eq.g_s, a_s, T_s) - np.log(wts.u_s),
        wts.u_group * _eps(eq.g_group, a_grp, T_grp) - np.log(wts.u_group),
        wts.u_priv * _eps(eq.g_priv, a_prv, T_prv) - np.log(wts.u_priv),
    )


def equalizers_weights_from_rows(rows, X, K):
    """Jointly MMSE-optimal (equalizers, weights) at precoder matrix X."""
    a_s, a_grp, a_prv, T_s, T_grp, T_prv = _stage_tables(rows, X, K)
    eq = EqualizerSet(
        g_s=a_s.conj() / T_s,
        g_group=a_grp.conj() / T_grp,
        g_priv=a_prv.conj() / T_prv,
    )
    mses = StreamMses(
        s=T_grp / T_s,
        group=T_prv / T_grp,
        priv=(T_prv - np.abs(a_prv) ** 2) / T_prv,
    )
    return eq, optimal_weights(mses)


def wmse_objective(ch, pre, sel, cb, eq, wts, alloc, cfg):
    """Surrogate objective sum_i w_i (D_s_i + D_g_i + xi_priv_i) and pieces."""
    K = ch.K
    xi_s, xi_grp, xi_prv = xi_layers(ch, pre, sel, cb, eq, wts)
    C_s, C_g = alloc.stacked()
    xi_tot = -C_s - C_g + xi_prv
    w = cfg.weights_arr
    obj = float(w @ xi_tot)
    xi_grp_max = np.maximum(xi_grp[:K], xi_grp[K:])
    return (
        WmseReport(
            xi_s=xi_s,
            xi_group=xi_grp,
            xi_priv=xi_prv,
            xi_s_max=float(np.max(xi_s)),
            xi_group_max=xi_grp_max,
            xi_tot=xi_tot,
            objective=obj,
        ),
        obj,
    )
