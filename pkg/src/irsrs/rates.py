"""Per-stream SINRs, achievable rates and weighted sum rate.

Decoding at every user runs three successive-cancellation stages on its own
received signal: first the global common stream (treating everything else as
noise), then the pair's group common stream (global already removed), then
the user's private stream (both commons removed).  Cross-pair group commons
and all other private streams always remain as interference.

Common streams carry shared messages, so their achievable rates are capped by
the weakest decoder: the global common rate by the minimum over all 2K users,
each group common rate by the minimum over its pair.  A RateAllocation splits
those caps among users; total_rates validates the split against the caps.
"""

from dataclasses import dataclass

import numpy as np

from .model import (
    COL_GLOBAL,
    col_group,
    col_private,
    effective_rows,
    pair_of_user,
)

FEAS_TOL = 1e-9


class InfeasibleAllocationError(ValueError):
    """Requested common-rate split exceeds what the streams support."""


@dataclass(frozen=True)
class SinrReport:
    """Per-stream SINRs at each decoding stage; arrays are (K,) per class."""

    s_near: np.ndarray
    s_edge: np.ndarray
    group_near: np.ndarray
    group_edge: np.ndarray
    priv_near: np.ndarray
    priv_edge: np.ndarray

    def stacked(self):
        """(gamma_s, gamma_group, gamma_priv) each in stacked user order (2K,)."""
        return (
            np.concatenate([self.s_near, self.s_edge]),
            np.concatenate([self.group_near, self.group_edge]),
            np.concatenate([self.priv_near, self.priv_edge]),
        )


@dataclass(frozen=True)
class StreamRates:
    """log2(1 + SINR) per stream, same layout as SinrReport."""

    s_near: np.ndarray
    s_edge: np.ndarray
    group_near: np.ndarray
    group_edge: np.ndarray
    priv_near: np.ndarray
    priv_edge: np.ndarray

    def stacked(self):
        return (
            np.concatenate([self.s_near, self.s_edge]),
            np.concatenate([self.group_near, self.group_edge]),
            np.concatenate([self.priv_near, self.priv_edge]),
        )

    def global_cap(self):
        """Largest global common rate every user can decode."""
        return float(min(np.min(self.s_near), np.min(self.s_edge)))

    def group_caps(self):
        """Largest group common rate per pair, (K,)."""
        return np.minimum(self.group_near, self.group_edge)


@dataclass(frozen=True)
class RateReport:
    """Total per-user rates after adding the common-rate slices."""

    R_tot_near: np.ndarray  # (K,)
    R_tot_edge: np.ndarray  # (K,)
    stream_rates: StreamRates
    wsr: float


def _received_powers(ch, pre, sel, cb):
    """|h_i^H p_j|^2 for every user row i and stream column j, (2K, 3K+1)."""
    rows = effective_rows(ch, sel, cb)
    ip = rows @ pre.as_matrix()
    return np.abs(ip) ** 2


def sinrs_from_powers(pw, K):
    """Stage SINRs from the received-power table (unit noise)."""
    n = 2 * K
    g_s = np.zeros(n)
    g_grp = np.zeros(n)
    g_prv = np.zeros(n)
    T_s = pw.sum(axis=1) + 1.0
    for i in range(n):
        k = pair_of_user(K, i)
        sig_s = pw[i, COL_GLOBAL]
        sig_g = pw[i, col_group(K, k)]
        sig_p = pw[i, col_private(K, i)]
        g_s[i] = sig_s / (T_s[i] - sig_s)
        g_grp[i] = sig_g / (T_s[i] - sig_s - sig_g)
        g_prv[i] = sig_p / (T_s[i] - sig_s - sig_g - sig_p)
    return g_s, g_grp, g_prv


def compute_sinrs(ch, pre, sel, cb):
    """Stage SINRs for every user under precoders pre and selection sel."""
    K = ch.K
    pw = _received_powers(ch, pre, sel, cb)
    g_s, g_grp, g_prv = sinrs_from_powers(pw, K)
    return SinrReport(
        s_near=g_s[:K],
        s_edge=g_s[K:],
        group_near=g_grp[:K],
        group_edge=g_grp[K:],
        priv_near=g_prv[:K],
        priv_edge=g_prv[K:],
    )


def rates_from_sinrs(s):
    return StreamRates(
        s_near=np.log2(1.0 + s.s_near),
        s_edge=np.log2(1.0 + s.s_edge),
        group_near=np.log2(1.0 + s.group_near),
        group_edge=np.log2(1.0 + s.group_edge),
        priv_near=np.log2(1.0 + s.priv_near),
        priv_edge=np.log2(1.0 + s.priv_edge),
    )


def check_allocation(alloc, rates, tol=FEAS_TOL):
    """List of cap violations of a common-rate split; empty means feasible."""
    errs = []
    arrays = (alloc.C_s_near, alloc.C_s_edge, alloc.C_g_near, alloc.C_g_edge)
    if any(np.any(a < -tol) for a in arrays):
        errs.append("common-rate slices must be >= 0")
    cap_s = rates.global_cap()
    if alloc.global_total() > cap_s + tol:
        errs.append(
            "global common slices sum to %.6g but the weakest user supports %.6g"
            % (alloc.global_total(), cap_s)
        )
    caps_g = rates.group_caps()
    tot_g = alloc.group_totals()
    for k in np.nonzero(tot_g > caps_g + tol)[0]:
        errs.append(
            "pair %d group common slices sum to %.6g but the pair supports %.6g"
            % (k, tot_g[k], caps_g[k])
        )
    return errs


def total_rates(ch, pre, sel, cb, alloc, user_weights=None):
    """Total per-user rates (private + common slices) and optional WSR.

    Raises InfeasibleAllocationError if alloc exceeds the common-rate caps.
    """
    sr = rates_from_sinrs(compute_sinrs(ch, pre, sel, cb))
    errs = check_allocation(alloc, sr)
    if errs:
        raise InfeasibleAllocationError("; ".join(errs))
    R_near = alloc.C_s_near + alloc.C_g_near + sr.priv_near
    R_edge = alloc.C_s_edge + alloc.C_g_edge + sr.priv_edge
    w = np.nan
    if user_weights is not None:
        w = wsr(user_weights, R_near, R_edge)
    return RateReport(R_tot_near=R_near, R_tot_edge=R_edge, stream_rates=sr, wsr=w)


def wsr(user_weights, R_tot_near, R_tot_edge):
    """Weighted sum rate; weights stacked [near 0..K-1, edge 0..K-1]."""
    w = np.asarray(user_weights, dtype=float)
    K = R_tot_near.shape[0]
    if w.shape[0] != 2 * K:
        raise ValueError("expected %d weights, got %d" % (2 * K, w.shape[0]))
    return float(w[:K] @ R_tot_near + w[K:] @ R_tot_edge)


def clip_allocation(alloc, rates):
    """Scale common-rate slices down so they respect the caps of `rates`.

    Used when a split chosen against estimated channels is evaluated on the
    true ones: each pool is shrunk proportionally, never grown.
    """
    caps_g = rates.group_caps()
    cap_s = rates.global_cap()
    tot_s = alloc.global_total()
    scale_s = 1.0 if tot_s <= cap_s else max(cap_s, 0.0) / tot_s
    tot_g = alloc.group_totals()
    scale_g = np.ones(alloc.K)
    over = tot_g > caps_g
    scale_g[over] = np.maximum(caps_g[over], 0.0) / tot_g[over]
    return type(alloc)(
        C_s_near=alloc.C_s_near * scale_s,
        C_s_edge=alloc.C_s_edge * scale_s,
        C_g_near=alloc.C_g_near * scale_g,
        C_g_edge=alloc.C_g_edge * scale_g,
    )
