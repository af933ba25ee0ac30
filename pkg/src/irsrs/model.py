"""Core data model: network configuration, channels, reflection codebook, precoders.

Scenario: an M-antenna transmitter serves K near users directly and K edge
users through one reflecting surface per edge user (no direct path).  Each
surface has N binary on/off elements driven by a fixed orthonormal codebook,
so tuning a surface means picking one codebook column.

User indexing convention used across the package: a stacked user index
i in 0..2K-1 means near user i for i < K and edge user i - K otherwise.
User-level vectors (weights, rates, equalizers) follow this order.
"""

from dataclasses import dataclass, field

import numpy as np


class ModelError(ValueError):
    """Structural problem with model inputs (dimension/index mismatch)."""


class ConfigError(ModelError):
    """Invalid configuration values."""


@dataclass(frozen=True)
class NetworkConfig:
    """Static scenario description.

    K           number of user pairs (one near + one edge user each)
    M           transmit antennas
    N           reflecting elements per surface, N = P_cols * Q_ones
    P_cols      codebook columns per surface
    Q_ones      active elements per codebook column
    P_t         transmit power budget (noise is unit variance, so P_t is
                also the transmit SNR in linear scale)
    edge_scale  variance of each surface-to-edge-user channel entry
    R_th_near   per-pair rate floors for near users (bits/s/Hz), length K
    R_th_edge   per-pair rate floors for edge users, length K
    user_weights  rate weights, stacked order [near 0..K-1, edge 0..K-1]
    csit_error_var  channel estimation error variance; None means the
                power-dependent default P_t ** -0.6 when errors are requested
    seed        base seed for channel generation
    """

    K: int
    M: int
    N: int
    P_cols: int
    Q_ones: int
    P_t: float
    edge_scale: float = 0.3
    R_th_near: tuple = ()
    R_th_edge: tuple = ()
    user_weights: tuple = ()
    csit_error_var: float | None = None
    seed: int = 0

    def __post_init__(self):
        k = max(int(self.K), 0)
        r_n = tuple(float(v) for v in self.R_th_near) or (0.0,) * k
        r_e = tuple(float(v) for v in self.R_th_edge) or (0.0,) * k
        w = tuple(float(v) for v in self.user_weights) or (1.0,) * (2 * k)
        object.__setattr__(self, "R_th_near", r_n)
        object.__setattr__(self, "R_th_edge", r_e)
        object.__setattr__(self, "user_weights", w)

    @property
    def n_users(self):
        return 2 * self.K

    @property
    def weights_arr(self):
        return np.asarray(self.user_weights, dtype=float)

    @property
    def thresholds_arr(self):
        """Stacked rate floors, same ordering as user_weights."""
        return np.asarray(self.R_th_near + self.R_th_edge, dtype=float)


def validate_config(cfg):
    """Return a list of human-readable violations; empty list means valid."""
    errs = []
    if cfg.K < 1:
        errs.append("K must be >= 1")
    if cfg.M < 1:
        errs.append("M must be >= 1")
    if cfg.N < 1:
        errs.append("N must be >= 1")
    if cfg.P_cols < 1 or cfg.Q_ones < 1:
        errs.append("P_cols and Q_ones must be >= 1")
    if cfg.N != cfg.P_cols * cfg.Q_ones:
        errs.append(
            "N must equal P_cols * Q_ones (got N=%d, P_cols*Q_ones=%d)"
            % (cfg.N, cfg.P_cols * cfg.Q_ones)
        )
    if not cfg.P_t > 0:
        errs.append("P_t must be positive")
    if not cfg.edge_scale > 0:
        errs.append("edge_scale must be positive")
    if cfg.K >= 1:
        if len(cfg.R_th_near) != cfg.K or len(cfg.R_th_edge) != cfg.K:
            errs.append("rate thresholds must have length K")
        elif any(v < 0 for v in cfg.R_th_near + cfg.R_th_edge):
            errs.append("rate thresholds must be >= 0")
        if len(cfg.user_weights) != 2 * cfg.K:
            errs.append("user_weights must have length 2K")
        elif any(not w > 0 for w in cfg.user_weights):
            errs.append("user_weights must be positive")
    if cfg.csit_error_var is not None and cfg.csit_error_var < 0:
        errs.append("csit_error_var must be >= 0")
    return errs


def ensure_valid(cfg):
    errs = validate_config(cfg)
    if errs:
        raise ConfigError("; ".join(errs))
    return cfg


# ---------------------------------------------------------------------------
# channels


@dataclass(frozen=True)
class ChannelSet:
    """One realization of all propagation channels.

    h_near  (K, M)    direct channels, conjugated row h^H used as h_near[k].conj()
    G       (K, N, M) transmitter-to-surface channels
    h_edge  (K, N)    surface-to-edge-user channels
    """

    h_near: np.ndarray
    G: np.ndarray
    h_edge: np.ndarray

    @property
    def K(self):
        return self.h_near.shape[0]

    @property
    def M(self):
        return self.h_near.shape[1]

    @property
    def N(self):
        return self.h_edge.shape[1]


# ---------------------------------------------------------------------------
# reflection codebook


@dataclass(frozen=True)
class IrsCodebook:
    """On/off reflection codebook: column p lights elements p*Q .. (p+1)*Q - 1
    with amplitude 1/sqrt(Q); columns are orthonormal by construction."""

    A: np.ndarray  # (N, P_cols) real
    P_cols: int
    Q_ones: int

    @property
    def n_elements(self):
        return self.A.shape[0]

    def column(self, p):
        if not 0 <= p < self.P_cols:
            raise ModelError("codebook column %d out of range [0, %d)" % (p, self.P_cols))
        return self.A[:, p]


def build_codebook(P_cols, Q_ones):
    """Block on/off codebook: identity expanded by a Q-long all-ones run."""
    if P_cols < 1 or Q_ones < 1:
        raise ModelError("P_cols and Q_ones must be >= 1")
    A = np.kron(np.eye(P_cols), np.ones((Q_ones, 1))) / np.sqrt(Q_ones)
    return IrsCodebook(A=A, P_cols=P_cols, Q_ones=Q_ones)


def codebook_gram_exact(cb):
    """Gram matrix of the codebook computed from integer support overlaps.

    Column supports are disjoint Q-long blocks, so the inner product of two
    columns is (# overlapping active elements) / Q -- an exact integer ratio
    that avoids accumulating (1/sqrt(Q))**2 rounding.  Returns a (P, P) float
    array that is exactly the identity for this construction.
    """
    support = cb.A != 0.0  # (N, P) boolean
    overlap = support.T.astype(np.int64) @ support.astype(np.int64)
    return overlap / float(cb.Q_ones)


@dataclass(frozen=True)
class IrsSelection:
    """Chosen codebook column per surface (0-based indices, length K)."""

    cols: tuple

    def __post_init__(self):
        object.__setattr__(self, "cols", tuple(int(c) for c in self.cols))

    @property
    def K(self):
        return len(self.cols)


def apply_selection(cb, sel, k):
    """Reflection pattern of surface k as a length-N amplitude vector."""
    if not 0 <= k < sel.K:
        raise ModelError("surface index %d out of range" % k)
    c = sel.cols[k]
    if not 0 <= c < cb.P_cols:
        raise ModelError("selected column %d out of range [0, %d)" % (c, cb.P_cols))
    return cb.A[:, c]


def effective_channel(h_edge_k, a, G_k):
    """Cascaded transmitter->surface->user channel for one edge user.

    The received signal is h^H diag(a) G x, so the effective M-vector h_eff
    satisfies h_eff^H = h_edge^H diag(a) G.  Returns h_eff (so callers use
    h_eff.conj() as the row acting on precoders, same as direct channels).
    """
    h_edge_k = np.asarray(h_edge_k)
    a = np.asarray(a)
    G_k = np.asarray(G_k)
    if h_edge_k.ndim != 1 or a.ndim != 1 or G_k.ndim != 2:
        raise ModelError("effective_channel expects (N,), (N,), (N, M) inputs")
    if not (h_edge_k.shape[0] == a.shape[0] == G_k.shape[0]):
        raise ModelError(
            "element count mismatch: h_edge %s, pattern %s, G %s"
            % (h_edge_k.shape, a.shape, G_k.shape)
        )
    row = (h_edge_k.conj() * a) @ G_k
    return row.conj()


def effective_rows(ch, sel, cb):
    """Stacked channel rows acting on precoders: rows[i] @ p == h_i^H p.

    Near users keep their direct channel; edge users get the cascade through
    their own surface with the selected pattern.  Shape (2K, M).
    """
    K, M = ch.K, ch.M
    if sel.K != K:
        raise ModelError("selection has %d entries for K=%d surfaces" % (sel.K, K))
    rows = np.zeros((2 * K, M), dtype=complex)
    rows[:K] = ch.h_near.conj()
    for k in range(K):
        a = apply_selection(cb, sel, k)
        rows[K + k] = (ch.h_edge[k].conj() * a) @ ch.G[k]
    return rows


class EffectiveChannels:
    """Channel rows with the per-column edge cascades precomputed.

    Building every candidate cascade once makes the per-surface column search
    a table lookup instead of an (N x M) product per candidate.
    """

    def __init__(self, ch, cb):
        self.ch = ch
        self.cb = cb
        K = ch.K
        self.near_rows = ch.h_near.conj()  # (K, M)
        # edge_rows[k][c] = row of edge user k under codebook column c
        self.edge_rows = np.zeros((K, cb.P_cols, ch.M), dtype=complex)
        for k in range(K):
            scaled = ch.h_edge[k].conj()[:, None] * cb.A  # (N, P)
            self.edge_rows[k] = scaled.T @ ch.G[k]

    def rows(self, sel):
        K = self.ch.K
        rows = np.zeros((2 * K, self.ch.M), dtype=complex)
        rows[:K] = self.near_rows
        for k in range(K):
            rows[K + k] = self.edge_rows[k, sel.cols[k]]
        return rows


# ---------------------------------------------------------------------------
# precoders and stream layout
#
# Column layout of the stacked precoder matrix (M x (3K+1)):
#   0                global common stream (decoded by everyone)
#   1 + k            group common stream of pair k
#   1 + K + k        private stream of near user k
#   1 + 2K + k       private stream of edge user k


def n_streams(K):
    return 3 * K + 1


COL_GLOBAL = 0


def col_group(K, k):
    return 1 + k


def col_near(K, k):
    return 1 + K + k


def col_edge(K, k):
    return 1 + 2 * K + k


def pair_of_user(K, i):
    """Pair index of stacked user i."""
    return i if i < K else i - K


def col_private(K, i):
    """Private-stream column of stacked user i."""
    return col_near(K, i) if i < K else col_edge(K, i - K)


@dataclass(frozen=True)
class PrecoderSet:
    """Linear precoders, one M-vector per stream."""

    p_global: np.ndarray  # (M,)
    p_group: np.ndarray   # (K, M)
    p_near: np.ndarray    # (K, M)
    p_edge: np.ndarray    # (K, M)

    @property
    def K(self):
        return self.p_group.shape[0]

    @property
    def M(self):
        return self.p_global.shape[0]

    def as_matrix(self):
        """Stack into (M, 3K+1) following the module column layout."""
        return np.concatenate(
            [self.p_global[None, :], self.p_group, self.p_near, self.p_edge], axis=0
        ).T

    @classmethod
    def from_matrix(cls, X, K):
        X = np.asarray(X)
        if X.shape[1] != n_streams(K):
            raise ModelError("expected %d precoder columns, got %d" % (n_streams(K), X.shape[1]))
        cols = X.T
        return cls(
            p_global=cols[0].copy(),
            p_group=cols[1 : 1 + K].copy(),
            p_near=cols[1 + K : 1 + 2 * K].copy(),
            p_edge=cols[1 + 2 * K :].copy(),
        )

    @classmethod
    def zeros(cls, K, M):
        return cls(
            p_global=np.zeros(M, dtype=complex),
            p_group=np.zeros((K, M), dtype=complex),
            p_near=np.zeros((K, M), dtype=complex),
            p_edge=np.zeros((K, M), dtype=complex),
        )


def precoder_power(pre):
    """Total transmit power: sum of squared column norms."""
    X = pre.as_matrix()
    return float(sum(np.linalg.norm(X[:, j]) ** 2 for j in range(X.shape[1])))


# ---------------------------------------------------------------------------
# common-rate bookkeeping


@dataclass(frozen=True)
class RateAllocation:
    """Split of the shared common rates among users (bits/s/Hz, all >= 0).

    C_s_* is each user's slice of the global common rate; C_g_* the slice of
    the pair's group common rate.  All arrays have length K.
    """

    C_s_near: np.ndarray
    C_s_edge: np.ndarray
    C_g_near: np.ndarray
    C_g_edge: np.ndarray

    @classmethod
    def zeros(cls, K):
        z = np.zeros(K)
        return cls(z.copy(), z.copy(), z.copy(), z.copy())

    @property
    def K(self):
        return self.C_s_near.shape[0]

    def global_total(self):
        return float(np.sum(self.C_s_near) + np.sum(self.C_s_edge))

    def group_totals(self):
        return self.C_g_near + self.C_g_edge

    def common_by_user(self):
        """(C_s_i + C_g_i) stacked in user order, shape (2K,)."""
        return np.concatenate([self.C_s_near + self.C_g_near, self.C_s_edge + self.C_g_edge])

    def stacked(self):
        """(C_s_i, C_g_i) as two (2K,) arrays in user order."""
        return (
            np.concatenate([self.C_s_near, self.C_s_edge]),
            np.concatenate([self.C_g_near, self.C_g_edge]),
        )


@dataclass(frozen=True)
class EqualizerSet:
    """Scalar receive equalizers per user and decoded layer, shape (2K,) each."""

    g_s: np.ndarray
    g_group: np.ndarray
    g_priv: np.ndarray


@dataclass(frozen=True)
class MmseWeightSet:
    """Positive surrogate weights per user and decoded layer, shape (2K,) each."""

    u_s: np.ndarray
    u_group: np.ndarray
    u_priv: np.ndarray
