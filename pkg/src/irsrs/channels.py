"""Channel generation and imperfect transmitter-side channel knowledge.

All links are i.i.d. circularly-symmetric complex Gaussian: direct links at
unit variance, while both legs of the reflected path (transmitter-to-surface
and surface-to-user) are at variance edge_scale, modeling the weaker edge
geometry.  Estimation error is additive complex Gaussian applied to every
transmitter-side channel (direct, transmitter-to-surface and surface-to-user
alike), since the optimizer designs on all of them.

Seeding: channel draws and error draws use separate deterministic child
streams of the same integer seed, so the estimate noise is independent of the
realization it perturbs and either can be regenerated in isolation.
"""

from dataclasses import dataclass

import numpy as np

from .model import ChannelSet

# child-stream tags: keep channel and error draws decorrelated per seed
_STREAM_CHANNELS = 0
_STREAM_CSIT_ERROR = 1


def _rng(seed, tag):
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(tag,)))


def _cn(rng, shape, var):
    """CN(0, var) i.i.d. entries."""
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return z * np.sqrt(var / 2.0)


@dataclass(frozen=True)
class CsitPair:
    """True channels plus the (possibly noisy) copy the optimizer sees."""

    true: ChannelSet
    estimated: ChannelSet
    error_var: float


def sample_channels(cfg, seed=None):
    """Draw one ChannelSet for cfg.  Deterministic in (cfg dims, seed)."""
    s = cfg.seed if seed is None else seed
    rng = _rng(s, _STREAM_CHANNELS)
    K, M, N = cfg.K, cfg.M, cfg.N
    h_near = _cn(rng, (K, M), 1.0)
    G = _cn(rng, (K, N, M), cfg.edge_scale)
    h_edge = _cn(rng, (K, N), cfg.edge_scale)
    return ChannelSet(h_near=h_near, G=G, h_edge=h_edge)


def resolve_csit_error_var(cfg):
    """Error variance to use: explicit value, else the power-coupled default
    P_t ** -0.6 (estimation improves as the power budget grows)."""
    if cfg.csit_error_var is not None:
        return float(cfg.csit_error_var)
    return float(cfg.P_t ** -0.6)


def apply_csit_error(ch, error_var, seed):
    """Return a CsitPair whose estimate is ch plus CN(0, error_var) noise.

    error_var == 0 returns the true channels as the estimate.  The error
    stream depends only on (seed, shapes), not on the channel values.
    """
    error_var = float(error_var)
    if error_var < 0:
        raise ValueError("error_var must be >= 0")
    if error_var == 0.0:
        return CsitPair(true=ch, estimated=ch, error_var=0.0)
    rng = _rng(seed, _STREAM_CSIT_ERROR)
    est = ChannelSet(
        h_near=ch.h_near + _cn(rng, ch.h_near.shape, error_var),
        G=ch.G + _cn(rng, ch.G.shape, error_var),
        h_edge=ch.h_edge + _cn(rng, ch.h_edge.shape, error_var),
    )
    return CsitPair(true=ch, estimated=est, error_var=error_var)
