"""Release acceptance gate.

One test per release criterion.  Each test prints a single
``[criterion] PASS/FAIL`` line carrying the measured margins before any
assertion fires, so the numbers survive in the report either way.  The heavy
Monte-Carlo fixtures (convergence census, paired scheme sweep, rate region,
imperfect-CSIT sweep) are module-scoped and shared across criteria.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from irsrs.channels import apply_csit_error, resolve_csit_error_var, sample_channels
from irsrs.experiments import ExperimentSpec, render_csv, read_results, run_experiment
from irsrs.model import (
    EffectiveChannels,
    IrsSelection,
    NetworkConfig,
    PrecoderSet,
    build_codebook,
    codebook_gram_exact,
    effective_rows,
    n_streams,
    precoder_power,
)
from irsrs.optimizer import SolverOptions, ao_solve, noma_solve
from irsrs.rates import compute_sinrs
from irsrs.wmmse import (
    equalizers_weights_from_rows,
    mmse_values,
    stream_powers,
    xi_layers_from_rows,
)

DESK = NetworkConfig(K=1, M=4, N=20, P_cols=4, Q_ones=5, P_t=100.0)
SNRS_DB = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
WEIGHT_EXPONENTS = (-3.0, -1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0, 3.0)
USABLE = ("converged", "max-iter")


def _report(tag, ok, detail):
    msg = "[%s] %s  %s" % (tag, "PASS" if ok else "FAIL", detail)
    print("\n" + msg)
    return msg


def _rand_instance(rng, K):
    """One random (cfg, channels, precoders, selection) draw at desk scale."""
    cfg = NetworkConfig(K=K, M=4, N=20, P_cols=4, Q_ones=5, P_t=100.0)
    ch = sample_channels(cfg, seed=int(rng.integers(0, 2**31)))
    shape = (cfg.M, n_streams(K))
    X = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
    pre = PrecoderSet.from_matrix(X, K)
    sel = IrsSelection(tuple(int(c) for c in rng.integers(0, cfg.P_cols, size=K)))
    return cfg, ch, pre, sel


def _power_excess(sol, cfg):
    return precoder_power(sol.precoders) - cfg.P_t


# ---------------------------------------------------------------------------
# shared Monte-Carlo fixtures


@pytest.fixture(scope="module")
def identity_instances():
    """1000 random operating points shared by the two closed-form identities."""
    rng = np.random.default_rng(20240)
    t0 = time.time()
    cb = build_codebook(4, 5)
    out = []
    for n in range(1000):
        cfg, ch, pre, sel = _rand_instance(rng, K=1 + n % 2)
        rows = effective_rows(ch, sel, cb)
        out.append((cfg, ch, pre, sel, rows, pre.as_matrix()))
    return out, cb, time.time() - t0


@pytest.fixture(scope="module")
def census():
    """100 seeded runs of the alternating solver at 20 dB, defaults."""
    t0 = time.time()
    runs = []
    for seed in range(100):
        sol = ao_solve(sample_channels(DESK, seed), DESK)
        objs = np.array([obj for _, _, obj in sol.step_trace])
        worst_rise = float(np.max(np.diff(objs))) if objs.size > 1 else 0.0
        runs.append((sol.status, worst_rise, _power_excess(sol, DESK)))
    return runs, time.time() - t0


@pytest.fixture(scope="module")
def paired_sweep():
    """Both schemes on the same 100 channel draws at each SNR point."""
    wsr = {"rs": np.zeros((len(SNRS_DB), 100)), "noma": np.zeros((len(SNRS_DB), 100))}
    excess = -np.inf
    for si, snr in enumerate(SNRS_DB):
        cfg = replace(DESK, P_t=10.0 ** (snr / 10.0))
        for seed in range(100):
            ch = sample_channels(cfg, seed)
            for name, solve in (("rs", ao_solve), ("noma", noma_solve)):
                sol = solve(ch, cfg)
                wsr[name][si, seed] = sol.wsr
                excess = max(excess, _power_excess(sol, cfg))
    return wsr, excess


@pytest.fixture(scope="module")
def region():
    """Mean (near, edge) rate points over 50 trials per weight exponent."""
    pts = {"rs": [], "noma": []}
    excess = -np.inf
    for e in WEIGHT_EXPONENTS:
        cfg = replace(DESK, user_weights=(1.0, 10.0**e))
        rates = {"rs": [], "noma": []}
        for seed in range(50):
            ch = sample_channels(cfg, seed)
            for name, solve in (("rs", ao_solve), ("noma", noma_solve)):
                sol = solve(ch, cfg)
                excess = max(excess, _power_excess(sol, cfg))
                if sol.status in USABLE:
                    r = sol.rate_report
                    rates[name].append(
                        (float(np.mean(r.R_tot_near)), float(np.mean(r.R_tot_edge)))
                    )
        for name in pts:
            pts[name].append(tuple(np.mean(rates[name], axis=0)))
    return {k: np.array(v) for k, v in pts.items()}, excess


@pytest.fixture(scope="module")
def imperfect_sweep():
    """Both schemes designed on noisy estimates, scored on true channels."""
    wsr = {"rs": np.zeros((len(SNRS_DB), 50)), "noma": np.zeros((len(SNRS_DB), 50))}
    excess = -np.inf
    for si, snr in enumerate(SNRS_DB):
        cfg = replace(DESK, P_t=10.0 ** (snr / 10.0))
        var = resolve_csit_error_var(cfg)
        for seed in range(50):
            pair = apply_csit_error(sample_channels(cfg, seed), var, seed)
            for name, solve in (("rs", ao_solve), ("noma", noma_solve)):
                sol = solve(pair.estimated, cfg, eval_channels=pair.true)
                wsr[name][si, seed] = sol.wsr
                excess = max(excess, _power_excess(sol, cfg))
    return wsr, excess


# ---------------------------------------------------------------------------
# closed-form identities


def test_wmmse_rate_identity(identity_instances):
    instances, cb, build_s = identity_instances
    t0 = time.time()
    worst = 0.0
    for cfg, ch, pre, sel, rows, X in instances:
        eq, wts = equalizers_weights_from_rows(rows, X, cfg.K)
        xi = xi_layers_from_rows(rows, X, cfg.K, eq, wts)
        gam = compute_sinrs(ch, pre, sel, cb).stacked()
        for xi_layer, gam_layer in zip(xi, gam):
            worst = max(worst, float(np.max(np.abs(xi_layer - (1.0 - np.log2(1.0 + gam_layer))))))
    elapsed = build_s + (time.time() - t0)
    ok = worst < 1e-9 and elapsed < 10.0
    msg = _report(
        "wmmse-rate-identity",
        ok,
        "max|xi - (1 - log2(1+sinr))| = %.3e (tol 1e-9) over 1000 instances x 6 "
        "streams, %.1fs (< 10s)" % (worst, elapsed),
    )
    assert ok, msg


def test_mmse_sinr_relation(identity_instances):
    instances, cb, _ = identity_instances
    worst = 0.0
    for cfg, ch, pre, sel, rows, X in instances:
        mses = mmse_values(stream_powers(ch, pre, sel, cb))
        gam = compute_sinrs(ch, pre, sel, cb).stacked()
        for eps, gam_layer in zip((mses.s, mses.group, mses.priv), gam):
            worst = max(worst, float(np.max(np.abs(eps - 1.0 / (1.0 + gam_layer)))))
    ok = worst < 1e-9
    msg = _report(
        "mmse-sinr-relation",
        ok,
        "max|eps - 1/(1+sinr)| = %.3e (tol 1e-9) over the same 1000 instances" % worst,
    )
    assert ok, msg


# ---------------------------------------------------------------------------
# codebook structure


def test_codebook_exactness():
    n_pairs = 0
    worst_float = 0.0
    exact = True
    for P in range(1, 65):
        for Q in range(1, 64 // P + 1):
            cb = build_codebook(P, Q)
            n_pairs += 1
            if not np.array_equal(codebook_gram_exact(cb), np.eye(P)):
                exact = False
            for col in cb.A.T:
                nz = col[col != 0.0]
                if nz.size != Q or not np.all(nz == 1.0 / np.sqrt(Q)):
                    exact = False
            worst_float = max(
                worst_float, float(np.max(np.abs(cb.A.T @ cb.A - np.eye(P))))
            )
    ok = exact and worst_float < 1e-12
    msg = _report(
        "codebook-exactness",
        ok,
        "support gram == I exactly and columns have Q entries == 1/sqrt(Q) for all "
        "%d shapes with P*Q <= 64; float gram off by %.3e" % (n_pairs, worst_float),
    )
    assert ok, msg


# ---------------------------------------------------------------------------
# solver behaviour at scale


def test_ao_monotone_convergence(census):
    runs, elapsed = census
    worst_rise = max(r[1] for r in runs)
    n_conv = sum(r[0] == "converged" for r in runs)
    ok = worst_rise < 1e-6 and n_conv >= 95 and elapsed < 300.0
    msg = _report(
        "ao-monotone-convergence",
        ok,
        "worst objective rise %.3e (slack 1e-6); converged %d/100 (need >= 95); "
        "%.1fs (< 300s)" % (worst_rise, n_conv, elapsed),
    )
    assert ok, msg


def test_power_feasibility(census, paired_sweep, region, imperfect_sweep):
    runs, _ = census
    worst = max(r[2] for r in runs)
    worst = max(worst, paired_sweep[1], region[1], imperfect_sweep[1])
    ok = worst < 1e-6
    msg = _report(
        "power-feasibility",
        ok,
        "max tr(PP^H) - P_t = %.3e (tol 1e-6) over %d solver runs"
        % (worst, 100 + 1400 + 1100 + 700),
    )
    assert ok, msg


# ---------------------------------------------------------------------------
# scheme comparisons


def test_rs_dominates_noma_per_seed(paired_sweep):
    wsr, _ = paired_sweep
    gaps = wsr["rs"] - wsr["noma"]
    finite = bool(np.all(np.isfinite(gaps)))
    min_gap = float(np.min(gaps)) if finite else float("nan")
    mean_20 = float(np.mean(gaps[SNRS_DB.index(20.0)]))
    ok = finite and min_gap >= -1e-3 and mean_20 > 0.0
    msg = _report(
        "rs-dominates-noma",
        ok,
        "min per-seed wsr gap %.4f (slack -1e-3) over 7 SNRs x 100 paired seeds; "
        "mean gap at 20 dB %.4f (> 0)" % (min_gap, mean_20),
    )
    assert ok, msg


def _frontier_margin(rs, n):
    """Largest min-coordinate clearance between point n and the rs frontier.

    The frontier is the curve through the averaged rs points in weight order
    (the curve the region figure draws); vertex clearance alone under-reads
    it when a noma point falls between two rs samples, so segment interiors
    count too -- any point on a segment is reachable by time-sharing its two
    endpoint designs.  On a segment min(dx(t), dy(t)) peaks at an endpoint or
    where the two gaps cross.
    """
    best = float(np.max(np.minimum(rs[:, 0] - n[0], rs[:, 1] - n[1])))
    for p, q in zip(rs[:-1], rs[1:]):
        d = q - p
        den = d[0] - d[1]
        if den != 0.0:
            t = ((n[0] - n[1]) - (p[0] - p[1])) / den
            if 0.0 < t < 1.0:
                r = p + t * d
                best = max(best, float(min(r[0] - n[0], r[1] - n[1])))
    return best


def test_rate_region_containment(region):
    pts, _ = region
    rs, noma = pts["rs"], pts["noma"]
    # every averaged noma point lies weakly inside the rs frontier
    margins = [_frontier_margin(rs, n) for n in noma]
    containment = min(margins)
    edge_gap = float(rs[-1, 1] - noma[-1, 1])  # edge-favouring extreme, 10**3
    # 'weakly outside' admits ties; different weight columns converge to the
    # shared corner only to the subproblem solver's precision (~1e-8 observed),
    # so the tie slack matches the objective-noise slack used for monotonicity
    ok = containment >= -1e-6 and edge_gap > 0.0
    msg = _report(
        "rate-region-containment",
        ok,
        "frontier containment margin %.7f (slack -1e-6) over 11 weight points x "
        "50 trials; edge-rate gap at extreme weight %.4f (> 0)" % (containment, edge_gap),
    )
    assert ok, msg


def test_imperfect_csit_ordering(paired_sweep, imperfect_sweep):
    perfect, _ = paired_sweep
    imperfect, _ = imperfect_sweep
    # paired trials: the first 50 seeds of the perfect sweep match the
    # imperfect sweep's channel draws at every SNR point
    degrade = min(
        float(np.min(np.mean(perfect[k][:, :50], axis=1) - np.mean(imperfect[k], axis=1)))
        for k in ("rs", "noma")
    )
    scheme_gaps = np.mean(imperfect["rs"] - imperfect["noma"], axis=1)
    min_scheme_gap = float(np.min(scheme_gaps))
    ok = degrade >= 0.0 and min_scheme_gap >= -1e-3
    msg = _report(
        "imperfect-csit-ordering",
        ok,
        "min mean(perfect) - mean(imperfect) over schemes/SNRs = %.4f (>= 0); "
        "mean rs-noma gap under imperfect per SNR = %s (min %.4f, slack -1e-3)"
        % (degrade, np.array2string(scheme_gaps, precision=3), min_scheme_gap),
    )
    assert ok, msg


# ---------------------------------------------------------------------------
# small-instance oracles


def _grid_wsr(cfg, ch):
    """Exhaustive M=1 search: amplitude grid per stream x columns x vertices.

    With one antenna only |p_j|^2 matters, so nonnegative amplitudes on a
    0.05*sqrt(P_t) grid cover all real precoders; the common-rate split is
    taken at its best vertex (all of each pool to the higher-weight user).
    """
    cb = build_codebook(cfg.P_cols, cfg.Q_ones)
    cache = EffectiveChannels(ch, cb)
    w_n, w_e = (1.0, 1.0) if not cfg.user_weights else cfg.user_weights
    sq = (np.linspace(0.0, 1.0, 21) * np.sqrt(cfg.P_t)) ** 2
    s2, g2, n2, e2 = (a.ravel() for a in np.meshgrid(sq, sq, sq, sq, indexing="ij"))
    keep = (s2 + g2 + n2 + e2) <= cfg.P_t + 1e-9
    s2, g2, n2, e2 = s2[keep], g2[keep], n2[keep], e2[keep]
    gn = float(np.abs(cache.near_rows[0, 0]) ** 2)
    best = 0.0
    for p in range(cfg.P_cols):
        ge = float(np.abs(cache.edge_rows[0, p, 0]) ** 2)
        cap_s = np.minimum.reduce(
            [np.log2(1.0 + g * s2 / (g * (g2 + n2 + e2) + 1.0)) for g in (gn, ge)]
        )
        cap_g = np.minimum.reduce(
            [np.log2(1.0 + g * g2 / (g * (n2 + e2) + 1.0)) for g in (gn, ge)]
        )
        r_n = np.log2(1.0 + gn * n2 / (gn * e2 + 1.0))
        r_e = np.log2(1.0 + ge * e2 / (ge * n2 + 1.0))
        wsr = max(w_n, w_e) * (cap_s + cap_g) + w_n * r_n + w_e * r_e
        best = max(best, float(wsr.max()))
    return best


def test_small_instance_grid_oracle():
    cfg = NetworkConfig(K=1, M=1, N=20, P_cols=4, Q_ones=5, P_t=100.0)
    t0 = time.time()
    rel = []
    for seed in range(5):
        ch = sample_channels(cfg, seed)
        grid = _grid_wsr(cfg, ch)
        sol = ao_solve(ch, cfg)
        rel.append((sol.wsr - grid) / grid)
    elapsed = time.time() - t0
    worst = min(rel)
    ok = worst >= -0.01 and elapsed < 30.0
    msg = _report(
        "small-instance-grid-oracle",
        ok,
        "ao vs exhaustive grid, relative gaps per seed = %s (worst %.4f, "
        "need >= -0.01); %.1fs (< 30s)"
        % (np.array2string(np.array(rel), precision=4), worst, elapsed),
    )
    assert ok, msg


def _enum_sinrs(ch, pre, sel, cb):
    """Interference-term enumeration over named stream columns.

    Builds each denominator by summing the explicit interferer set for the
    decoding stage instead of subtracting from running totals.
    """
    K = ch.K
    X = pre.as_matrix()
    out = {"s": [], "group": [], "priv": []}
    for i in range(2 * K):
        k = i % K
        if i < K:
            row = ch.h_near[k].conj()
        else:
            amp = cb.A[:, sel.cols[k]]
            row = (ch.h_edge[k].conj() * amp) @ ch.G[k]
        p2 = np.abs(row @ X) ** 2  # (3K+1,) received power per stream
        c_glob, c_grp = 0, 1 + k
        c_privs = [1 + K + j for j in range(K)] + [1 + 2 * K + j for j in range(K)]
        c_other_grps = [1 + j for j in range(K) if j != k]
        own_priv = (1 + K + k) if i < K else (1 + 2 * K + k)
        interf_s = sum(p2[c] for c in [c_grp] + c_other_grps + c_privs)
        interf_grp = sum(p2[c] for c in c_other_grps + c_privs)
        interf_priv = sum(p2[c] for c in c_other_grps + c_privs if c != own_priv)
        out["s"].append(p2[c_glob] / (interf_s + 1.0))
        out["group"].append(p2[c_grp] / (interf_grp + 1.0))
        out["priv"].append(p2[own_priv] / (interf_priv + 1.0))
    return tuple(np.array(out[key]) for key in ("s", "group", "priv"))


def test_sinr_term_enumeration():
    rng = np.random.default_rng(77)
    worst = 0.0
    for _ in range(200):
        cfg, ch, pre, sel = _rand_instance(rng, K=2)
        cb = build_codebook(cfg.P_cols, cfg.Q_ones)
        got = compute_sinrs(ch, pre, sel, cb).stacked()
        want = _enum_sinrs(ch, pre, sel, cb)
        for g, w in zip(got, want):
            worst = max(worst, float(np.max(np.abs(g - w))))
    ok = worst < 1e-10
    msg = _report(
        "sinr-term-enumeration",
        ok,
        "max |compute_sinrs - enumerator| = %.3e (tol 1e-10) over 200 K=2 "
        "instances" % worst,
    )
    assert ok, msg


# ---------------------------------------------------------------------------
# output reproducibility


def test_csv_reproducibility(tmp_path):
    cfg = NetworkConfig(K=1, M=2, N=4, P_cols=2, Q_ones=2, P_t=10.0, seed=7)
    spec = ExperimentSpec(
        cfg=cfg,
        study="wsr-vs-snr",
        scheme="both",
        trials=2,
        snr_list_db=(0.0, 10.0),
        solver=SolverOptions(max_iter=8),
    )
    first, second = run_experiment(spec), run_experiment(spec)
    text1, text2 = render_csv(first.rows), render_csv(second.rows)
    byte_identical = text1.encode() == text2.encode()
    path = tmp_path / "results.csv"
    path.write_text(text1)
    parsed = read_results(path)
    # config_hash rides along in memory for the manifest but is not a CSV
    # column, so parse-back comparison blanks it on both sides
    roundtrip = list(parsed) == [replace(r, config_hash="") for r in first.rows]
    ok = byte_identical and roundtrip
    msg = _report(
        "csv-reproducibility",
        ok,
        "two runs byte-identical over %d bytes / %d rows: %s; parse-back equals "
        "in-memory rows: %s" % (len(text1.encode()), len(first.rows), byte_identical, roundtrip),
    )
    assert ok, msg
