"""Alternating optimizer for the weighted sum rate, plus the NOMA baseline.

One outer iteration visits four blocks, each solved exactly with the others
held fixed, so the surrogate objective (weighted MSE total) never increases:

  1. surface columns   -- pick the feasible codebook column combination with
                          the lowest objective (table lookup per candidate);
  2. common-rate split -- a small linear program with a closed-form greedy
                          optimum: caps go to the heaviest eligible users
                          after covering everyone's rate floors;
  3. equalizers/weights-- componentwise MMSE closed forms;
  4. precoders+slices  -- compiled convex QCQP over the precoders and the
                          common-rate slices jointly (see precoder_qp), which
                          re-balances power between common and private layers
                          in one step and supersedes step 2's split.

Blocks 3-4 are swept precoder_passes times per outer iteration: the pair
alternates exactly, so extra sweeps sharpen the iterate the convergence test
sees without touching the selection or the split bookkeeping.  Block 4 is
conic and solved to finite accuracy; its result is kept only when it
improves the objective (the incumbent is always feasible for it), so the
recorded descent is monotone by construction, not by solver precision.

The surrogate is kept in the natural-log convention (costs u*eps - ln u,
rates in nats) because there u = 1/eps is the exact componentwise weight
minimizer; rate caps, floors and reported rates stay in bits, entering the
surrogate through a factor ln 2.  At an MMSE-consistent point the surrogate
equals sum_i w_i (1 - ln2 * R_i), so driving it down drives the weighted sum
rate up.  The NOMA baseline is the same machinery with the global common and
edge private streams forced off and the group commons carrying edge messages
only.
"""

import itertools
from dataclasses import dataclass

import numpy as np

from .model import (
    EffectiveChannels,
    IrsSelection,
    ModelError,
    PrecoderSet,
    RateAllocation,
    build_codebook,
    effective_rows,
    ensure_valid,
)
from .precoder_qp import SubproblemError, get_subproblem
from .rates import clip_allocation, compute_sinrs, rates_from_sinrs, total_rates
from .wmmse import equalizers_weights_from_rows, xi_layers_nat_from_rows


@dataclass(frozen=True)
class SchemeSpec:
    """Which streams the transmitter may use and who may take common rate."""

    name: str
    global_stream: bool       # global common precoder and rate slices
    edge_private: bool        # dedicated private streams for edge users
    group_near_eligible: bool  # near users may take group-common rate


RS_SCHEME = SchemeSpec("rs", True, True, True)
NOMA_SCHEME = SchemeSpec("noma", False, False, False)


@dataclass(frozen=True)
class SolverOptions:
    """Knobs of the alternating optimizer.

    tol                  stop when the objective moves less than this
    max_iter             outer iteration cap
    precoder_passes      equalizer/precoder refinement sweeps per outer
                         iteration; each sweep is itself a descent step, so
                         more sweeps buy faster outer convergence for extra
                         subproblem solves
    subproblem_kkt_tol   feasibility slack granted to subproblem solutions
    irs_search           'exhaustive', 'greedy', or 'auto' (exhaustive while
                         the candidate count P_cols**K stays <= 256)
    init_power_split     fraction of the power budget given to common streams
                         at initialization
    """

    tol: float = 1e-4
    max_iter: int = 50
    precoder_passes: int = 6
    subproblem_kkt_tol: float = 1e-6
    irs_search: str = "auto"
    init_power_split: float = 0.5


@dataclass(frozen=True)
class Solution:
    """Final operating point plus the audit trail of the descent."""

    scheme: str
    precoders: PrecoderSet
    alloc: RateAllocation
    selection: IrsSelection
    equalizers: object
    weights: object
    trace: tuple            # surrogate objective after each full iteration
    step_trace: tuple       # (iteration, block-name, objective) after each block
    status: str             # converged | max-iter | infeasible | solver-failure
    n_iter: int
    wsr: float
    rate_report: object

    @property
    def converged(self):
        return self.status == "converged"


# ---------------------------------------------------------------------------
# initialization


def _normalize(v):
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        e = np.zeros_like(v)
        e[0] = 1.0
        return e
    return v / nrm


def initial_selection(cache):
    """Start each pair on its strongest effective column.

    The matched-filter start is then computed against the surface
    configuration the optimizer would keep anyway, which shortens the
    transient compared to an arbitrary fixed column.
    """
    gains = np.linalg.norm(cache.edge_rows, axis=2)  # (K, P_cols)
    return IrsSelection(tuple(int(np.argmax(g)) for g in gains))


def init_precoders(rows, cfg, opts, scheme=RS_SCHEME):
    """Matched-filter start: privates along their own channels, commons along
    sums of *normalized* user channels, power split between the two classes.

    Normalizing before summing keeps the common directions from tilting toward
    the strong near users; with the raw sum the first precoder update
    over-corrects and the descent spends many iterations walking back.
    """
    K, M = cfg.K, cfg.M
    n_common = (1 if scheme.global_stream else 0) + K
    n_priv = K + (K if scheme.edge_private else 0)
    p_common = opts.init_power_split * cfg.P_t / n_common
    p_priv = (1.0 - opts.init_power_split) * cfg.P_t / n_priv

    h = rows.conj()  # channel vectors (precoder side)
    hn = np.array([_normalize(h[i]) for i in range(2 * K)])
    p_global = np.zeros(M, dtype=complex)
    if scheme.global_stream:
        p_global = np.sqrt(p_common) * _normalize(hn.sum(axis=0))
    p_group = np.zeros((K, M), dtype=complex)
    p_near = np.zeros((K, M), dtype=complex)
    p_edge = np.zeros((K, M), dtype=complex)
    for k in range(K):
        p_group[k] = np.sqrt(p_common) * _normalize(hn[k] + hn[K + k])
        p_near[k] = np.sqrt(p_priv) * _normalize(h[k])
        if scheme.edge_private:
            p_edge[k] = np.sqrt(p_priv) * _normalize(h[K + k])
    return PrecoderSet(p_global=p_global, p_group=p_group, p_near=p_near, p_edge=p_edge)


# ---------------------------------------------------------------------------
# block 1: surface column selection


_LN2 = float(np.log(2.0))


def _candidate_cost(rows, X, K, eq, wts, alloc, cfg, scheme, feas_tol):
    """(objective, feasible) of one column combination at fixed everything.

    Costs are in the natural-log convention; rate quantities (slices, floors)
    are in bits, hence the ln2 factors in the budgets.
    """
    xi_s, xi_g, xi_p = xi_layers_nat_from_rows(rows, X, K, eq, wts)
    C_s, C_g = alloc.stacked()
    xi_tot = -_LN2 * (C_s + C_g) + xi_p
    feas = True
    if scheme.global_stream and np.max(xi_s) > 1.0 - _LN2 * alloc.global_total() + feas_tol:
        feas = False
    B_g = 1.0 - _LN2 * alloc.group_totals()
    pair_max = np.maximum(xi_g[:K], xi_g[K:])
    if np.any(pair_max > B_g + feas_tol):
        feas = False
    if np.any(xi_tot > 1.0 - _LN2 * cfg.thresholds_arr + feas_tol):
        feas = False
    return float(cfg.weights_arr @ xi_tot), feas


def select_irs_columns(cache, pre, alloc, eq, wts, cfg, opts, scheme, current):
    """Lowest-objective feasible column per surface; ties keep the lowest
    column indices; falls back to `current` if no candidate is feasible."""
    K = cfg.K
    X = pre.as_matrix()
    ftol = opts.subproblem_kkt_tol
    mode = opts.irs_search
    if mode == "auto":
        mode = "exhaustive" if cfg.P_cols ** K <= 256 else "greedy"

    def cost(cols):
        rows = cache.rows(IrsSelection(cols))
        return _candidate_cost(rows, X, K, eq, wts, alloc, cfg, scheme, ftol)

    if mode == "exhaustive":
        best, best_obj = None, np.inf
        for cols in itertools.product(range(cfg.P_cols), repeat=K):
            obj, feas = cost(cols)
            if feas and obj < best_obj:
                best, best_obj = cols, obj
        return IrsSelection(best) if best is not None else current
    if mode == "greedy":
        cols = list(current.cols)
        for k in range(K):
            best, best_obj = None, np.inf
            for c in range(cfg.P_cols):
                trial = cols.copy()
                trial[k] = c
                obj, feas = cost(tuple(trial))
                if feas and obj < best_obj:
                    best, best_obj = c, obj
            if best is not None:
                cols[k] = best
        return IrsSelection(tuple(cols))
    raise ValueError("unknown irs_search mode: %r" % mode)


# ---------------------------------------------------------------------------
# block 2: common-rate split


_NEED_TOL = 1e-9


def update_common_allocation(xi_s, xi_group, xi_priv, cfg, scheme=RS_SCHEME):
    """Weight-optimal split of the common-rate caps implied by current costs.

    Inputs are natural-log layer costs; caps, floors and the returned slices
    are rates in bits.  Solves the underlying linear program in closed form:
    rate floors are covered from the cheaper group pools first and the global
    pool second, then each leftover pool goes whole to its heaviest eligible
    user (ties prefer the edge user, then the lowest pair index).  Returns
    None when the floors cannot be covered.
    """
    K = cfg.K
    w = cfg.weights_arr
    R_th = cfg.thresholds_arr

    cap_s = max(0.0, (1.0 - float(np.max(xi_s))) / _LN2) if scheme.global_stream else 0.0
    cap_g = np.maximum(0.0, (1.0 - np.maximum(xi_group[:K], xi_group[K:])) / _LN2)
    # a floor demands surrogate-rate coverage; no floor demands nothing, even
    # when a dead private stream prices its surrogate rate slightly negative
    need = np.where(R_th > 0.0, np.maximum(0.0, R_th - (1.0 - xi_priv) / _LN2), 0.0)

    C_s = np.zeros(2 * K)
    C_g = np.zeros(2 * K)
    group_left = cap_g.copy()

    # cover floors from the group pools (only they can feed group slices)
    for k in range(K):
        members = ([k] if scheme.group_near_eligible else []) + [K + k]
        for i in members:
            give = min(need[i], group_left[k])
            C_g[i] += give
            need[i] -= give
            group_left[k] -= give

    # remaining floors fall to the global pool
    global_left = cap_s
    for i in range(2 * K):
        if need[i] <= _NEED_TOL:
            continue
        if not scheme.global_stream:
            return None
        give = min(need[i], global_left)
        C_s[i] += give
        global_left -= give
        if need[i] - give > _NEED_TOL:
            return None
        need[i] -= give

    # leftovers go whole to the heaviest eligible user
    for k in range(K):
        if group_left[k] <= 0.0:
            continue
        members = ([k] if scheme.group_near_eligible else []) + [K + k]
        best = max(members, key=lambda i: (w[i], i >= K))
        C_g[best] += group_left[k]
    if scheme.global_stream and global_left > 0.0:
        best = max(range(2 * K), key=lambda i: (w[i], i >= K, -(i % K if i < K else i - K)))
        C_s[best] += global_left

    return RateAllocation(
        C_s_near=C_s[:K], C_s_edge=C_s[K:], C_g_near=C_g[:K], C_g_edge=C_g[K:]
    )


# ---------------------------------------------------------------------------
# blocks 3-4: MMSE closed forms and the precoder program


def update_equalizers_weights(ch, pre, sel, cb):
    """Componentwise-optimal equalizers and weights at the current precoders."""
    rows = effective_rows(ch, sel, cb)
    return equalizers_weights_from_rows(rows, pre.as_matrix(), ch.K)


def update_precoders(rows, eq, wts, cfg, scheme=RS_SCHEME):
    """Solve the joint precoder/slice program at fixed (selection, g, u).

    Returns the new precoders together with the common-rate split the program
    settled on (the slice variables mapped back to bits and clamped against
    solver slop).  Starting from any split produced by the allocation step the
    current iterate is feasible here, so in exact arithmetic this is a descent
    step; near stationarity the conic solver's accuracy floor can still hand
    back a marginally worse point, which the driver rejects.
    """
    K = cfg.K
    qos = tuple(i for i, t in enumerate(cfg.thresholds_arr) if t > 0.0)
    sub = get_subproblem(
        K, cfg.M, scheme.global_stream, scheme.edge_private, scheme.group_near_eligible, qos
    )
    # the conic solver meets the ball constraint only to its feasibility
    # tolerance (stretched to ~1e-5 absolute on extreme-weight instances), and
    # rescaling afterwards injects objective noise above the descent slack on
    # stiff instances -- so shave the budget instead: every solver slip then
    # lands strictly inside the true budget and iterates descend exactly
    sub.fill(rows, eq, wts, cfg, cfg.P_t * (1.0 - 1e-5))
    X, ds, dg = sub.solve()
    used = float(np.sum(np.abs(X) ** 2))
    if used > cfg.P_t:  # backstop; unreachable while slips stay below the shave
        X = X * np.sqrt(cfg.P_t / used)
    C_s = np.maximum(0.0, -ds / _LN2)
    C_g = np.maximum(0.0, -dg / _LN2)
    alloc = RateAllocation(
        C_s_near=C_s[:K], C_s_edge=C_s[K:], C_g_near=C_g[:K], C_g_edge=C_g[K:]
    )
    return PrecoderSet.from_matrix(X, K), alloc


# ---------------------------------------------------------------------------
# driver


def _objective(rows, X, K, eq, wts, alloc, cfg):
    """Surrogate objective (natural-log convention) at the full point."""
    _, _, xi_p = xi_layers_nat_from_rows(rows, X, K, eq, wts)
    C_s, C_g = alloc.stacked()
    return float(cfg.weights_arr @ (-_LN2 * (C_s + C_g) + xi_p))


def _descend(cache, cfg, opts, scheme, init_scheme):
    """One full alternating descent from the init_scheme-shaped start.

    Returns the loop state as a dict; ao_solve picks among starts and wraps
    the winner into a Solution.
    """
    K = cfg.K

    sel = initial_selection(cache)
    rows = cache.rows(sel)
    pre = init_precoders(rows, cfg, opts, init_scheme)
    eq, wts = equalizers_weights_from_rows(rows, pre.as_matrix(), K)
    alloc = RateAllocation.zeros(K)

    obj = _objective(rows, pre.as_matrix(), K, eq, wts, alloc, cfg)
    step_trace = [(0, "init", obj)]
    trace = [obj]
    status = "max-iter"
    n_iter = opts.max_iter

    for it in range(1, opts.max_iter + 1):
        sel = select_irs_columns(cache, pre, alloc, eq, wts, cfg, opts, scheme, sel)
        rows = cache.rows(sel)
        X = pre.as_matrix()
        step_trace.append((it, "select", _objective(rows, X, K, eq, wts, alloc, cfg)))

        xi_s, xi_g, xi_p = xi_layers_nat_from_rows(rows, X, K, eq, wts)
        new_alloc = update_common_allocation(xi_s, xi_g, xi_p, cfg, scheme)
        if new_alloc is None:
            status = "infeasible"
            n_iter = it
            break
        alloc = new_alloc
        step_trace.append((it, "allocate", _objective(rows, X, K, eq, wts, alloc, cfg)))

        failed = False
        for _ in range(max(1, opts.precoder_passes)):
            eq, wts = equalizers_weights_from_rows(rows, X, K)
            obj = _objective(rows, X, K, eq, wts, alloc, cfg)
            step_trace.append((it, "equalize", obj))
            try:
                cand_pre, cand_alloc = update_precoders(rows, eq, wts, cfg, scheme)
            except SubproblemError:
                status = "solver-failure"
                n_iter = it
                failed = True
                break
            cand_obj = _objective(rows, cand_pre.as_matrix(), K, eq, wts, cand_alloc, cfg)
            if cand_obj > obj:
                # the incumbent is feasible for the program, so a worse return
                # is solver slop near stationarity; keep the iterate, and stop
                # sweeping -- identical inputs would reproduce the same return
                step_trace.append((it, "precode", obj))
                break
            pre, alloc, obj = cand_pre, cand_alloc, cand_obj
            X = pre.as_matrix()
            step_trace.append((it, "precode", obj))
        if failed:
            break
        trace.append(obj)
        if abs(trace[-1] - trace[-2]) < opts.tol:
            status = "converged"
            n_iter = it
            break

    return dict(
        pre=pre, alloc=alloc, sel=sel, eq=eq, wts=wts,
        trace=trace, step_trace=step_trace, status=status,
        n_iter=n_iter, obj=trace[-1],
    )


def ao_solve(ch_est, cfg, opts=None, scheme=RS_SCHEME, eval_channels=None):
    """Alternate to a stationary point and return the best start's Solution.

    Schemes with restriction-prone extra streams (the global common and the
    edge privates) descend twice: once from the matched-filter start over all
    streams, and once running the baseline restriction itself (group commons
    carrying only edge messages, extra streams silent).  Every point of the
    restricted descent is feasible for the richer scheme, so keeping the
    better of the two finals bounds the richer scheme below by the baseline
    it contains instead of leaving that to basin luck.  Starts are compared
    by the WSR each design achieves on ch_est -- fresh MMSE receivers, the
    common split clipped to its caps -- i.e. by what the transmitter believes
    each design delivers, never by the stale surrogate, and never using
    eval_channels.

    Designs against ch_est; the reported rates and WSR are evaluated on
    eval_channels (defaults to ch_est) with the common-rate split clipped to
    the caps actually achievable there, so a mismatched design never reports
    rates it cannot deliver.
    """
    opts = opts or SolverOptions()
    ensure_valid(cfg)
    if ch_est.K != cfg.K or ch_est.M != cfg.M or ch_est.N != cfg.N:
        raise ModelError(
            "channel dims (K=%d, M=%d, N=%d) do not match config (K=%d, M=%d, N=%d)"
            % (ch_est.K, ch_est.M, ch_est.N, cfg.K, cfg.M, cfg.N)
        )
    cb = build_codebook(cfg.P_cols, cfg.Q_ones)
    cache = EffectiveChannels(ch_est, cb)

    starts = [scheme]
    if scheme.global_stream or scheme.edge_private:
        starts.append(NOMA_SCHEME)
    runs = [_descend(cache, cfg, opts, s, s) for s in starts]
    usable = [r for r in runs if r["status"] in ("converged", "max-iter")]
    if usable:
        best = max(
            usable,
            key=lambda r: _evaluate(
                ch_est, r["pre"], r["sel"], cb, r["alloc"], cfg, r["status"]
            )[1],
        )
    else:
        best = runs[0]

    eval_ch = eval_channels if eval_channels is not None else ch_est
    report, final_wsr = _evaluate(
        eval_ch, best["pre"], best["sel"], cb, best["alloc"], cfg, best["status"]
    )
    return Solution(
        scheme=scheme.name,
        precoders=best["pre"],
        alloc=best["alloc"],
        selection=best["sel"],
        equalizers=best["eq"],
        weights=best["wts"],
        trace=tuple(best["trace"]),
        step_trace=tuple(best["step_trace"]),
        status=best["status"],
        n_iter=best["n_iter"],
        wsr=final_wsr,
        rate_report=report,
    )


def _evaluate(ch, pre, sel, cb, alloc, cfg, status):
    if status in ("infeasible", "solver-failure"):
        return None, float("nan")
    sr = rates_from_sinrs(compute_sinrs(ch, pre, sel, cb))
    clipped = clip_allocation(alloc, sr)
    report = total_rates(ch, pre, sel, cb, clipped, cfg.user_weights)
    return report, report.wsr


def noma_solve(ch_est, cfg, opts=None, eval_channels=None):
    """Baseline: group commons carry only the edge messages, no global layer,
    no edge privates -- classic two-user power-domain superposition per pair."""
    return ao_solve(ch_est, cfg, opts, scheme=NOMA_SCHEME, eval_channels=eval_channels)
