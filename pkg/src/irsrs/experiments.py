"""Monte-Carlo studies, the delimited results contract, and config files.

Two studies ship: a weighted-sum-rate sweep over transmit SNR, and a rate
region traced at one SNR by sweeping the edge-user weight over decades.
Trials are paired: trial t always uses channel seed (seed_base + t), so every
scheme, SNR point and CSIT condition sees the same fading realizations and
comparisons are variance-matched.

Results go to a comma-delimited file with a fixed column set (below) plus a
sibling manifest recording the resolved configuration, a hash of it, and the
modeling conventions in effect.  Floats are written with repr-style shortest
round-trip formatting, so identical runs produce byte-identical files and
parsing the file back recovers the exact in-memory values.
"""

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import apply_csit_error, resolve_csit_error_var, sample_channels
from .model import ConfigError, NetworkConfig, validate_config
from .optimizer import NOMA_SCHEME, RS_SCHEME, SolverOptions, ao_solve

TOOL_VERSION = "0.1.0"

CSV_COLUMNS = (
    "study",
    "scheme",
    "csit",
    "snr_db",
    "weight_near",
    "weight_edge",
    "mean_rate_near",
    "mean_rate_edge",
    "mean_wsr",
    "trials",
    "converged_fraction",
    "seed_base",
)

DEFAULT_SNR_GRID_DB = (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
DEFAULT_WEIGHT_EXPONENTS = (-3.0, -1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0, 3.0)

# conventions a reader of the numbers should know about
MODELING_NOTES = (
    "noma baseline is the same optimizer with the global common and edge "
    "private streams forced off; group commons carry edge messages only",
    "estimation error is added to every transmitter-side channel (direct, "
    "transmitter-to-surface, surface-to-user)",
    "csit error variance defaults to P_t ** -0.6 when not set explicitly",
    "means cover trials that produced a feasible design (converged or "
    "iteration-capped); converged_fraction counts fully converged trials",
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Resolved description of one study run.

    cfg.P_t is the operating power for the rate-region study; the SNR sweep
    overrides it per grid point.  cfg.seed is the trial seed base.
    """

    cfg: NetworkConfig
    study: str = "wsr-vs-snr"  # 'wsr-vs-snr' | 'rate-region'
    scheme: str = "both"       # 'rs' | 'noma' | 'both'
    csit: str = "perfect"      # 'perfect' | 'imperfect'
    trials: int = 100
    snr_list_db: tuple = DEFAULT_SNR_GRID_DB
    weight_exponents: tuple = DEFAULT_WEIGHT_EXPONENTS
    solver: SolverOptions = field(default_factory=SolverOptions)
    output_path: str | None = None


@dataclass(frozen=True)
class TrialResult:
    """Outcome of one channel realization under one scheme."""

    trial: int
    seed: int
    scheme: str
    status: str
    wsr: float
    rate_near: float  # mean over the K near users
    rate_edge: float


@dataclass(frozen=True)
class ResultRow:
    """One aggregated line of the delimited output."""

    study: str
    scheme: str
    csit: str
    snr_db: float
    weight_near: float
    weight_edge: float
    mean_rate_near: float
    mean_rate_edge: float
    mean_wsr: float
    trials: int
    converged_fraction: float
    seed_base: int
    config_hash: str = ""

    def csv_values(self):
        return (
            self.study,
            self.scheme,
            self.csit,
            _fmt(self.snr_db),
            _fmt(self.weight_near),
            _fmt(self.weight_edge),
            _fmt(self.mean_rate_near),
            _fmt(self.mean_rate_edge),
            _fmt(self.mean_wsr),
            str(self.trials),
            _fmt(self.converged_fraction),
            str(self.seed_base),
        )


@dataclass(frozen=True)
class RunResult:
    rows: tuple
    trial_records: tuple  # tuple of TrialResult tuples, aligned with rows
    config_hash: str
    spec: ExperimentSpec


def _fmt(v):
    """Shortest round-trip decimal form of a float."""
    return repr(float(v))


def _scheme_list(scheme):
    if scheme == "both":
        return ("rs", "noma")
    if scheme in ("rs", "noma"):
        return (scheme,)
    raise ConfigError("scheme must be rs, noma or both (got %r)" % scheme)


def _solve_one(cfg, scheme_name, csit, seed, opts):
    true_ch = sample_channels(cfg, seed)
    if csit == "imperfect":
        pair = apply_csit_error(true_ch, resolve_csit_error_var(cfg), seed)
        design_ch, eval_ch = pair.estimated, pair.true
    else:
        design_ch, eval_ch = true_ch, true_ch
    spec = RS_SCHEME if scheme_name == "rs" else NOMA_SCHEME
    return ao_solve(design_ch, cfg, opts, scheme=spec, eval_channels=eval_ch)


def run_point(cfg, scheme_name, csit, trials, opts, study, snr_db, config_hash):
    """Monte-Carlo aggregate for one (scheme, SNR, weights) coordinate."""
    records = []
    for t in range(trials):
        seed = cfg.seed + t
        sol = _solve_one(cfg, scheme_name, csit, seed, opts)
        if sol.rate_report is not None:
            rn = float(np.mean(sol.rate_report.R_tot_near))
            re_ = float(np.mean(sol.rate_report.R_tot_edge))
        else:
            rn = re_ = float("nan")
        records.append(
            TrialResult(
                trial=t,
                seed=seed,
                scheme=scheme_name,
                status=sol.status,
                wsr=sol.wsr,
                rate_near=rn,
                rate_edge=re_,
            )
        )
    usable = [r for r in records if r.status in ("converged", "max-iter")]
    n_conv = sum(1 for r in records if r.status == "converged")
    if usable:
        mean_wsr = float(np.mean([r.wsr for r in usable]))
        mean_rn = float(np.mean([r.rate_near for r in usable]))
        mean_re = float(np.mean([r.rate_edge for r in usable]))
    else:
        mean_wsr = mean_rn = mean_re = float("nan")
    K = cfg.K
    row = ResultRow(
        study=study,
        scheme=scheme_name,
        csit=csit,
        snr_db=float(snr_db),
        weight_near=float(cfg.user_weights[0]),
        weight_edge=float(cfg.user_weights[K]),
        mean_rate_near=mean_rn,
        mean_rate_edge=mean_re,
        mean_wsr=mean_wsr,
        trials=trials,
        converged_fraction=n_conv / trials,
        seed_base=cfg.seed,
        config_hash=config_hash,
    )
    return row, tuple(records)


def run_wsr_vs_snr(spec):
    """Weighted sum rate versus transmit SNR at the configured user weights."""
    h = config_hash(spec)
    rows, recs = [], []
    for snr in spec.snr_list_db:
        cfg_s = replace(spec.cfg, P_t=10.0 ** (snr / 10.0))
        for name in _scheme_list(spec.scheme):
            row, rec = run_point(
                cfg_s, name, spec.csit, spec.trials, spec.solver, "wsr-vs-snr", snr, h
            )
            rows.append(row)
            recs.append(rec)
    return RunResult(rows=tuple(rows), trial_records=tuple(recs), config_hash=h, spec=spec)


def run_rate_region(spec):
    """Near/edge rate pairs traced by sweeping the edge weight over 10**e."""
    h = config_hash(spec)
    K = spec.cfg.K
    snr = 10.0 * np.log10(spec.cfg.P_t)
    rows, recs = [], []
    for e in spec.weight_exponents:
        w = (1.0,) * K + (float(10.0 ** e),) * K
        cfg_e = replace(spec.cfg, user_weights=w)
        for name in _scheme_list(spec.scheme):
            row, rec = run_point(
                cfg_e, name, spec.csit, spec.trials, spec.solver, "rate-region", snr, h
            )
            rows.append(row)
            recs.append(rec)
    return RunResult(rows=tuple(rows), trial_records=tuple(recs), config_hash=h, spec=spec)


def run_experiment(spec):
    if spec.study == "wsr-vs-snr":
        return run_wsr_vs_snr(spec)
    if spec.study == "rate-region":
        return run_rate_region(spec)
    raise ConfigError("study must be wsr-vs-snr or rate-region (got %r)" % spec.study)


# ---------------------------------------------------------------------------
# serialization


def spec_lines(spec):
    """Canonical key=value dump of a resolved spec (hashed and manifested)."""
    c = spec.cfg
    s = spec.solver
    items = [
        ("study", spec.study),
        ("scheme", spec.scheme),
        ("csit", spec.csit),
        ("trials", spec.trials),
        ("seed", c.seed),
        ("K", c.K),
        ("M", c.M),
        ("N", c.N),
        ("P_cols", c.P_cols),
        ("Q_ones", c.Q_ones),
        ("P_t", _fmt(c.P_t)),
        ("edge_scale", _fmt(c.edge_scale)),
        ("R_th_near", ",".join(_fmt(v) for v in c.R_th_near)),
        ("R_th_edge", ",".join(_fmt(v) for v in c.R_th_edge)),
        ("user_weights", ",".join(_fmt(v) for v in c.user_weights)),
        ("csit_error_var", "auto" if c.csit_error_var is None else _fmt(c.csit_error_var)),
        ("snr_list_db", ",".join(_fmt(v) for v in spec.snr_list_db)),
        ("weight_exponents", ",".join(_fmt(v) for v in spec.weight_exponents)),
        ("tol", _fmt(s.tol)),
        ("max_iter", s.max_iter),
        ("subproblem_kkt_tol", _fmt(s.subproblem_kkt_tol)),
        ("irs_search", s.irs_search),
        ("init_power_split", _fmt(s.init_power_split)),
    ]
    return ["%s=%s" % (k, v) for k, v in items]


def config_hash(spec):
    blob = "\n".join(spec_lines(spec)).encode()
    return hashlib.sha256(blob).hexdigest()


def render_csv(rows):
    lines = [",".join(CSV_COLUMNS)]
    lines += [",".join(r.csv_values()) for r in rows]
    return "\n".join(lines) + "\n"


def manifest_path_for(csv_path):
    p = str(csv_path)
    base = p[:-4] if p.endswith(".csv") else p
    return base + ".manifest.txt"


def render_manifest(result):
    lines = ["tool=irsrs %s" % TOOL_VERSION, "config_sha256=%s" % result.config_hash]
    lines += spec_lines(result.spec)
    lines.append("rows=%d" % len(result.rows))
    lines.append("seed_scheme=channel seed is seed + trial; estimation noise uses an "
                 "independent child stream of the same seed")
    for note in MODELING_NOTES:
        lines.append("note=%s" % note)
    return "\n".join(lines) + "\n"


def write_results(result, csv_path):
    """Write the delimited rows and the sibling manifest; returns both paths."""
    csv_text = render_csv(result.rows)
    with open(csv_path, "w") as f:
        f.write(csv_text)
    mpath = manifest_path_for(csv_path)
    with open(mpath, "w") as f:
        f.write(render_manifest(result))
    return str(csv_path), mpath


def read_results(path):
    """Parse a results file back into ResultRow objects (config_hash empty)."""
    with open(path) as f:
        lines = [ln.rstrip("\n") for ln in f if ln.strip()]
    if not lines or tuple(lines[0].split(",")) != CSV_COLUMNS:
        raise ConfigError("unrecognized results header in %s" % path)
    rows = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != len(CSV_COLUMNS):
            raise ConfigError("malformed results line: %r" % ln)
        rows.append(
            ResultRow(
                study=parts[0],
                scheme=parts[1],
                csit=parts[2],
                snr_db=float(parts[3]),
                weight_near=float(parts[4]),
                weight_edge=float(parts[5]),
                mean_rate_near=float(parts[6]),
                mean_rate_edge=float(parts[7]),
                mean_wsr=float(parts[8]),
                trials=int(parts[9]),
                converged_fraction=float(parts[10]),
                seed_base=int(parts[11]),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# flat key=value config files


_INT_KEYS = {"trials", "seed", "K", "M", "N", "P_cols", "Q_ones", "max_iter"}
_FLOAT_KEYS = {"snr_db", "edge_scale", "csit_error_var", "tol", "init_power_split"}
_LIST_KEYS = {"snr_list_db", "weight_exponents", "R_th_near", "R_th_edge", "user_weights"}
_STR_KEYS = {"study", "scheme", "csit", "irs_search", "out"}
_ALL_KEYS = _INT_KEYS | _FLOAT_KEYS | _LIST_KEYS | _STR_KEYS


def parse_config_text(text):
    """Parse 'key = value' lines ('#' comments allowed) into an ExperimentSpec.

    Unknown keys and malformed values are errors; this is the gate the
    command line trusts, so it fails loudly rather than guessing.
    """
    raw = {}
    errs = []
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            errs.append("line %d: expected key=value, got %r" % (lineno, line.strip()))
            continue
        key, val = (s.strip() for s in body.split("=", 1))
        if key not in _ALL_KEYS:
            errs.append("line %d: unknown config key %r" % (lineno, key))
            continue
        if key in raw:
            errs.append("line %d: duplicate key %r" % (lineno, key))
            continue
        raw[key] = val

    def grab(key, conv, default):
        if key not in raw:
            return default
        try:
            return conv(raw[key])
        except ValueError:
            errs.append("bad value for %s: %r" % (key, raw[key]))
            return default

    def floats(s):
        return tuple(float(v) for v in s.split(","))

    K = grab("K", int, 1)
    snr_db = grab("snr_db", float, 20.0)
    r_near = grab("R_th_near", floats, (0.0,) * K)
    r_edge = grab("R_th_edge", floats, (0.0,) * K)
    weights = grab("user_weights", floats, (1.0,) * (2 * K))
    if len(r_near) == 1 and K > 1:
        r_near = r_near * K
    if len(r_edge) == 1 and K > 1:
        r_edge = r_edge * K
    cev = grab("csit_error_var", float, None)

    cfg = NetworkConfig(
        K=K,
        M=grab("M", int, 4),
        N=grab("N", int, 20),
        P_cols=grab("P_cols", int, 4),
        Q_ones=grab("Q_ones", int, 5),
        P_t=10.0 ** (snr_db / 10.0),
        edge_scale=grab("edge_scale", float, 0.3),
        R_th_near=r_near,
        R_th_edge=r_edge,
        user_weights=weights,
        csit_error_var=cev,
        seed=grab("seed", int, 0),
    )
    solver = SolverOptions(
        tol=grab("tol", float, 1e-4),
        max_iter=grab("max_iter", int, 50),
        irs_search=grab("irs_search", str, "auto"),
        init_power_split=grab("init_power_split", float, 0.5),
    )
    spec = ExperimentSpec(
        cfg=cfg,
        study=grab("study", str, "wsr-vs-snr"),
        scheme=grab("scheme", str, "both"),
        csit=grab("csit", str, "perfect"),
        trials=grab("trials", int, 100),
        snr_list_db=grab("snr_list_db", floats, DEFAULT_SNR_GRID_DB),
        weight_exponents=grab("weight_exponents", floats, DEFAULT_WEIGHT_EXPONENTS),
        solver=solver,
        output_path=grab("out", str, None),
    )
    errs += validate_spec(spec)
    if errs:
        raise ConfigError("; ".join(errs))
    return spec


def validate_spec(spec):
    errs = list(validate_config(spec.cfg))
    if spec.study not in ("wsr-vs-snr", "rate-region"):
        errs.append("study must be wsr-vs-snr or rate-region")
    if spec.scheme not in ("rs", "noma", "both"):
        errs.append("scheme must be rs, noma or both")
    if spec.csit not in ("perfect", "imperfect"):
        errs.append("csit must be perfect or imperfect")
    if spec.trials < 1:
        errs.append("trials must be >= 1")
    if spec.solver.irs_search not in ("auto", "exhaustive", "greedy"):
        errs.append("irs_search must be auto, exhaustive or greedy")
    if not spec.snr_list_db:
        errs.append("snr_list_db must not be empty")
    if not spec.weight_exponents:
        errs.append("weight_exponents must not be empty")
    return errs


def parse_config_file(path):
    with open(path) as f:
        return parse_config_text(f.read())
