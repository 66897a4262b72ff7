"""Monte Carlo driver, single-shot demo and command-line interface."""

import argparse
import csv
import io
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .frontend import FrontEndParams, generate_signs, simulate
from .model import (
    NOISELESS,
    DenseGrid,
    GridSpec,
    ModelParams,
    add_noise,
    default_grid,
    draw_signal,
    paper_params,
    parse_record,
    synthesize,
    true_support,
    validate_parameters,
)
from .recovery import (
    DEFAULT_KAPPA,
    DEFAULT_TAU,
    central_error,
    format_support,
    reconstruct,
    recover_support,
)
from .spectral import build_measurement_matrix

# Seed streams, combined with the master seed as numpy SeedSequence entropy.
_SIGNS, _SIGNAL, _NOISE, _SUBSET = 0, 1, 2, 3


@dataclass
class ExperimentConfig:
    model: ModelParams = field(default_factory=paper_params)
    frontend: FrontEndParams = field(default_factory=lambda: FrontEndParams(51, 51, 10e9))
    grid: GridSpec = None
    trials: int = 100
    snr_list: tuple = (5.0, 10.0, 15.0, 20.0, 25.0)
    channel_subsets: tuple = (10, 20, 30, 40, 51)
    master_seed: int = 0
    tau: float = DEFAULT_TAU
    kappa: float = DEFAULT_KAPPA
    sparsity: int = None
    snr_convention: str = "paper"
    random_subsets: bool = False
    output: str = None

    def __post_init__(self):
        if self.grid is None:
            self.grid = default_grid(self.model.f_nyq)
        self.snr_list = tuple(float(s) for s in self.snr_list)
        self.channel_subsets = tuple(int(c) for c in self.channel_subsets)

    @property
    def budget(self):
        return 4 * self.model.n_bands if self.sparsity is None else self.sparsity

    def problems(self):
        """Human-readable list of configuration errors (empty when valid)."""
        out = []
        report = validate_parameters(self.model, self.frontend.M, self.frontend.m)
        out += [f"{name}: {detail}" for name, ok, detail in report.checks if not ok]
        if self.model.f_nyq != self.frontend.f_nyq:
            out.append("model and front end disagree on f_nyq")
        if self.trials < 1:
            out.append("trials must be >= 1")
        if not self.channel_subsets:
            out.append("channel_subsets is empty")
        for c in self.channel_subsets:
            if not 1 <= c <= self.frontend.m:
                out.append(f"channel subset size {c} outside 1..{self.frontend.m}")
        if not self.snr_list:
            out.append("snr_list is empty")
        if self.snr_convention not in ("paper", "power"):
            out.append(f"unknown SNR convention {self.snr_convention!r}")
        if self.frontend.M % 2 == 0:
            out.append("M must be odd")
        try:
            self.frontend.decimation_factor(self.grid)
            self.grid.check_oversampled(self.model.f_nyq)
        except ValueError as exc:
            out.append(str(exc))
        return out


class ConfigError(ValueError):
    pass


def signs_seed(cfg):
    return [cfg.master_seed, _SIGNS]


def signal_seed(cfg, trial):
    return [cfg.master_seed, _SIGNAL, trial]


def noise_seed(cfg, cell, trial):
    return [cfg.master_seed, _NOISE, cell[0], cell[1], trial]


def trial_seeds(cfg):
    """Noise seed of every (cell, trial); the signal for trial k is shared by all cells."""
    return [
        tuple(noise_seed(cfg, (ci, cj), k))
        for ci in range(len(cfg.channel_subsets))
        for cj in range(len(cfg.snr_list))
        for k in range(cfg.trials)
    ]


def channel_subset(cfg, ci, size):
    if not cfg.random_subsets:
        return list(range(size))
    rng = np.random.default_rng([cfg.master_seed, _SUBSET, ci])
    return sorted(int(c) for c in rng.choice(cfg.frontend.m, size, replace=False))


TRIAL_FIELDS = (
    "trial",
    "m_bar",
    "snr_db",
    "true_support",
    "estimated_support",
    "exact_match",
    "superset_match",
    "residual",
    "wall_time",
)

SUMMARY_FIELDS = ("m_bar", "snr_db", "trials", "exact_pct", "superset_pct")


@dataclass
class TrialRecord:
    trial: int
    m_bar: int
    snr_db: float
    true_support: tuple
    estimated_support: tuple
    exact_match: bool
    superset_match: bool
    residual: float
    wall_time: float = 0.0

    def row(self):
        return {
            "trial": self.trial,
            "m_bar": self.m_bar,
            "snr_db": format_snr(self.snr_db),
            "true_support": format_support(self.true_support),
            "estimated_support": format_support(self.estimated_support),
            "exact_match": int(self.exact_match),
            "superset_match": int(self.superset_match),
            "residual": repr(self.residual),
            "wall_time": repr(self.wall_time),
        }


def format_snr(snr):
    return "inf" if snr == NOISELESS else repr(float(snr))


@dataclass
class ExperimentResult:
    records: list
    summary: dict  # (m_bar, snr) -> (exact_pct, superset_pct)

    def percentage(self, m_bar, snr):
        return self.summary[(m_bar, float(snr))][0]

    def grid(self, cfg):
        """Exact-match percentages, rows by channel subset, columns by SNR."""
        return np.array(
            [[self.percentage(c, s) for s in cfg.snr_list] for c in cfg.channel_subsets]
        )

    def trials_csv(self):
        return _csv(TRIAL_FIELDS, [r.row() for r in self.records])

    def summary_csv(self):
        rows = []
        for (m_bar, snr), (exact, sup) in self.summary.items():
            n = sum(1 for r in self.records if r.m_bar == m_bar and r.snr_db == snr)
            rows.append(
                {
                    "m_bar": m_bar,
                    "snr_db": format_snr(snr),
                    "trials": n,
                    "exact_pct": repr(exact),
                    "superset_pct": repr(sup),
                }
            )
        return _csv(SUMMARY_FIELDS, rows)


def _csv(columns, rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def manifest_text(cfg):
    lines = [
        f"package_version = {__version__}",
        f"numpy_version = {np.__version__}",
        f"master_seed = {cfg.master_seed}",
        f"signs_seed = {signs_seed(cfg)}",
        "signal_seed = [master_seed, 1, trial]",
        "noise_seed = [master_seed, 2, subset_index, snr_index, trial]",
    ]
    lines += [f"{k} = {v}" for k, v in config_items(cfg)]
    return "\n".join(lines) + "\n"


def config_items(cfg):
    mp, fp, g = cfg.model, cfg.frontend, cfg.grid
    return [
        ("f_nyq", repr(mp.f_nyq)),
        ("n_bands", mp.n_bands),
        ("band_width", repr(mp.band_width)),
        ("energies", ", ".join(repr(e) for e in mp.energies)),
        ("m", fp.m),
        ("M", fp.M),
        ("fir_taps", "auto" if fp.fir_taps is None else fp.fir_taps),
        ("fir_cutoff", repr(fp.fir_cutoff)),
        ("decimation_offset", fp.decimation_offset),
        ("grid_points", g.n_points),
        ("grid_start", repr(g.t_start)),
        ("grid_end", repr(g.t_end)),
        ("trials", cfg.trials),
        ("snr_list", ", ".join(format_snr(s) for s in cfg.snr_list)),
        ("channel_subsets", ", ".join(str(c) for c in cfg.channel_subsets)),
        ("tau", repr(cfg.tau)),
        ("kappa", repr(cfg.kappa)),
        ("sparsity", cfg.budget),
        ("snr_convention", cfg.snr_convention),
        ("random_subsets", cfg.random_subsets),
    ]


def run_experiment(cfg, record_wall_time=False, progress=None):
    """Sweep every (channel subset, SNR) cell with ``cfg.trials`` signals each.

    Signs are drawn once. Trial ``k`` uses the same signal in every cell and
    a noise realisation seeded by (master, cell, k). Recovery uses only the
    selected rows of the measurement matrix. Wall times are recorded only on
    request so that repeated runs write identical files.
    """
    issues = cfg.problems()
    if issues:
        raise ConfigError("; ".join(issues))
    fp = cfg.frontend
    signs = generate_signs(fp.m, fp.M, signs_seed(cfg))
    mm = build_measurement_matrix(signs, fp.M, fp.T)
    grid = cfg.grid

    signals = []
    for k in range(cfg.trials):
        sig = draw_signal(cfg.model, np.random.default_rng(signal_seed(cfg, k)))
        x = synthesize(sig, grid)
        signals.append((true_support(sig, fp.M), x, simulate(x, signs, fp)))

    records = []
    summary = {}
    for ci, m_bar in enumerate(cfg.channel_subsets):
        chans = channel_subset(cfg, ci, m_bar)
        sub_signs = signs.rows(chans)
        sub_mm = replace(mm, A=mm.A[chans])
        for cj, snr in enumerate(cfg.snr_list):
            exact = superset = 0
            for k, (truth, x, clean) in enumerate(signals):
                start = time.perf_counter()
                streams = clean.channels(chans)
                if snr != NOISELESS:
                    _, w = add_noise(x, snr, noise_seed(cfg, (ci, cj), k), cfg.snr_convention)
                    streams = streams + simulate(w, sub_signs, fp)
                est = recover_support(streams, sub_mm, cfg.budget, cfg.tau, cfg.kappa)
                hit = est.support == truth
                sup = set(truth) <= set(est.support)
                exact += hit
                superset += sup
                elapsed = time.perf_counter() - start if record_wall_time else 0.0
                records.append(
                    TrialRecord(k, m_bar, snr, truth, est.support, hit, sup, est.residual, elapsed)
                )
            summary[(m_bar, snr)] = (100.0 * exact / cfg.trials, 100.0 * superset / cfg.trials)
            if progress:
                progress(f"m_bar={m_bar} snr={format_snr(snr)} exact={summary[(m_bar, snr)][0]:.0f}%")

    result = ExperimentResult(records, summary)
    if cfg.output:
        write_outputs(cfg, result)
    return result


def write_outputs(cfg, result):
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trials.csv").write_text(result.trials_csv())
    (out / "summary.csv").write_text(result.summary_csv())
    (out / "manifest.txt").write_text(manifest_text(cfg))


def summary_from_trials(text):
    """Recompute exact-match percentages from a trials CSV."""
    counts = {}
    for row in csv.DictReader(io.StringIO(text)):
        key = (int(row["m_bar"]), float(row["snr_db"]))
        hits, n = counts.get(key, (0, 0))
        counts[key] = (hits + int(row["exact_match"]), n + 1)
    return {k: 100.0 * h / n for k, (h, n) in counts.items()}


def run_demo(seed=0, snr=NOISELESS, cfg=None, zero_signal=False, dump_dir=None):
    """One traced pass through the pipeline; returns the report text."""
    cfg = cfg or ExperimentConfig()
    fp, grid = cfg.frontend, cfg.grid
    signs = generate_signs(fp.m, fp.M, [seed, _SIGNS])
    mm = build_measurement_matrix(signs, fp.M, fp.T)
    sig = draw_signal(cfg.model, np.random.default_rng([seed, _SIGNAL]))
    lines = [f"seed = {seed}", f"snr_db = {format_snr(snr)}"]
    if zero_signal:
        x = DenseGrid(grid, np.zeros(grid.n_points))
        truth = ()
        lines.append("signal: zero-energy override")
    else:
        x = synthesize(sig, grid)
        truth = true_support(sig, fp.M)
        lines.append(
            "carriers_hz = " + ", ".join(f"{f:.6e}" for f in sig.carriers)
        )
        lines.append("energies = " + ", ".join(f"{e:g}" for e in cfg.model.energies))
    if snr != NOISELESS and not zero_signal:
        x_obs, _ = add_noise(x, snr, [seed, _NOISE], cfg.snr_convention)
    else:
        x_obs = x
    streams = simulate(x_obs, signs, fp)
    lines.append(
        f"streams: {streams.m} channels x {streams.length} samples at {streams.rate:.6e} Hz"
    )
    est = recover_support(streams, mm, cfg.budget, cfg.tau, cfg.kappa)
    ev = est.frame.eigvals
    lines.append(f"frame rank = {est.frame.rank} (cut = {est.frame.cut:.6e})")
    lines.append("leading eigenvalues = " + ", ".join(f"{v:.6e}" for v in ev[: cfg.budget + 1]))
    lines.append(
        f"somp: {est.report.iterations} iterations, stop = {est.report.stop_reason}, "
        f"residual = {est.residual:.3e}"
    )
    lines.append("true support = {" + ", ".join(map(str, truth)) + "}")
    lines.append("estimated support = {" + ", ".join(map(str, est.support)) + "}")
    lines.append(f"exact match = {est.support == truth}")
    rec = None
    if est.support and not zero_signal:
        rec = reconstruct(streams, mm, est.support, grid)
        err = central_error(rec.signal, x)
        lines.append(f"reconstruction relative error (central half) = {err:.4f}")
    if dump_dir is not None:
        out = Path(dump_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "streams.csv").write_text(streams.to_csv())
        rows = [x.times(), x.values] + ([rec.signal.values] if rec else [])
        names = ["t", "x"] + (["x_hat"] if rec else [])
        (out / "waveform.csv").write_text(
            ",".join(names) + "\n"
            + "".join(",".join(repr(float(v)) for v in col) + "\n" for col in zip(*rows))
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- CLI


def _floats(text):
    return tuple(math.inf if v.strip() in ("inf", "noiseless") else float(v)
                 for v in str(text).split(",") if v.strip())


def _ints(text):
    return tuple(int(v) for v in str(text).split(",") if v.strip())


def _bool(text):
    return str(text).strip().lower() in ("1", "true", "yes", "on")


# flag name -> parser for config-file values
CONFIG_KEYS = {
    "f_nyq": float,
    "n_bands": int,
    "band_width": float,
    "energies": _floats,
    "m": int,
    "M": int,
    "fir_taps": lambda v: None if str(v) == "auto" else int(v),
    "fir_cutoff": float,
    "decimation_offset": int,
    "grid_points": int,
    "grid_half": float,
    "trials": int,
    "snr_list": _floats,
    "channel_subsets": _ints,
    "master_seed": int,
    "tau": float,
    "kappa": float,
    "sparsity": int,
    "snr_convention": str,
    "random_subsets": _bool,
    "output": str,
}

DEFAULTS = {
    "f_nyq": 10e9,
    "n_bands": 3,
    "band_width": 40e6,
    "energies": (1.0, 2.0, 3.0),
    "m": 51,
    "M": 51,
    "fir_taps": None,
    "fir_cutoff": 0.5,
    "decimation_offset": 0,
    "grid_points": 80000,
    "grid_half": 4000.0,
    "trials": 100,
    "snr_list": (5.0, 10.0, 15.0, 20.0, 25.0),
    "channel_subsets": (10, 20, 30, 40, 51),
    "master_seed": 0,
    "tau": DEFAULT_TAU,
    "kappa": DEFAULT_KAPPA,
    "sparsity": None,
    "snr_convention": "paper",
    "random_subsets": False,
    "output": None,
}


def config_from_values(values):
    """Build a config from flat key/value settings (see ``CONFIG_KEYS``).

    ``grid_half`` is the half-width of the observation window in units of
    ``1/f_nyq``.
    """
    v = dict(DEFAULTS)
    unknown = set(values) - set(CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    v.update(values)
    f = v["f_nyq"]
    return ExperimentConfig(
        model=ModelParams(f, v["n_bands"], v["band_width"], v["energies"]),
        frontend=FrontEndParams(
            v["m"], v["M"], f, v["fir_taps"], v["fir_cutoff"], v["decimation_offset"]
        ),
        grid=GridSpec(-v["grid_half"] / f, v["grid_half"] / f, v["grid_points"]),
        trials=v["trials"],
        snr_list=v["snr_list"],
        channel_subsets=v["channel_subsets"],
        master_seed=v["master_seed"],
        tau=v["tau"],
        kappa=v["kappa"],
        sparsity=v["sparsity"],
        snr_convention=v["snr_convention"],
        random_subsets=v["random_subsets"],
        output=v["output"],
    )


def _add_config_flags(p):
    p.add_argument("--config", help="key = value file; flags override its entries")
    for key, conv in CONFIG_KEYS.items():
        flag = "--" + key.replace("_", "-")
        if key == "M":
            flag = "--alternations"
        if conv is _bool:
            p.add_argument(flag, dest=key, action="store_const", const=True, default=None)
        else:
            p.add_argument(flag, dest=key, type=conv, default=None)


def _collect(args):
    values = {}
    if args.config:
        for k, raw in parse_record(Path(args.config).read_text()).items():
            if k not in CONFIG_KEYS:
                raise ConfigError(f"unknown config key {k!r} in {args.config}")
            values[k] = CONFIG_KEYS[k](raw)
    for k in CONFIG_KEYS:
        val = getattr(args, k, None)
        if val is not None:
            values[k] = val
    return config_from_values(values)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mixbank", description="Random-mixing sub-Nyquist sampler simulation"
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    demo = sub.add_parser("demo", help="run one traced acquisition and recovery")
    demo.add_argument("--seed", type=int, default=0)
    demo.add_argument("--snr", type=lambda s: _floats(s)[0], default=NOISELESS,
                      help="SNR in dB, or 'inf' for noiseless (default)")
    demo.add_argument("--zero-signal", action="store_true")
    demo.add_argument("--dump", help="directory for stream and waveform CSVs")
    _add_config_flags(demo)

    exp = sub.add_parser("experiment", help="Monte Carlo recovery sweep")
    exp.add_argument("--timing", action="store_true", help="record per-trial wall time")
    _add_config_flags(exp)

    val = sub.add_parser("validate", help="check a parameter set")
    _add_config_flags(val)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _collect(args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.command == "validate":
        report = validate_parameters(cfg.model, cfg.frontend.M, cfg.frontend.m)
        for line in report.lines():
            print(line)
        issues = cfg.problems()
        reported = {f"{name}: {detail}" for name, ok, detail in report.checks}
        for issue in issues:
            if issue not in reported:
                print(f"FAIL  {issue}")
        return 0 if not issues else 1

    issues = cfg.problems()
    if issues:
        for issue in issues:
            print(f"error: {issue}", file=sys.stderr)
        return 1

    if args.command == "demo":
        sys.stdout.write(run_demo(args.seed, args.snr, cfg, args.zero_signal, args.dump))
        return 0

    start = time.perf_counter()
    result = run_experiment(cfg, record_wall_time=args.timing,
                            progress=lambda s: print(s, file=sys.stderr))
    grid = result.grid(cfg)
    header = "m_bar \\ snr " + " ".join(f"{format_snr(s):>6}" for s in cfg.snr_list)
    print(header)
    for c, row in zip(cfg.channel_subsets, grid):
        print(f"{c:>11} " + " ".join(f"{v:6.1f}" for v in row))
    print(f"elapsed {time.perf_counter() - start:.1f} s", file=sys.stderr)
    return 0
