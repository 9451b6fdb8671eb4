"""Command-line harness: deterministic experiment runs and CSV emission.

Subcommands
  run        execute an experiment config (JSON manifest) and write CSV
  tails      survival curves of the reference-outcome mass
  pairwise   Monte Carlo moments of a loss over instance pairs
  figures    preset bundles reproducing the standard figure layouts
  mmdtest    two-sample MMD^2 test on bitstring sample files

Every run writes two artifacts: a CSV with the fixed header

  experiment,family,n,metric,sigma,statistic,value,stderr,trials,seed

(floats at 17 significant digits; a NaN anywhere aborts the run) and a JSON
manifest holding the exact config; `run --config manifest.json` reproduces
the CSV byte for byte. The master seed comes from --seed, else the BORN_SEED
environment variable, else 0.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .bitmath import RandomStream, SampleSet, SubsetMask
from .families import FAMILY_KINDS, FamilySpec
from .lab import (
    anticoncentration_statistic,
    diagonal_observable_variance,
    distance_to_uniform_moments,
    estimate_tail_curve,
    pairwise_loss_moments,
)
from .metrics import KernelSpec, mmd2_unbiased, mmd_test_threshold

CSV_HEADER = "experiment,family,n,metric,sigma,statistic,value,stderr,trials,seed"

EXPERIMENT_KINDS = (
    "tails",
    "pairwise",
    "anticoncentration",
    "observable",
    "mmdtest",
    "uniform_distance",
)

# statevector-backed generators cannot go past the dense simulation cap
STATEVECTOR_FAMILIES = ("iqp", "peaked_iqp", "mps")

DESK_TRIALS = 10_000
PAPER_TRIALS = 100_000

FIGURE_FAMILIES = ("iqp_product", "mps", "iqp", "pareto:alpha=2", "peaked_iqp")

DEFAULT_Y_GRID = tuple(float(y) for y in np.geomspace(1e-4, 2.0, 10))


class CliError(Exception):
    """User-facing error; printed to stderr with exit status 2."""


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    families: tuple[str, ...]
    n_min: int
    n_max: int
    trials: int
    seed: int
    metrics: tuple[str, ...] = ("sd",)
    sigmas: tuple[str, ...] = ()
    n_step: int = 1
    y_grid: tuple[float, ...] = DEFAULT_Y_GRID
    subset: tuple[int, ...] = (1,)
    alpha: float = 0.05
    samples: int = 200
    workers: int | None = None
    out: str = "results.csv"

    def __post_init__(self):
        if self.experiment not in EXPERIMENT_KINDS:
            raise CliError(f"unknown experiment {self.experiment!r}; known: {EXPERIMENT_KINDS}")
        if not self.families:
            raise CliError("at least one family is required")
        for token in self.families:
            parse_family(token)  # raises on bad syntax
        if not 1 <= self.n_min <= self.n_max:
            raise CliError(f"bad n range [{self.n_min}, {self.n_max}]")
        cap = 16 if any(parse_family(t).kind in STATEVECTOR_FAMILIES for t in self.families) else 26
        if self.n_max > cap:
            raise CliError(f"n_max {self.n_max} exceeds the n <= {cap} cap for these families")
        if self.trials < 1:
            raise CliError("trials must be at least 1")
        if self.n_step < 1:
            raise CliError("n_step must be at least 1")
        if not 0.0 < self.alpha <= 1.0:
            raise CliError("alpha must be in (0, 1]")
        if self.samples < 2:
            raise CliError("samples must be at least 2")

    @property
    def n_values(self) -> tuple[int, ...]:
        return tuple(range(self.n_min, self.n_max + 1, self.n_step))


@dataclass(frozen=True)
class ExperimentRow:
    experiment: str
    family: str
    n: int
    metric: str
    sigma: float | None
    statistic: str
    value: float
    stderr: float
    trials: int
    seed: int


def parse_family(token: str) -> FamilySpec:
    """Parse 'kind' or 'kind:key=value,...' (keys alpha, k, chi)."""
    kind, _, params = token.partition(":")
    kind = kind.strip()
    if kind not in FAMILY_KINDS:
        raise CliError(f"unknown family {kind!r}; known: {FAMILY_KINDS}")
    kwargs = {}
    if params:
        for item in params.split(","):
            key, eq, value = item.partition("=")
            key = key.strip()
            if not eq or key not in ("alpha", "k", "chi"):
                raise CliError(f"bad family parameter {item!r} in {token!r}")
            kwargs[key] = float(value) if key == "alpha" else int(value)
    try:
        return FamilySpec(kind, **kwargs)
    except ValueError as e:
        raise CliError(str(e)) from e


def _format_value(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def rows_to_csv(rows: list[ExperimentRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        for name in ("value", "stderr"):
            v = getattr(r, name)
            if not math.isfinite(v):
                raise CliError(
                    f"refusing to write non-finite {name}={v!r} "
                    f"({r.experiment}/{r.family}/n={r.n}/{r.statistic})"
                )
        lines.append(
            ",".join(
                [
                    r.experiment,
                    r.family,
                    str(r.n),
                    r.metric,
                    _format_value(r.sigma),
                    r.statistic,
                    _format_value(r.value),
                    _format_value(r.stderr),
                    str(r.trials),
                    str(r.seed),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def _resolve_sigma(token: str, n: int) -> float:
    if token == "n":
        return float(n)
    try:
        return float(token)
    except ValueError:
        raise CliError(f"bad sigma {token!r} (number or 'n')") from None


def _metric_sigma_combos(config: ExperimentConfig) -> list[tuple[str, str | None]]:
    combos: list[tuple[str, str | None]] = []
    for metric in config.metrics:
        if metric == "mmd2":
            sigmas = config.sigmas or ("1",)
            combos.extend(("mmd2", s) for s in sigmas)
        else:
            combos.append((metric, None))
    return combos


def _mmdtest_rejection_rates(family, n, sigma, alpha, samples, trials, stream) -> dict:
    """Monte Carlo rejection rates of the two-sample test within one family.

    Per repetition draws two fresh instances p, q and runs the test twice:
    once with both sample sets from p (the null) and once with one set from
    each (family-typical alternative). Concentrated families are expected to
    show near-zero power here; that is the behavior being measured.
    """
    from .bitmath import validate_prob_vector
    from .circuits import sample_prob_vector
    from .lab import instance_prob_values

    spec = KernelSpec(sigma=sigma) if sigma > 0 else KernelSpec(rho=0.0)
    threshold = mmd_test_threshold(samples, samples, alpha, spec.k_max)
    counts = {"reject_rate_equal": 0, "reject_rate_distinct": 0}
    for rep in range(trials):
        rep_stream = stream.child(rep)
        masses = instance_prob_values(family, n, 2, rep_stream.child(0).generator)
        p = validate_prob_vector(masses[0], n)
        q = validate_prob_vector(masses[1], n)
        draws = [
            sample_prob_vector(p, rep_stream.child(1), samples),
            sample_prob_vector(p, rep_stream.child(2), samples),
            sample_prob_vector(q, rep_stream.child(3), samples),
        ]
        if mmd2_unbiased(draws[0], draws[1], spec) > threshold:
            counts["reject_rate_equal"] += 1
        if mmd2_unbiased(draws[0], draws[2], spec) > threshold:
            counts["reject_rate_distinct"] += 1
    return counts


def run_config(config: ExperimentConfig) -> list[ExperimentRow]:
    """Execute one experiment across the family x n grid, in a fixed order.

    Streams fan out as seed -> family index -> n -> combo index, so adding a
    family or metric never shifts the randomness of the others.
    """
    root = RandomStream(config.seed)
    rows: list[ExperimentRow] = []
    for fam_idx, token in enumerate(config.families):
        family = parse_family(token)
        for n in config.n_values:
            base = root.child(fam_idx).child(n)
            if config.experiment == "tails":
                curve = estimate_tail_curve(
                    family, n, config.y_grid, config.trials, base.child(0), config.workers
                )
                for y, est, lo, hi in zip(
                    curve.y_grid, curve.estimates, curve.ci_low, curve.ci_high
                ):
                    rows.append(
                        ExperimentRow(
                            "tails", curve.family, n, "mass", None,
                            f"tail@y={y:.12g}", est, (hi - lo) / 2, curve.trials, config.seed,
                        )
                    )
            elif config.experiment == "pairwise":
                for combo_idx, (metric, sigma_token) in enumerate(_metric_sigma_combos(config)):
                    sigma = None if sigma_token is None else _resolve_sigma(sigma_token, n)
                    report = pairwise_loss_moments(
                        family, n, metric, sigma, config.trials,
                        base.child(combo_idx), config.workers,
                    )
                    for stat, value, err in (
                        ("mean", report.mean, report.se_mean),
                        ("variance", report.variance, report.se_variance),
                    ):
                        rows.append(
                            ExperimentRow(
                                "pairwise", report.family, n, metric, sigma,
                                stat, value, err, report.trials, config.seed,
                            )
                        )
            elif config.experiment == "anticoncentration":
                rep = anticoncentration_statistic(
                    family, n, config.trials, base.child(0), config.workers
                )
                rows.append(
                    ExperimentRow(
                        "anticoncentration", rep.family, n, "mass", None,
                        "second_moment", rep.second_moment_statistic,
                        rep.second_moment_se, rep.trials, config.seed,
                    )
                )
                rows.append(
                    ExperimentRow(
                        "anticoncentration", rep.family, n, "mass", None,
                        "tail@y=0.5", rep.tail_at_half,
                        (rep.tail_ci_high - rep.tail_ci_low) / 2, rep.trials, config.seed,
                    )
                )
            elif config.experiment == "observable":
                S = SubsetMask.from_positions(config.subset, n)
                rep = diagonal_observable_variance(
                    family, n, S, config.trials, base.child(0), config.workers
                )
                for stat, value, err in (
                    ("mean", rep.mean, rep.se_mean),
                    ("variance", rep.variance, rep.se_variance),
                ):
                    rows.append(
                        ExperimentRow(
                            "observable", rep.family, n, rep.metric, None,
                            stat, value, err, rep.trials, config.seed,
                        )
                    )
            elif config.experiment == "mmdtest":
                for combo_idx, sigma_token in enumerate(config.sigmas or ("1",)):
                    sigma = _resolve_sigma(sigma_token, n)
                    rates = _mmdtest_rejection_rates(
                        family, n, sigma, config.alpha, config.samples,
                        config.trials, base.child(combo_idx),
                    )
                    for stat, count in rates.items():
                        rate = count / config.trials
                        se = math.sqrt(rate * (1 - rate) / config.trials)
                        rows.append(
                            ExperimentRow(
                                "mmdtest", family.label(), n, "mmd2", sigma,
                                stat, rate, se, config.trials, config.seed,
                            )
                        )
            else:  # uniform_distance
                rep = distance_to_uniform_moments(
                    family, n, config.trials, base.child(0), config.workers
                )
                for stat, value, err in (
                    ("mean", rep.mean, rep.se_mean),
                    ("variance", rep.variance, rep.se_variance),
                ):
                    rows.append(
                        ExperimentRow(
                            "uniform_distance", rep.family, n, rep.metric, None,
                            stat, value, err, rep.trials, config.seed,
                        )
                    )
    return rows


def write_outputs(configs: list[ExperimentConfig], rows: list[ExperimentRow], out: str):
    csv_text = rows_to_csv(rows)
    with open(out, "w", newline="") as f:
        f.write(csv_text)
    manifest = {
        "version": __version__,
        "configs": [dataclasses.asdict(c) for c in configs],
    }
    with open(out + ".manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def load_configs(path: str) -> list[ExperimentConfig]:
    with open(path) as f:
        record = json.load(f)
    raw = record["configs"] if "configs" in record else [record["config"] if "config" in record else record]
    configs = []
    for item in raw:
        item = dict(item)
        for key in ("families", "metrics", "sigmas", "y_grid", "subset"):
            if key in item and item[key] is not None:
                item[key] = tuple(item[key])
        configs.append(ExperimentConfig(**item))
    return configs


def read_sample_file(path: str) -> SampleSet:
    """Sample file: one bitstring per line, most-significant qubit first."""
    outcomes: list[int] = []
    n = None
    try:
        handle = open(path)
    except OSError as e:
        raise CliError(f"{path}: {e.strerror}") from e
    with handle:
        for lineno, line in enumerate(handle, 1):
            s = line.strip()
            if not s:
                continue
            if set(s) - {"0", "1"}:
                raise CliError(f"{path}:{lineno}: parse error: not a 0/1 bitstring: {s!r}")
            if n is None:
                n = len(s)
            elif len(s) != n:
                raise CliError(
                    f"{path}:{lineno}: parse error: length {len(s)} != {n} of first line"
                )
            outcomes.append(int(s, 2))
    if n is None:
        raise CliError(f"{path}:1: parse error: no samples in file")
    return SampleSet(n, np.asarray(outcomes, dtype=np.uint64), family=path)


def _resolve_seed(value: int | None) -> int:
    if value is not None:
        return value
    env = os.environ.get("BORN_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise CliError(f"BORN_SEED must be an integer, got {env!r}") from None
    return 0


def _add_common(parser: argparse.ArgumentParser):
    parser.add_argument("--seed", type=int, default=None, help="master seed (default: $BORN_SEED or 0)")
    parser.add_argument(
        "--workers", type=int, default=None,
        help="parallel workers (default: all cores; results do not depend on this)",
    )
    parser.add_argument("--out", default=None, help="output CSV path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bornlab",
        description="Concentration experiments for quantum generative model distributions.",
    )
    parser.add_argument("--version", action="version", version=f"bornlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run experiments from a JSON config/manifest")
    p_run.add_argument("--config", required=True, help="config or manifest JSON path")
    _add_common(p_run)

    p_tails = sub.add_parser("tails", help="reference-mass survival curves")
    p_tails.add_argument("--family", default="product", help="comma list, e.g. product,dirichlet")
    p_tails.add_argument("--n-min", type=int, default=4)
    p_tails.add_argument("--n-max", type=int, default=12)
    p_tails.add_argument("--trials", type=int, default=DESK_TRIALS)
    p_tails.add_argument("--paper-scale", action="store_true", help="use 10^5 trials")
    _add_common(p_tails)

    p_pair = sub.add_parser("pairwise", help="pairwise loss moments")
    p_pair.add_argument("--family", default="dirichlet")
    p_pair.add_argument("--metric", default="sd", help="comma list from sd,mmd2,l1,tvd")
    p_pair.add_argument("--sigma", default="1", help="comma list of bandwidths; 'n' scales with n")
    p_pair.add_argument("--n-min", type=int, default=2)
    p_pair.add_argument("--n-max", type=int, default=12)
    p_pair.add_argument("--pairs", type=int, default=DESK_TRIALS)
    p_pair.add_argument("--paper-scale", action="store_true", help="use 10^5 pairs")
    _add_common(p_pair)

    p_fig = sub.add_parser("figures", help="preset experiment bundles")
    p_fig.add_argument("kind", choices=("fig2", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"))
    p_fig.add_argument("--pairs", type=int, default=None, help="override pair/trial count")
    p_fig.add_argument("--trials", type=int, default=None, help="alias of --pairs")
    p_fig.add_argument("--paper-scale", action="store_true", help="use 10^5 pairs/trials")
    _add_common(p_fig)

    p_test = sub.add_parser("mmdtest", help="two-sample MMD^2 test on bitstring files")
    p_test.add_argument("xfile")
    p_test.add_argument("yfile")
    p_test.add_argument("--sigma", type=float, default=1.0)
    p_test.add_argument("--alpha", type=float, default=0.05)
    return parser


def figure_configs(kind: str, trials: int, seed: int, workers) -> list[ExperimentConfig]:
    common = dict(trials=trials, seed=seed, workers=workers)
    if kind == "fig2":
        return [
            ExperimentConfig(
                "tails", ("product",), n_min=4, n_max=12, n_step=4,
                y_grid=DEFAULT_Y_GRID, **common,
            )
        ]
    if kind == "fig4":
        families = ("dirichlet", "pareto:alpha=2")
        grid = tuple(float(y) for y in np.geomspace(0.01, 4.0, 12))
        return [
            ExperimentConfig("tails", families, n_min=8, n_max=12, n_step=2, y_grid=grid, **common),
            ExperimentConfig("anticoncentration", families, n_min=8, n_max=12, n_step=2, **common),
        ]
    pairwise = dict(families=FIGURE_FAMILIES, n_min=2, n_max=13, **common)
    if kind in ("fig5", "fig6"):
        return [ExperimentConfig("pairwise", metrics=("sd",), **pairwise)]
    if kind == "fig7":
        return [ExperimentConfig("pairwise", metrics=("mmd2",), sigmas=("1",), **pairwise)]
    if kind == "fig8":
        return [ExperimentConfig("pairwise", metrics=("mmd2",), sigmas=("n",), **pairwise)]
    if kind == "fig9":
        return [ExperimentConfig("pairwise", metrics=("l1", "tvd"), **pairwise)]
    raise CliError(f"unknown figure {kind!r}")


def cmd_run(args) -> int:
    configs = load_configs(args.config)
    if args.seed is not None:
        configs = [dataclasses.replace(c, seed=args.seed) for c in configs]
    if args.workers is not None:
        configs = [dataclasses.replace(c, workers=args.workers) for c in configs]
    # worker count never changes the output bytes, so manifest reruns are
    # reproducible on machines with different core counts
    rows = [row for c in configs for row in run_config(c)]
    out = args.out or configs[0].out
    write_outputs(configs, rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def cmd_tails(args) -> int:
    trials = PAPER_TRIALS if args.paper_scale else args.trials
    out = args.out or "tails.csv"
    config = ExperimentConfig(
        "tails",
        tuple(t.strip() for t in args.family.split(",")),
        n_min=args.n_min,
        n_max=args.n_max,
        trials=trials,
        seed=_resolve_seed(args.seed),
        workers=args.workers,
        out=out,
    )
    rows = run_config(config)
    write_outputs([config], rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def cmd_pairwise(args) -> int:
    pairs = PAPER_TRIALS if args.paper_scale else args.pairs
    out = args.out or "pairwise.csv"
    config = ExperimentConfig(
        "pairwise",
        tuple(t.strip() for t in args.family.split(",")),
        n_min=args.n_min,
        n_max=args.n_max,
        trials=pairs,
        seed=_resolve_seed(args.seed),
        metrics=tuple(t.strip() for t in args.metric.split(",")),
        sigmas=tuple(t.strip() for t in args.sigma.split(",")),
        workers=args.workers,
        out=out,
    )
    rows = run_config(config)
    write_outputs([config], rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def cmd_figures(args) -> int:
    trials = args.pairs if args.pairs is not None else args.trials
    if trials is None:
        trials = PAPER_TRIALS if args.paper_scale else DESK_TRIALS
    out = args.out or f"{args.kind}.csv"
    configs = figure_configs(args.kind, trials, _resolve_seed(args.seed), args.workers)
    configs = [dataclasses.replace(c, out=out) for c in configs]
    rows = [row for c in configs for row in run_config(c)]
    write_outputs(configs, rows, out)
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def cmd_mmdtest(args) -> int:
    X = read_sample_file(args.xfile)
    Y = read_sample_file(args.yfile)
    if X.n != Y.n:
        raise CliError(f"sample width mismatch: {args.xfile} has n={X.n}, {args.yfile} has n={Y.n}")
    if len(X) < 2 or len(Y) < 2:
        raise CliError("need at least 2 samples on each side")
    spec = KernelSpec(sigma=args.sigma) if args.sigma > 0 else KernelSpec(rho=0.0)
    estimate = mmd2_unbiased(X, Y, spec)
    threshold = mmd_test_threshold(len(X), len(Y), args.alpha, spec.k_max)
    verdict = "ACCEPT" if estimate <= threshold else "REJECT"
    print(f"m: {len(X)}  l: {len(Y)}  n: {X.n}  sigma: {args.sigma:g}  alpha: {args.alpha:g}")
    print(f"estimate: {estimate:.17g}")
    print(f"threshold: {threshold:.17g}")
    print(f"verdict: {verdict}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handler = {
        "run": cmd_run,
        "tails": cmd_tails,
        "pairwise": cmd_pairwise,
        "figures": cmd_figures,
        "mmdtest": cmd_mmdtest,
    }[args.command]
    try:
        return handler(args)
    except CliError as e:
        print(f"bornlab: error: {e}", file=sys.stderr)
        return 2
    except ValueError as e:
        print(f"bornlab: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
