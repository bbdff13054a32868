"""Command-line interface: direction discovery, quantile-bin analysis, grids.

Every command emits CSV (stdout by default, a file with ``--out``). File
outputs get a flat key=value manifest next to them that pins the resolved
configuration, the seed, and a content hash of the input, which is enough
to replay the run. Report figures are rendered alongside file outputs
unless ``--no-plot`` is given.

Exit codes: 0 success, 2 usage or schema problems, 3 numeric failures.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import LinAlgError

from . import __version__
from .classifier import MIN_ROWS, Direction, DirectionDecision, ProblemSpec, decide
from .dataset import Dataset
from .errors import NumericError
from .independence import KciConfig
from .kernel import BandwidthPolicy
from .simulation import (
    DEFAULT_NS,
    DEFAULT_QS,
    DEFAULT_RHOS,
    DEFAULT_TAUS,
    KAPPA_NAMES,
    DgpConfig,
    default_grid,
    draw_sample,
    replicate_seed,
    run_grid,
)

_MISSING_TOKENS = {"", "na", "nan", "null", "none"}
_FULL_REPS = 500


@dataclass(frozen=True)
class QuantileReport:
    """Per-bin decisions for one quantile count; empty decisions mean skipped."""

    n_q: int
    decisions: tuple[DirectionDecision, ...]
    skip_reason: str | None = None

    def __post_init__(self) -> None:
        if self.n_q < 2:
            raise ValueError(f"need at least 2 quantile bins, got {self.n_q}")
        if self.decisions and len(self.decisions) != self.n_q:
            raise ValueError(f"expected {self.n_q} decisions, got {len(self.decisions)}")

    def _share(self, outcome: Direction) -> float:
        return sum(d.outcome is outcome for d in self.decisions) / len(self.decisions)

    @property
    def share_causal(self) -> float:
        return self._share(Direction.X_TO_Y)

    @property
    def share_anticausal(self) -> float:
        return self._share(Direction.Y_TO_X)

    @property
    def share_inconclusive(self) -> float:
        return self._share(Direction.INCONCLUSIVE)


def read_csv_columns(path: Path, names: tuple[str, ...]) -> tuple[dict[str, np.ndarray], int]:
    """Parse the named columns as reals; drop rows with missing values.

    Returns the columns plus the dropped-row count. An unparseable,
    non-missing field is a schema error naming its row and column.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty file; a header row is required")
        header = [h.strip() for h in header]
        missing_cols = [n for n in names if n not in header]
        if missing_cols:
            raise ValueError(f"{path}: missing columns {missing_cols}; header has {header}")
        indices = {n: header.index(n) for n in names}
        kept: list[list[float]] = []
        dropped = 0
        for row_number, row in enumerate(reader, start=2):
            values = []
            missing = False
            for name in names:
                idx = indices[name]
                field = row[idx].strip() if idx < len(row) else ""
                if field.lower() in _MISSING_TOKENS:
                    missing = True
                    continue
                try:
                    value = float(field)
                except ValueError:
                    raise ValueError(
                        f"{path}: row {row_number}, column {name!r}: "
                        f"cannot parse {field!r} as a real number"
                    ) from None
                if not math.isfinite(value):
                    missing = True
                    continue
                values.append(value)
            if missing:
                dropped += 1
            else:
                kept.append(values)
        columns = {
            name: np.array([r[i] for r in kept]) for i, name in enumerate(names)
        }
        return columns, dropped


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(out_path: Path, command: str, settings: dict[str, object]) -> Path:
    manifest_path = out_path.with_suffix(out_path.suffix + ".manifest")
    lines = [f"command={command}", f"version={__version__}"]
    lines += [f"{key}={settings[key]}" for key in sorted(settings)]
    manifest_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return manifest_path


def read_manifest(path: Path) -> dict[str, str]:
    entries = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        if line:
            key, _, value = line.partition("=")
            entries[key] = value
    return entries


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8", newline="")


def _decision_csv(decision: DirectionDecision, n_dropped: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["outcome", "stat_causal", "stat_anticausal", "n_train", "n_test", "seed", "n_dropped"]
    )
    writer.writerow(
        [
            decision.outcome.value,
            repr(decision.stat_causal),
            repr(decision.stat_anticausal),
            decision.n_train,
            decision.n_test,
            decision.seed,
            n_dropped,
        ]
    )
    return buf.getvalue()


def _problem_spec(args: argparse.Namespace, w: tuple[str, ...]) -> ProblemSpec:
    policy = BandwidthPolicy(fixed=args.bandwidth)
    return ProblemSpec(
        x=args.x, y=args.y, w=w, seed=args.seed,
        kci=KciConfig(bandwidth_policy=policy, ridge=args.ridge),
    )


def cmd_discover(args: argparse.Namespace) -> int:
    w = tuple(args.w)
    spec = _problem_spec(args, w)
    columns, dropped = read_csv_columns(args.csv, (args.x, args.y, *w))
    n = len(next(iter(columns.values())))
    if n < MIN_ROWS:
        raise ValueError(f"{args.csv}: need at least {MIN_ROWS} complete rows, found {n}")
    if dropped:
        print(f"note: dropped {dropped} rows with missing values", file=sys.stderr)
    data = Dataset.from_columns(columns)
    decision = decide(data, spec)
    _emit(_decision_csv(decision, dropped), args.out)
    if args.out is not None:
        write_manifest(
            args.out, "discover",
            {
                "csv": args.csv, "x": args.x, "y": args.y, "w": ",".join(w),
                "seed": args.seed, "bandwidth": args.bandwidth, "ridge": args.ridge,
                "out": args.out, "input_sha256": _sha256_file(args.csv),
            },
        )
    return 0


def _quantile_bins(values: np.ndarray, n_q: int) -> np.ndarray:
    """Bin index per row; boundary ties go to the lower bin."""
    edges = np.quantile(values, np.arange(1, n_q) / n_q)
    return np.searchsorted(edges, values, side="left")


def run_quantile_analysis(
    data: Dataset, spec_template: ProblemSpec, bin_values: np.ndarray,
    nq_min: int, nq_max: int,
) -> list[QuantileReport]:
    reports = []
    for n_q in range(nq_min, nq_max + 1):
        bins = _quantile_bins(bin_values, n_q)
        sizes = np.bincount(bins, minlength=n_q)
        if sizes.min() < MIN_ROWS:
            reports.append(QuantileReport(
                n_q=n_q, decisions=(),
                skip_reason=f"smallest bin has {int(sizes.min())} rows (< {MIN_ROWS})",
            ))
            continue
        try:
            decisions = tuple(
                decide(data.take(np.flatnonzero(bins == b)), spec_template)
                for b in range(n_q)
            )
        except (ValueError, NumericError, LinAlgError) as exc:
            reports.append(QuantileReport(n_q=n_q, decisions=(), skip_reason=str(exc)))
            continue
        reports.append(QuantileReport(n_q=n_q, decisions=decisions))
    return reports


def _quantile_csv(reports: list[QuantileReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["n_q", "status", "share_causal", "share_anticausal", "share_inconclusive"]
    )
    for report in reports:
        if report.decisions:
            writer.writerow([
                report.n_q, "ok",
                repr(report.share_causal),
                repr(report.share_anticausal),
                repr(report.share_inconclusive),
            ])
        else:
            writer.writerow([report.n_q, "skipped", "", "", ""])
    return buf.getvalue()


def cmd_quantiles(args: argparse.Namespace) -> int:
    if args.nq_min < 2 or args.nq_max < args.nq_min:
        raise ValueError(f"need 2 <= nq-min <= nq-max, got [{args.nq_min}, {args.nq_max}]")
    if args.bin_col in (args.x, args.y):
        raise ValueError("the binning column cannot be x or y")
    w = tuple(name for name in args.w if name != args.bin_col)
    spec = _problem_spec(args, w)
    columns, dropped = read_csv_columns(args.csv, (args.x, args.y, *w, args.bin_col))
    n = len(next(iter(columns.values())))
    if n < MIN_ROWS:
        raise ValueError(f"{args.csv}: need at least {MIN_ROWS} complete rows, found {n}")
    if dropped:
        print(f"note: dropped {dropped} rows with missing values", file=sys.stderr)
    bin_values = columns.pop(args.bin_col)
    data = Dataset.from_columns(columns)
    reports = run_quantile_analysis(data, spec, bin_values, args.nq_min, args.nq_max)
    for report in reports:
        if report.skip_reason:
            print(f"note: n_q={report.n_q} skipped: {report.skip_reason}", file=sys.stderr)
    _emit(_quantile_csv(reports), args.out)
    if args.out is not None:
        write_manifest(
            args.out, "quantiles",
            {
                "csv": args.csv, "x": args.x, "y": args.y, "w": ",".join(args.w),
                "bin_col": args.bin_col, "nq_min": args.nq_min, "nq_max": args.nq_max,
                "seed": args.seed, "bandwidth": args.bandwidth, "ridge": args.ridge,
                "out": args.out, "input_sha256": _sha256_file(args.csv),
            },
        )
        if not args.no_plot:
            from .report import save_quantile_figure

            save_quantile_figure(reports, args.out.with_suffix(".png"))
    return 0


def _parse_grid(text: str, kind, flag: str, allowed: tuple | None = None) -> tuple:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError(f"{flag}: empty grid")
    try:
        values = tuple(kind(p) for p in parts)
    except ValueError:
        raise ValueError(f"{flag}: cannot parse {text!r}") from None
    if allowed is not None:
        bad = [v for v in values if v not in allowed]
        if bad:
            raise ValueError(f"{flag}: values {bad} not in {allowed}")
    return values


def _grid_csv(result_cells) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["kappa", "tau", "rho", "q", "n", "target_var", "reps", "n_correct", "accuracy", "seconds"]
    )
    for cell in result_cells:
        cfg = cell.config
        writer.writerow([
            cfg.kappa, repr(cfg.tau), cfg.rho, repr(cfg.q), cfg.n, repr(cfg.target_var),
            cell.n_reps, cell.n_correct, repr(cell.accuracy), f"{cell.seconds:.3f}",
        ])
    return buf.getvalue()


def emitted_data_path(directory: Path, cfg: DgpConfig) -> Path:
    name = f"sample_{cfg.kappa}_tau{cfg.tau:g}_rho{cfg.rho}_q{cfg.q:g}_n{cfg.n}.csv"
    return directory / name


def _emit_cell_data(directory: Path, grid: list[DgpConfig], base_seed: int) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    for cfg in grid:
        sample = draw_sample(
            DgpConfig(
                kappa=cfg.kappa, tau=cfg.tau, rho=cfg.rho, q=cfg.q, n=cfg.n,
                target_var=cfg.target_var, seed=replicate_seed(base_seed, cfg, 0),
            )
        )
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(sample.names)
        for row in sample.values:
            writer.writerow([repr(float(v)) for v in row])
        emitted_data_path(directory, cfg).write_text(buf.getvalue(), encoding="utf-8", newline="")


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.full:
        kappas, taus, rhos = KAPPA_NAMES, DEFAULT_TAUS, DEFAULT_RHOS
        qs, ns, reps = DEFAULT_QS, DEFAULT_NS, _FULL_REPS
    else:
        kappas = _parse_grid(args.kappa, str, "--kappa", allowed=KAPPA_NAMES)
        taus = _parse_grid(args.tau_grid, float, "--tau-grid")
        rhos = _parse_grid(args.rho_grid, int, "--rho-grid", allowed=(0, 1))
        qs = _parse_grid(args.q_grid, float, "--q-grid")
        ns = _parse_grid(args.n_grid, int, "--n-grid")
        reps = args.reps
    grid = default_grid(kappas, taus, rhos, qs, ns, target_var=args.var)
    if args.emit_data is not None:
        _emit_cell_data(args.emit_data, grid, args.seed)
    result = run_grid(grid, reps, base_seed=args.seed, workers=args.workers)
    total_failed = sum(c.n_failed for c in result.cells)
    if total_failed:
        print(f"warning: {total_failed} replicates failed and were excluded", file=sys.stderr)
    _emit(_grid_csv(result.cells), args.out)
    if args.out is not None:
        write_manifest(
            args.out, "simulate",
            {
                "kappa": ",".join(kappas),
                "tau_grid": ",".join(repr(t) for t in taus),
                "rho_grid": ",".join(str(r) for r in rhos),
                "q_grid": ",".join(repr(q) for q in qs),
                "n_grid": ",".join(str(n) for n in ns),
                "reps": reps, "var": args.var, "seed": args.seed,
                "workers": args.workers, "out": args.out,
                "emit_data": args.emit_data if args.emit_data is not None else "",
            },
        )
        if not args.no_plot:
            from .report import save_grid_figure

            save_grid_figure(result.cells, args.out.with_suffix(".png"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causedir",
        description="Decide the causal direction between two columns of a dataset.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("csv", type=Path, help="input CSV with a header row")
        p.add_argument("--x", required=True, help="candidate cause column")
        p.add_argument("--y", required=True, help="candidate effect column")
        p.add_argument("--w", action="append", default=[], help="control column (repeatable)")
        p.add_argument("--seed", type=int, default=0, help="seed for the train/test split")
        p.add_argument("--bandwidth", type=float, default=None,
                       help="fixed kernel bandwidth (default: sample-size heuristic)")
        p.add_argument("--ridge", type=float, default=1e-3,
                       help="ridge of the conditional independence statistic")
        p.add_argument("--out", type=Path, default=None, help="write CSV here instead of stdout")
        p.add_argument("--no-plot", action="store_true", help="skip the report figure")

    p_discover = sub.add_parser("discover", help="decide the direction between --x and --y")
    add_common(p_discover)
    p_discover.set_defaults(func=cmd_discover)

    p_quant = sub.add_parser(
        "quantiles", help="run the classifier separately within quantile bins of a column"
    )
    add_common(p_quant)
    p_quant.add_argument("--bin-col", required=True, help="column whose quantiles define the bins")
    p_quant.add_argument("--nq-min", type=int, default=4)
    p_quant.add_argument("--nq-max", type=int, default=20)
    p_quant.set_defaults(func=cmd_quantiles)

    p_sim = sub.add_parser("simulate", help="Monte Carlo accuracy grid over the DGP settings")
    p_sim.add_argument("--kappa", default=",".join(KAPPA_NAMES),
                       help="comma list of mean functions (k1,k2)")
    p_sim.add_argument("--tau-grid", default=",".join(str(t) for t in DEFAULT_TAUS))
    p_sim.add_argument("--rho-grid", default=",".join(str(r) for r in DEFAULT_RHOS))
    p_sim.add_argument("--q-grid", default=",".join(str(q) for q in DEFAULT_QS))
    p_sim.add_argument("--n-grid", default=",".join(str(n) for n in DEFAULT_NS))
    p_sim.add_argument("--reps", type=int, default=100, help="replications per cell")
    p_sim.add_argument("--var", type=float, default=1.0, help="target error variance")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--workers", type=int, default=1, help="parallel replicate workers")
    p_sim.add_argument("--out", type=Path, default=None)
    p_sim.add_argument("--emit-data", type=Path, default=None,
                       help="also write one sample dataset per cell into this directory")
    p_sim.add_argument("--full", action="store_true",
                       help="full study grid at 500 replications (hours, not CI)")
    p_sim.add_argument("--no-plot", action="store_true", help="skip the report figure")
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (NumericError, LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry_point() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entry_point()
