"""Command-line pipeline: ingest, synthesize, train, evaluate, report.

Reports go to standard output as JSON; tabular artifacts are UTF-8 CSV
files with headers. Exit codes: 0 success, 1 usage error, 2 data
error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import corpus as corpus_mod
from . import metrics as metrics_mod
from .errors import DataError, NumericError
from .model_io import load_model, save_model, training_metadata
from .network import (
    ModelConfig,
    ModelParams,
    Variant,
    block_shapes,
    forward,
)
from .numkit import Rng
from .training import (
    TrainConfig,
    backward,
    evaluate_split,
    finite_diff_grad,
    max_rel_discrepancy,
    train,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(obj: dict) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [repr(v) if isinstance(v, float) else v for v in row]
            )


def _model_config_from_args(args) -> ModelConfig:
    return ModelConfig(
        variant=Variant(args.variant),
        hidden=args.hidden,
        layers=args.layers,
        window=args.window,
        t_obs=args.t_obs,
        horizons=args.horizons,
        attn=args.attn,
        pool=args.pool,
    )


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--variant",
        required=True,
        choices=[v.value for v in Variant],
        help="model variant",
    )
    parser.add_argument("--layers", type=int, default=2, help="LSTM layers")
    parser.add_argument("--hidden", type=int, default=16, help="hidden width")
    parser.add_argument(
        "--t-obs", type=int, default=5, help="observed years fed to the model"
    )
    parser.add_argument(
        "--horizons", type=int, default=5, help="years predicted past the window"
    )
    parser.add_argument(
        "--window", type=int, default=10, help="trailing input window, years"
    )
    parser.add_argument("--attn", type=int, default=16, help="attention width")
    parser.add_argument(
        "--pool",
        choices=["inputs", "joint"],
        default="joint",
        help="attention pooling target (after-recurrence variant)",
    )


def _cmd_ingest(args) -> int:
    span = tuple(args.span) if args.span else None
    corpus = corpus_mod.ingest_edge_list(args.paper_csv, args.edge_csv, span)
    length = args.t_obs + args.horizons

    if args.filter:
        ids = corpus_mod.filter_eligible(
            corpus,
            min_citations=args.min_citations,
            window=args.filter_years,
            t_obs=args.t_obs,
            horizons=args.horizons,
        )
    else:
        ids = sorted(corpus.papers)

    series_list = []
    for paper_id in ids:
        record = corpus.papers[paper_id]
        t_avail = corpus.span[1] - record.pub_year
        if t_avail < 0:
            continue
        t_max = min(length - 1, t_avail)
        series_list.append(corpus_mod.build_series(corpus, paper_id, t_max))
    if not series_list:
        raise DataError("no papers left to export")
    corpus_mod.save_series_jsonl(args.out_series, series_list)

    _emit(
        {
            "report": corpus.report.as_dict(),
            "span": list(corpus.span),
            "filtered": bool(args.filter),
            "series_written": len(series_list),
            "out": args.out_series,
        }
    )
    return 0


def _cmd_synth(args) -> int:
    rng = Rng(args.seed)
    corpus = corpus_mod.synth_corpus(
        rng,
        n_papers=args.n_papers,
        years=args.years,
        m_refs=args.m_refs,
        fitness_spread=args.spread,
        start_year=args.start_year,
        peak_years=args.peak_years,
        peak_spread=args.peak_spread,
        longevity=args.longevity,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    papers_path = os.path.join(args.out_dir, "papers.csv")
    edges_path = os.path.join(args.out_dir, "edges.csv")
    _write_csv(
        papers_path,
        ["paper_id", "pub_year"],
        [[p.paper_id, p.pub_year] for p in corpus.papers.values()],
    )
    _write_csv(
        edges_path,
        ["citing_id", "cited_id", "year"],
        [[e.citing_id, e.cited_id, e.year] for e in corpus.events],
    )
    _emit(
        {
            "papers": len(corpus.papers),
            "events": len(corpus.events),
            "span": list(corpus.span),
            "papers_csv": papers_path,
            "edges_csv": edges_path,
        }
    )
    return 0


def _load_examples(series_path: str, config: ModelConfig):
    series_list = corpus_mod.load_series_jsonl(series_path)
    examples = corpus_mod.examples_from_series(
        series_list, config.t_obs, config.horizons, config.window
    )
    if not examples:
        raise DataError(
            f"{series_path}: no series covers {config.t_obs + config.horizons} years"
        )
    return examples


def _cmd_train(args) -> int:
    mcfg = _model_config_from_args(args)
    tcfg = TrainConfig(
        epochs=args.epochs,
        seed=args.seed,
        batch_size=args.batch_size,
        rho=args.rho,
        eps=args.eps,
        early_stop_patience=args.patience,
        clip_norm=None if args.clip_norm == 0 else args.clip_norm,
    )
    examples = _load_examples(args.series, mcfg)
    if len(examples) < 2 * tcfg.batch_size:
        raise DataError(
            f"need at least {2 * tcfg.batch_size} examples "
            f"(2 x batch size), got {len(examples)}"
        )

    rng = Rng(args.seed)
    n_val = min(int(round(len(examples) * args.val_fraction)), len(examples) - 1)
    order = rng.permutation(len(examples))
    examples_val = [examples[int(i)] for i in order[:n_val]]
    examples_train = [examples[int(i)] for i in order[n_val:]]

    params, trace = train(tcfg, mcfg, examples_train, examples_val, rng)
    best_val = min(trace.val_loss) if trace.val_loss else None
    save_model(
        args.out_model, mcfg, params, training_metadata(args.seed, tcfg, best_val)
    )
    if args.trace:
        _write_csv(
            args.trace,
            ["epoch", "train_loss", "val_loss", "seconds"],
            [
                [i, trace.train_loss[i], trace.val_loss[i], trace.seconds[i]]
                for i in range(len(trace.train_loss))
            ],
        )
    _emit(
        {
            "examples": len(examples),
            "train_examples": len(examples_train),
            "val_examples": len(examples_val),
            "epochs_run": len(trace.train_loss),
            "best_val_loss": best_val,
            "model": args.out_model,
            "trace": args.trace,
        }
    )
    return 0


def _cmd_evaluate(args) -> int:
    mcfg, params, _ = load_model(args.model)
    examples = _load_examples(args.series, mcfg)
    report = evaluate_split(mcfg, params, examples, epsilon=args.epsilon)
    _write_csv(
        args.out_report,
        ["horizon", "mape", "acc"],
        [[j + 1, report.mape[j], report.acc[j]] for j in range(mcfg.horizons)],
    )

    quartile_rows = []
    if args.quartiles:
        preds = np.stack(
            [forward(mcfg, params, ex).horizon_cumulative for ex in examples]
        )
        truths = np.stack([ex.targets for ex in examples])
        groups = metrics_mod.quartile_indices(truths[:, -1])
        for q, idx in enumerate(groups, start=1):
            if idx.size == 0:
                continue
            for j in range(mcfg.horizons):
                quartile_rows.append(
                    [
                        q,
                        j + 1,
                        int(idx.size),
                        metrics_mod.mape(preds[idx, j], truths[idx, j]),
                    ]
                )
        _write_csv(
            args.quartiles, ["quartile", "horizon", "n", "mape"], quartile_rows
        )

    _emit(
        {
            "population": report.population,
            "epsilon": report.epsilon,
            "mape": report.mape,
            "acc": report.acc,
            "report": args.out_report,
            "quartiles": args.quartiles,
        }
    )
    return 0


def _cmd_dist(args) -> int:
    mcfg, params, _ = load_model(args.model)
    examples = _load_examples(args.series, mcfg)
    horizon = args.horizon if args.horizon else mcfg.horizons
    if not 1 <= horizon <= mcfg.horizons:
        raise DataError(
            f"horizon {horizon} outside the model's range 1..{mcfg.horizons}"
        )
    j = horizon - 1
    actual = [float(ex.targets[j]) for ex in examples]
    predicted = [
        float(forward(mcfg, params, ex).horizon_cumulative[j]) for ex in examples
    ]
    hist_a, hist_p, tv = metrics_mod.distribution_report(
        actual, predicted, args.bins_per_decade
    )
    rows = [[0.0, 1.0, hist_a.underflow, hist_p.underflow]]
    for i in range(len(hist_a.counts)):
        rows.append(
            [
                float(hist_a.edges[i]),
                float(hist_a.edges[i + 1]),
                int(hist_a.counts[i]),
                int(hist_p.counts[i]),
            ]
        )
    _write_csv(
        args.out_csv, ["bin_lo", "bin_hi", "count_actual", "count_predicted"], rows
    )
    _emit(
        {
            "population": hist_a.population,
            "horizon": horizon,
            "tv_distance": tv,
            "out": args.out_csv,
        }
    )
    return 0


def _random_probe(rng: Rng, config: ModelConfig) -> corpus_mod.FeatureSequence:
    inputs = rng.integers(0, 3, (config.t_obs, config.window)).astype(np.float64)
    last = int(inputs[-1].sum())
    increments = rng.integers(0, 5, config.horizons)
    return corpus_mod.FeatureSequence(
        paper_id="probe",
        inputs=inputs,
        targets=last + np.cumsum(increments),
        last_observed=last,
    )


def _probe_params(rng: Rng, config: ModelConfig) -> ModelParams:
    # Wider than training init: at +-0.08 many gradient coordinates sit
    # below the finite-difference noise floor and relative comparison
    # against the oracle is meaningless there.
    return ModelParams(
        {
            name: rng.uniform(-0.6, 0.6, shape)
            for name, shape in block_shapes(config).items()
        }
    )


def _cmd_gradcheck(args) -> int:
    mcfg = _model_config_from_args(args)
    rng = Rng(args.seed)
    worst, worst_block = 0.0, ""
    for _ in range(args.trials):
        params = _probe_params(rng, mcfg)
        example = _random_probe(rng, mcfg)
        analytic = backward(mcfg, params, example)
        if args.corrupt_gradient:
            analytic["readout.b"] = analytic["readout.b"] + 1e-3
        numeric = finite_diff_grad(mcfg, params, example, step=args.step)
        value, block = max_rel_discrepancy(analytic, numeric)
        if value > worst:
            worst, worst_block = value, block
    ok = worst <= args.tolerance
    _emit(
        {
            "trials": args.trials,
            "max_rel_error": worst,
            "worst_block": worst_block,
            "tolerance": args.tolerance,
            "pass": ok,
        }
    )
    if not ok:
        raise NumericError(
            f"gradient check failed: {worst:.3e} in {worst_block} "
            f"exceeds {args.tolerance:.1e}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="citecast",
        description="Long-term citation count forecasting from early history.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="edge-list CSVs to per-paper series JSONL")
    p.add_argument("paper_csv")
    p.add_argument("edge_csv")
    p.add_argument("out_series")
    p.add_argument(
        "--span", nargs=2, type=int, metavar=("MIN", "MAX"),
        help="closed year range; events outside are dropped",
    )
    p.add_argument(
        "--filter", action="store_true",
        help="keep only papers with enough early citations and full coverage",
    )
    p.add_argument("--min-citations", type=int, default=5)
    p.add_argument(
        "--filter-years", type=int, default=5,
        help="early-citation window for the eligibility rule",
    )
    p.add_argument("--t-obs", type=int, default=5)
    p.add_argument("--horizons", type=int, default=5)
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic citation corpus")
    p.add_argument("out_dir")
    p.add_argument("--n-papers", type=int, default=2000)
    p.add_argument("--years", type=int, default=25)
    p.add_argument("--m-refs", type=int, default=8)
    p.add_argument("--spread", type=float, default=1.0)
    p.add_argument(
        "--peak-years", type=float, default=2.0,
        help="typical age at which a paper draws most citations",
    )
    p.add_argument(
        "--peak-spread", type=float, default=0.8,
        help="across-paper spread of the citation peak age",
    )
    p.add_argument(
        "--longevity", type=float, default=0.8,
        help="log-age width of each paper's citation bump",
    )
    p.add_argument("--start-year", type=int, default=2000)
    p.add_argument("--seed", type=int, required=True)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("train", help="train one variant on a series file")
    p.add_argument("series")
    p.add_argument("out_model")
    _add_model_flags(p)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--val-fraction", type=float, default=0.15)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument(
        "--clip-norm", type=float, default=5.0, help="0 disables clipping"
    )
    p.add_argument("--rho", type=float, default=0.95)
    p.add_argument("--eps", type=float, default=1e-6)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trace", help="per-epoch loss CSV")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("evaluate", help="per-horizon MAPE/ACC of a saved model")
    p.add_argument("model")
    p.add_argument("series")
    p.add_argument("out_report")
    p.add_argument("--epsilon", type=float, default=0.3)
    p.add_argument("--quartiles", help="per-quartile MAPE CSV")
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("dist", help="actual vs predicted citation histogram")
    p.add_argument("model")
    p.add_argument("series")
    p.add_argument("out_csv")
    p.add_argument(
        "--horizon", type=int, default=0, help="1-based horizon; default last"
    )
    p.add_argument("--bins-per-decade", type=int, default=5)
    p.set_defaults(fn=_cmd_dist)

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradients")
    _add_model_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.add_argument("--step", type=float, default=3e-4)
    p.add_argument(
        "--corrupt-gradient", action="store_true", help=argparse.SUPPRESS
    )
    p.set_defaults(fn=_cmd_gradcheck)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.fn(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
