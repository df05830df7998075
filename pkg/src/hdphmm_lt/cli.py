"""Command-line entry point: ``hdphmm-lt {simulate,fit,evaluate,validate}``.

``fit`` reads a JSON config holding the model settings plus a ``data``
section (and optionally ``test_data``) understood by
:func:`hdphmm_lt.dataio.load_dataset`; relative paths resolve against the
config file's directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import model
from .checkpoint import checkpoint_load, checkpoint_save
from .datagen import CocktailParams, SynthHdpParams, gen_cocktail, gen_hdp_hmm
from .dataio import (load_dataset, read_matrix_csv, write_matrix_csv, write_symbol_sequences)
from .errors import HdpLtError, InputError
from .metrics import f1_binary, hamming_metric
from .rand import RandomStream


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_trace(path: Path, lines) -> None:
    """Write pre-formatted trace rows (lists of strings) under the standard header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(model.TRACE_COLUMNS)
        writer.writerows(lines)


# -- simulate ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.kind == "cocktail":
        p = CocktailParams(speakers=args.speakers, groups=args.groups, steps=args.steps,
                           channels=args.channels, noise_sd=args.noise_sd, seed=args.seed)
        d = gen_cocktail(p)
        write_matrix_csv(out / "observations.csv", d.observations, prefix="ch")
        write_matrix_csv(out / "truth.csv", d.truth, prefix="s")
        write_matrix_csv(out / "W.csv", d.W, prefix="ch")
        layout = {"observations": "observations.csv", "truth": "truth.csv", "W": "W.csv"}
    else:
        p = SynthHdpParams(J=args.J, D=args.D, K=args.K, T=args.steps, n_sequences=args.sequences,
                           emission=args.emission, V=args.V, kernel=args.kernel, lam=args.lam,
                           seed=args.seed)
        d = gen_hdp_hmm(p)
        if p.emission == "categorical":
            write_symbol_sequences(out / "symbols.txt", d.sequences)
            layout = {"symbols": "symbols.txt"}
        else:
            names = [f"observations_{i}.csv" for i in range(len(d.sequences))]
            truths = [f"truth_{i}.csv" for i in range(len(d.sequences))]
            for name, tname, seq, truth in zip(names, truths, d.sequences, d.truth):
                write_matrix_csv(out / name, seq, prefix="ch")
                write_matrix_csv(out / tname, truth, prefix="s")
            write_matrix_csv(out / "W.csv", d.W, prefix="ch")
            layout = {"observations": names, "truth": truths, "W": "W.csv"}
    _write_json(out / "dataset.json", layout)
    print(f"wrote dataset to {out}")
    return 0


# -- fit -----------------------------------------------------------------------------------


def _load_config(args):
    path = Path(args.config)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from exc
    except ValueError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc
    if "data" not in raw:
        raise InputError(f"{path}: config needs a 'data' section")
    base = path.parent
    data = load_dataset(raw["data"], base)
    test = load_dataset(raw["test_data"], base) if raw.get("test_data") else None
    body = {k: v for k, v in raw.items() if k not in ("data", "test_data")}
    for flag, key in (("seed", "seed"), ("chains", "chains"), ("iters", "iterations"),
                      ("burn_in", "burn_in"), ("thin", "thin"), ("variant", "variant")):
        value = getattr(args, flag)
        if value is not None:
            body[key] = value
    if test is not None and "test_surprisal" not in body.get("metrics", []):
        body["metrics"] = list(body.get("metrics", ["f1", "hamming"])) + ["test_surprisal"]
    return model.ModelConfig.from_dict(body), data, test


def _summary(config, lines, results, data) -> dict:
    """Posterior means per chain over post-burn-in trace rows, plus averaged-matrix scores."""
    metrics = {"variant": config.variant, "chains": len(results), "iterations": config.iterations,
               "burn_in": config.burn_in}
    keys = ("lambda", "alpha", "gamma", "kappa", "n_states", "f1", "hamming", "train_loglik",
            "test_surprisal")
    col = {c: i for i, c in enumerate(model.TRACE_COLUMNS)}
    per_chain = []
    for c in range(len(results)):
        rows = [r for r in lines if int(r[0]) == c and int(r[1]) > config.burn_in]
        entry = {}
        for k in keys:
            vals = [float(r[col[k]]) for r in rows if r[col[k]] != ""]
            entry[k] = float(np.mean(vals)) if vals else None
        per_chain.append(entry)
    metrics["per_chain"] = per_chain
    for k in keys:
        vals = [c[k] for c in per_chain if c[k] is not None]
        metrics[f"mean_{k}"] = float(np.mean(vals)) if vals else None
    avg = model.averaged_state_matrix(results)
    if avg is not None and data.truth is not None:
        pred, truth = np.concatenate(avg), data.truth_concat()
        metrics["averaged_matrix_f1"] = f1_binary(pred, truth)
        metrics["averaged_matrix_hamming_rate"] = hamming_metric(pred, truth)[1]
    return metrics


def cmd_fit(args) -> int:
    config, data, test = _load_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    root = RandomStream(config.seed)
    if args.resume:
        states, _ = checkpoint_load(args.resume)
        if len(states) != config.chains:
            raise InputError(f"checkpoint holds {len(states)} chains, config asks for {config.chains}")
        results = [model.run_chain(config, data, test=test, state=s, chain=c) for c, s in enumerate(states)]
    else:
        results = [model.run_chain(config, data, root.split(c), test, chain=c) for c in range(config.chains)]
    lines = [[_fmt(row[c]) for c in model.TRACE_COLUMNS] for r in results for row in r.trace]
    trace_path = out / "trace.csv"
    if args.resume and trace_path.exists():
        with open(trace_path, newline="", encoding="utf-8") as fh:
            lines = list(csv.reader(fh))[1:] + lines
    lines = sorted(lines, key=lambda row: (int(row[0]), int(row[1])))
    write_trace(trace_path, lines)
    avg = model.averaged_state_matrix(results)
    if avg is not None:
        write_matrix_csv(out / "state_matrix_mean.csv", np.concatenate(avg), prefix="s")
    _write_json(out / "metrics.json", _summary(config, lines, results, data))
    checkpoint_save([r.state for r in results], out / "checkpoint.bin", config)
    print(f"fitted {config.chains} chain(s) of {config.variant}; outputs in {out}")
    return 0


# -- evaluate ------------------------------------------------------------------------------


def cmd_evaluate(args) -> int:
    pred = read_matrix_csv(args.pred)
    truth = read_matrix_csv(args.truth, dtype=np.int8)
    count, rate = hamming_metric(pred, truth)
    result = {"f1": f1_binary(pred, truth), "hamming": count, "hamming_rate": rate}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "metrics.json", result)
    print(json.dumps(result, sort_keys=True))
    return 0


# -- validate ------------------------------------------------------------------------------


def cmd_validate(args) -> int:
    from . import validation

    rng = RandomStream(args.seed)
    report = {}
    ok = True
    if args.suite in ("oracles", "all"):
        oracle = validation.conditional_oracle_suite(rng.split(0))
        report["oracles"] = oracle.to_dict()
        ok &= oracle.passed
    if args.suite in ("geweke", "all"):
        gw = validation.geweke_test(validation.tiny_config(), args.samples, rng.split(1))
        report["geweke"] = gw.to_dict()
        ok &= gw.passed
    text = validation.format_report(report)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "validation.json", report)
        (out / "validation.txt").write_text(text + "\n", encoding="utf-8")
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hdphmm-lt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="write a synthetic dataset")
    sim.add_argument("kind", choices=["cocktail", "hdp-hmm"])
    sim.add_argument("--out", required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--speakers", type=int, default=16)
    sim.add_argument("--groups", type=int, default=4)
    sim.add_argument("--steps", type=int, default=2000)
    sim.add_argument("--channels", type=int, default=12)
    sim.add_argument("--noise-sd", type=float, default=0.3)
    sim.add_argument("--J", type=int, default=8)
    sim.add_argument("--D", type=int, default=4)
    sim.add_argument("--K", type=int, default=6)
    sim.add_argument("--V", type=int, default=30)
    sim.add_argument("--sequences", type=int, default=1)
    sim.add_argument("--emission", choices=["linear_gaussian", "categorical"], default="linear_gaussian")
    sim.add_argument("--kernel", choices=["gaussian_euclidean", "laplacian_hamming"], default=None)
    sim.add_argument("--lam", type=float, default=1.0)
    sim.set_defaults(func=cmd_simulate)

    fit = sub.add_parser("fit", help="run Gibbs chains")
    fit.add_argument("--config", required=True)
    fit.add_argument("--out", required=True)
    fit.add_argument("--seed", type=int)
    fit.add_argument("--chains", type=int)
    fit.add_argument("--iters", type=int)
    fit.add_argument("--burn-in", type=int)
    fit.add_argument("--thin", type=int)
    fit.add_argument("--variant", choices=list(model.VARIANTS))
    fit.add_argument("--resume", metavar="CHECKPOINT", help="continue the chains stored in CHECKPOINT")
    fit.set_defaults(func=cmd_fit)

    ev = sub.add_parser("evaluate", help="score a state matrix against ground truth")
    ev.add_argument("--pred", required=True)
    ev.add_argument("--truth", required=True)
    ev.add_argument("--out")
    ev.set_defaults(func=cmd_evaluate)

    val = sub.add_parser("validate", help="run the sampler-correctness suites")
    val.add_argument("--suite", choices=["oracles", "geweke", "all"], default="all")
    val.add_argument("--samples", type=int, default=5000)
    val.add_argument("--seed", type=int, default=0)
    val.add_argument("--out")
    val.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (HdpLtError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
