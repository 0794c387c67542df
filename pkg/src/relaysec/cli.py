"""Command-line interface.

Subcommands: solve (one realization to solution JSON), sweep (parameter
sweep to CSV), gen-data (labeled dataset generation), train (dataset to
model JSON), eval (model accuracy report), bench (solver vs surrogate
timing), oracle (small-instance brute-force comparison).

Exit codes: 0 success, 1 usage error, 2 solver or data failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .config import (
    NetworkConfig,
    config_from_dict,
    default_config,
    derive_rng,
    generate_realization,
    load_config,
)

__all__ = ["main", "cli_main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; the CLI contract
    reserves 2 for solver/data failures, so re-map to 1."""

    def error(self, message):
        raise _UsageError(message)


def _load_json(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _scenario(args) -> NetworkConfig:
    cfg = load_config(args.config) if args.config else default_config()
    if args.seed is not None:
        cfg = cfg.with_(seed=args.seed)
    return cfg


def _emit(doc: dict, out: str | None, quiet: bool) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if not quiet and not out:
        print(text)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _cmd_solve(args) -> int:
    from .experiments import solve_trial

    cfg = _scenario(args)
    rng = derive_rng(cfg.seed)
    ch = generate_realization(cfg, rng)
    tr = solve_trial(cfg, ch, rng=rng)
    doc = {
        "format_version": 1,
        "feasible": tr.feasible,
        "R_s": tr.R_s,
        "P_s": tr.P_s,
        "P_J1": tr.P_J1,
        "iters_fipsa": tr.iters_fipsa,
        "iters_spca": tr.iters_spca,
        "converged": tr.converged,
        "seed": cfg.seed,
    }
    if tr.solution is not None:
        doc["v_re"] = [float(x) for x in np.real(tr.solution.v)]
        doc["v_im"] = [float(x) for x in np.imag(tr.solution.v)]
    _emit(doc, args.out, args.quiet)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    from .experiments import SweepSpec, run_sweep, write_csv

    if not args.config:
        raise _UsageError("sweep requires --config with a sweep spec JSON")
    spec_doc = _load_json(args.config)
    base = (
        config_from_dict(spec_doc["base"]) if "base" in spec_doc else default_config()
    )
    try:
        spec = SweepSpec(
            param=spec_doc["param"],
            values=tuple(spec_doc["values"]),
            trials=args.trials if args.trials is not None else int(spec_doc.get("trials", 10)),
            base=base,
            out=args.out,
            master_seed=args.seed if args.seed is not None else int(spec_doc.get("master_seed", 0)),
            alpha_body_form=bool(spec_doc.get("alpha_body_form", False)),
        )
    except (KeyError, ValueError) as exc:
        raise _UsageError(f"invalid sweep spec: {exc}") from exc
    rows = run_sweep(spec)
    if args.out:
        write_csv(args.out, rows)
    if not args.quiet:
        for r in rows:
            print(f"{r.param}={r.value}: mean_Rs={r.mean_Rs:.4f} feas={r.feas_frac:.2f}")
    return EXIT_OK


def _cmd_gen_data(args) -> int:
    from .dnn import generate_dataset

    if not args.out:
        raise _UsageError("gen-data requires --out for the dataset path")
    cfg = _scenario(args)
    K = args.trials if args.trials is not None else 100
    generate_dataset(
        cfg, K,
        master_seed=args.seed if args.seed is not None else 0,
        out=args.out, quiet=args.quiet,
    )
    if not args.quiet:
        print(f"dataset complete: {K} samples at {args.out}")
    return EXIT_OK


def _cmd_train(args) -> int:
    from .dnn import TrainConfig, load_dataset, save_model, train

    if not args.config:
        raise _UsageError("train requires --config with {'dataset': path, ...}")
    doc = _load_json(args.config)
    if "dataset" not in doc:
        raise _UsageError("train config must name a 'dataset' path")
    if not args.out:
        raise _UsageError("train requires --out for the model path")
    samples = load_dataset(doc["dataset"])
    tc_kwargs = {
        k: doc[k]
        for k in ("epochs", "batch_size", "learning_rate", "decay_rate",
                  "dropout_keep", "val_fraction")
        if k in doc
    }
    if "hidden" in doc:
        tc_kwargs["hidden"] = tuple(doc["hidden"])
    if args.seed is not None:
        tc_kwargs["seed"] = args.seed
    tc = TrainConfig(**tc_kwargs)
    model, history = train(samples, tc, quiet=args.quiet)
    save_model(args.out, model)
    if not args.quiet:
        print(f"best validation MSE: {history['best_val_mse']:.6f} -> {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    from .dnn import channel_from_features, load_dataset, load_model, predict_point

    if not args.config:
        raise _UsageError("eval requires --config with {'model':…, 'dataset':…}")
    doc = _load_json(args.config)
    for key in ("model", "dataset"):
        if key not in doc:
            raise _UsageError(f"eval config must name a '{key}' path")
    model = load_model(doc["model"])
    samples = load_dataset(doc["dataset"])
    n_val = max(1, int(round(float(doc.get("val_fraction", 0.1)) * len(samples))))
    val = samples[len(samples) - n_val:]
    if args.trials is not None:
        val = val[: args.trials]

    base = (
        config_from_dict(doc["scenario"]) if "scenario" in doc else default_config()
    )
    rates_pred, rates_label = [], []
    for s in val:
        N, N_E = int(s.meta["N"]), int(s.meta["N_E"])
        cfg = base if (base.N, base.N_E) == (N, N_E) else default_config(N=N, N_E=N_E)
        ch = channel_from_features(s.theta, N, N_E)
        R_s, _, _, _, _ = predict_point(model, cfg, ch)
        rates_pred.append(R_s)
        rates_label.append(float(s.q[0]))
    asr_pred = float(np.mean(rates_pred))
    asr_label = float(np.mean(rates_label))
    report = {
        "format_version": 1,
        "n_eval": len(val),
        "asr_surrogate": asr_pred,
        "asr_label": asr_label,
        "relative_asr": asr_pred / asr_label if asr_label > 0 else float("nan"),
    }
    _emit(report, args.out, quiet=False)
    return EXIT_OK


def _cmd_bench(args) -> int:
    from .dnn import load_model
    from .experiments import bench_timing

    doc = _load_json(args.config) if args.config else {}
    n_grid = tuple(int(n) for n in doc.get("n_grid", (12, 24)))
    models = {
        int(n): load_model(path) for n, path in doc.get("models", {}).items()
    }
    rows = bench_timing(
        n_grid,
        trials=args.trials if args.trials is not None else 3,
        models=models or None,
        master_seed=args.seed if args.seed is not None else 0,
    )
    _emit({"format_version": 1, "rows": rows}, args.out, args.quiet)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    from .experiments import brute_force_oracle, solve_trial

    cfg = _scenario(args)
    if cfg.N > 6 or cfg.N_E > 2:
        raise _UsageError(
            "oracle is a small-instance tool: need N <= 6 and N_E <= 2"
        )
    trials = args.trials if args.trials is not None else 10
    master = args.seed if args.seed is not None else 0
    rows, diffs = [], []
    for t in range(trials):
        rng = derive_rng(master, 0, t)
        ch = generate_realization(cfg, rng)
        tr = solve_trial(cfg, ch, rng=rng, refine_relay=True)
        orc = brute_force_oracle(cfg, ch)
        diffs.append(tr.R_s - orc.R_s)
        rows.append({"trial": t, "spca_Rs": tr.R_s, "oracle_Rs": orc.R_s})
        if not args.quiet:
            print(f"trial {t}: spca={tr.R_s:.4f} oracle={orc.R_s:.4f}")
    doc = {
        "format_version": 1,
        "trials": trials,
        "median_abs_diff": float(np.median(np.abs(diffs))),
        "lower_bound_fraction": float(np.mean([d >= -0.05 for d in diffs])),
        "rows": rows,
    }
    _emit(doc, args.out, args.quiet)
    return EXIT_OK


_COMMANDS = {
    "solve": _cmd_solve,
    "sweep": _cmd_sweep,
    "gen-data": _cmd_gen_data,
    "train": _cmd_train,
    "eval": _cmd_eval,
    "bench": _cmd_bench,
    "oracle": _cmd_oracle,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="relaysec", description=__doc__)
    sub = parser.add_subparsers(dest="command")
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=str, default=None)
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--quiet", action="store_true")
    return parser


def cli_main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("a subcommand is required")
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, json.JSONDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except Exception as exc:  # noqa: BLE001
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_FAILURE


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
