"""Command-line front door: validation reports, 1D simulations, training runs,
comparisons, and memory accounting.

Exit codes: 0 success, 1 validation failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import difflib
import json
import sys
from dataclasses import dataclass

import numpy as np

from . import harness as hn
from . import optim
from . import quantize as qz
from . import theory
from . import validation


class ConfigError(Exception):
    pass


@dataclass
class CliConfig:
    """A parsed, validated command configuration (plain JSON-able payload)."""

    command: str
    params: dict


# ---------------------------------------------------------------------------
# config parsing


def _reject_unknown(d: dict, known, context: str):
    for key in d:
        if key not in known:
            hint = difflib.get_close_matches(key, list(known), n=1)
            suggest = f"; did you mean {hint[0]!r}?" if hint else ""
            raise ConfigError(f"unknown key {key!r} in {context}{suggest}")


_HYPER_KEYS = ("eta", "beta1", "beta2", "epsilon", "weight_decay", "clip_norm")
_GRID_KEYS = {
    "identity": (),
    "fixed_step": ("delta",),
    "uniform_max": ("rho",),
    "int_symmetric": ("bits",),
    "fp8_e4m3": (),
    "noise_model": ("delta",),
}
_OBJECTIVE_KEYS = {
    "quadratic1d": ("l", "theta0"),
    "quadratic_nd": ("dim", "l_max", "l_min", "off_grid_center"),
    "linear_regression": ("n", "dim", "noise"),
    "mlp2": ("d_in", "hidden", "d_out", "n_samples", "noise", "init_spread"),
}
_TRAIN_KEYS = ("objective", "optimizer", "mode", "hyper", "quant", "steps", "seed",
               "lr_schedule", "metrics_every", "quantize_io", "batch_size")
_SCHEDULE_KEYS = {"constant": (), "cosine": ("peak", "floor", "warmup_frac")}


def _validated_section(d: dict, kinds: dict, context: str) -> dict:
    if not isinstance(d, dict) or "kind" not in d:
        raise ConfigError(f"{context} must be an object with a 'kind' key")
    kind = d["kind"]
    if kind not in kinds:
        hint = difflib.get_close_matches(kind, list(kinds), n=1)
        suggest = f"; did you mean {hint[0]!r}?" if hint else ""
        raise ConfigError(f"unknown {context} kind {kind!r}{suggest}")
    _reject_unknown({k: v for k, v in d.items() if k != "kind"}, kinds[kind], context)
    return d


def parse_train_dict(raw: dict) -> dict:
    """Validate a raw train config and fill defaults; returns the normalized dict."""
    if not isinstance(raw, dict):
        raise ConfigError("train config must be a JSON object")
    _reject_unknown(raw, _TRAIN_KEYS, "train config")
    for required in ("objective", "optimizer", "mode", "hyper", "steps", "seed"):
        if required not in raw:
            raise ConfigError(f"train config is missing required key {required!r}")
    cfg = dict(raw)
    cfg["objective"] = _validated_section(raw["objective"], _OBJECTIVE_KEYS, "objective")
    _reject_unknown(raw["hyper"], _HYPER_KEYS, "hyper")
    if "quant" in raw and raw["quant"] is not None:
        q = dict(raw["quant"])
        grid = _validated_section(q.get("grid", {"kind": "identity"}), _GRID_KEYS, "grid")
        _reject_unknown({k: v for k, v in q.items() if k != "grid"},
                        ("rounding", "granularity"), "quant")
        q["grid"] = grid
        q.setdefault("rounding", "rtn")
        q.setdefault("granularity", "tensor")
        cfg["quant"] = q
    else:
        cfg["quant"] = None
    cfg["lr_schedule"] = _validated_section(
        raw.get("lr_schedule", {"kind": "constant"}), _SCHEDULE_KEYS, "lr_schedule")
    cfg.setdefault("metrics_every", 1)
    cfg.setdefault("quantize_io", False)
    cfg.setdefault("batch_size", None)
    return cfg


def parse_config(path: str) -> CliConfig:
    """Load and validate a train config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return CliConfig(command="train", params=parse_train_dict(raw))


def serialize_config(cfg: CliConfig) -> str:
    return json.dumps(cfg.params, indent=2, sort_keys=True)


def _build_grid(d: dict) -> qz.Grid:
    kind = d["kind"]
    if kind == "identity":
        return qz.Identity()
    if kind == "fixed_step":
        return qz.FixedStep(float(d["delta"]))
    if kind == "uniform_max":
        return qz.UniformMax(float(d["rho"]))
    if kind == "int_symmetric":
        return qz.IntSymmetric(int(d["bits"]))
    if kind == "fp8_e4m3":
        return qz.Fp8E4M3()
    return qz.NoiseModel(float(d["delta"]))


def _build_objective(d: dict, seed: int):
    kind = d["kind"]
    if kind == "quadratic1d":
        return hn.Quadratic1D(L=float(d.get("l", 1.0)), theta0=float(d.get("theta0", 1.0)))
    if kind == "quadratic_nd":
        dim = int(d.get("dim", 10))
        l_max = float(d.get("l_max", 1.0))
        l_min = float(d.get("l_min", 0.1))
        rng = np.random.default_rng(seed + 101)
        center = rng.uniform(-0.53, 0.53, size=dim) if d.get("off_grid_center", True) else None
        return hn.QuadraticND(H=np.diag(np.linspace(l_min, l_max, dim)), center=center)
    if kind == "linear_regression":
        n = int(d.get("n", 64))
        dim = int(d.get("dim", 8))
        rng = np.random.default_rng(seed + 202)
        X = rng.normal(size=(n, dim))
        w = rng.normal(size=dim)
        y = X @ w + float(d.get("noise", 0.01)) * rng.normal(size=n)
        return hn.LinearRegression(X=X, y=y)
    fields = {k: d[k] for k in ("d_in", "hidden", "d_out", "n_samples") if k in d}
    fields = {k: int(v) for k, v in fields.items()}
    if "noise" in d:
        fields["noise"] = float(d["noise"])
    if "init_spread" in d:
        fields["init_spread"] = float(d["init_spread"])
    return hn.Mlp2(**fields)


def build_train_config(params: dict) -> hn.TrainConfig:
    """Materialize domain objects from a normalized train dict."""
    try:
        hyper = optim.Hyper(**params["hyper"])
        quant = None
        if params["quant"] is not None:
            quant = qz.QuantSpec(
                grid=_build_grid(params["quant"]["grid"]),
                rounding=qz.Rounding(params["quant"]["rounding"]),
                granularity=qz.Granularity(params["quant"]["granularity"]),
            )
        sched = params["lr_schedule"]
        if sched["kind"] == "cosine":
            schedule = hn.CosineSchedule(peak=float(sched["peak"]), floor=float(sched["floor"]),
                                         warmup_frac=float(sched.get("warmup_frac", 0.1)))
        else:
            schedule = hn.ConstantSchedule()
        seed = int(params["seed"])
        return hn.TrainConfig(
            objective=_build_objective(params["objective"], seed),
            optimizer=params["optimizer"],
            mode=params["mode"],
            hyper=hyper,
            quant=quant,
            steps=int(params["steps"]),
            seed=seed,
            lr_schedule=schedule,
            metrics_every=int(params["metrics_every"]),
            quantize_io=bool(params["quantize_io"]),
            batch_size=params["batch_size"] if params["batch_size"] is None else int(params["batch_size"]),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# commands


def _cmd_validate_theory(args) -> int:
    only = set(args.only) if args.only else None
    try:
        results = validation.run_all(only=only, progress=lambda r: print(r.summary()))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    report = {
        "all_passed": all(r.passed for r in results),
        "criteria": [
            {"name": r.name, "passed": r.passed, "seconds": round(r.seconds, 3),
             "measured": r.measured, "detail": r.detail}
            for r in results
        ],
    }
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
        print(f"report written to {args.out}")
    return 0 if report["all_passed"] else 1


def _float_list(text: str) -> list:
    try:
        return [float(tok) for tok in text.split(",") if tok]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _cmd_simulate_1d(args) -> int:
    regimes = [tok for tok in args.regime.split(",") if tok]
    for regime in regimes:
        if regime not in theory.REGIMES:
            raise ConfigError(f"unknown regime {regime!r}; expected mw, naive or eco")
    etas = _float_list(args.eta)
    betas = _float_list(args.beta)
    if args.sigma2 <= 0:
        raise ConfigError("sigma2 must be > 0")
    delta = float(np.sqrt(12.0 * args.sigma2))
    lines = ["eta,beta,regime,closed_form_u,monte_carlo_u,rel_err"]
    row = 0
    for eta in etas:
        for beta in betas:
            for regime in regimes:
                if not theory.stability_check(args.L, eta, beta):
                    raise ConfigError(f"eta={eta} beta={beta} violates the stability bound")
                closed = theory.stationary_grad_sq(regime, args.L, eta, beta, args.sigma2) / args.L ** 2
                mc = theory.monte_carlo_1d(regime, args.L, eta, beta, delta,
                                           steps=args.steps, seed=args.seed + row)
                rel = abs(mc - closed) / closed
                lines.append(f"{eta:.17g},{beta:.17g},{regime},{closed:.17g},{mc:.17g},{rel:.17g}")
                row += 1
    _write_lines(args.out, lines)
    return 0


def _write_lines(path, lines):
    text = "\n".join(lines) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_train(args) -> int:
    cli_cfg = parse_config(args.config)
    record = hn.run_training(build_train_config(cli_cfg.params))
    record.write_csv(args.out)
    if record.diverged:
        print(f"run diverged; partial record written to {args.out}")
    else:
        print(f"record written to {args.out}")
    return 0


def _bytes_for_config(params: dict) -> float:
    quantized = params["quant"] is not None and params["quant"]["grid"]["kind"] != "identity"
    weights = "fp8" if quantized else "fp32"
    master = "fp32" if params["mode"] == "mw" else "none"
    v = "fp32" if params["optimizer"] == "adam" else "none"
    return theory.memory_bytes_per_param(weights, master, "fp32", v)


def _cmd_compare(args) -> int:
    lines = ["index,config,final_loss,diverged,bytes_per_param"]
    for i, path in enumerate(args.configs):
        params = parse_config(path).params
        record = hn.run_training(build_train_config(params))
        final = float(record.loss[-1]) if len(record.loss) else float("nan")
        lines.append(f"{i},{path},{final:.17g},{int(record.diverged)},"
                     f"{_bytes_for_config(params):.17g}")
    _write_lines(args.out, lines)
    return 0


def _cmd_memory(args) -> int:
    total = theory.memory_bytes_per_param(args.weights, args.master, args.m, args.v)
    print(f"{total:g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eco",
        description="Error-compensated quantized-training optimizers and their validation lab.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate-theory", help="run the full acceptance suite")
    p.add_argument("--out", help="write a JSON report")
    p.add_argument("--only", action="append", metavar="NAME",
                   help="run only the named check (repeatable)")
    p.set_defaults(fn=_cmd_validate_theory)

    p = sub.add_parser("simulate-1d", help="stationary second moments: closed form vs simulation")
    p.add_argument("--regime", required=True, help="mw|naive|eco (comma-separated for a grid)")
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--eta", required=True, help="learning rate(s), comma-separated")
    p.add_argument("--beta", required=True, help="momentum value(s), comma-separated")
    p.add_argument("--sigma2", type=float, required=True, help="error variance (delta^2/12)")
    p.add_argument("--steps", type=int, default=10_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(fn=_cmd_simulate_1d)

    p = sub.add_parser("train", help="run one training config")
    p.add_argument("--config", required=True, help="JSON config path")
    p.add_argument("--out", required=True, help="CSV path for the run record")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("compare", help="run several configs and summarize")
    p.add_argument("--configs", nargs="+", required=True)
    p.add_argument("--out", help="CSV path (stdout when omitted)")
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("memory", help="static bytes per parameter")
    p.add_argument("--weights", required=True, choices=["fp8", "bf16", "fp32", "int4", "none"])
    p.add_argument("--master", default="none", choices=["none", "fp32", "bf16"])
    p.add_argument("--m", default="none", choices=["fp32", "fp8", "none"])
    p.add_argument("--v", default="none", choices=["fp32", "fp8", "none"])
    p.set_defaults(fn=_cmd_memory)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except theory.SimulationDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
