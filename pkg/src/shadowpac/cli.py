"""Command-line front end.

Exit codes: 0 ok, 2 usage or config error, 3 IO failure, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from functools import reduce
from pathlib import Path

import numpy as np

from . import linalg
from .concepts import extreme_points, load_class
from .ensembles import make_ensemble
from .errors import ConfigError, NumericalError, ShadowPacError
from .experiment import ExperimentConfig, load_config, prepare, run_experiment
from .learners import run_trial
from .loss import LossFunction
from .rng import Stream
from .shadow_norm import class_constant_table, shadow_norm, verify_concentration
from .shadows import generate_shadows, save_dataset
from .states import LabeledStateSource, PureState, draw_samples

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4


def _config(args) -> ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required for this subcommand")
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
        cfg.validate()
    return cfg


def fixture_state(name: str, qubits: int, seed: int) -> PureState:
    dim = 2**qubits
    if name == "zero":
        return PureState.basis(dim, 0)
    if name == "plus":
        return PureState.normalized(np.ones(dim))
    if name == "random":
        return PureState(linalg.random_pure_state(dim, np.random.default_rng(seed)))
    raise ConfigError(f"unknown state {name!r}; expected zero, plus or random")


def cmd_shadows(args) -> int:
    seed = 0 if args.seed is None else args.seed
    state = fixture_state(args.state, args.qubits, seed)
    ens = make_ensemble(f"{args.ensemble}:{args.qubits}")
    source = LabeledStateSource((1.0,), (state,), (0,))
    samples = draw_samples(source, args.num, seed=Stream(seed).child(0).key)
    ds = generate_shadows(ens, samples, Stream(seed).child(1).key)
    rho = state.density().op
    total = np.zeros(rho.shape, dtype=complex)
    checkpoints = sorted({min(args.num, 10**k) for k in range(1, int(math.log10(args.num)) + 1)} | {args.num})
    print("N,frobenius_error")
    for start, stop, block in ds.chunks():
        for cp in checkpoints:
            if start < cp <= stop:
                partial = total + block[: cp - start].sum(axis=0)
                print(f"{cp},{linalg.frobenius(partial / cp - rho):.6g}")
        total += block.sum(axis=0)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        save_dataset(ds, out / "shadows.jsonl")
    return EXIT_OK


def read_operator(path) -> np.ndarray:
    """A .npy array, or JSON rows whose entries are numbers or [re, im] pairs."""
    path = Path(path)
    if path.suffix == ".npy":
        return np.load(path)
    rows = json.loads(path.read_text())
    return np.array([[complex(*z) if isinstance(z, list) else complex(z) for z in row] for row in rows])


def pauli_string(word: str) -> np.ndarray:
    try:
        return reduce(np.kron, [linalg.PAULIS[ch] for ch in word.upper()])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad Pauli string {word!r}") from exc


def cmd_norm(args) -> int:
    if args.class_file:
        c = load_class(args.class_file)
        ens = make_ensemble(f"{args.ensemble}:{linalg.num_qubits_for(c.dim)}")
        cstar = extreme_points(c)
        l = LossFunction.zero_one(len(c.members[0].outcomes))
        table = class_constant_table(ens, dict(cstar.items()), l)
        report = {
            "cstar_ids": list(cstar.ids),
            "v_cstar": max(table.values()),
            "per_member": {f"{cid}|y={y}": v for (cid, y), v in sorted(table.items())},
        }
        print(json.dumps(report, indent=2))
        return EXIT_OK
    if args.operator:
        o = read_operator(args.operator)
        oid = Path(args.operator).stem
    elif args.pauli:
        o = pauli_string(args.pauli)
        oid = args.pauli
    else:
        raise ConfigError("norm needs --operator, --pauli or --class")
    ens = make_ensemble(f"{args.ensemble}:{linalg.num_qubits_for(o.shape[0])}")
    seed = 0 if args.seed is None else args.seed
    report = shadow_norm(ens, o, method=args.method, samples=args.samples, seed=seed, operator_id=oid)
    if not math.isfinite(report.shadow_norm):
        raise NumericalError("non-finite shadow norm")
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK


def cmd_extreme(args) -> int:
    c = load_class(args.class_file)
    eps = extreme_points(c, tol=args.tol)
    for cid in eps.ids:
        print(cid)
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(json.dumps(eps.to_dict(), indent=2) + "\n")
    else:
        for cid, cert in eps.certificates.items():
            terms = " + ".join(f"{w:.6g}*{k}" for k, w in cert.weights.items())
            print(f"# {cid} = {terms} (residual {cert.residual:.3g})", file=sys.stderr)
    return EXIT_OK


def cmd_learn(args) -> int:
    cfg = _config(args)
    prep = prepare(cfg)
    ens = make_ensemble(cfg.ensemble_spec())
    t = prep.task
    n = args.n if args.n is not None else cfg.n_grid[0]
    out = run_trial("qsrm", t.concept_class, prep.cstar, t.source, t.loss, ens, n, cfg.seed, 0)
    print(f"chosen: {out.chosen_id}")
    print(f"exact_loss: {prep.exact[out.chosen_id]:.17g}")
    print(f"opt: {prep.opt:.17g}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    cfg = _config(args)
    outdir = run_experiment(cfg, out=args.out, threads=args.threads)
    print(outdir)
    return EXIT_OK


def cmd_concentration(args) -> int:
    cfg = _config(args)
    prep = prepare(cfg)
    ens = make_ensemble(cfg.ensemble_spec())
    t = prep.task
    cid = args.concept or prep.cstar.ids[0]
    report = verify_concentration(
        ens, t.source, t.concept_class[cid], t.loss, args.n or cfg.n_grid[0], cfg.epsilon, cfg.trials, cfg.seed
    )
    print(json.dumps({"concept": cid, **report.to_dict()}, indent=2))
    return EXIT_OK if report.passed else EXIT_NUMERICAL


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config (JSON)")
    common.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--out", help="output path")

    p = argparse.ArgumentParser(prog="shadowpac", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("shadows", parents=[common], help="generate shadows and report the Frobenius error curve")
    s.add_argument("--state", default="plus", help="zero, plus or random")
    s.add_argument("--qubits", type=int, default=1)
    s.add_argument("-N", "--num", type=int, default=100000)
    s.add_argument("--ensemble", default="pauli")
    s.set_defaults(func=cmd_shadows)

    s = sub.add_parser("norm", parents=[common], help="shadow norm of an operator or V of a class")
    s.add_argument("--operator", help=".npy or JSON matrix file")
    s.add_argument("--pauli", help="Pauli string such as ZI")
    s.add_argument("--class", dest="class_file", help="concept-class file; reports V over its extreme points")
    s.add_argument("--ensemble", default="pauli")
    s.add_argument("--method", default="exact", choices=("exact", "monte_carlo"))
    s.add_argument("--samples", type=int, default=2000)
    s.set_defaults(func=cmd_norm)

    s = sub.add_parser("extreme", parents=[common], help="extreme points of a concept-class file")
    s.add_argument("--class", dest="class_file", required=True)
    s.add_argument("--tol", type=float, default=1e-9)
    s.set_defaults(func=cmd_extreme)

    s = sub.add_parser("learn", parents=[common], help="one QSRM run on the configured task")
    s.add_argument("-n", type=int, help="sample count (default: first entry of n_grid)")
    s.set_defaults(func=cmd_learn)

    s = sub.add_parser("experiment", parents=[common], help="full config-driven experiment")
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("concentration", parents=[common], help="tail-bound check for one concept")
    s.add_argument("-n", type=int, help="sample count (default: first entry of n_grid)")
    s.add_argument("--concept", help="concept id (default: first extreme point)")
    s.set_defaults(func=cmd_concentration)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        return args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ShadowPacError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
