"""Command-line front end.

Every subcommand reads JSON documents (see ``retrodiction.serialize``),
validates them all before computing, and writes one JSON object to stdout
or ``--output``. Exit codes: 0 success, 1 failed axiom audit, 2 invalid
input, 3 violated mathematical precondition.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, fields
from typing import Any, Callable, Sequence

from . import channel as ch
from . import finstoch, serialize
from .axioms import AxiomConfig, check_axioms
from .cstar import State
from .dilation import (
    absolutely_continuous,
    canonical_purification,
    derived_dilation,
    dilationally_equal,
    dilationally_equal_empirical,
    factor_dilation,
    reconstruction_residual,
)
from .errors import PreconditionError, ValidationError
from .matrixcore import DEFAULT_TOLERANCE, Tolerance, use_tolerance
from .retrodict import (
    StatePreservingMorphism,
    jeffrey_update_quantum,
    morphism_residual,
    petz_extended,
)

EXIT_OK, EXIT_AUDIT_FAILED, EXIT_INVALID, EXIT_PRECONDITION = 0, 1, 2, 3


class _Inputs:
    """Loads every referenced file up front so schema errors surface before any computation."""

    def __init__(self, args: argparse.Namespace, wanted: dict[str, str]):
        self._docs: dict[str, Any] = {}
        for flag, kind in wanted.items():
            path = getattr(args, flag, None)
            if path is None:
                continue
            doc = serialize.read_json(path)
            try:
                self._docs[flag] = _LOADERS[kind](doc)
            except ValidationError as exc:
                raise type(exc)(f"{path}: {exc}") from exc

    def get(self, flag: str, required: bool = True) -> Any:
        if flag not in self._docs:
            if required:
                raise ValidationError(f"missing required input --{flag.replace('_', '-')}")
            return None
        return self._docs[flag]


_LOADERS: dict[str, Callable[[Any], Any]] = {
    "state": serialize.state_from_json,
    "channel": serialize.channel_from_json,
    "stoch": serialize.stoch_from_json,
    "prob": serialize.prob_from_json,
    "dilation": serialize.dilation_from_json,
    "any": lambda doc: serialize.load_any(doc),
    "evidence": lambda doc: serialize.load_any(doc),
}


def _seed(args: argparse.Namespace) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("RETRO_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise ValidationError(f"RETRO_SEED must be an integer, got {env!r}") from exc


def cmd_bayes(args):
    inp = _Inputs(args, {"stoch": "stoch", "prob": "prob"})
    f, p = inp.get("stoch"), inp.get("prob")
    if f.shape[1] != p.size:
        raise ValidationError(f"stochastic map has {f.shape[1]} inputs, prior has {p.size} entries")
    out = serialize.stoch_to_json(finstoch.bayes_inverse(f, p))
    out["prediction"] = serialize.prob_to_json(f @ p)["prob"]
    return out


def cmd_petz(args):
    inp = _Inputs(args, {"state": "state", "channel": "channel"})
    m = StatePreservingMorphism(inp.get("state"), inp.get("channel"))
    r = petz_extended(m).channel
    out = serialize.channel_to_json(r)
    out["prediction"] = serialize.element_to_json(m.prediction)
    out["recovery_residual"] = morphism_residual(r, m.prediction, m.prior)
    return out


def cmd_jeffrey(args):
    inp = _Inputs(
        args,
        {"stoch": "stoch", "prob": "prob", "state": "state", "channel": "channel", "evidence": "evidence"},
    )
    kind, evidence = inp.get("evidence")
    if inp.get("stoch", required=False) is not None:
        if kind != "prob":
            raise ValidationError("classical Jeffrey update needs a probability vector as evidence")
        return serialize.prob_to_json(finstoch.jeffrey_update(inp.get("stoch"), inp.get("prob"), evidence))
    if kind != "state":
        raise ValidationError('quantum Jeffrey update needs a state document (with "state": true) as evidence')
    m = StatePreservingMorphism(inp.get("state"), inp.get("channel"))
    return serialize.element_to_json(jeffrey_update_quantum(m, evidence))


def cmd_ae_equal(args):
    inp = _Inputs(args, {"state": "state", "channel": "channel", "channel2": "channel"})
    alpha, e, f = inp.get("state"), inp.get("channel"), inp.get("channel2")
    if args.empirical:
        eq = dilationally_equal_empirical(e, f, alpha, trials=args.trials or 6, seed=_seed(args))
        return {"equal": bool(eq), "criterion": "empirical-dilations"}
    return {"equal": bool(dilationally_equal(e, f, alpha)), "criterion": "support-projection"}


def cmd_abs_cont(args):
    inp = _Inputs(args, {"evidence": "evidence", "state": "state", "prob": "prob"})
    kind, ev = inp.get("evidence")
    if kind == "prob":
        q = inp.get("prob")
        if q.size != ev.size:
            raise ValidationError(f"evidence has {ev.size} entries, reference has {q.size}")
        return {"absolutely_continuous": bool(finstoch.absolutely_continuous(ev, q))}
    if kind != "state":
        raise ValidationError("evidence must be a probability vector or a state")
    return {"absolutely_continuous": bool(absolutely_continuous(ev, inp.get("state")))}


def cmd_dilate(args):
    inp = _Inputs(args, {"state": "state", "channel": "channel"})
    alpha = inp.get("state")
    g = inp.get("channel", required=False)
    d = canonical_purification(alpha) if g is None else derived_dilation(alpha, g)
    return serialize.dilation_to_json(d)


def cmd_factor(args):
    inp = _Inputs(args, {"dilation": "dilation"})
    d = inp.get("dilation")
    g = factor_dilation(d)
    out = serialize.channel_to_json(g)
    out["reconstruction_residual"] = reconstruction_residual(d, g)
    return out


def cmd_check_axioms(args):
    config = AxiomConfig(kind=args.kind)
    report = check_axioms(config, trials=args.trials or 200, seed=_seed(args), workers=args.workers)
    return report.to_json(), (EXIT_OK if report.passed else EXIT_AUDIT_FAILED)


def cmd_validate(args):
    inp = _Inputs(args, {"file": "any"})
    kind, obj = inp.get("file")
    out: dict[str, Any] = {"valid": True, "kind": kind}
    if isinstance(obj, State):
        out["algebra"] = str(obj.algebra)
    elif isinstance(obj, ch.LinearBlockMap):
        out["domain"], out["codomain"] = str(obj.domain), str(obj.codomain)
    return out


COMMANDS: dict[str, tuple[Callable, str]] = {
    "bayes": (cmd_bayes, "Bayesian inverse of --stoch against --prob"),
    "petz": (cmd_petz, "extended Petz recovery map of --channel at --state"),
    "jeffrey": (cmd_jeffrey, "Jeffrey update of a prior from --evidence"),
    "ae-equal": (cmd_ae_equal, "dilational equality of --channel and --channel2 at --state"),
    "abs-cont": (cmd_abs_cont, "is --evidence absolutely continuous w.r.t. --state (or --prob)"),
    "dilate": (cmd_dilate, "canonical purification of --state, or (id x G) of it for G = --channel"),
    "factor": (cmd_factor, "recover G with (id x G) pi equal to --dilation"),
    "check-axioms": (cmd_check_axioms, "randomized audit of the retrodiction-functor laws"),
    "validate": (cmd_validate, "check that --file parses and satisfies its invariants"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="retrodict", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        for flag in INPUT_FLAGS:
            p.add_argument(f"--{flag}", metavar="JSON")
        p.add_argument("--trials", type=int)
        p.add_argument("--seed", type=int, help="defaults to $RETRO_SEED, then 0")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--kind", choices=("quantum", "classical"), default="quantum")
        p.add_argument("--empirical", action="store_true", help="ae-equal: search dilations instead")
        p.add_argument("--abs-eps", type=float, default=DEFAULT_TOLERANCE.abs_eps)
        p.add_argument("--eig-cut", type=float, default=DEFAULT_TOLERANCE.eig_cut_rel)
        p.add_argument("--output", "-o", metavar="PATH")
    return parser


def _emit(doc: Any, output: str | None) -> None:
    text = serialize.dumps(doc) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w") as fh:
            fh.write(text)


INPUT_FLAGS = ("state", "state2", "channel", "channel2", "stoch", "prob", "evidence", "dilation", "file")


@dataclass(frozen=True)
class JobSpec:
    """One CLI invocation: a command, its input files, and options."""

    command: str
    state: str | None = None
    state2: str | None = None
    channel: str | None = None
    channel2: str | None = None
    stoch: str | None = None
    prob: str | None = None
    evidence: str | None = None
    dilation: str | None = None
    file: str | None = None
    trials: int | None = None
    seed: int | None = None
    workers: int = 1
    kind: str = "quantum"
    empirical: bool = False
    abs_eps: float = DEFAULT_TOLERANCE.abs_eps
    eig_cut: float = DEFAULT_TOLERANCE.eig_cut_rel
    output: str | None = None

    @classmethod
    def from_namespace(cls, ns: argparse.Namespace) -> "JobSpec":
        return cls(**{f.name: getattr(ns, f.name) for f in fields(cls)})

    def validate(self) -> Tolerance:
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.trials is not None and self.trials < 1:
            raise ValidationError("--trials must be positive")
        if self.workers < 1:
            raise ValidationError("--workers must be positive")
        for flag in INPUT_FLAGS:
            path = getattr(self, flag)
            if path is not None and not os.path.isfile(path):
                raise ValidationError(f"--{flag}: no such file {path}")
        return Tolerance(abs_eps=self.abs_eps, eig_cut_rel=self.eig_cut)


def run(spec: JobSpec) -> int:
    """Execute a job, write its JSON result, and return the exit code."""
    try:
        tol = spec.validate()
        with use_tolerance(tol):
            result = COMMANDS[spec.command][0](spec)
    except (ValidationError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PreconditionError as exc:
        print(f"precondition failed ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    code = EXIT_OK
    if isinstance(result, tuple):
        result, code = result
    _emit(result, spec.output)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    return run(JobSpec.from_namespace(args))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
