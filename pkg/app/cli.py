"""
Command-line front end.

    python -m app.cli build-witness --kind canonical --d 4 --n 2 --out w.json
    python -m app.cli verify-witness --in w.json --seed 7
    python -m app.cli sweep --family canonical --d 4 --n 2 --draws 1000

Exit codes: 0 success, 1 negative certification or a bound violation, 2 bad input.
"""
import argparse
import csv
import json
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from app import __version__
from app.config import Settings
from app.schemas import (
    CanonicalFormModel,
    OperatorModel,
    ParamsModel,
    SkewModel,
    WitnessModel,
)
from app.services import combinatorics, pptstates, skewcanon, sweep, verify
from app.services.workflows import (
    STATE_FAMILIES,
    STATE_MODES,
    WITNESS_KINDS,
    build_witness,
    envelope,
    state_params,
)
from app.services.witnesses import detection_bound, npt_floor
from app.utils.errors import ParameterError
from app.utils.logger import logger


# ==================== ARGUMENT HELPERS ====================

def _ints(text: str) -> List[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _floats(text: str) -> List[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _read_json(path: str) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _payload(data: Dict[str, Any], key: str) -> Dict[str, Any]:
    """Accept either a bare object or a report envelope that nests it under `key`."""
    if "result" in data and isinstance(data["result"], dict):
        data = data["result"]
    if key in data and isinstance(data[key], dict):
        data = data[key]
    return data


def _emit(report: Dict[str, Any], out: Optional[str]) -> None:
    text = json.dumps(report, sort_keys=True, indent=2) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_shape(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--mu", type=_ints, help="partition parts, e.g. 2,1,1")
    p.add_argument("--d1", type=int)
    p.add_argument("--d2", type=int)
    p.add_argument("--combo", type=_ints, help="sorted indices into the larger factor, e.g. 0,1,2,4")


# ==================== COMMANDS ====================

def cmd_build_witness(args: argparse.Namespace, settings: Settings) -> int:
    u = SkewModel.model_validate(_payload(_read_json(args.u), "skew")).to_skew() if args.u else None
    w = build_witness(
        args.kind, d=args.d, n=args.n, lambdas=args.lambdas, mu=args.mu,
        d1=args.d1, d2=args.d2, combo=args.combo, u=u,
    )
    result = {
        "witness": WitnessModel.from_witness(w).model_dump(),
        "trace": float(w.op.trace().real),
        "bound": detection_bound(w),
        "npt_floor": npt_floor(w),
    }
    _emit(envelope("build-witness", None, result, settings), args.out)
    return 0


def cmd_build_state(args: argparse.Namespace, settings: Settings) -> int:
    seed = settings.SEED if args.seed is None else args.seed
    if args.params:
        p = ParamsModel.model_validate(_payload(_read_json(args.params), "params")).to_params()
    else:
        p = state_params(
            args.family, args.mode, d=args.d, n=args.n, mu=args.mu,
            d1=args.d1, d2=args.d2, combo=args.combo, a0=args.a0, seed=seed,
        )
    rho = pptstates.build_state(p, normalize=not args.raw)
    result = {
        "state": OperatorModel.from_operator(rho).model_dump(),
        "params": ParamsModel.from_params(p).model_dump(),
        "conditions": pptstates.check_conditions(p).to_dict(),
        "normalization": pptstates.normalization(p),
    }
    _emit(envelope("build-state", seed, result, settings), args.out)
    return 0


def cmd_verify(args: argparse.Namespace, settings: Settings) -> int:
    w = WitnessModel.model_validate(_payload(_read_json(args.input), "witness")).to_witness()
    cfg = verify.SeeSawConfig.from_settings(
        restarts=args.restarts, max_iters=args.max_iters, tol=args.tol, seed=args.seed, field=args.field,
    )
    certified, report = verify.is_entanglement_witness(w, cfg)
    result = {
        "provenance": certified.provenance,
        "report": report.to_dict(),
        "witness": WitnessModel.from_witness(certified).model_dump(),
    }
    if args.kernel_span and certified.certified:
        result["kernel_span"] = verify.kernel_span_rank(certified, seed=cfg.seed).to_dict()
    _emit(envelope("verify-witness", cfg.seed, result, settings), args.out)
    return 0 if report.is_ew else 1


def cmd_classify(args: argparse.Namespace, settings: Settings) -> int:
    w = WitnessModel.model_validate(_payload(_read_json(args.witness), "witness")).to_witness()
    rho = OperatorModel.model_validate(_payload(_read_json(args.state), "state")).to_operator()
    detection = verify.classify_detection(w, rho)
    result = detection.to_dict()
    result["provenance"] = w.provenance
    _emit(envelope("classify", None, result, settings), args.out)
    violated = detection.within_bound is False or detection.within_npt_floor is False
    return 1 if violated else 0


def cmd_sweep(args: argparse.Namespace, settings: Settings) -> int:
    seed = settings.SEED if args.seed is None else args.seed
    family = args.family
    d = args.d1 if family == "embedded" else args.d
    if d is None:
        raise ParameterError(f"{family} sweeps need --{'d1' if family == 'embedded' else 'd'}.")
    n = args.n
    if n is None and family in ("canonical", "embedded"):
        n = d // 2
    job = sweep.SweepSpec(family, d, n=n, mu=args.mu, d2=args.d2, combo=args.combo, a0=args.a0)
    result = sweep.run_sweep(job, draws=args.draws, seed=seed, mode=args.mode)

    columns = sweep.CSV_COLUMNS
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(fh, fieldnames=columns, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for row in result.rows:
            writer.writerow({k: ("" if row[k] is None else row[k]) for k in columns})
    finally:
        if args.out:
            fh.close()

    summary = envelope("sweep", seed, result.summary, settings)
    sys.stderr.write("summary: " + json.dumps(summary, sort_keys=True) + "\n")
    return 1 if result.summary["violations"] else 0


def cmd_decompose(args: argparse.Namespace, settings: Settings) -> int:
    if args.input:
        data = _payload(_read_json(args.input), "skew")
        if "matrix" in data:
            u = skewcanon.validate_skew(np.array(data["matrix"], dtype=float))
        else:
            u = SkewModel.model_validate(data).to_skew()
    else:
        if args.d is None or args.upper is None:
            raise ParameterError("decompose needs --in or both --d and --upper.")
        u = skewcanon.SkewMatrix.from_upper(args.d, args.upper)

    form = skewcanon.canonical_decompose(u)
    q = form.q
    result = {
        "form": CanonicalFormModel.from_form(form).model_dump(),
        "reassembly_error": float(np.max(np.abs(form.reassemble() - u.entries), initial=0.0)),
        "orthogonality_error": float(np.max(np.abs(q.T @ q - np.eye(u.d)), initial=0.0)),
    }
    _emit(envelope("decompose", None, result, settings), args.out)
    return 0


def cmd_enumerate(args: argparse.Namespace, settings: Settings) -> int:
    if args.partitions is not None:
        items = [list(p.parts) for p in combinatorics.partitions(args.partitions)]
        result = {"partitions": args.partitions, "count": len(items), "items": items}
    else:
        d2, d1 = args.combos
        items = [list(c.indices) for c in combinatorics.combinations(d2, d1)]
        result = {"d2": d2, "d1": d1, "count": len(items), "items": items}
    _emit(envelope("enumerate", None, result, settings), args.out)
    return 0


# ==================== PARSER ====================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="witnesskit", description="Skew-symmetric entanglement witness toolkit.")
    parser.add_argument("--version", action="version", version=f"witnesskit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-witness", help="construct a witness and write it as JSON")
    p.add_argument("--kind", choices=WITNESS_KINDS, required=True)
    _add_shape(p)
    p.add_argument("--lambda", dest="lambdas", type=_floats, help="invariant factors, e.g. 1,0.5")
    p.add_argument("--u", help="JSON file holding a skew matrix {d, upper}")
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_witness)

    p = sub.add_parser("build-state", help="construct a member of a PPT family")
    p.add_argument("--family", choices=STATE_FAMILIES, default="canonical")
    p.add_argument("--mode", choices=STATE_MODES, default="saturating")
    _add_shape(p)
    p.add_argument("--a0", type=float, default=1.0)
    p.add_argument("--params", help="JSON file with explicit family parameters")
    p.add_argument("--raw", action="store_true", help="skip normalization (extended family only)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_build_state)

    p = sub.add_parser("verify-witness", help="see-saw minimization over product states")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--restarts", type=int)
    p.add_argument("--max-iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--field", choices=verify.FIELDS, default="complex")
    p.add_argument("--seed", type=int)
    p.add_argument("--kernel-span", action="store_true", help="also probe the product zeros of a certified witness")
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("classify", help="evaluate a witness on a state against its family bound")
    p.add_argument("--witness", required=True)
    p.add_argument("--state", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("sweep", help="seeded draws from a family, classified as CSV rows")
    p.add_argument("--family", choices=STATE_FAMILIES, default="canonical")
    p.add_argument("--mode", choices=sweep.MODES, default="sampled")
    _add_shape(p)
    p.add_argument("--a0", type=float, default=1.0)
    p.add_argument("--draws", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="CSV path; rows go to stdout otherwise")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("decompose", help="canonical block form of a real skew matrix")
    p.add_argument("--in", dest="input")
    p.add_argument("--d", type=int)
    p.add_argument("--upper", type=_floats, help="strict upper triangle, row-major")
    p.add_argument("--out")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("enumerate", help="list partitions or index combinations")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--partitions", type=int, metavar="N")
    group.add_argument("--combos", type=int, nargs=2, metavar=("D2", "D1"))
    p.add_argument("--out")
    p.set_defaults(func=cmd_enumerate)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = Settings()
    try:
        return args.func(args, settings)
    except (ValueError, OSError) as e:
        logger.error(f"{args.command} failed: {str(e)}")
        sys.stderr.write(f"error: {str(e)}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
