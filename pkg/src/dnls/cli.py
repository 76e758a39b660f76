"""Command-line interface: ``dnls scatter|transform|invert|soliton|evolve|verify``.

Exit codes: 0 success, 1 a verification check failed, 2 malformed input,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

from . import io
from .errors import DNLSError, InputError, NumericalFailure
from .fixtures import SUPPORT, roundtrip_pairs
from .grid import SpectralGrid, default_grid_size
from .ist import evolve, ist_solve, pde_residual, residual_order
from .lattice import DEFAULT_PAD, PotentialPair
from .marchenko import DEFAULT_WINDOW, METHODS, invert
from .scattering import ScatteringData, scatter, verify_identities
from .soliton import ROUTES, soliton_qr, soliton_uv
from .transforms import qr_to_ps, qr_to_uv

EXIT_OK, EXIT_CHECK_FAILED, EXIT_INPUT, EXIT_NUMERICAL = 0, 1, 2, 3

DEFAULT_TOLERANCES = {"identities": 1e-10, "pde": 1e-6, "roundtrip": 1e-8, "routes": 1e-10}


@dataclass(frozen=True)
class RunConfig:
    """Settings shared by all subcommands."""

    grid_size: int = field(default_factory=default_grid_size)
    window: tuple[int, int] = DEFAULT_WINDOW
    pad: int = DEFAULT_PAD
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    method: str = "a"
    output_format: str = "json"

    def __post_init__(self):
        g = int(self.grid_size)
        if g < 64 or g & (g - 1):
            raise InputError(f"grid size must be a power of two >= 64, got {g}")
        if self.window[0] > self.window[1]:
            raise InputError("window must satisfy lo <= hi")
        if any(not v > 0 for v in self.tolerances.values()):
            raise InputError("tolerances must be positive")
        if self.method not in METHODS:
            raise InputError(f"method must be one of {METHODS}")
        if self.output_format not in ("json", "csv"):
            raise InputError("format must be json or csv")

    @property
    def grid(self) -> SpectralGrid:
        return SpectralGrid(self.grid_size)


def parse_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"window must look like -32:32, got {text!r}") from exc
    return lo, hi


def _config(args) -> RunConfig:
    tol = dict(DEFAULT_TOLERANCES)
    if getattr(args, "tol", None) is not None:
        tol = {k: args.tol for k in tol}
    return RunConfig(
        grid_size=args.grid if getattr(args, "grid", None) else default_grid_size(),
        window=getattr(args, "window", None) or DEFAULT_WINDOW,
        pad=getattr(args, "pad", DEFAULT_PAD),
        tolerances=tol,
        method=getattr(args, "method", None) or "a",
        output_format=getattr(args, "format", "json"),
    )


def _load_as(path, cls, what: str):
    obj = io.load(path)
    if not isinstance(obj, cls):
        raise InputError(f"expected {what} in {path or 'stdin'}")
    return obj


def _table(rows, tol: float) -> tuple[str, bool]:
    width = max([len(name) for name, _ in rows] + [5])
    lines = [f"{'check':<{width}}  {'max violation':>14}  status"]
    ok = True
    for name, val in rows:
        passed = bool(val <= tol)
        ok &= passed
        lines.append(f"{name:<{width}}  {val:14.3e}  {'PASS' if passed else 'FAIL'}")
    return "\n".join(lines) + "\n", ok


def cmd_scatter(args, cfg: RunConfig) -> int:
    pair = _load_as(args.input, PotentialPair, "a potential pair")
    data = scatter(pair.kind, pair, cfg.grid, pad=cfg.pad, bound_states=args.bound_states)
    io.save(data, args.out, cfg.output_format)
    return EXIT_OK


def cmd_transform(args, cfg: RunConfig) -> int:
    pair = _load_as(args.input, PotentialPair, "a potential pair")
    if pair.kind != args.source:
        raise InputError(f"input pair has kind {pair.kind}, --from says {args.source}")
    if args.source != "qr":
        raise InputError("transforms start from a qr pair")
    out = qr_to_uv(pair) if args.target == "uv" else qr_to_ps(pair)
    io.save(out, args.out, cfg.output_format)
    return EXIT_OK


def cmd_invert(args, cfg: RunConfig) -> int:
    data = _load_as(args.input, ScatteringData, "scattering data")
    pair = invert(data, cfg.method, cfg.window, trim=args.trim)
    io.save(pair, args.out, cfg.output_format)
    return EXIT_OK


def _triplets(path):
    obj = io.load(path)
    if not isinstance(obj, tuple):
        raise InputError("expected triplets ({'inside': ..., 'outside': ...})")
    return obj


def cmd_soliton(args, cfg: RunConfig) -> int:
    kind, inside, outside = _triplets(args.triplets)
    if kind == "uv":
        pair = soliton_uv(inside, outside, args.t, cfg.window)
    elif kind == "qr":
        route = "z7" if args.route == "both" else args.route
        pair = soliton_qr(inside, outside, args.t, cfg.window, route=route)
        if args.route == "both":
            other = soliton_qr(inside, outside, args.t, cfg.window, route="tau")
            diff = pair.max_abs_difference(other)
            sys.stderr.write(f"z7 vs tau max difference {diff:.3e}\n")
            if diff > cfg.tolerances["routes"]:
                io.save(pair, args.out, cfg.output_format)
                return EXIT_CHECK_FAILED
    else:
        raise InputError(f"closed-form solitons are available for qr and uv triplets, not {kind}")
    io.save(pair, args.out, cfg.output_format)
    return EXIT_OK


def cmd_evolve(args, cfg: RunConfig) -> int:
    obj = io.load(args.input)
    if isinstance(obj, ScatteringData):
        io.save(evolve(obj, args.t).data, args.out, "json")
        return EXIT_OK
    if not isinstance(obj, PotentialPair):
        raise InputError("evolve expects a qr pair or scattering data")
    window = args.window
    pair = ist_solve(obj, args.t, cfg.method, window=window, grid=cfg.grid)
    io.save(pair, args.out, cfg.output_format)
    return EXIT_OK


def _verify_identities(args, cfg: RunConfig) -> tuple[str, bool]:
    obj = io.load(args.input)
    if isinstance(obj, PotentialPair):
        obj = scatter(obj.kind, obj, cfg.grid, pad=cfg.pad, bound_states="none")
    if not isinstance(obj, ScatteringData):
        raise InputError("--identities expects scattering data or a pair")
    rows = list(verify_identities(obj).items())
    return _table(rows, cfg.tolerances["identities"])


def _verify_pde(args, cfg: RunConfig) -> tuple[str, bool]:
    kind, inside, outside = _triplets(args.input)
    lo, hi = cfg.window

    def sampler(t):
        if kind == "uv":
            return soliton_uv(inside, outside, t, (lo - 1, hi + 1))
        return soliton_qr(inside, outside, t, (lo - 1, hi + 1))

    res = pde_residual(sampler, args.t, args.h, cfg.window)
    slope, norms = residual_order(sampler, args.t, args.h, cfg.window)
    rows = [(f"residual h={args.h:g}", res.max_norm), (f"residual h={args.h / 2:g}", norms[1])]
    text, ok = _table(rows, cfg.tolerances["pde"])
    slope_ok = abs(slope - 2.0) <= 0.2
    text += f"fitted order {slope:.3f}  {'PASS' if slope_ok else 'FAIL'}\n"
    return text, ok and slope_ok


def _verify_roundtrip(args, cfg: RunConfig) -> tuple[str, bool]:
    methods = METHODS if args.all_methods else (cfg.method,)
    rows = []
    for i, pair in enumerate(roundtrip_pairs(args.seed, args.count)):
        data = scatter("qr", pair, cfg.grid, pad=cfg.pad, bound_states="none")
        for m in methods:
            back = invert(data, m, cfg.window)
            rows.append((f"pair {i} method {m}", pair.max_abs_difference(back)))
    text, ok = _table(rows, cfg.tolerances["roundtrip"])
    text += f"support {SUPPORT}, seed {args.seed}\n"
    return text, ok


def cmd_verify(args, cfg: RunConfig) -> int:
    chosen = [name for name in ("identities", "pde", "roundtrip") if getattr(args, name)]
    if not chosen:
        raise InputError("choose at least one of --identities, --pde, --roundtrip")
    if ("identities" in chosen or "pde" in chosen) and args.input is None and sys.stdin.isatty():
        raise InputError("--identities and --pde need --in")
    ok_all = True
    out = []
    for name in chosen:
        text, ok = {"identities": _verify_identities, "pde": _verify_pde, "roundtrip": _verify_roundtrip}[name](args, cfg)
        out.append(f"[{name}]\n{text}")
        ok_all &= ok
    io.write_text("".join(out), args.out)
    return EXIT_OK if ok_all else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dnls", description="Scattering and inverse scattering for the semi-discrete derivative NLS lattice.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, window=True, method=False):
        sp.add_argument("--in", dest="input", default=None, help="input file, '-' or omitted for stdin")
        sp.add_argument("--out", default=None, help="output file, '-' or omitted for stdout")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        sp.add_argument("--grid", type=int, default=None, help="grid size (default DNLS_GRID or 1024)")
        sp.add_argument("--pad", type=int, default=DEFAULT_PAD)
        if window:
            sp.add_argument("--window", type=parse_window, default=None, help="site range lo:hi")
        if method:
            sp.add_argument("--method", choices=METHODS, default="a")

    sp = sub.add_parser("scatter", help="direct scattering of a potential pair")
    common(sp, window=False)
    sp.add_argument("--bound-states", choices=("auto", "none"), default="auto")
    sp.set_defaults(func=cmd_scatter)

    sp = sub.add_parser("transform", help="map a qr pair to the uv or ps system")
    common(sp, window=False)
    sp.add_argument("--from", dest="source", choices=("qr", "uv", "ps"), default="qr")
    sp.add_argument("--to", dest="target", choices=("uv", "ps"), required=True)
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("invert", help="recover a potential pair from scattering data")
    common(sp, method=True)
    sp.add_argument("--trim", type=float, default=1e-12, help="drop edge values below this modulus (0 keeps all)")
    sp.set_defaults(func=cmd_invert)

    sp = sub.add_parser("soliton", help="closed-form reflectionless solution from triplets")
    common(sp)
    sp.add_argument("--triplets", default=None, help="triplet file (default: --in)")
    sp.add_argument("--t", type=float, default=0.0)
    sp.add_argument("--route", choices=ROUTES + ("both",), default="z7")
    sp.set_defaults(func=cmd_soliton)

    sp = sub.add_parser("evolve", help="evolve a qr pair (or scattering data) in time")
    common(sp, method=True)
    sp.add_argument("--t", type=float, required=True)
    sp.set_defaults(func=cmd_evolve)

    sp = sub.add_parser("verify", help="identity, PDE-residual and round-trip checks")
    common(sp, method=True)
    sp.add_argument("--identities", action="store_true")
    sp.add_argument("--pde", action="store_true")
    sp.add_argument("--roundtrip", action="store_true")
    sp.add_argument("--all-methods", action="store_true", help="round trip through every method")
    sp.add_argument("--t", type=float, default=0.0)
    sp.add_argument("--h", type=float, default=1e-4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=20)
    sp.add_argument("--tol", type=float, default=None, help="override every tolerance")
    sp.set_defaults(func=cmd_verify)
    return p


def _normalize(argv: list[str]) -> list[str]:
    """Glue ``--window -32:32`` into ``--window=-32:32`` so argparse accepts the negative bound."""
    out, i = [], 0
    while i < len(argv):
        if argv[i] == "--window" and i + 1 < len(argv):
            out.append(f"--window={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_normalize(argv))
    except SystemExit as exc:
        return EXIT_INPUT if exc.code not in (0, None) else EXIT_OK
    if getattr(args, "triplets", None) is None and args.command == "soliton":
        args.triplets = args.input
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except NumericalFailure as exc:
        _report(exc, EXIT_NUMERICAL)
        return EXIT_NUMERICAL
    except (DNLSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        _report(exc, EXIT_INPUT)
        return EXIT_INPUT


def _report(exc: Exception, code: int) -> None:
    sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
