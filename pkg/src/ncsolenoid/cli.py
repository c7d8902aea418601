"""Command-line front end.

Subcommands: ball, gammas, spectrum, lip, distance, fejer, converge.
Exit codes: 0 ok, 1 config error, 2 resource cap, 3 oracle mismatch,
4 solver non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .clifford import build_gammas, verify_clifford
from .dirac import (SCHEMA_VERSION, dirac_spectrum, expected_spectrum, lip, lip_equality_check,
                    lip_exact_generator, lip_upper_bound)
from .errors import ConfigError, LevelError, ResourceError, SolverError
from .geometry import (FejerSpec, SolverOptions, StateSpec, bridge_builder_epsilon, connes_distance,
                       fejer_lip_contraction_check, fejer_smooth, spectral_compare)
from .padic import ball, doubling_ratio, length, parse_element
from .twisted import CocycleSpec, FourierPolynomial, TruncationSpec, random_self_adjoint

EXIT_OK, EXIT_CONFIG, EXIT_RESOURCE, EXIT_MISMATCH, EXIT_SOLVER = 0, 1, 2, 3, 4


class OracleMismatch(Exception):
    """Raised with the full report attached; the report goes to stdout, never to --out."""

    def __init__(self, msg, report: str = ""):
        super().__init__(msg)
        self.report = report


@dataclass
class Config:
    p: int = 2
    d: int = 2
    theta: list | None = None  # row-major d*d, or a single value for d = 2
    n: int = 0
    m: int = 1
    r: float = 4.0
    N: int = 4
    support_radius: float = 2.0
    mode: str = "certified_lower"
    max_iter: int = 2000
    tol: float = 1e-9
    seed: int = 0
    samples: int = 10
    window: float = 2.0
    format: str = "json"
    out: str | None = None

    def validate(self) -> None:
        if not isinstance(self.p, int) or self.p < 2:
            raise ConfigError(f"p must be an integer >= 2, got {self.p!r}")
        if self.d < 1:
            raise ConfigError("d must be >= 1")
        if self.n < 0 or self.m < 0:
            raise ConfigError("levels must be >= 0")
        if self.r < 1:
            raise ConfigError("radius must be >= 1")
        if self.N < 1:
            raise ConfigError("N must be >= 1")
        if self.format not in ("json", "csv"):
            raise ConfigError("format must be json or csv")
        if self.mode not in ("certified_lower", "compressed"):
            raise ConfigError("mode must be certified_lower or compressed")
        if self.tol < 0:
            raise ConfigError("tol must be >= 0")
        self.cocycle()

    def theta_matrix(self) -> list:
        d = self.d
        if self.theta is None:
            return [[0.0] * d for _ in range(d)]
        vals = [float(v) for v in self.theta]
        if len(vals) == 1 and d == 2:
            return [[0.0, vals[0]], [-vals[0], 0.0]]
        if len(vals) != d * d:
            raise ConfigError(f"theta needs {d * d} entries")
        return [vals[i * d:(i + 1) * d] for i in range(d)]

    def cocycle(self) -> CocycleSpec:
        return CocycleSpec.from_matrix(self.p, self.theta_matrix())

    def truncation(self, level: int | None = None, radius: float | None = None) -> TruncationSpec:
        return TruncationSpec(self.p, self.d, self.n if level is None else level,
                              self.r if radius is None else radius)

    def to_json(self) -> dict:
        data = asdict(self)
        data.pop("out")
        data.pop("format")
        data["theta"] = self.theta_matrix()
        return data


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def load_config(args: argparse.Namespace) -> Config:
    """Defaults, then the JSON config file, then explicit flags."""
    cfg = Config()
    if getattr(args, "config", None):
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        known = {f.name for f in fields(Config)}
        for k, v in data.items():
            if k not in known:
                raise ConfigError(f"unknown config key {k!r}")
            setattr(cfg, k, v)
    for f in fields(Config):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    if isinstance(cfg.theta, (int, float)):
        cfg.theta = [cfg.theta]
    cfg.validate()
    return cfg


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def emit(text: str, out: str | None) -> None:
    """Write atomically: nothing appears at ``out`` unless the whole payload does."""
    if out is None:
        sys.stdout.write(text)
        return
    target = Path(out)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".", prefix=".tmp-", suffix=target.suffix)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _envelope(cmd: str, cfg: Config, payload: dict) -> dict:
    return {"schema": SCHEMA_VERSION, "command": cmd, "config": cfg.to_json(), **payload}


# ---------------------------------------------------------------- commands

def cmd_ball(cfg: Config, args) -> str:
    table = ball(cfg.p, cfg.d, cfg.n, cfg.r)
    radii = _floats(args.sweep_r) if args.sweep_r else [cfg.r]
    doubling = []
    for r in radii:
        doubling.append({"r": r, "count_r": len(ball(cfg.p, cfg.d, cfg.n, r)),
                         "count_2r": len(ball(cfg.p, cfg.d, cfg.n, 2 * r)),
                         "ratio": doubling_ratio(cfg.p, cfg.d, cfg.n, r)})
    if cfg.format == "csv":
        header = [f"x{j + 1}" for j in range(cfg.d)] + ["level", "length"]
        rows = [[str(c) for c in g.coords] + [g.level, length(g)] for g in table.elements]
        return _csv_text(header, rows)
    return dumps(_envelope("ball", cfg, {"count": len(table), "ball": table.to_json(),
                                         "doubling": doubling}))


def cmd_gammas(cfg: Config, args) -> str:
    G = build_gammas(cfg.d)
    report = verify_clifford(G, tol=cfg.tol if cfg.tol > 0 else 1e-12)
    text = dumps(_envelope("gammas", cfg, {"gammas": G.to_json(), "verification": report.to_json()}))
    if not report.passed:
        raise OracleMismatch("Clifford relations violated", text)
    return text


def cmd_spectrum(cfg: Config, args) -> str:
    T = cfg.truncation()
    got = dirac_spectrum(T)
    want = expected_spectrum(T)
    dev = np.abs(got - want)
    match = dev <= cfg.tol
    rows = [[float(a), float(b), bool(ok)] for a, b, ok in zip(got, want, match)]
    if cfg.format == "csv":
        text = _csv_text(["eigenvalue", "expected", "match"], rows)
    else:
        text = dumps(_envelope("spectrum", cfg, {
            "max_deviation": float(dev.max()), "all_match": bool(match.all()),
            "rows": [{"eigenvalue": a, "expected": b, "match": ok} for a, b, ok in rows]}))
    if not match.all():
        raise OracleMismatch(f"{int((~match).sum())} eigenvalues deviate by more than {cfg.tol}", text)
    return text


def _load_poly(path: str, cocycle: CocycleSpec) -> FourierPolynomial:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read polynomial {path}: {exc}") from exc
    return FourierPolynomial.from_json(data, cocycle)


def cmd_lip(cfg: Config, args) -> str:
    cocycle = cfg.cocycle()
    if args.generator:
        g = parse_element(args.generator, cfg.p)
        if g.d != cfg.d:
            raise ConfigError(f"generator has {g.d} coordinates, expected {cfg.d}")
        lvl = max(cfg.n, g.level)
        f = FourierPolynomial.delta(cocycle, g)
        exact = lip_exact_generator(g)
        base = max(1.0, length(g))
        radii = _floats(args.radii) if args.radii else [base + 0.5 * k for k in range(1, 6)]
        trace = [{"radius": R, "lip": lip(f, cfg.truncation(level=lvl, radius=R))} for R in radii]
        payload = {"generator": g.to_pairs(), "level": lvl, "exact": exact, "trace": trace,
                   "value": trace[-1]["lip"]}
        if cfg.format == "csv":
            return _csv_text(["radius", "lip", "exact"], [[t["radius"], t["lip"], exact] for t in trace])
        return dumps(_envelope("lip", cfg, payload))
    if args.poly:
        f = _load_poly(args.poly, cocycle)
    else:
        rng = np.random.default_rng(cfg.seed)
        f = random_self_adjoint(cocycle, ball(cfg.p, cfg.d, cfg.n, cfg.support_radius).elements, rng)
    payload = {"polynomial": f.to_json(), "lip": lip(f, cfg.truncation(level=max(cfg.n, f.level))),
               "upper_bound": lip_upper_bound(f)}
    if args.check_equality:
        rep = lip_equality_check(f, cfg.n, cfg.m, cfg.r, tol=cfg.tol)
        payload["equality"] = rep.to_json()
        if not rep.passed:
            raise OracleMismatch("coset block norm exceeds the G_n block norm",
                                 dumps(_envelope("lip", cfg, payload)))
    return dumps(_envelope("lip", cfg, payload))


def _state(spec: str, cfg: Config, cocycle: CocycleSpec, index: int) -> StateSpec:
    if spec == "trace":
        return StateSpec.trace(cocycle)
    if spec.startswith("random"):
        radius = float(spec.split(":", 1)[1]) if ":" in spec else 1.5
        rng = np.random.default_rng([cfg.seed, index])
        dim_E = build_gammas(cfg.d).dim_E
        return StateSpec.random_vector(cocycle, ball(cfg.p, cfg.d, cfg.n, radius).elements, dim_E, rng)
    try:
        data = json.loads(Path(spec).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"state must be 'trace', 'random[:radius]' or a JSON file: {exc}") from exc
    return StateSpec.from_json(data, cocycle)


def cmd_distance(cfg: Config, args) -> str:
    cocycle = cfg.cocycle()
    phi = _state(args.phi, cfg, cocycle, 0)
    psi = _state(args.psi, cfg, cocycle, 1)
    T = cfg.truncation()
    solver = SolverOptions(max_iter=cfg.max_iter)
    res = connes_distance(phi, psi, T, cfg.support_radius, mode=cfg.mode, solver=solver)
    return dumps(_envelope("distance", cfg, {"phi": args.phi, "psi": args.psi, "result": res.to_json()}))


def cmd_fejer(cfg: Config, args) -> str:
    cocycle = cfg.cocycle()
    if args.poly:
        f = _load_poly(args.poly, cocycle)
    else:
        rng = np.random.default_rng(cfg.seed)
        f = random_self_adjoint(cocycle, ball(cfg.p, cfg.d, cfg.n, cfg.support_radius).elements, rng)
    spec = FejerSpec(cfg.n, cfg.N)
    smooth = fejer_smooth(f, spec)
    T = cfg.truncation(level=max(cfg.n, f.level))
    report = fejer_lip_contraction_check(f, spec, T, tol=max(cfg.tol, 1e-6))
    payload = {"N": cfg.N, "input": f.to_json(), "smoothed": smooth.to_json(),
               "contraction": report.to_json()}
    if not report.passed:
        raise OracleMismatch("Lipschitz contraction violated", dumps(_envelope("fejer", cfg, payload)))
    return dumps(_envelope("fejer", cfg, payload))


def cmd_converge(cfg: Config, args) -> str:
    Ns = _ints(args.sweep_N) if args.sweep_N else [cfg.N]
    T = cfg.truncation(level=cfg.m)
    cocycle = cfg.cocycle()
    series = []
    for N in Ns:
        rep = bridge_builder_epsilon(cfg.n, FejerSpec(cfg.n, N), T, cfg.samples, cfg.seed,
                                     support_radius=cfg.support_radius, cocycle=cocycle)
        series.append(rep.to_json())
    spectral = []
    for lvl in range(cfg.n, cfg.m):
        dist = spectral_compare(cfg.truncation(level=lvl), cfg.truncation(level=lvl + 1), cfg.window)
        spectral.append({"n1": lvl, "n2": lvl + 1, "window": cfg.window, "hausdorff": dist})
    if cfg.format == "csv":
        return _csv_text(["N", "eps_max", "eps_mean"], [[s["N"], s["eps_max"], s["eps_mean"]] for s in series])
    return dumps(_envelope("converge", cfg, {"epsilon": series, "spectral": spectral}))


COMMANDS = {
    "ball": cmd_ball, "gammas": cmd_gammas, "spectrum": cmd_spectrum, "lip": cmd_lip,
    "distance": cmd_distance, "fejer": cmd_fejer, "converge": cmd_converge,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override it")
    common.add_argument("--p", type=int)
    common.add_argument("--d", type=int)
    common.add_argument("--theta", type=_floats, help="row-major d*d entries, or one value for d=2")
    common.add_argument("--n", type=int)
    common.add_argument("--m", type=int)
    common.add_argument("--r", type=float)
    common.add_argument("--N", type=int)
    common.add_argument("--support-radius", dest="support_radius", type=float)
    common.add_argument("--mode", choices=["certified_lower", "compressed"])
    common.add_argument("--max-iter", dest="max_iter", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--seed", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--window", type=float)
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--out")

    parser = _Parser(prog="ncsolenoid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = sub.add_parser("ball", parents=[common], help="enumerate a length ball and doubling ratios")
    p.add_argument("--sweep-r", dest="sweep_r")
    sub.add_parser("gammas", parents=[common], help="print and verify the Clifford generators")
    sub.add_parser("spectrum", parents=[common], help="Dirac spectrum against the +-length oracle")
    p = sub.add_parser("lip", parents=[common], help="Lipschitz seminorm of a generator or polynomial")
    p.add_argument("--generator")
    p.add_argument("--radii")
    p.add_argument("--poly")
    p.add_argument("--check-equality", dest="check_equality", action="store_true")
    p = sub.add_parser("distance", parents=[common], help="Connes distance between two vector states")
    p.add_argument("--phi", default="trace")
    p.add_argument("--psi", default="trace")
    p = sub.add_parser("fejer", parents=[common], help="Fejer smoothing and Lipschitz contraction")
    p.add_argument("--poly")
    p = sub.add_parser("converge", parents=[common], help="bridge-builder epsilon and spectral sweeps")
    p.add_argument("--sweep-N", dest="sweep_N")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args)
        text = COMMANDS[args.command](cfg, args)
        emit(text, cfg.out)
        return EXIT_OK
    except (ConfigError, LevelError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except OracleMismatch as exc:
        sys.stdout.write(exc.report)
        print(f"oracle mismatch: {exc}", file=sys.stderr)
        return EXIT_MISMATCH
    except SolverError as exc:
        print(f"solver did not converge: {exc} residual={exc.residual}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
