"""Batch command line front-end writing CSV or JSON results."""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Sequence

import numpy as np

from . import __version__
from .applications import (
    FurstenbergSpec,
    PlaceDepBC,
    bc_chaos_game,
    bc_entropy_lyapunov,
    bc_bounds,
    bc_family,
    bc_region_scan,
    BakerSpec,
    baker_vs_bc,
    furstenberg_dimension,
    stationarity_check,
)
from .dim_est import dimension_report
from .errors import (
    BudgetExceeded,
    ConfigError,
    ContractionTooWeak,
    IFSLabError,
    NoConvergence,
    NotContracting,
    NotInU,
    SingularMatrix,
)
from .ifs_core import IFSFamily, affine_family, mobius_family, vertical_translate_family
from .thermo import (
    FirstSymbol,
    Geometric,
    conformal_similarity_dimension,
    pressure_estimate,
    solve_similarity_dimension,
    transfer_operator_solve,
)
from .transversality import check_MT

# keys that never enter the config echo, so output does not depend on paths
NOT_ECHOED = {"config", "out", "command", "jobs", "samples"}


def parse_config_file(path: str) -> dict:
    """Flat ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    out = {}
    for num, line in enumerate(lines, 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key=value")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _float(text, key: str) -> float:
    try:
        return float(text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: not a number: {text!r}") from exc


def _int(text, key: str) -> int:
    try:
        return int(text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key}: not an integer: {text!r}") from exc


def _floats(text: str, key: str) -> list:
    return [_float(t, key) for t in str(text).split(",") if t.strip()]


def parse_grid(text: str, key: str = "grid") -> np.ndarray:
    """``lo:hi:count`` with both endpoints included, or a single number."""
    parts = str(text).split(":")
    if len(parts) == 1:
        return np.array([_float(parts[0], key)])
    if len(parts) != 3:
        raise ConfigError(f"{key}: grid must be lo:hi:count")
    lo, hi, count = _float(parts[0], key), _float(parts[1], key), _int(parts[2], key)
    if count < 1:
        raise ConfigError(f"{key}: grid count must be at least 1")
    return np.linspace(lo, hi, count)


class Settings:
    """Resolved configuration: file values overridden by command line flags."""

    def __init__(self, values: dict):
        self.values = values

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def float(self, key: str, default=None) -> float:
        v = self.get(key, default)
        if v is None:
            raise ConfigError(f"missing required setting {key}")
        return _float(v, key)

    def int(self, key: str, default=None) -> int:
        v = self.get(key, default)
        if v is None:
            raise ConfigError(f"missing required setting {key}")
        return _int(v, key)

    def optional_int(self, key: str):
        v = self.get(key)
        return None if v is None else _int(v, key)

    def grid(self, key: str, default=None) -> np.ndarray:
        v = self.get(key, default)
        if v is None:
            raise ConfigError(f"missing required setting {key}")
        return parse_grid(v, key)

    def echo(self) -> dict:
        return {k: str(v) for k, v in sorted(self.values.items()) if k not in NOT_ECHOED}


def _map_entries(values: dict, field: str) -> list:
    """Collect family.mapN.<field> entries ordered by N."""
    found = {}
    for key, v in values.items():
        parts = key.split(".")
        if len(parts) == 3 and parts[0] == "family" and parts[1].startswith("map") and parts[2] == field:
            found[_int(parts[1][3:], key)] = v
    return [found[k] for k in sorted(found)]


def build_family(st: Settings) -> IFSFamily:
    """Family from ``family=kind:payload``, a family file, or family.* keys."""
    values = dict(st.values)
    spec = values.get("family")
    if spec is not None and os.path.isfile(spec):
        values.update(parse_config_file(spec))
        spec = None
    if spec is not None:
        kind, _, payload = spec.partition(":")
    else:
        kind, payload = values.get("family.kind"), ""
        if kind is None:
            raise ConfigError("no family given")
    kind = kind.strip()
    X = tuple(_floats(values["family.X"], "family.X")) if "family.X" in values else (0.0, 1.0)
    if kind in ("affine", "translates"):
        if payload:
            pairs = [_floats(p, "family") for p in payload.split(";")]
        else:
            slopes = _map_entries(values, "slope")
            offsets = _map_entries(values, "offset")
            if len(slopes) != len(offsets):
                raise ConfigError("each map needs a slope and an offset")
            pairs = [[_float(s, "slope"), _float(o, "offset")] for s, o in zip(slopes, offsets)]
        if not pairs or any(len(p) != 2 for p in pairs):
            raise ConfigError("affine maps are given as slope,offset")
        base = affine_family([p[0] for p in pairs], [p[1] for p in pairs], X)
        if kind == "affine":
            return base
        return vertical_translate_family(base, _float(values.get("family.eps", values.get("eps", "0.05")), "eps"))
    if kind == "mobius":
        quads = [_floats(p, "family") for p in payload.split(";")] if payload else [_floats(v, "matrix") for v in _map_entries(values, "matrix")]
        if not quads or any(len(q) != 4 for q in quads):
            raise ConfigError("matrices are given as a,b,c,d")
        return mobius_family([[[q[0], q[1]], [q[2], q[3]]] for q in quads])
    if kind == "bc":
        lo, hi = _floats(payload, "family") if payload else (
            _float(values.get("family.lo", "0.5"), "family.lo"),
            _float(values.get("family.hi", "0.6684755"), "family.hi"),
        )
        return bc_family(lo, hi)
    raise ConfigError(f"unknown family kind {kind!r}")


def equal_ratio_family(m: int) -> IFSFamily:
    return affine_family([1.0 / m] * m, [k / m for k in range(m)])


def build_potential(text: str, fam: IFSFamily, lam):
    kind, _, payload = text.partition(":")
    if kind == "first-symbol":
        p = _floats(payload, "potential")
        if len(p) != fam.m or min(p) <= 0:
            raise ConfigError("first-symbol needs one positive weight per map")
        return FirstSymbol(tuple(math.log(v) for v in p))
    if kind == "geometric":
        s = _float(payload, "potential") if payload else conformal_similarity_dimension(fam, lam).value
        return Geometric(s)
    if kind == "place-dependent":
        if fam.m != 2 or fam.d != 1:
            raise ConfigError("place-dependent potentials need the bc family")
        return PlaceDepBC(float(fam.param(lam)[0]), _float(payload, "potential")).potential()
    raise ConfigError(f"unknown potential {text!r}")


def _param(st: Settings, fam: IFSFamily):
    v = st.get("param")
    if v is None:
        return None
    lam = _floats(v, "param")
    if len(lam) != fam.d:
        raise ConfigError(f"family has {fam.d} parameters, got {len(lam)}")
    return lam


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.9g}"
    return str(x)


def json_ready(obj):
    """Round floats to 9 significant digits; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_ready(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [json_ready(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return float(f"{x:.9g}") if math.isfinite(x) else str(x)
    return obj


class Output:
    """One result: CSV header and rows, plus a JSON payload and a summary line."""

    def __init__(self, header: Sequence[str], rows: list, payload: dict, summary: str):
        self.header = list(header)
        self.rows = rows
        self.payload = payload
        self.summary = summary

    def render(self, fmt_name: str, command: str, st: Settings) -> str:
        if fmt_name == "csv":
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(self.header)
            for r in self.rows:
                w.writerow([fmt(v) for v in r])
            return buf.getvalue()
        doc = {"version": __version__, "command": command, "config-echo": st.echo()}
        doc.update(self.payload)
        return json.dumps(json_ready(doc), indent=2, sort_keys=False) + "\n"


def _word_text(word) -> str:
    return " ".join(str(a) for a in word)


def cmd_sim_dim(st: Settings) -> Output:
    if st.get("ratios") is not None:
        s = solve_similarity_dimension(_floats(st.get("ratios"), "ratios"))
        return Output(["s"], [(s,)], {"s": s}, f"s = {fmt(s)}")
    fam = build_family(st)
    r = conformal_similarity_dimension(fam, _param(st, fam), st.optional_int("depth"))
    return Output(
        ["s", "depth", "sensitivity"],
        [(r.value, r.depth, r.sensitivity)],
        {"s": r.value, "depth": r.depth, "sensitivity": r.sensitivity},
        f"s = {fmt(r.value)}",
    )


def cmd_pressure_curve(st: Settings) -> Output:
    fam = build_family(st)
    lam = _param(st, fam)
    n = st.int("depth", "10")
    rows = []
    for t in st.grid("t", "0:1:11"):
        est = pressure_estimate(fam, lam, float(t), n)
        rows.append((float(t), est.value, est.raw))
    payload = {"depth": n, "curve": [{"t": t, "pressure": p, "raw": r} for t, p, r in rows]}
    return Output(["t", "pressure", "raw"], rows, payload, f"{len(rows)} pressure values at depth {n}")


def cmd_gibbs(st: Settings) -> Output:
    pot_text = st.get("potential")
    if pot_text is None:
        raise ConfigError("gibbs needs a potential")
    if st.get("family") is None and st.get("family.kind") is None:
        if not pot_text.startswith("first-symbol:"):
            raise ConfigError("only first-symbol potentials may omit the family")
        fam = equal_ratio_family(len(_floats(pot_text.partition(":")[2], "potential")))
    else:
        fam = build_family(st)
    lam = _param(st, fam)
    pot = build_potential(pot_text, fam, lam)
    depth = st.int("depth", "6")
    g = transfer_operator_solve(pot, fam, lam, st.optional_int("k"), depth)
    w = g.weights_at(depth)
    from .symbolic import word_array

    words = word_array(fam.m, depth)
    rows = [(_word_text(words[i]), w[i]) for i in range(w.size)]
    payload = g.to_json_dict()
    payload["truncation"] = g.k
    return Output(["word", "mass"], rows, payload, f"eigenvalue = {fmt(g.eigenvalue)}, residual = {fmt(g.residual)}")


def _dim_scan_cell(args):
    st_values, lam = args
    st = Settings(st_values)
    fam = build_family(st) if (st.get("family") or st.get("family.kind")) else bc_family()
    pot = build_potential(st.get("potential", "place-dependent:0.1"), fam, lam)
    depth = st.int("depth", "10")
    g = transfer_operator_solve(pot, fam, lam, st.optional_int("k"), depth + 1)
    rep = dimension_report(g, fam, lam, depth)
    return (*lam, rep.h, rep.chi, rep.ratio_dim, rep.cor_dim)


def _grid_points(st: Settings, fam: IFSFamily) -> list:
    grids = st.get("grid")
    if fam.d == 0:
        return [[]]
    if grids is None:
        return [fam.center().tolist()]
    axes = [parse_grid(g, "grid") for g in grids.split(";")]
    if len(axes) != fam.d:
        raise ConfigError(f"family has {fam.d} parameters, got {len(axes)} grids")
    return [list(p) for p in itertools.product(*[a.tolist() for a in axes])]


def _map_cells(fn, cells: list, jobs: int) -> list:
    """Evaluate cells, possibly in parallel; results stay in cell order."""
    if jobs <= 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, cells))


def cmd_dim_scan(st: Settings) -> Output:
    fam = build_family(st) if (st.get("family") or st.get("family.kind")) else bc_family()
    points = _grid_points(st, fam)
    rows = _map_cells(_dim_scan_cell, [(st.values, p) for p in points], st.int("jobs", "1"))
    names = [f"lambda{k + 1}" for k in range(fam.d)]
    header = names + ["h", "chi", "ratio_dim", "cor_dim"]
    payload = {"rows": [dict(zip(header, r)) for r in rows]}
    return Output(header, rows, payload, f"{len(rows)} parameter points")


def cmd_bc_region(st: Settings) -> Output:
    rows = bc_region_scan(st.grid("lambda", "0.5:0.67:50").tolist(), st.grid("rho", "0:0.45:50").tolist())
    header = ["lambda", "rho", "A", "B", "dim_lower", "dim_upper", "class"]
    counts = {c: sum(r[-1] == c for r in rows) for c in ("abs_cont_ae", "singular", "undetermined")}
    payload = {"counts": counts, "rows": [dict(zip(header, r)) for r in rows]}
    return Output(header, rows, payload, f"{len(rows)} cells: " + ", ".join(f"{k} {v}" for k, v in counts.items()))


def _bc_sample_cell(args):
    lam, rho, n, seed, stream = args
    spec = PlaceDepBC(lam, rho)
    x = bc_chaos_game(spec, n, seed, stream)
    stats = bc_entropy_lyapunov(spec, x)
    b = bc_bounds(lam, rho)
    return (lam, rho, stats.h_mc, stats.h_se, stats.chi_mc, b.A, b.B, stationarity_check(spec, x))


def cmd_bc_sample(st: Settings) -> Output:
    n = st.int("n", "100000")
    seed = st.int("seed", "0")
    cells = [
        (float(lam), float(rho), n, seed, k)
        for k, (lam, rho) in enumerate(itertools.product(st.grid("lambda", "0.55"), st.grid("rho", "0.1")))
    ]
    rows = _map_cells(_bc_sample_cell, cells, st.int("jobs", "1"))
    dump = st.get("samples")
    if dump is not None:
        lam, rho, _, _, stream = cells[0]
        x = bc_chaos_game(PlaceDepBC(lam, rho), n, seed, stream)
        with open(dump, "w", encoding="utf-8") as fh:
            fh.writelines(f"{v:.9g}\n" for v in x.tolist())
    header = ["lambda", "rho", "h_mc", "h_se", "chi_mc", "A", "B", "stationarity"]
    payload = {"rows": [dict(zip(header, r)) for r in rows]}
    r0 = rows[0]
    return Output(header, rows, payload, f"{len(rows)} cells; first h_mc = {fmt(r0[2])} +- {fmt(r0[3])}")


def cmd_transversality(st: Settings) -> Output:
    fam = build_family(st)
    counts = [_int(c, "grid") for c in str(st.get("grid", "9")).split(",")]
    rep = check_MT(fam, counts[0] if len(counts) == 1 else counts, st.int("depth", "4"), st.int("N", "60"))
    rows = [(" ".join(fmt(v) for v in v.lam), v.i, v.j, v.delta, v.grad_norm, v.eta) for v in rep.violations]
    return Output(
        ["lambda", "i", "j", "delta", "grad_norm", "eta"],
        rows,
        rep.to_json_dict(),
        f"eta_passed = {rep.eta_passed}, violations = {len(rep.violations)}",
    )


def _matrices(text: str) -> list:
    quads = [_floats(p, "matrices") for p in text.split(";")]
    if not quads or any(len(q) != 4 for q in quads):
        raise ConfigError("matrices are given as a,b,c,d;a,b,c,d")
    return [[[q[0], q[1]], [q[2], q[3]]] for q in quads]


def cmd_furstenberg(st: Settings) -> Output:
    mats = _matrices(st.get("matrices", "2,1,1,2;1,1,1,2"))
    depth = st.int("depth", "12")
    rows = []
    for q in st.grid("q", "1"):
        try:
            spec = FurstenbergSpec(mats, float(q))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        r = furstenberg_dimension(spec, n=depth)
        rows.append((r.q, r.pressure, r.eta1, r.eta2, r.entropy, r.lyapunov, r.dimension, r.abs_cont))
    header = ["q", "pressure", "eta1", "eta2", "entropy", "lyapunov", "dimension", "abs_cont"]
    payload = {"depth": depth, "rows": [dict(zip(header, r)) for r in rows]}
    return Output(header, rows, payload, f"dimension = {fmt(rows[0][6])} at q = {fmt(rows[0][0])}")


def cmd_baker(st: Settings) -> Output:
    lam, rho = st.float("lambda", "0.55"), st.float("rho", "0.1")
    spec = BakerSpec(lam, rho)
    bc = PlaceDepBC(st.float("bc-lambda", str(lam)), st.float("bc-rho", str(rho)))
    n = st.int("n", "200000")
    ks = baker_vs_bc(spec, n, st.int("seed", "0"), bc)
    row = (lam, rho, bc.lam, bc.rho, n, ks)
    header = ["lambda", "rho", "bc_lambda", "bc_rho", "n", "ks"]
    return Output(header, [row], dict(zip(header, row)), f"ks = {fmt(ks)}")


COMMANDS = {
    "sim-dim": (cmd_sim_dim, "similarity dimension", "CSV: s  (or s,depth,sensitivity with --family)", ["ratios", "family", "param", "depth", "eps"]),
    "pressure-curve": (cmd_pressure_curve, "geometric pressure over a t grid", "CSV: t,pressure,raw", ["family", "param", "depth", "t", "eps"]),
    "gibbs": (cmd_gibbs, "Gibbs measure from the transfer operator", "CSV: word,mass", ["family", "param", "potential", "depth", "k", "eps"]),
    "dim-scan": (cmd_dim_scan, "dimension estimates over a parameter grid", "CSV: lambda1..lambdad,h,chi,ratio_dim,cor_dim", ["family", "potential", "grid", "depth", "k", "eps", "jobs"]),
    "bc-region": (cmd_bc_region, "classify place dependent Bernoulli convolutions", "CSV: lambda,rho,A,B,dim_lower,dim_upper,class", ["lambda", "rho"]),
    "bc-sample": (cmd_bc_sample, "chaos game entropy estimates", "CSV: lambda,rho,h_mc,h_se,chi_mc,A,B,stationarity", ["lambda", "rho", "n", "seed", "jobs", "samples"]),
    "transversality": (cmd_transversality, "sampled transversality check", "CSV: lambda,i,j,delta,grad_norm,eta (one row per violation)", ["family", "grid", "depth", "N", "eps"]),
    "furstenberg": (cmd_furstenberg, "Furstenberg-like measure dimension", "CSV: q,pressure,eta1,eta2,entropy,lyapunov,dimension,abs_cont", ["matrices", "q", "depth"]),
    "baker": (cmd_baker, "slanted baker map x-marginal against the chaos game", "CSV: lambda,rho,bc_lambda,bc_rho,n,ks", ["lambda", "rho", "bc-lambda", "bc-rho", "n", "seed"]),
}

OPTION_HELP = {
    "ratios": "comma separated contraction ratios",
    "family": "kind:payload (affine:s,o;s,o  translates:s,o;s,o  mobius:a,b,c,d;...  bc:lo,hi) or a family file",
    "param": "comma separated parameter point",
    "depth": "cylinder depth",
    "eps": "translation box half width for translates families",
    "t": "grid lo:hi:count",
    "potential": "first-symbol:p1,p2,...  geometric[:s]  place-dependent:rho",
    "k": "transfer operator truncation depth",
    "grid": "per-axis grids lo:hi:count separated by ';' (dim-scan) or cell counts a,b (transversality)",
    "jobs": "worker processes",
    "lambda": "value or grid lo:hi:count",
    "rho": "value or grid lo:hi:count",
    "n": "number of samples",
    "seed": "base seed",
    "N": "projection truncation depth",
    "matrices": "positive 2x2 matrices a,b,c,d;a,b,c,d",
    "q": "value or grid lo:hi:count",
    "bc-lambda": "lambda of the comparison chaos game",
    "bc-rho": "rho of the comparison chaos game",
    "samples": "also write the first cell's samples to this path, one per line",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ifslab", description="Dimension experiments for parametrized interval IFSs.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name, (_, help_text, schema, options) in COMMANDS.items():
        sp = sub.add_parser(name, help=help_text, description=help_text, epilog=schema)
        sp.add_argument("--config", help="key=value config file; flags override it")
        sp.add_argument("--out", help="output path")
        sp.add_argument("--format", choices=["csv", "json"], help="output format (default from the extension, else csv)")
        for opt in options:
            sp.add_argument(f"--{opt}", dest=opt, help=OPTION_HELP[opt])
    return p


def _output_format(args) -> str:
    if args.format:
        return args.format
    if args.out:
        ext = os.path.splitext(args.out)[1].lower()
        if ext == ".json":
            return "json"
        if ext in ("", ".csv", ".txt"):
            return "csv"
        raise ConfigError(f"unrecognized output extension {ext!r}; pass --format")
    return "csv"


def run(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        values = parse_config_file(args.config) if args.config else {}
        values.update({k: v for k, v in vars(args).items() if v is not None and k not in ("format",)})
        st = Settings(values)
        fmt_name = _output_format(args)
        result = COMMANDS[args.command][0](st)
        text = result.render(fmt_name, args.command, st)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            print(result.summary)
        else:
            sys.stdout.write(text)
            print(result.summary, file=sys.stderr)
        return 0
    except (NoConvergence, BudgetExceeded) as exc:
        print(f"ifslab: numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, NotInU, SingularMatrix, NotContracting, ContractionTooWeak) as exc:
        print(f"ifslab: config error: {exc}", file=sys.stderr)
        return 2
    except IFSLabError as exc:
        print(f"ifslab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"ifslab: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
