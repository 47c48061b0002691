"""``fockopa`` command line: decay tables, pipeline runs and bound ledgers."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .fockops import CapacityError, DEFAULT_CAPACITY, basis_size, col_norm, row_norm
from .freealg import FreePoly, MatrixTuple, ParseError, ShapeError, from_json, parse, tuple_from_json
from .linearize import (NormalizationError, decay_sandwich_constants, linearize, verify_stable_assoc,
                        zero_locus_report)
from .opa import (MonotonicityError, cyclicity_verdict, decay_table, default_window, normalize_constant, solve_opa,
                  theorem_exponent)
from .sigma import ContractionError, ledger, pencil_poly, sigma_build, sigma_residual_norm_sq
from .specrad import (SpecradError, burnside_triangularize, is_irreducible, is_jointly_nilpotent,
                      outer_spectral_radius, similarity_to_column_contraction)

#: Largest dense multiplication matrix (entries) the CLI will factor.
DENSE_LIMIT = 60_000_000


@dataclass
class ScenarioConfig:
    poly: str | None = None
    file: str | None = None
    d: int | None = None
    nmax: int | None = None
    window: tuple[int, int] | None = None
    seed: int | None = None
    out: str = "."
    tol: float = 1e-10
    capacity: int = DEFAULT_CAPACITY
    n: int = 2
    N: int | None = None
    m: int = 3
    sandwich: int = 6
    samples: int = 200
    threshold: float = 0.1
    timing: bool = False
    exact: bool = True

    def __post_init__(self):
        if isinstance(self.window, str):
            self.window = parse_window(self.window)
        elif self.window is not None:
            self.window = (int(self.window[0]), int(self.window[1]))
        if self.window is not None and self.nmax is not None:
            lo, hi = self.window
            if not (2 <= lo <= hi <= self.nmax):
                raise ValueError(f"window {lo}:{hi} must lie inside [2, {self.nmax}]")


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


def parse_window(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise ValueError(f"window must look like a:b, got {text!r}") from None


def load_config(args: argparse.Namespace) -> ScenarioConfig:
    """Defaults, then the ``--config`` file, then explicit flags."""
    values: dict = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
        known = {f.name for f in fields(ScenarioConfig)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        values.update(doc)
    for f in fields(ScenarioConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    return ScenarioConfig(**values)


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj if obj is None or isinstance(obj, str) else str(obj)


def dump_json(obj) -> str:
    return json.dumps(jsonable(obj), indent=2, sort_keys=True) + "\n"


def load_poly(cfg: ScenarioConfig, exact: bool = False) -> FreePoly:
    if cfg.poly is not None and cfg.file is not None:
        raise ValueError("give either --poly or --file, not both")
    if cfg.poly is not None:
        return parse(cfg.poly, d=cfg.d, exact=exact)
    if cfg.file is None:
        raise ValueError("a polynomial is required (--poly or --file)")
    text = Path(cfg.file).read_text(encoding="utf-8")
    if cfg.file.endswith(".json"):
        F = from_json(text, exact=exact)
        return F.with_d(cfg.d) if cfg.d and cfg.d != F.d else F
    return parse(text.strip(), d=cfg.d, exact=exact)


def describe(cfg: ScenarioConfig) -> str:
    return cfg.poly if cfg.poly is not None else Path(cfg.file).name


def opa_entries(d: int, n: int, k: int, deg: int) -> int:
    return basis_size(d, n + deg) * k * basis_size(d, n) * k


def _opa_feasible(F: FreePoly, n: int, cfg: ScenarioConfig) -> str | None:
    if basis_size(F.d, n) > cfg.capacity:
        return f"degree {n} exceeds capacity {cfg.capacity}"
    if opa_entries(F.d, n, F.rows, int(F.degree)) > DENSE_LIMIT:
        return f"degree {n} multiplication matrix too large for a dense solve"
    return None


# --- stages ----------------------------------------------------------------


def atoms_of(F: FreePoly, seed: int = 0):
    """``(ell, atom_count, form, pencil, witness)`` or ``None`` when ``F(0)`` is singular."""
    Fn = normalize_constant(F)
    if Fn is None:
        return None
    pencil, witness = linearize(Fn)
    form = burnside_triangularize(pencil.A, seed=seed)
    return form.ell, form.atom_count, form, pencil, witness


def run_decay(F: FreePoly, cfg: ScenarioConfig, ell: int | None, out: Path, log) -> dict:
    n_max = cfg.nmax if cfg.nmax is not None else 10
    window = cfg.window or default_window(n_max)
    table = decay_table(F, n_max, window, cfg.capacity, ell, describe(cfg))
    from .plotting import decay_figure

    atomic_write(out / "decay.csv", table.to_csv(timing=cfg.timing))
    atomic_write(out / "decay.svg", decay_figure(table))
    log(f"wrote {out / 'decay.csv'} and {out / 'decay.svg'}")
    return {"n_max": n_max, "window": list(window), "slope": table.slope, "ell": ell, "p": table.p,
            "c_n": table.cs}


def cmd_opa(cfg: ScenarioConfig, log=print) -> int:
    F = load_poly(cfg)
    if cfg.nmax is None:
        cfg.nmax = 10
    out = Path(cfg.out)
    ell = None
    try:
        info = atoms_of(F, seed=cfg.seed or 0)
    except (SpecradError, NormalizationError, ValueError) as exc:
        log(f"note: no atom count ({exc})")
        info = None
    if info is not None and info[1] >= 1:
        ell = info[1]
    decay = run_decay(F, cfg, ell, out, log)
    verdict = cyclicity_verdict(F, cfg.nmax, cfg.threshold, cfg.capacity, cfg.seed or 0,
                                known=dict(enumerate(decay["c_n"])))
    log(f"slope over [{decay['window'][0]}, {decay['window'][1]}]: {decay['slope']:.6f}")
    if decay["p"] is None:
        log("theorem exponent p: n/a")
    else:
        log(f"theorem exponent p: {decay['p']:.6g} (ell = {ell})")
    log(f"verdict: {verdict['verdict']}")
    log(f"c_{cfg.nmax} = {verdict['c_n_max']:.6g}, consistent with radius test: {verdict['consistent']}")
    return 0


def sandwich_check(F: FreePoly, G: FreePoly, witness, cfg: ScenarioConfig, n_hi: int) -> dict:
    """``c^G_n <= C2 c^F_{n - D2}`` on the feasible range of ``n``."""
    consts = decay_sandwich_constants(witness)
    C, D = consts.C2, consts.D2
    rows, ok, skipped = [], True, None
    cF: dict[int, float] = {}
    for n in range(D + 1, n_hi + 1):
        why = _opa_feasible(G, n, cfg) or _opa_feasible(F, n - D, cfg)
        if why:
            skipped = why
            break
        cG = solve_opa(G, n, cfg.capacity).c_n
        if n - D not in cF:
            cF[n - D] = solve_opa(F, n - D, cfg.capacity).c_n
        holds = cG <= C * cF[n - D] + cfg.tol
        ok &= holds
        rows.append({"n": n, "c_pencil": cG, "c_F": cF[n - D], "bound": C * cF[n - D], "holds": holds})
    return {"C": C, "D": D, "constants": consts.as_tuple(), "rows": rows, "ok": bool(ok),
            "skipped": skipped}


def cmd_pipeline(cfg: ScenarioConfig, log=print) -> int:
    report: dict = {"input": describe(cfg)}
    checks: dict[str, bool] = {}
    try:
        F = load_poly(cfg, exact=cfg.exact)
    except ParseError:
        F = load_poly(cfg, exact=False)
    Fn = normalize_constant(F)
    if Fn is None:
        raise StageError("normalize", "F(0) is singular")
    pencil, witness = linearize(Fn)
    G = pencil.as_poly(exact=Fn.exact)
    ver = verify_stable_assoc(Fn, G, witness, tol=cfg.tol)
    checks["linearize"] = ver.ok
    report["linearize"] = {"pencil_size": pencil.size, "D1": witness.D1, "D2": witness.D2,
                           "steps": len(witness.steps), "verified": ver.ok, "message": ver.message}
    try:
        form = burnside_triangularize(pencil.A, seed=cfg.seed or 0)
    except SpecradError as exc:
        raise StageError("triangularize", str(exc)) from exc
    blocks = []
    for i, M in enumerate(form.diagonal):
        blocks.append({"size": form.sizes[i], "zero": form.zero_flags[i],
                       "radius": 0.0 if form.zero_flags[i] else outer_spectral_radius(M),
                       "col_norm": col_norm(M), "row_norm": row_norm(M)})
    err = form.residual_error()
    checks["triangularize"] = err <= 1e-8 and all(
        b["zero"] or b["col_norm"] <= 1 + 1e-8 for b in blocks)
    p = theorem_exponent(max(form.atom_count, 1))
    report["triangularize"] = {"ell": form.ell, "atoms": form.atom_count, "p": p, "blocks": blocks,
                               "similarity_residual": err}
    log(f"pencil size {pencil.size}, ell = {form.ell}, atoms = {form.atom_count}, p = {p:.6g}")
    log(f"witness degrees D1 = {witness.D1}, D2 = {witness.D2}, verified: {ver.ok}")

    n = cfg.n
    try:
        sig = sigma_build(form, n, cfg.N)
    except ContractionError as exc:
        raise StageError("sigma", str(exc)) from exc
    reps = [sigma_residual_norm_sq(form, sig, "blockwise")]
    L = pencil_poly(form)
    exact_rep = None
    if basis_size(L.d, sig.degree + 1) <= cfg.capacity:
        exact_rep = sigma_residual_norm_sq(form, sig, "exact", cfg.capacity)
        reps.append(exact_rep)
    led = ledger(sig, reps)
    checks["sigma_degree"] = sig.degree <= sig.degree_bound <= sig.nominal_degree_bound
    sig_info = {"n": n, "degree": sig.degree, "degree_bound": sig.degree_bound,
                "nominal_degree_bound": sig.nominal_degree_bound, "ledger": led,
                "blockwise": reps[0].value, "exact": exact_rep.value if exact_rep else None}
    if exact_rep is not None:
        checks["sigma_certified"] = exact_rep.value <= reps[0].value + cfg.tol
        why = _opa_feasible(L, sig.degree, cfg)
        if why is None:
            c_opa = solve_opa(L, sig.degree, cfg.capacity).c_n
            sig_info["c_opa_at_degree"] = c_opa
            checks["opa_optimal"] = c_opa <= exact_rep.value + cfg.tol
        else:
            sig_info["opa_comparison_skipped"] = why
    else:
        sig_info["exact_skipped"] = f"degree {sig.degree + 1} exceeds capacity {cfg.capacity}"
    report["sigma"] = sig_info
    log(f"sigma_{n}: degree {sig.degree} (bound {sig.degree_bound}), blockwise residual "
        f"{reps[0].value:.6g}" + (f", exact {exact_rep.value:.6g}" if exact_rep else ""))

    Ff = Fn.to_float()
    Gf = G.to_float()
    sw = sandwich_check(Ff, Gf, witness, cfg, cfg.sandwich)
    checks["sandwich"] = sw["ok"]
    report["sandwich"] = sw
    log(f"sandwich c^pencil_n <= {sw['C']:.4g} c^F_(n-{sw['D']}): "
        f"{len(sw['rows'])} rows, holds: {sw['ok']}" + (f" (stopped: {sw['skipped']})" if sw["skipped"] else ""))

    out = Path(cfg.out)
    if cfg.nmax is not None:
        report["decay"] = run_decay(F.to_float(), cfg, max(form.atom_count, 1), out, log)
        log(f"slope over {report['decay']['window']}: {report['decay']['slope']:.6f}")
    report["checks"] = checks
    ok = all(checks.values())
    report["ok"] = ok
    atomic_write(out / "pipeline.json", dump_json(report))
    log(f"wrote {out / 'pipeline.json'}; all checks passed: {ok}")
    return 0 if ok else 1


def _random_tuple(cfg: ScenarioConfig) -> MatrixTuple:
    if cfg.seed is None:
        raise ValueError("a random tuple needs --seed")
    rng = np.random.default_rng(cfg.seed)
    d = cfg.d or 2
    return MatrixTuple(rng.standard_normal((d, cfg.m, cfg.m)))


def cmd_specrad(cfg: ScenarioConfig, log=print) -> int:
    if cfg.file is not None and cfg.file.endswith(".json") and cfg.poly is None:
        doc = json.loads(Path(cfg.file).read_text(encoding="utf-8"))
        if "mats" in doc:
            A, source = tuple_from_json(doc), Path(cfg.file).name
        else:
            A, source = linearize(_normalized(from_json(doc, exact=cfg.exact)))[0].A, "pencil"
    elif cfg.poly is not None or cfg.file is not None:
        A, source = linearize(_normalized(load_poly(cfg, exact=cfg.exact)))[0].A, "pencil"
    else:
        A, source = _random_tuple(cfg), f"random seed {cfg.seed}"
    checks: dict[str, bool] = {}
    rho = outer_spectral_radius(A)
    nil = is_jointly_nilpotent(A)
    irr = is_irreducible(A)
    rep: dict = {"source": source, "d": A.d, "m": A.m, "rho": rho, "jointly_nilpotent": nil,
                 "irreducible": irr}
    checks["nilpotent_radius"] = (rho == 0.0) == nil
    if irr and rho > 0:
        S = similarity_to_column_contraction(A.scaled(1.0 / rho))
        achieved = col_norm(A.conjugate_by(S))
        rep["S"] = S
        rep["achieved_col_norm"] = achieved
        checks["contraction"] = achieved <= rho * (1 + 1e-8)
    elif rho > 0:
        form = burnside_triangularize(A.scaled(1.0 / rho), seed=cfg.seed or 0)
        rep["block_sizes"] = form.sizes
    rng = np.random.default_rng(cfg.seed if cfg.seed is not None else 0)
    T = rng.standard_normal((A.m, A.m)) + np.eye(A.m) * A.m
    rho_T = outer_spectral_radius(A.conjugate_by(T))
    rho_adj = outer_spectral_radius(A.adjoint())
    tol_rel = 1e-6 * max(rho, 1e-300)
    rep["self_test"] = {"similarity": rho_T, "adjoint": rho_adj}
    checks["similarity_invariance"] = abs(rho_T - rho) <= tol_rel or (nil and rho_T < 1e-6)
    checks["adjoint"] = abs(rho_adj - rho) <= 1e-10 * max(1.0, rho) or (nil and rho_adj < 1e-6)
    rep["checks"] = checks
    ok = all(checks.values())
    rep["ok"] = ok
    log(f"rho = {rho:.12g}, irreducible: {irr}, jointly nilpotent: {nil}")
    if "achieved_col_norm" in rep:
        log(f"similarity S gives column norm {rep['achieved_col_norm']:.12g}")
    log(f"self-test: rho(T^-1 A T) = {rho_T:.12g}, rho(A*) = {rho_adj:.12g}")
    atomic_write(Path(cfg.out) / "specrad.json", dump_json(rep))
    return 0 if ok else 1


def _normalized(F: FreePoly) -> FreePoly:
    Fn = normalize_constant(F)
    if Fn is None:
        raise StageError("normalize", "F(0) is singular")
    return Fn


def cmd_linearize(cfg: ScenarioConfig, log=print) -> int:
    F = _normalized(load_poly(cfg, exact=cfg.exact))
    pencil, witness = linearize(F)
    G = pencil.as_poly(exact=F.exact)
    ver = verify_stable_assoc(F, G, witness, tol=cfg.tol)
    zl = zero_locus_report(F.to_float(), G.to_float(), samples=cfg.samples,
                           seed=cfg.seed if cfg.seed is not None else 0)
    rep = {"pencil_size": pencil.size, "d": pencil.d, "A": pencil.A.mats, "D1": witness.D1,
           "D2": witness.D2, "verified": ver.ok, "message": ver.message,
           "zero_locus": {"agree": zl["agree"], "samples": len(zl["points"]),
                          "zeros_F": zl["zeros_F"], "zeros_G": zl["zeros_G"]}}
    ok = ver.ok and zl["agree"]
    rep["ok"] = ok
    log(f"pencil size {pencil.size}, D1 = {witness.D1}, D2 = {witness.D2}")
    log(f"stable association verified: {ver.ok} ({ver.message})")
    log(f"zero locus agreement on {len(zl['points'])} samples: {zl['agree']}")
    atomic_write(Path(cfg.out) / "linearize.json", dump_json(rep))
    return 0 if ok else 1


def cmd_sigma_bounds(cfg: ScenarioConfig, log=print) -> int:
    F = _normalized(load_poly(cfg, exact=cfg.exact))
    pencil, _ = linearize(F)
    form = burnside_triangularize(pencil.A, seed=cfg.seed or 0)
    n_max = cfg.nmax if cfg.nmax is not None else 3
    lines = ["n,N,degree,degree_bound,nominal_degree_bound,mult_bound,offdiag_bound,K,K_over_n"]
    ok = True
    rows = []
    for n in range(1, n_max + 1):
        sig = sigma_build(form, n, cfg.N)
        rep = sigma_residual_norm_sq(form, sig, "blockwise")
        off = [b for b in rep.blocks if b["block"][0] == "<" and "K" in b]
        worst = max((b["value"] for b in off), default=0.0)
        K = max((lv.K for lv in sig.levels), default=0.0)
        N = sig.levels[-1].N
        holds = sig.degree == sig.degree_bound and sig.degree <= sig.nominal_degree_bound
        if cfg.N is None and off:
            holds &= worst <= K / n + cfg.tol
        ok &= holds
        rows.append({"n": n, "ledger": ledger(sig, [rep]), "holds": holds})
        lines.append(f"{n},{'' if N is None else N},{sig.degree},{sig.degree_bound},"
                     f"{sig.nominal_degree_bound},{sig.mult_bound:.17g},{worst:.17g},{K:.17g},{K / n:.17g}")
        log(f"n = {n}: degree {sig.degree} (nominal {sig.nominal_degree_bound}), off-diagonal bound "
            f"{worst:.6g} vs K/n = {K / n:.6g}")
    out = Path(cfg.out)
    atomic_write(out / "sigma_bounds.csv", "\n".join(lines) + "\n")
    atomic_write(out / "sigma_bounds.json", dump_json({"ell": form.ell, "rows": rows, "ok": ok}))
    return 0 if ok else 1


COMMANDS = {
    "opa": cmd_opa,
    "pipeline": cmd_pipeline,
    "specrad": cmd_specrad,
    "linearize": cmd_linearize,
    "sigma-bounds": cmd_sigma_bounds,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with scenario fields; flags take precedence")
    common.add_argument("--poly", help="polynomial text, e.g. '(1 - x1)*(1 - x2)'")
    common.add_argument("--file", help="polynomial text file, or JSON matrix polynomial / tuple")
    common.add_argument("--d", type=int, help="number of letters")
    common.add_argument("--nmax", type=int)
    common.add_argument("--window", type=parse_window, metavar="A:B")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--tol", type=float)
    common.add_argument("--capacity", type=int)
    common.add_argument("--threshold", type=float, help="cutoff for numerical c_n -> 0")
    common.add_argument("--timing", action="store_true", default=None,
                        help="fill the time_ms column of decay.csv")
    common.add_argument("--float", dest="exact", action="store_false", default=None,
                        help="parse coefficients as floats instead of exact rationals")

    parser = argparse.ArgumentParser(prog="fockopa", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("opa", parents=[common], help="decay table of optimal approximants")
    p = sub.add_parser("pipeline", parents=[common], help="linearize, triangularize, sigma, bounds")
    p.add_argument("--n", type=int, help="sigma degree parameter")
    p.add_argument("--N", type=int, help="override the inner degree N")
    p.add_argument("--sandwich", type=int, metavar="N", help="largest n in the sandwich check")
    s = sub.add_parser("specrad", parents=[common], help="outer spectral radius report")
    s.add_argument("--m", type=int, help="matrix size of a random tuple")
    lz = sub.add_parser("linearize", parents=[common], help="monic pencil and witness")
    lz.add_argument("--samples", type=int)
    sb = sub.add_parser("sigma-bounds", parents=[common], help="sigma degree and bound ledger")
    sb.add_argument("--N", type=int, help="override the inner degree N")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        t0 = time.perf_counter()
        status = COMMANDS[args.command](cfg)
        if cfg.timing:
            print(f"elapsed {time.perf_counter() - t0:.3f} s")
        return status
    except (ParseError, ShapeError, CapacityError, MonotonicityError, NormalizationError,
            SpecradError, ContractionError, StageError, ValueError, OSError) as exc:
        print(f"fockopa {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
