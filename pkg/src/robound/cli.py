"""Command-line front end: ``robound {check,gain,worstcase,interpolate,simulate}``.

Every verb reads one JSON config.  Matrices are nested arrays and a complex
scalar is a two-element array ``[re, im]``; which reading applies is decided
by the depth the field expects.  Exit codes: 0 certified/consistent,
1 violation found, 2 configuration or numerical error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import classic, l2e
from ._tol import tolerance
from .certify import (
    DEFAULT_EPS_GRID,
    check_plant_constraint,
    gain_bound,
    search_plant_constraint,
)
from .errors import AnchorViolatesM, ConfigError, RoboundError
from .interpolate import extend, verify_interpolant
from .quadform import HermitianForm2, definiteness, qc_eval
from .relations import LinearMap, ScaledIdentity, StaticNonlinearity
from .space import COMPLEX, REAL, EuclideanSpace, TruncatedSignalSpace, WeightedSpace
from .worstcase import CannotDefeat, defeat_gain

EXIT_OK, EXIT_VIOLATION, EXIT_ERROR = 0, 1, 2


# -- parsing ----------------------------------------------------------------


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def parse_scalar(v, where: str):
    if _is_num(v):
        return float(v)
    if isinstance(v, list) and len(v) == 2 and all(_is_num(c) for c in v):
        return complex(v[0], v[1])
    raise ConfigError(f"{where}: expected a number or [re, im], got {v!r}")


def parse_vector(v, where: str) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where}: expected a non-empty list of scalars")
    vals = [parse_scalar(c, f"{where}[{i}]") for i, c in enumerate(v)]
    return np.array(vals, dtype=complex if any(isinstance(c, complex) for c in vals) else float)


def parse_matrix(v, where: str) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where}: expected a list of rows")
    rows = [parse_vector(r, f"{where}[{i}]") for i, r in enumerate(v)]
    if len({len(r) for r in rows}) != 1:
        raise ConfigError(f"{where}: rows have different lengths")
    return np.array(rows, dtype=np.result_type(*rows))


def parse_form(v, where: str) -> HermitianForm2:
    A = parse_matrix(v, where)
    if A.shape != (2, 2):
        raise ConfigError(f"{where}: expected a 2x2 matrix, got shape {A.shape}")
    try:
        return HermitianForm2.from_matrix(A)
    except RoboundError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _get(cfg: dict, key: str, where: str, default=KeyError):
    if key in cfg:
        return cfg[key]
    if default is KeyError:
        raise ConfigError(f"{where}: missing field {key!r}")
    return default


def build_space(cfg: dict):
    s = _get(cfg, "space", "config")
    field = s.get("field", REAL)
    if field not in (REAL, COMPLEX):
        raise ConfigError(f"space.field: expected 'real' or 'complex', got {field!r}")
    kind = s.get("kind", "euclidean")
    try:
        if kind == "euclidean":
            return EuclideanSpace(int(_get(s, "dim", "space")), field)
        if kind == "weighted":
            return WeightedSpace(parse_matrix(_get(s, "gram", "space"), "space.gram"), field)
        if kind == "signal":
            length = int(_get(s, "length", "space"))
            return TruncatedSignalSpace(int(s.get("horizon", length)), length, field=field)
    except RoboundError as exc:
        raise ConfigError(f"space: {exc}") from exc
    raise ConfigError(f"space.kind: unknown kind {kind!r}")


_CLASSIC_KINDS = {"passivity", "small_gain", "circle"}


def build_classic(cfg: dict):
    c = cfg.get("classic")
    if c is None:
        return None
    kind = _get(c, "kind", "classic")
    conv = classic.Convention(c.get("convention", "NegativeFeedback"))
    try:
        if kind == "passivity":
            return classic.Passivity(*(float(_get(c, k, "classic")) for k in
                                       ("eps1", "delta1", "eps2", "delta2")), convention=conv)
        if kind == "small_gain":
            return classic.SmallGain(float(_get(c, "g_G", "classic")),
                                     float(_get(c, "g_Phi", "classic")), convention=conv)
        if kind == "circle":
            N = parse_form(c["N"], "classic.N") if "N" in c else None
            return classic.Circle(float(_get(c, "a", "classic")), float(_get(c, "b", "classic")),
                                  N=N, eps=float(c.get("eps", 0.01)), convention=conv)
    except ValueError as exc:
        raise ConfigError(f"classic: {exc}") from exc
    raise ConfigError(f"classic.kind: expected one of {sorted(_CLASSIC_KINDS)}, got {kind!r}")


def build_forms(cfg: dict, need_N: bool):
    """``(M, N or None, classic spec or None, mapping report or None)``."""
    spec = build_classic(cfg)
    raw = "M" in cfg or "N" in cfg
    if spec is not None and raw:
        raise ConfigError("config: give either raw M/N or a classic spec, not both")
    if spec is not None:
        mapping = classic.to_MN(spec)
        return mapping.M, mapping.N, spec, mapping
    if "M" not in cfg:
        raise ConfigError("config: missing field 'M' (or a classic spec)")
    M = parse_form(cfg["M"], "M")
    N = parse_form(cfg["N"], "N") if "N" in cfg else None
    if need_N and N is None:
        raise ConfigError("config: this command needs 'N'")
    return M, N, None, None


_OPERATOR_KINDS = {"fir", "delay", "state_space"}


def build_operator(r: dict, where: str) -> l2e.CausalOperator:
    kind = _get(r, "kind", where)
    try:
        if kind == "fir":
            return l2e.FIR(tuple(parse_vector(_get(r, "taps", where), f"{where}.taps")))
        if kind == "delay":
            return l2e.Delay(int(r.get("k", 1)))
        if kind == "state_space":
            return l2e.StateSpace(parse_matrix(_get(r, "A", where), f"{where}.A"),
                                  parse_vector(_get(r, "B", where), f"{where}.B"),
                                  parse_vector(_get(r, "C", where), f"{where}.C"),
                                  parse_scalar(r.get("D", 0.0), f"{where}.D"))
        if kind == "static":
            params = {k: v for k, v in r.items() if k not in ("kind", "map")}
            return l2e.StaticNL(_get(r, "map", where), **params)
        if kind == "gain":
            return l2e.StaticNL("gain", k=parse_scalar(r.get("k", 1.0), f"{where}.k"))
        if kind == "zero":
            return l2e.StaticNL("gain", k=0.0)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}.kind: unknown operator kind {kind!r}")


def build_relation(r: dict, where: str, space):
    kind = _get(r, "kind", where)
    try:
        if kind == "scaled_identity":
            return ScaledIdentity(parse_scalar(r.get("scale", 1.0), f"{where}.scale"))
        if kind == "linear":
            A = parse_matrix(_get(r, "matrix", where), f"{where}.matrix")
            if A.shape != (space.dim, space.dim):
                raise ConfigError(f"{where}.matrix: expected shape {(space.dim,) * 2}, got {A.shape}")
            return LinearMap(A)
        if kind == "static":
            params = {k: v for k, v in r.items() if k not in ("kind", "map")}
            return StaticNonlinearity(_get(r, "map", where), **params)
        if kind == "zero":
            return ScaledIdentity(0.0)
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{where}: {exc}") from exc
    if kind in _OPERATOR_KINDS or kind == "gain":
        if not isinstance(space, TruncatedSignalSpace):
            raise ConfigError(f"{where}: operator kind {kind!r} needs a signal space")
        return build_operator(r, where).as_relation()
    raise ConfigError(f"{where}.kind: unknown relation kind {kind!r}")


def build_probes(cfg: dict, space, seed: int):
    p = cfg.get("probes", {})
    if "vectors" in p:
        return [space.vector(parse_vector(v, f"probes.vectors[{i}]")) for i, v in enumerate(p["vectors"])]
    if "files" in p:
        return [space.vector(_read_csv(f, "probes.files")) for f in p["files"]]
    rng = np.random.default_rng(p.get("seed", seed))
    probes = list(space.basis())
    probes += [space.random_unit(rng) for _ in range(int(p.get("count", 20)))]
    return probes


def build_bank(cfg: dict, seed: int):
    b = cfg.get("inputs", {})
    if "pairs" in b:
        return [(parse_vector(u1, f"inputs.pairs[{i}][0]"), parse_vector(u2, f"inputs.pairs[{i}][1]"))
                for i, (u1, u2) in enumerate(b["pairs"])]
    if "files" in b:
        return [(_read_csv(f1, "inputs.files"), _read_csv(f2, "inputs.files")) for f1, f2 in b["files"]]
    rng = np.random.default_rng(b.get("seed", seed))
    n, horizon = int(b.get("count", 10)), int(b.get("horizon", 64))
    iscx = b.get("field", REAL) == COMPLEX
    bank = []
    for _ in range(n):
        u = rng.standard_normal((2, horizon))
        if iscx:
            u = (u + 1j * rng.standard_normal((2, horizon))) / np.sqrt(2)
        bank.append((u[0], u[1]))
    return bank


def _read_csv(path, where):
    try:
        return l2e.read_signal_csv(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def build_eps_grid(cfg: dict):
    g = cfg.get("eps_grid")
    if g is None:
        return DEFAULT_EPS_GRID
    if isinstance(g, dict):
        lo, hi = int(g.get("min_exp", 1)), int(g.get("max_exp", 20))
        return tuple(2.0**-k for k in range(lo, hi + 1))
    grid = tuple(float(e) for e in g)
    if not all(0 < e < 1 for e in grid):
        raise ConfigError("eps_grid: entries must lie in (0, 1)")
    return grid


# -- output -----------------------------------------------------------------


def to_jsonable(x):
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return to_jsonable(x.tolist())
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)] if x.imag else float(x.real)
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, HermitianForm2):
        return to_jsonable(x.tolist())
    if hasattr(x, "value") and isinstance(getattr(x, "value"), str):
        return x.value
    return x


@dataclass
class Outcome:
    code: int
    lines: list
    data: dict


def _fmt(v) -> str:
    if isinstance(v, (complex, np.complexfloating)) and v.imag:
        return f"{v.real:.12g}{v.imag:+.12g}j"
    return f"{float(np.real(v)):.12g}"


def _fmt_vec(x) -> str:
    return "[" + ", ".join(_fmt(v) for v in np.asarray(x).ravel()) + "]"


def _form_line(name, A: HermitianForm2):
    return f"{name} = [[{_fmt(A.m11)}, {_fmt(A.m12)}], [{_fmt(A.m21)}, {_fmt(A.m22)}]]"


# -- verbs ------------------------------------------------------------------


def cmd_check(cfg, seed, out_dir=None) -> Outcome:
    space = build_space(cfg)
    M, N, spec, mapping = build_forms(cfg, need_N=False)
    G = build_relation(_get(cfg, "G", "config"), "G", space)
    probes = build_probes(cfg, space, seed)
    lines = [f"space: {space!r}", _form_line("M", M), f"definiteness(M) = {definiteness(M).value}"]
    if N is not None:
        res = check_plant_constraint(space, G, N, M, probes)
    else:
        res = search_plant_constraint(space, G, M, probes, build_eps_grid(cfg))
    lines.append(_form_line("N", res.N))
    lines.append(f"definiteness(M + N) = {definiteness(M + res.N).value}")
    if res.eps is not None:
        lines.append(f"eps = {_fmt(res.eps)}")
    table = []
    for i, xi in enumerate(probes):
        vals = [qc_eval(space, res.N, np.stack([img, xi])) for img in G.apply(space, xi)]
        table.append({"probe": i, "value": min(vals)})
    lines.append(f"probes: {len(probes)}, min value {_fmt(res.min_value)}")
    lines.append(f"condition: {res.status}")
    data = {"verb": "check", "status": res.status, "passed": res.passed, "M": M, "N": res.N,
            "eps": res.eps, "definiteness_M": definiteness(M), "definiteness_MN": definiteness(M + res.N),
            "min_value": res.min_value, "probes": table}
    if mapping is not None:
        data["mapping"] = mapping.as_dict()
    if not res.passed:
        lines.append(f"violating xi = {_fmt_vec(res.xi)}")
        lines.append(f"value = {_fmt(res.value)}")
        data["violating_xi"] = res.xi
        data["value"] = res.value
    return Outcome(EXIT_OK if res.passed else EXIT_VIOLATION, lines, data)


def cmd_gain(cfg, seed, out_dir=None) -> Outcome:
    M, N, spec, mapping = build_forms(cfg, need_N=True)
    gb = gain_bound(M, N)
    lines = [_form_line("M", M), _form_line("N", N),
             f"eta = {_fmt(gb.eta)}", f"r = {_fmt(gb.r)}", f"q = {_fmt(gb.q)}",
             f"gamma = {_fmt(gb.gamma)}"]
    data = {"verb": "gain", "M": M, **gb.as_dict()}
    if mapping is not None:
        data["mapping"] = mapping.as_dict()
    return Outcome(EXIT_OK, lines, data)


def cmd_worstcase(cfg, seed, out_dir=None) -> Outcome:
    space = build_space(cfg)
    M, _, _, _ = build_forms(cfg, need_N=False)
    G = build_relation(_get(cfg, "G", "config"), "G", space)
    target = float(_get(cfg, "target_gamma", "config"))
    probes = build_probes(cfg, space, seed)
    res = defeat_gain(space, G, M, target, probes, build_eps_grid(cfg))
    if isinstance(res, CannotDefeat):
        lines = [f"target gamma = {_fmt(target)}", f"kappa = {_fmt(res.kappa)}",
                 f"eps tried: {len(res.eps_tried)}",
                 "no probe violates the N-constraint at any useful eps (probe-relative certificate)"]
        return Outcome(EXIT_OK, lines, {"verb": "worstcase", "defeated": False, "target_gamma": target,
                                        "kappa": res.kappa, "eps_tried": list(res.eps_tried)})
    w = res.witness
    lines = [f"target gamma = {_fmt(target)}", f"eps = {_fmt(res.eps)}", f"kappa = {_fmt(res.kappa)}",
             f"guaranteed ratio = {_fmt(res.guaranteed_ratio)}",
             f"achieved ratio = {_fmt(res.achieved_ratio)}",
             f"M-constraint on (e2, y2) = {_fmt(res.m_value)}"]
    data = {"verb": "worstcase", "defeated": True, "target_gamma": target, **res.as_dict(),
            "signals": {k: getattr(w, k) for k in ("u1", "u2", "y1", "y2", "e1", "e2")}}
    if out_dir:
        for k in ("u1", "u2", "y1", "y2", "e1", "e2"):
            l2e.write_signal_csv(os.path.join(out_dir, f"{k}.csv"), getattr(w, k))
        lines.append(f"signals written to {out_dir}")
    return Outcome(EXIT_VIOLATION, lines, data)


def cmd_interpolate(cfg, seed, out_dir=None) -> Outcome:
    space = build_space(cfg)
    M, _, _, _ = build_forms(cfg, need_N=False)
    a = _get(cfg, "anchor", "config")
    if a.get("from_worstcase"):
        G = build_relation(_get(cfg, "G", "config"), "G", space)
        res = defeat_gain(space, G, M, float(_get(cfg, "target_gamma", "config")),
                          build_probes(cfg, space, seed), build_eps_grid(cfg))
        if isinstance(res, CannotDefeat):
            return Outcome(EXIT_OK, ["no worst-case anchor: plant not defeated"],
                           {"verb": "interpolate", "anchor": None})
        e, y = res.witness.e2, res.witness.y2
    else:
        e = space.vector(parse_vector(_get(a, "e", "anchor"), "anchor.e"))
        y = space.vector(parse_vector(_get(a, "y", "anchor"), "anchor.y"))
    try:
        I = extend(space, M, e, y)
    except AnchorViolatesM as exc:
        return Outcome(EXIT_VIOLATION, [f"anchor violates the M-constraint: value {_fmt(exc.value)}"],
                       {"verb": "interpolate", "anchor_violates": True, "value": exc.value})
    rng = np.random.default_rng(cfg.get("samples", {}).get("seed", seed))
    samples = [space.random(rng) for _ in range(int(cfg.get("samples", {}).get("count", 100)))]
    rep = verify_interpolant(space, I, M, samples)
    lines = [f"case = {I.case.value}"]
    if I.case.value in ("AlignedScaling", "GeneralRotation"):
        lines.append(f"ratio = {_fmt(I.ratio)}")
        lines.append(f"rho = {_fmt(I.rho)}")
    if I.case.value == "GeneralRotation":
        lines += [f"phi = {_fmt(I.phi)}", f"eta_dir = {_fmt(I.eta_dir)}"]
    lines += [f"anchor residual = {_fmt(rep.anchor_residual)}",
              f"min normalized M-constraint over {rep.n_samples} samples = {_fmt(rep.min_value)}",
              f"linear = {rep.linear}", f"verification: {'PASS' if rep.passed else 'FAIL'}"]
    phi = I.as_dict()
    data = {"verb": "interpolate", "interpolant": phi, "anchor_residual": rep.anchor_residual,
            "min_value": rep.min_value, "n_samples": rep.n_samples, "linear": rep.linear,
            "passed": rep.passed}
    if out_dir:
        with open(os.path.join(out_dir, "phi.json"), "w") as fh:
            json.dump(to_jsonable(phi), fh, indent=2, sort_keys=True)
            fh.write("\n")
        lines.append(f"Phi written to {os.path.join(out_dir, 'phi.json')}")
    return Outcome(EXIT_OK if rep.passed else EXIT_ERROR, lines, data)


def cmd_simulate(cfg, seed, out_dir=None) -> Outcome:
    G = build_operator(_get(cfg, "G", "config"), "G")
    Phi = build_operator(_get(cfg, "Phi", "config"), "Phi")
    M = N = None
    if "classic" in cfg or "M" in cfg:
        M, N, spec, _ = build_forms(cfg, need_N=True)
        if spec is not None:
            Phi = classic.loop_phi(spec, Phi)
    bank = build_bank(cfg, seed)
    horizon = max(max(len(u1), len(u2)) for u1, u2 in bank)
    T_list = cfg.get("T_list") or list(range(1, horizon + 1))
    rep = l2e.empirical_gain(G, Phi, bank, T_list, M, N)
    lines = [f"inputs: {rep.n_inputs}, horizons: {len(T_list)}",
             f"empirical gain = {_fmt(rep.max_ratio)}"]
    code = EXIT_OK
    if rep.gamma is not None:
        lines.append(f"certified gamma = {_fmt(rep.gamma)}")
        ok = rep.within_certified
        lines.append("empirical <= certified" if ok else "empirical > certified")
        if not ok:
            code = EXIT_VIOLATION
    if rep.plant_constraint_passed is False:
        code = EXIT_VIOLATION
    lines += rep.notes
    return Outcome(code, lines, {"verb": "simulate", **rep.as_dict()})


VERBS = {"check": cmd_check, "gain": cmd_gain, "worstcase": cmd_worstcase,
         "interpolate": cmd_interpolate, "simulate": cmd_simulate}


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return cfg


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="robound", description="Quadratic-constraint loop certification.")
    p.add_argument("verb", choices=sorted(VERBS))
    p.add_argument("--config", required=True, help="JSON analysis config")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--tol", type=float, default=None, help="absolute tolerance override")
    p.add_argument("--out", default=None, help="directory for the JSON sidecar and output files")
    p.add_argument("--json", action="store_true", help="print the JSON report instead of text")
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    seed = args.seed
    try:
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else int(cfg.get("seed", 0))
        tol_cfg = cfg.get("tolerance", {})
        atol = args.tol if args.tol is not None else tol_cfg.get("atol")
        if args.out:
            os.makedirs(args.out, exist_ok=True)
        with tolerance(atol=atol, rtol=tol_cfg.get("rtol")):
            out = VERBS[args.verb](cfg, seed, args.out)
    except (RoboundError, ValueError) as exc:
        data = {"verb": args.verb, "error": type(exc).__name__, "message": str(exc)}
        eig = getattr(exc, "eigenvalues", None)
        if eig is not None:
            data["eigenvalues"] = list(eig)
        out = Outcome(EXIT_ERROR, [f"error: {type(exc).__name__}: {exc}"], data)
    data = to_jsonable({**out.data, "exit_code": out.code, "seed": seed})
    text = json.dumps(data, indent=2, sort_keys=True)
    if args.json:
        print(text)
    else:
        print("\n".join(str(line) for line in out.lines))
    if args.out:
        with open(os.path.join(args.out, f"{args.verb}.json"), "w") as fh:
            fh.write(text + "\n")
    return out.code


def main(argv=None):
    sys.exit(run(argv))
