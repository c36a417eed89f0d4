"""Command-line experiment runner.

Example::

    canonseam --command design-sweep --config sweep.json --format csv --out sweep.csv

The config file holds ``{"command": ..., "parameters": {...}}`` (parameters may
also sit at the top level).  Command-line flags override the file.  Exit
status: 0 on success, 2 for an invalid configuration, 3 for a numerical
failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from typing import Any, Callable

import numpy as np

from . import canonical, design as dsg, inversion, seam, spectral
from .errors import CanonSeamError, NumericalError
from .linalg import singular_values

COMMANDS = ("eval", "jacobian", "design-sweep", "reconstruct", "minimax", "poisson-minimax", "prolate")
RANDOMIZED = ("reconstruct",)
SCHEMA_KEYS = ("config", "command", "result")

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3


class UsageError(Exception):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


# ---------------------------------------------------------------- parameters


def _get(params: dict, key: str, kind: Callable, default: Any = None, required: bool = False, check=None):
    if key not in params or params[key] is None:
        if required:
            raise UsageError(key, "missing required parameter")
        return default
    try:
        value = kind(params[key])
    except (TypeError, ValueError) as exc:
        raise UsageError(key, f"cannot interpret {params[key]!r}: {exc}") from None
    if check is not None and not check(value):
        raise UsageError(key, f"value {value!r} out of range")
    return value


def _pos(x):
    return np.isfinite(x) and x > 0


def _int_list(v):
    return [int(a) for a in (v if isinstance(v, (list, tuple)) else [v])]


def _float_list(v):
    return [float(a) for a in (v if isinstance(v, (list, tuple)) else [v])]


def _complex_list(v):
    items = v if isinstance(v, (list, tuple)) and v and isinstance(v[0], (list, tuple)) else [v]
    out = []
    for it in items:
        if isinstance(it, (list, tuple)) and len(it) == 2:
            out.append(complex(float(it[0]), float(it[1])))
        else:
            out.append(complex(it))
    return out


def _design_from(params: dict, M: int, ell: float, eta: float) -> seam.SeamDesign:
    if "nodes" in params:
        return seam.SeamDesign(eta, _float_list(params["nodes"]))
    alpha = _get(params, "alpha", float, np.pi / (2 * M))
    return dsg.equispaced_design(alpha, M, ell, eta)


# ---------------------------------------------------------------- commands


def cmd_eval(p: dict, seed):
    if "hamiltonian" in p:
        try:
            H = canonical.hamiltonian_from_dict(p["hamiltonian"])
        except CanonSeamError as exc:
            raise UsageError("hamiltonian", str(exc)) from None
    else:
        N = _get(p, "N", int, 1, check=lambda n: n >= 1)
        Lam = _get(p, "Lambda", float, 1.0, check=_pos)
        H = canonical.BlockHamiltonian.free(N, Lam)
    zs = _get(p, "z", _complex_list, required=True)
    rows = []
    for z in zs:
        if z.imag > 0:
            m = canonical.weyl_m(H, z)
            v = (m - 1j) / (m + 1j)
            rows.append({"z_re": z.real, "z_im": z.imag, "m_re": m.real, "m_im": m.imag,
                         "v_re": v.real, "v_im": v.imag, "pole": False})
        else:
            m = canonical.continue_meromorphic(H, z)
            if isinstance(m, canonical.PoleFlag):
                rows.append({"z_re": z.real, "z_im": z.imag, "m_re": None, "m_im": None,
                             "v_re": None, "v_im": None, "pole": True})
            else:
                rows.append({"z_re": z.real, "z_im": z.imag, "m_re": m.real, "m_im": m.imag,
                             "v_re": None, "v_im": None, "pole": False})
    return {"hamiltonian": H.to_dict(), "rows": rows}


def cmd_jacobian(p: dict, seed):
    N = _get(p, "N", int, required=True, check=lambda n: n >= 1)
    M = _get(p, "M", int, N, check=lambda n: n >= 1)
    eta = _get(p, "eta", float, required=True, check=_pos)
    Lam = _get(p, "Lambda", float, required=True, check=_pos)
    d = _design_from(p, M, Lam / N, eta)
    T, fac = seam.jacobian_block_free(d, N, Lam)
    rows = [
        {"k": k, "j": j, "re": float(T[k, j].real), "im": float(T[k, j].imag)}
        for k in range(M) for j in range(N)
    ]
    return {
        "design": d.to_dict(),
        "singular_values": [float(s) for s in singular_values(T)],
        "gamma": [[float(g.real), float(g.imag)] for g in fac.gamma],
        "w": [float(x) for x in fac.w],
        "rows": rows,
    }


def cmd_design_sweep(p: dict, seed):
    Ms = _get(p, "M", _int_list, [4, 8, 16])
    Ns = _get(p, "N", _int_list, None)
    etas = _get(p, "eta", _float_list, [0.25, 0.5, 1.0])
    Lams = _get(p, "Lambda", _float_list, [4.0])
    search = bool(p.get("search", False))
    if search and seed is None:
        raise UsageError("seed", "design search is randomized; a seed is required")
    if any(m < 1 for m in Ms):
        raise UsageError("M", "every M must be >= 1")
    if any(not _pos(e) for e in etas):
        raise UsageError("eta", "every eta must be positive")
    if any(not _pos(L) for L in Lams):
        raise UsageError("Lambda", "every Lambda must be positive")
    rows = []
    for gi, M in enumerate(Ms):
        N = M if Ns is None else Ns[gi if len(Ns) == len(Ms) else 0]
        if not (M >= N >= 1):
            raise UsageError("N", f"need M >= N >= 1, got M={M}, N={N}")
        for eta in etas:
            for Lam in Lams:
                ell = Lam / N
                d = _design_from(p, M, ell, eta)
                rep = dsg.smin_bounds_block(d, N, Lam)
                row = rep.as_row(N, Lam)
                row["lower_kind"] = rep.lower_kind
                if search:
                    _, s = dsg.design_search_e_optimal(M, N, ell, eta, seed)
                    row["search_smin"] = s
                rows.append(row)
    return {"rows": rows}


def cmd_reconstruct(p: dict, seed):
    N = _get(p, "N", int, 8, check=lambda n: n >= 1)
    eta = _get(p, "eta", float, 0.5, check=_pos)
    Lam = _get(p, "Lambda", float, 4.0, check=_pos)
    mode = _get(p, "mode", str, "empirical", check=lambda m: m in inversion.MODES)
    trials = _get(p, "trials", int, 10, check=lambda n: n >= 1)
    radius = _get(p, "theta_radius", float, 1e-3, check=_pos)
    noise = _get(p, "noise", float, 1e-6, check=lambda x: x >= 0)
    max_iter = _get(p, "max_iter", int, 50, check=lambda n: n >= 1)
    tol = _get(p, "tol", float, 1e-13, check=_pos)
    d = _design_from(p, N, Lam / N, eta)
    budget = inversion.ift_budget(d, N, Lam, mode=mode, seed=seed)
    H0 = canonical.BlockHamiltonian.free(N, Lam)
    rng = dsg.make_rng(seed)
    rows = []
    for trial in range(trials):
        th = rng.normal(size=N) + 1j * rng.normal(size=N)
        th *= radius * rng.uniform() / np.linalg.norm(th)
        e = rng.normal(size=N) + 1j * rng.normal(size=N)
        e *= noise * rng.uniform() / np.linalg.norm(e)
        res = inversion.reconstruct(seam.seam_map(H0, th, d) + e, d, N, Lam, mode=mode,
                                    max_iter=max_iter, tol=tol, budget=budget)
        en = float(np.linalg.norm(e))
        rows.append({
            "trial": trial,
            "noise_norm": en,
            "error_norm": float(np.linalg.norm(res.theta_star - th)),
            "bound_2M0e": 2 * budget.M0 * en,
            "iterations": res.iterations,
            "mode": mode,
        })
    return {"budget": budget.as_dict(), "rows": rows}


def cmd_minimax(p: dict, seed):
    N = _get(p, "N", int, 8, check=lambda n: n >= 1)
    eta = _get(p, "eta", float, 0.5, check=_pos)
    Lam = _get(p, "Lambda", float, 4.0, check=_pos)
    delta = _get(p, "delta", float, 1e-4, check=_pos)
    mode = _get(p, "mode", str, "empirical", check=lambda m: m in inversion.MODES)
    d = _design_from(p, N, Lam / N, eta)
    rep = inversion.minimax_two_point(d, N, Lam, delta, mode=mode, seed=seed or 0)
    return {
        "rows": [{
            "N": N, "eta": eta, "Lambda": Lam, "delta": delta, "mode": mode,
            "t": rep.t, "sample_gap": rep.sample_gap, "gap_within_noise": rep.gap_within_noise,
            "lower_bound": rep.lower_bound, "linear_form": rep.linear_form,
            "exponential_form": rep.exponential_form,
        }]
    }


def cmd_poisson_minimax(p: dict, seed):
    Ks = _get(p, "K", _int_list, [4, 8, 12, 16])
    etas = _get(p, "eta", _float_list, [1.0])
    eps = _get(p, "epsilon", float, 0.1, check=_pos)
    M = _get(p, "M", int, 8, check=lambda n: n >= 1)
    delta = _get(p, "delta", float, 1e-3, check=_pos)
    if any(K < 2 for K in Ks):
        raise UsageError("K", "every K must be an integer >= 2")
    if any(not _pos(e) for e in etas):
        raise UsageError("eta", "every eta must be positive")
    rows = []
    for K in Ks:
        pair = spectral.build_bump_pair(K, eps)
        for eta in etas:
            d = dsg.equispaced_design(0.0, M, 1.0, eta)
            rep = spectral.minimax_pair_report(pair, d, delta)
            rows.append({"K": K, "eta": eta, "sample_gap": rep.sample_gap,
                         "c1_bound": rep.c1_bound, "L2_separation": rep.L2_separation})
    return {"rows": rows}


def cmd_prolate(p: dict, seed):
    Lam = _get(p, "Lambda", float, 4.0, check=_pos)
    Om = _get(p, "Omega", float, 20.0, check=_pos)
    n = _get(p, "n_grid", int, 256, check=lambda k: k >= 64)
    eta = _get(p, "eta", float, 0.0, check=lambda x: x >= 0)
    s = spectral.prolate_singular_values(Lam, Om, n, eta)
    return {
        "plateau_count": spectral.plateau_count(s),
        "shannon_number": Lam * Om / np.pi,
        "rows": [{"n": i, "sigma": float(x)} for i, x in enumerate(s)],
    }


DISPATCH = {
    "eval": cmd_eval,
    "jacobian": cmd_jacobian,
    "design-sweep": cmd_design_sweep,
    "reconstruct": cmd_reconstruct,
    "minimax": cmd_minimax,
    "poisson-minimax": cmd_poisson_minimax,
    "prolate": cmd_prolate,
}


# ---------------------------------------------------------------- output


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def render(config: dict, result: dict, fmt: str) -> str:
    if fmt == "json":
        doc = {"config": config, "command": config["command"], "result": _jsonable(result)}
        return json.dumps(doc, indent=2, sort_keys=True, allow_nan=True) + "\n"
    rows = result.get("rows", [])
    buf = io.StringIO()
    buf.write("# config " + json.dumps(config, sort_keys=True) + "\n")
    if rows:
        cols = list(rows[0].keys())
        buf.write(",".join(cols) + "\n")
        for r in rows:
            buf.write(",".join(_fmt(r.get(c)) for c in cols) + "\n")
    return buf.getvalue()


def validate_artifact(doc: dict) -> None:
    """Schema check for a JSON artifact produced by :func:`run`."""
    for k in SCHEMA_KEYS:
        if k not in doc:
            raise UsageError(k, "artifact is missing this key")
    if doc["command"] not in COMMANDS:
        raise UsageError("command", f"unknown command {doc['command']!r}")
    if doc["config"].get("command") != doc["command"]:
        raise UsageError("config", "echoed config disagrees with the command")
    if not isinstance(doc["result"], dict):
        raise UsageError("result", "must be an object")
    rows = doc["result"].get("rows")
    if rows is not None and not isinstance(rows, list):
        raise UsageError("rows", "must be a list")


# ---------------------------------------------------------------- entry points


def resolve_config(file_cfg: dict, command=None, seed=None, out=None, fmt=None) -> dict:
    params = dict(file_cfg.get("parameters", {}))
    for k, v in file_cfg.items():
        if k not in ("command", "parameters", "seed", "out", "format"):
            params[k] = v
    cfg = {
        "command": command or file_cfg.get("command"),
        "seed": seed if seed is not None else file_cfg.get("seed"),
        "format": fmt or file_cfg.get("format", "json"),
        "out": out or file_cfg.get("out"),
        "parameters": params,
    }
    if cfg["command"] not in COMMANDS:
        raise UsageError("command", f"must be one of {', '.join(COMMANDS)}")
    if cfg["format"] not in ("json", "csv"):
        raise UsageError("format", "must be json or csv")
    if cfg["seed"] is not None:
        try:
            cfg["seed"] = int(cfg["seed"])
        except (TypeError, ValueError):
            raise UsageError("seed", "must be an integer") from None
    if cfg["command"] in RANDOMIZED and cfg["seed"] is None:
        raise UsageError("seed", f"command {cfg['command']!r} is randomized; a seed is required")
    return cfg


def run(config: dict) -> str:
    """Execute a resolved config and return the rendered artifact text."""
    result = DISPATCH[config["command"]](config["parameters"], config["seed"])
    return render(config, result, config["format"])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="canonseam", description="canonical-system seam experiments")
    ap.add_argument("--command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON experiment config")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output path (default: stdout)")
    ap.add_argument("--format", choices=("json", "csv"))
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        file_cfg = {}
        if args.config:
            try:
                with open(args.config) as fh:
                    file_cfg = json.load(fh)
            except (OSError, json.JSONDecodeError) as exc:
                raise UsageError("config", str(exc)) from None
            if not isinstance(file_cfg, dict):
                raise UsageError("config", "top level must be an object")
        cfg = resolve_config(file_cfg, args.command, args.seed, args.out, args.format)
        text = run(cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except CanonSeamError as exc:
        # precondition violations raised by the library are configuration problems
        print(f"usage error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg["out"]:
        with open(cfg["out"], "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
