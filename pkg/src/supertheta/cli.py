"""Command line front end.

Every number written by a command comes from a library call; this module only
parses input, dispatches and formats.  Exit codes: 0 ok, 1 invariant failure,
2 input error, 3 truncation or resolution failure.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import io
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import chernforms as cf
from .errors import ResolutionError, SuperthetaError, TruncationError
from .geometry import Chart, base_point, h_section_jet, random_u
from .quadlattice import Lattice, QuadraticSpace, discriminant_group, enumerate_ball
from .sampling import REFERENCE_GRAMS
from .superalg import mutated_koszul
from .theta import (
    SiegelTerms,
    decay_rate,
    fourier_coefficient,
    fourier_direct,
    localization_scan,
    modularity_residual,
    theta_form,
    theta_siegel_scalar,
    weight_exponent,
    x_period,
)
from .weilrep import finite_weil, relation_residuals

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_TRUNC = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    lattice: str | None = None
    n: int | None = None
    taus: list = field(default_factory=list)
    point: np.ndarray | None = None
    vectors: np.ndarray | None = None
    tol: float = 1e-8
    out: str | None = None
    seed: int | None = None
    fmt: str = "json"
    extra: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# parsing

def parse_rational(text, where):
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise InputError(f"{where} = {text.strip()!r} is not a rational number") from None


def parse_matrix(text, what):
    rows = [r for r in text.replace("\n", ";").split(";") if r.strip()]
    out = []
    for i, row in enumerate(rows):
        cells = row.replace(",", " ").split()
        out.append([parse_rational(c, f"{what} entry ({i + 1}, {j + 1})") for j, c in enumerate(cells)])
    if not out or any(len(r) != len(out) for r in out):
        raise InputError(f"{what} must be a nonempty square matrix")
    return out


def read_lattice(source):
    """A lattice from a config file ([lattice] gram = ..., optional basis = ...) or a built-in name."""
    if source in REFERENCE_GRAMS and not os.path.exists(source):
        gram = [[Fraction(x) for x in r] for r in REFERENCE_GRAMS[source]]
        basis = None
    else:
        cp = configparser.ConfigParser()
        try:
            with open(source) as fh:
                cp.read_file(fh)
        except OSError as exc:
            raise InputError(f"cannot read lattice file {source}: {exc.strerror}") from None
        except configparser.Error as exc:
            raise InputError(f"malformed lattice file {source}: {exc}") from None
        if not cp.has_option("lattice", "gram"):
            raise InputError(f"{source}: missing 'gram' in section [lattice]")
        gram = parse_matrix(cp.get("lattice", "gram"), "gram")
        basis = parse_matrix(cp.get("lattice", "basis"), "basis") if cp.has_option("lattice", "basis") else None
    for i in range(len(gram)):
        for j in range(i):
            if gram[i][j] != gram[j][i]:
                raise InputError(f"gram entry ({i + 1}, {j + 1}) = {gram[i][j]} differs from "
                                 f"entry ({j + 1}, {i + 1}) = {gram[j][i]}")
    return Lattice(QuadraticSpace(gram), basis)


def lattice_hash(L):
    text = ";".join(",".join(str(x) for x in row) for row in L.gram_exact)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def parse_complex_list(text, what):
    out = []
    for item in text.split(","):
        item = item.strip().replace(" ", "")
        if not item:
            continue
        try:
            out.append(complex(item))
        except ValueError:
            raise InputError(f"{what}: {item!r} is not a complex number") from None
    return out


def parse_vectors(text):
    rows = [r for r in text.split(";") if r.strip()]
    try:
        vs = np.array([[float(x) for x in r.replace(",", " ").split()] for r in rows])
    except ValueError:
        raise InputError(f"vectors: cannot parse {text!r}") from None
    if vs.ndim != 2:
        raise InputError("vectors must all have the same length")
    return vs


def parse_grid(text):
    try:
        a, b, k = text.split(",")
        return np.linspace(float(a), float(b), int(k))
    except ValueError:
        raise InputError(f"grid must be 'start,stop,count', got {text!r}") from None


# ---------------------------------------------------------------------------
# formatting

def cplx(x):
    x = complex(x)
    return [x.real, x.imag]


def form_dump(a):
    rows = []
    for (I, J), c in sorted(a.coeffs.items()):
        hol = [j for j in range(a.n) if I >> j & 1]
        anti = [j for j in range(a.n) if J >> j & 1]
        label = "^".join([f"du{j}" for j in hol] + [f"dubar{j}" for j in anti]) or "1"
        rows.append({"bidegree": [len(hol), len(anti)], "monomial": label, "value": cplx(c)})
    return rows


def emit(cfg, payload, table=None):
    """Write JSON (payload) or CSV (table: header + rows)."""
    if cfg.fmt == "csv":
        if table is None:
            raise InputError(f"command {cfg.command} has no CSV form")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(table[0])
        w.writerows(table[1])
        text = buf.getvalue()
    else:
        text = json.dumps(payload, indent=1, sort_keys=True) + "\n"
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# shared setup

def _lattice(cfg):
    if cfg.lattice is None:
        raise InputError("--lattice is required")
    return read_lattice(cfg.lattice)


def _chart_point(cfg, space):
    chart = Chart(base_point(space))
    if cfg.point is not None:
        u = np.asarray(cfg.point, dtype=complex)
        if u.shape != (chart.n,):
            raise InputError(f"--point needs {chart.n} chart coordinates, got {u.size}")
    elif cfg.seed is not None:
        u = random_u(chart, np.random.default_rng(cfg.seed))
    else:
        u = np.zeros(chart.n, dtype=complex)
    chart.point(u)  # raises if outside the domain
    return chart, u


def _taus(cfg):
    return cfg.taus or [1j]


# ---------------------------------------------------------------------------
# commands

def cmd_eval_form(cfg):
    L = _lattice(cfg)
    chart, u = _chart_point(cfg, L.space.gram)
    vs = cfg.vectors if cfg.vectors is not None else np.zeros((1, L.m))
    if vs.shape[1] != L.m:
        raise InputError(f"vectors must have length {L.m}")
    records, rows = [], []
    for v in vs:
        h = h_section_jet(chart, v, u).value.real
        rec = {"vector": v.tolist(), "h": h, "phi": form_dump(cf.phi_at(chart, u, v)),
               "psi": form_dump(cf.psi_at(chart, u, v))}
        if h > cfg.extra.get("threshold", 1e-8):
            rec["phi2_explicit"] = form_dump(cf.phi2_explicit(chart, u, v))
        records.append(rec)
        for kind in ("phi", "psi"):
            for item in rec[kind]:
                rows.append([" ".join(map(repr, v.tolist())), kind, item["monomial"], *item["value"]])
    if cfg.extra.get("pair") and vs.shape[0] >= 2:
        pair = {"vectors": vs.tolist(), "phi": form_dump(cf.phi_at(chart, u, vs))}
    else:
        pair = None
    payload = {"lattice_hash": lattice_hash(L), "u": [cplx(x) for x in u],
               "z": [cplx(x) for x in chart.w(u)], "forms": records}
    if pair:
        payload["phi_tuple"] = pair
    emit(cfg, payload, (["vector", "kind", "monomial", "re", "im"], rows))
    return EXIT_OK


def cmd_theta(cfg):
    L = _lattice(cfg)
    chart, u = _chart_point(cfg, L.space.gram)
    z = chart.point(u)
    disc = discriminant_group(L)
    records, rows = [], []
    for tau in _taus(cfg):
        if cfg.extra.get("form"):
            tv = [theta_form(tau, L, disc.rep_float(i), chart, u, cfg.tol,
                             max_points=cfg.extra.get("max_points", 20000)) for i in range(disc.order)]
            coeffs = [form_dump(t.values[0]) for t in tv]
            R, tail = max(t.R for t in tv), max(t.tail for t in tv)
            for i, c in enumerate(coeffs):
                for item in c:
                    rows.append([repr(tau), i, item["monomial"], *item["value"]])
        else:
            t = theta_siegel_scalar(tau, L, z, cfg.tol, disc=disc, workers=cfg.extra.get("workers", 1),
                                    max_points=cfg.extra.get("max_points", 2_000_000))
            coeffs = [cplx(x) for x in t.values]
            R, tail = t.R, t.tail
            for i, c in enumerate(coeffs):
                rows.append([repr(tau), i, "1", *c])
        records.append({"tau": cplx(tau), "R": R, "tail": tail,
                        "mu": [[str(x) for x in r] for r in disc.reps], "coefficients": coeffs})
    payload = {"lattice_hash": lattice_hash(L), "z": [cplx(x) for x in z.w], "tol": cfg.tol,
               "records": records}
    emit(cfg, payload, (["tau", "coset", "monomial", "re", "im"], rows))
    return EXIT_OK


def cmd_fourier(cfg):
    L = _lattice(cfg)
    chart, u = _chart_point(cfg, L.space.gram)
    z = chart.point(u)
    disc = discriminant_group(L)
    y = cfg.extra.get("y", 1.0)
    R = cfg.extra.get("radius", 20.0)
    samples = cfg.extra.get("samples", 64)
    cosets = cfg.extra.get("cosets") or list(range(disc.order))
    records, rows = [], []
    for i in cosets:
        terms = SiegelTerms(L, z, disc.rep_float(i), R)
        lam = x_period(disc, [i])
        ns = cfg.extra.get("ns") or [disc.qvals[i] + k for k in range(3)]
        for n in ns:
            c = fourier_coefficient(terms, n, lam, y, samples=samples)
            d = fourier_direct(L, z, disc.reps[i], n, y, R)
            records.append({"coset": i, "n": str(n), "quadrature": cplx(c), "direct": cplx(d)})
            rows.append([i, str(n), *cplx(c), *cplx(d)])
    payload = {"lattice_hash": lattice_hash(L), "z": [cplx(x) for x in z.w], "y": y, "R": R,
               "samples": samples, "coefficients": records}
    emit(cfg, payload, (["coset", "n", "quad_re", "quad_im", "direct_re", "direct_im"], rows))
    return EXIT_OK


def cmd_modularity(cfg):
    L = _lattice(cfg)
    chart, u = _chart_point(cfg, L.space.gram)
    z = chart.point(u)
    disc = discriminant_group(L)
    words = cfg.extra.get("words") or ["S", "T"]
    rows = []
    for tau in _taus(cfg):
        for w in words:
            rows.append([w, repr(tau), modularity_residual(w, tau, L, z, cfg.tol, disc=disc,
                                                           workers=cfg.extra.get("workers", 1))])
    payload = {"lattice_hash": lattice_hash(L), "z": [cplx(x) for x in z.w], "tol": cfg.tol,
               "residuals": [{"word": r[0], "tau": cplx(complex(r[1])), "residual": r[2]} for r in rows],
               "weight_exponent": {"fitted": weight_exponent(L, z, tol=cfg.tol, disc=disc),
                                   "expected": (L.m - 2) / 2 + 1}}
    emit(cfg, payload, (["word", "tau", "residual"], rows))
    return EXIT_OK


def cmd_weilrep(cfg):
    L = _lattice(cfg)
    disc = discriminant_group(L)
    rep = finite_weil(disc)
    res = relation_residuals(rep)
    payload = {
        "lattice_hash": lattice_hash(L), "order": disc.order, "level": disc.level,
        "signature": list(L.space.signature), "gamma_exponent": rep.data.gamma_exp,
        "cosets": [[str(x) for x in r] for r in disc.reps],
        "q_values": [str(q) for q in disc.qvals],
        "S": [[cplx(x) for x in row] for row in rep.S_matrix],
        "T": [cplx(x) for x in np.diag(rep.T_matrix)],
        "relations": {k: (cplx(v) if isinstance(v, complex) else v) for k, v in res.items()},
    }
    rows = [[i, j, *cplx(rep.S_matrix[i, j])] for i in range(disc.order) for j in range(disc.order)]
    emit(cfg, payload, (["row", "col", "S_re", "S_im"], rows))
    return EXIT_OK


def cmd_enumerate(cfg):
    L = _lattice(cfg)
    chart, u = _chart_point(cfg, L.space.gram)
    z = chart.point(u)
    disc = discriminant_group(L)
    from .geometry import majorant_at
    M = majorant_at(z)
    R = cfg.extra.get("radius", 5.0)
    i = cfg.extra.get("coset", 0)
    if not 0 <= i < disc.order:
        raise InputError(f"coset index must be in [0, {disc.order})")
    v = enumerate_ball(L, disc.rep_float(i), M, R)
    q = M.q(v)
    Qv = np.einsum("ni,ij,nj->n", v, L.space.gram, v) / 2
    payload = {"lattice_hash": lattice_hash(L), "coset": i, "mu": [str(x) for x in disc.reps[i]],
               "R": R, "count": int(v.shape[0]),
               "points": [{"v": p.tolist(), "q_z": float(a), "Q": float(b)} for p, a, b in zip(v, q, Qv)]}
    rows = [[*p.tolist(), float(a), float(b)] for p, a, b in zip(v, q, Qv)]
    emit(cfg, payload, ([f"v{k}" for k in range(L.m)] + ["q_z", "Q"], rows))
    return EXIT_OK


def cmd_localization(cfg):
    L = _lattice(cfg)
    chart, u = _chart_point(cfg, L.space.gram)
    if cfg.vectors is None:
        raise InputError("--vectors is required")
    vs = cfg.vectors
    steps = cfg.extra.get("steps", 5)
    path = [u * s for s in np.linspace(0.0, 1.0, steps)]
    ts = cfg.extra.get("ts")
    ts = np.linspace(1.0, 20.0, 20) if ts is None else ts
    rows = localization_scan(chart, path, vs, ts)
    fits = []
    for k, p in enumerate(path):
        if rows[k * len(ts)]["h"] > 1e-6:
            a, pred = decay_rate(chart, p, vs, ts)
            fits.append({"index": k, "u": [cplx(x) for x in p], "rate": a, "predicted": pred})
        else:
            fits.append({"index": k, "u": [cplx(x) for x in p], "rate": None, "predicted": 0.0})
    payload = {"lattice_hash": lattice_hash(L), "vectors": vs.tolist(), "rows": rows, "fits": fits}
    emit(cfg, payload, (["index", "t", "h", "log_abs_phi0"],
                        [[r["index"], r["t"], r["h"], r["log_abs_phi0"]] for r in rows]))
    return EXIT_OK


def cmd_property_suite(cfg):
    from .properties import run_suite
    seed = 0 if cfg.seed is None else cfg.seed
    if cfg.extra.get("mutate"):
        with mutated_koszul():
            results = run_suite(seed, cfg.extra.get("names"))
    else:
        results = run_suite(seed, cfg.extra.get("names"))
    payload = {"seed": seed, "mutated": bool(cfg.extra.get("mutate")),
               "results": [r.as_dict() for r in results],
               "passed": all(r.passed for r in results)}
    rows = [[r.name, r.module, r.residual, r.tol, r.passed, r.error] for r in results]
    emit(cfg, payload, (["name", "module", "residual", "tol", "passed", "error"], rows))
    return EXIT_OK if payload["passed"] else EXIT_FAIL


COMMANDS = {
    "eval-form": cmd_eval_form,
    "theta": cmd_theta,
    "fourier": cmd_fourier,
    "modularity": cmd_modularity,
    "weilrep-matrices": cmd_weilrep,
    "enumerate": cmd_enumerate,
    "localization": cmd_localization,
    "property-suite": cmd_property_suite,
}


def build_parser():
    p = argparse.ArgumentParser(prog="supertheta", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--lattice", help="lattice config file or a built-in name (%s)" % ", ".join(REFERENCE_GRAMS))
    p.add_argument("--tau", help="comma separated upper half plane points, e.g. '1j,0.25+1j'")
    p.add_argument("--point", help="comma separated chart coordinates of z")
    p.add_argument("--vectors", help="rows separated by ';'")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--max-points", type=int)
    p.add_argument("--form", action="store_true", help="theta: the phi-form theta instead of the scalar one")
    p.add_argument("--words", help="modularity: comma separated words in S and T")
    p.add_argument("--n", help="fourier: comma separated rationals")
    p.add_argument("--y", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=64)
    p.add_argument("--radius", type=float)
    p.add_argument("--coset", type=int, default=0)
    p.add_argument("--ts", help="localization: t grid 'start,stop,count'")
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--pair", action="store_true", help="eval-form: also the form of the whole tuple")
    p.add_argument("--names", help="property-suite: comma separated subset of checks")
    p.add_argument("--mutate-koszul", action="store_true", help="property-suite: inject a Koszul sign error")
    return p


def config_from_args(a):
    cfg = RunConfig(command=a.command, lattice=a.lattice, tol=a.tol, out=a.out, seed=a.seed, fmt=a.format)
    if a.tau:
        cfg.taus = parse_complex_list(a.tau, "--tau")
        if any(t.imag <= 0 for t in cfg.taus):
            raise InputError("--tau values must have positive imaginary part")
    if a.point:
        cfg.point = np.array(parse_complex_list(a.point, "--point"))
    if a.vectors:
        cfg.vectors = parse_vectors(a.vectors)
    if not (0 < a.tol < 1):
        raise InputError("--tol must lie in (0, 1)")
    ex = cfg.extra
    ex["workers"] = a.workers
    if a.max_points is not None:
        ex["max_points"] = a.max_points
    ex["form"] = a.form
    if a.words:
        ex["words"] = [w.strip() for w in a.words.split(",")]
        if any(set(w) - {"S", "T"} or not w for w in ex["words"]):
            raise InputError("--words may only contain S and T")
    if a.n:
        ex["ns"] = [parse_rational(x, "--n") for x in a.n.split(",")]
    ex["y"] = a.y
    ex["samples"] = a.samples
    if a.radius is not None:
        ex["radius"] = a.radius
    ex["coset"] = a.coset
    if a.ts:
        ex["ts"] = parse_grid(a.ts)
    ex["steps"] = a.steps
    ex["pair"] = a.pair
    if a.names:
        ex["names"] = [x.strip() for x in a.names.split(",")]
    ex["mutate"] = a.mutate_koszul
    return cfg


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except TruncationError as exc:
        print(f"truncation failure: {exc}; R={exc.radius}, tail={exc.tail}, points={exc.npoints}",
              file=sys.stderr)
        return EXIT_TRUNC
    except ResolutionError as exc:
        print(f"resolution failure: {exc}", file=sys.stderr)
        return EXIT_TRUNC
    except (InputError, SuperthetaError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
