"""Command-line front end: ``ellhol <command> [options]``.

Complex numbers are written ``a+bi`` without spaces (``2i``, ``-0.3-1.2i``, ``1.5``);
vectors are comma-separated.  Every report is a JSON object carrying the command,
the library version and the run configuration; ``--format csv`` prints the
report's row table instead.

Exit codes: 0 success, 1 failed self-test, 2 usage or domain error, 3 input
validation failure, 4 convergence-contract violation.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import re
import sys
from dataclasses import asdict, is_dataclass
from fractions import Fraction
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from .errors import (AlgebraMismatch, DefectiveMonodromy, DimMismatch, EllholError, NonConvergent,
                     NotSpecialOrthogonal, ValidationError, ZeroMode)

EXIT_OK, EXIT_SELFTEST, EXIT_USAGE, EXIT_VALIDATION, EXIT_CONVERGENCE = 0, 1, 2, 3, 4

_NUM = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
# sign that starts the imaginary part: not leading, not an exponent sign
_SPLIT = re.compile(r"(?<=[^eE+-])[+-]")


class UsageError(EllholError, ValueError):
    pass


# ---------------------------------------------------------------------------
# grammar
# ---------------------------------------------------------------------------
def parse_complex(s: str) -> complex:
    """Parse ``a+bi``, ``bi``, ``a`` (no spaces)."""
    s = s.strip()
    if s.endswith("i"):
        body = s[:-1]
        cuts = [m.start() for m in _SPLIT.finditer(body)]
        re_txt, im_txt = (body[:cuts[-1]], body[cuts[-1]:]) if cuts else ("", body)
    else:
        re_txt, im_txt = s, None
    if re_txt and not _NUM.fullmatch(re_txt):
        raise UsageError(f"cannot parse complex number {s!r}; expected a+bi")
    if im_txt is None:
        if not re_txt:
            raise UsageError("empty complex number")
        return complex(float(re_txt), 0.0)
    if im_txt in ("", "+", "-"):
        im = -1.0 if im_txt == "-" else 1.0
    elif _NUM.fullmatch(im_txt):
        im = float(im_txt)
    else:
        raise UsageError(f"cannot parse complex number {s!r}; expected a+bi")
    return complex(float(re_txt) if re_txt else 0.0, im)


def format_complex(z: complex) -> str:
    """Inverse of :func:`parse_complex` (``repr`` precision, so round trips are exact)."""
    z = complex(z)
    return f"{z.real!r}{'+' if z.imag >= 0 or np.isnan(z.imag) else '-'}{abs(z.imag)!r}i"


def parse_vector(s: str) -> list[complex]:
    return [parse_complex(p) for p in s.split(",")]


def parse_tau(s: str) -> complex:
    tau = parse_complex(s)
    if not tau.imag > 0:
        raise UsageError(f"tau must lie in the upper half-plane, got {s}")
    return tau


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------
def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(_key(k)): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if is_dataclass(obj):
        return to_jsonable(asdict(obj))
    if hasattr(obj, "to_json"):
        return obj.to_json()
    return obj


def _key(k):
    if isinstance(k, Fraction):
        return str(k)
    if isinstance(k, tuple):
        return ",".join(map(str, k))
    return k


def _cell(v):
    if isinstance(v, (complex, np.complexfloating)):
        return format_complex(v)
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(to_jsonable(v))
    return v


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    header: list[str] = []
    for r in rows:
        header.extend(k for k in r if k not in header)
    w = csv.DictWriter(buf, fieldnames=header)  # minimal quoting, CRLF line ends
    w.writeheader()
    for r in rows:
        w.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def load_schema(name: str) -> dict:
    return json.loads(resources.files("ellhol").joinpath("schemas", f"{name}.schema.json").read_text())


def fixture_path(name: str):
    return resources.files("ellhol").joinpath("fixtures", name)


def _load_validated(path: str, schema: str) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    try:
        jsonschema.validate(obj, load_schema(schema))
    except jsonschema.ValidationError as exc:
        raise ValidationError(f"{path}: {exc.message}") from exc
    return obj


# ---------------------------------------------------------------------------
# commands; each returns (result dict, csv rows)
# ---------------------------------------------------------------------------
def cmd_theta(a):
    from .special import theta, theta_char, theta_sum
    i, j = _ij(a.ij)
    z, tau = parse_complex(a.z), parse_tau(a.tau)
    prod, ser = theta(i, j, z, tau), theta_sum(i, j, z, tau)
    res = {"ij": a.ij, "z": z, "tau": tau, "value": prod, "series_value": ser, "absdiff": abs(prod - ser),
           "characteristic_series": theta_char(i / 2, j / 2, z, tau),
           "provenance": {"value": "product expansion", "series_value": "characteristic series"}}
    return res, [{"ij": a.ij, "z": z, "tau": tau, "value": prod, "series_value": ser, "absdiff": abs(prod - ser)}]


def cmd_eta(a):
    from .special import eta, eta_transform_check
    tau = parse_tau(a.tau)
    res = {"tau": tau, "value": eta(tau)}
    row = {"tau": tau, "value": res["value"]}
    if a.check_transform:
        lhs, rhs, d = eta_transform_check(a.check_transform, tau)
        res["check"] = {"transform": a.check_transform, "lhs": lhs, "rhs": rhs, "diff": d}
        row.update(lhs=lhs, rhs=rhs, diff=d)
    return res, [row]


def cmd_eisenstein(a):
    from .special import eisenstein, g2_hat, g2_hat_transform_check, g2_transform_check
    tau = parse_tau(a.tau)
    val = eisenstein(a.k, tau)
    res = {"k": a.k, "tau": tau, "value": val.value, "convention": val.convention}
    row = {"k": a.k, "tau": tau, "value": val.value}
    if a.check:
        if a.k != 2:
            raise UsageError("--check applies to k = 2 only")
        fn = g2_transform_check if a.check == "quasimodular" else g2_hat_transform_check
        checks = {w: fn(w, tau) for w in ("T", "S")}
        resid = max(c[2] for c in checks.values())
        res["check"] = {"law": a.check, "residual": resid,
                        "rows": [{"transform": w, "lhs": c[0], "rhs": c[1], "diff": c[2]} for w, c in checks.items()]}
        if a.check == "completion":
            res["check"]["g2_hat"] = g2_hat(tau)
        row["residual"] = resid
    return res, [row]


def _cartan_arg(a, l):
    z = parse_vector(a.z) if a.z else [0j] * l
    if len(z) != l:
        raise UsageError(f"--z needs {l} comma-separated entries, got {len(z)}")
    return z


def cmd_char(a):
    from .affine import char_level_one, char_qexpansion, fock_character, modular_anomaly
    if a.anomaly:
        m = modular_anomaly(a.rep, a.l)
        return {"rep": a.rep, "l": a.l, "anomaly": m}, [{"rep": a.rep, "l": a.l, "anomaly": str(m)}]
    z = _cartan_arg(a, a.l)
    if a.qexpand is not None:
        m = modular_anomaly(a.rep, a.l)
        T = int(a.qexpand)
        # q^m times the graded trace, listed by energy n = exponent - m
        series = char_qexpansion(a.rep, z, m + T + 1).shift(-m)
        rows = []
        fock = fock_character(a.rep, z, m + T + 1).shift(-m) if a.against_fock else None
        for e, c in series.items():
            if e > T:
                continue
            row = {"exponent": str(e), "coeff": c}
            if fock is not None:
                f = fock.coefficient(e)
                row.update(fock=f, match=bool(abs(c - f) <= 1e-9 * max(1.0, abs(f))))
            rows.append(row)
        res = {"rep": a.rep, "l": a.l, "z": z, "anomaly": m, "T": T, "rows": rows,
               "provenance": {"coeff": "theta-product expansion", "fock": "free-fermion Fock enumeration"}}
        if fock is not None:
            res["all_match"] = all(r["match"] for r in rows)
        return res, rows
    tau = parse_tau(a.tau)
    v = char_level_one(a.rep, z, tau)
    return {"rep": a.rep, "l": a.l, "z": z, "tau": tau, "value": v}, [{"rep": a.rep, "tau": tau, "value": v}]


def cmd_aw(a):
    from .transport import GaugeTransform, LoopConnection, aw_check, parallel_transport, spin_supertrace
    path = a.loop or str(fixture_path("so4_smooth.json"))
    obj = _load_validated(path, "loop_connection")
    conn = LoopConnection.from_json(obj)
    if conn.algebra != "so" or conn.n % 2:
        raise ValidationError("the circle check needs an so(2n) loop")
    rep = aw_check(conn)
    res = {"loop": path, "n": conn.n, "K": conn.K, "report": rep}
    if "metadata" in obj:
        res["metadata"] = obj["metadata"]
    rows = [{"variant": 0, "supertrace": rep["lhs"], "pfaffian": rep["rhs"], "absdiff": rep["absdiff"]}]
    if a.gauge_orbit:
        rng = np.random.default_rng(a.seed)
        spread = 0.0
        for k in range(1, a.gauge_orbit + 1):
            g = GaugeTransform.random(conn.n, rng)
            v = spin_supertrace(parallel_transport(g.apply(conn), spin=True))
            spread = max(spread, abs(v - rep["lhs"]))
            rows.append({"variant": k, "supertrace": v, "pfaffian": None, "absdiff": abs(v - rep["lhs"])})
        res["gauge_orbit"] = {"size": a.gauge_orbit, "max_spread": spread, "rows": rows[1:]}
    return res, rows


def cmd_eaw(a):
    from .elliptic import elliptic_aw_check
    tau = parse_tau(a.tau)
    rng = np.random.default_rng(a.seed)
    if a.z:
        zs = [_cartan_arg(a, a.l)]
    else:
        zs = [rng.uniform(-0.5, 0.5, a.l) + 1j * rng.uniform(-0.3, 0.3, a.l) for _ in range(a.samples)]
    rep = elliptic_aw_check(a.rep, zs, tau, a.pairing)
    rows = [{"z": r["z"], "char_side": r["char_side"], "pfaffian_side": r["pfaffian_side"],
             "ratio": r["ratio"], "status": r["status"]} for r in rep["rows"]]
    return rep, rows


def cmd_zetadet(a):
    from .elliptic import calibrate_epstein, epstein_zeta_det, zeta_det_torus
    z, tau = parse_complex(a.z), parse_tau(a.tau)
    closed = zeta_det_torus(z, tau, a.spin)
    res = {"z": z, "tau": tau, "spin": a.spin, "value": closed,
           "provenance": {"value": "theta closed form |theta/eta|^2 with the metric factor"}}
    if a.spectral:
        C = calibrate_epstein(tau, a.spin)
        try:
            spec = epstein_zeta_det(z, tau, a.spin, C)
            res.update(spectral=spec, relerr=abs(spec - closed) / abs(closed) if closed else None)
        except ZeroMode as exc:
            res.update(spectral=None, spectral_status=f"ZeroMode: {exc}")
        res["calibration"] = C
        res["provenance"]["spectral"] = "Ewald-split Epstein zeta derivative"
    return res, [{k: v for k, v in res.items() if k not in ("provenance",)}]


def cmd_ehol(a):
    from .elliptic import TorusField, elliptic_holonomy_field
    field = TorusField.from_json(_load_validated(a.field, "torus_field"))
    val = elliptic_holonomy_field(a.rep, field, a.convention)
    res = to_jsonable(val)
    return res, [{"rep": a.rep, "value": val.value, "phase_log": val.phase_log}]


def cmd_degenerate(a):
    from .elliptic import degeneration_check
    z = parse_complex(a.z)
    # tau = i, 2i, 4i, ... up to tmax
    taus = [1j * 2 ** k for k in range(int(a.tmax).bit_length())]
    rows = [{"tau": t, "abs_q": abs(q), "relerr": r} for t, (q, r) in zip(taus, degeneration_check(z, taus))]
    return {"z": z, "rows": rows}, rows


def cmd_bch(a):
    from .chern import BChInput, bismut_chern
    inp = BChInput.from_json(_load_validated(a.input, "bch_input"))
    grading = [int(g) for g in a.grading.split(",")] if a.grading else None
    val = bismut_chern(inp, grading)
    from .grassmann import indices_from_mask
    rows = [{"subset": ",".join(map(str, indices_from_mask(S))), "value": v} for S, v in sorted(val.items())]
    return {"generators": inp.algebra.g, "n": inp.conn.n, "K": inp.conn.K, "rows": rows}, rows


def cmd_witten(a):
    from .chern import FormalRing, localization_identity_check, witten_series
    tau = parse_tau(a.tau)
    rep = localization_identity_check(a.l, tau, a.D, eta_power=a.eta_power)
    W = witten_series(FormalRing(1, a.D), tau)
    rows = [{"degree": k, "coeff": W.coefficient([k])} for k in range(a.D + 1)]
    rep["one_root_series"] = rows
    return rep, rows


def cmd_selftest(a):
    from .checks import run_all
    results = run_all(seed=a.seed if a.seed is not None else 0)
    for r in results:
        print(r.line(), file=sys.stderr)
    rows = [{"criterion": r.number, "name": r.name, "passed": r.passed, "detail": r.detail} for r in results]
    return {"results": [to_jsonable(r) for r in results], "all_passed": all(r.passed for r in results)}, rows


def _ij(s: str) -> tuple[int, int]:
    if len(s) != 2 or any(c not in "01" for c in s):
        raise UsageError(f"--ij must be one of 00, 01, 10, 11, got {s!r}")
    return int(s[0]), int(s[1])


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------
REPS = ["S00", "S01", "S10", "S11"]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ellhol", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"ellhol {__version__}")
    p.add_argument("--selftest", action="store_true", help="run every acceptance check and exit nonzero on failure")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--seed", type=int, default=None)
    sub = p.add_subparsers(dest="command")

    def add(name, fn, **kw):
        sp = sub.add_parser(name, **kw)
        sp.set_defaults(func=fn)
        sp.add_argument("--format", choices=["json", "csv"], default=argparse.SUPPRESS)
        sp.add_argument("--seed", type=int, default=argparse.SUPPRESS)
        return sp

    sp = add("theta", cmd_theta, help="theta_ij(z, tau)")
    sp.add_argument("--ij", required=True)
    sp.add_argument("--z", required=True)
    sp.add_argument("--tau", required=True)

    sp = add("eta", cmd_eta, help="Dedekind eta")
    sp.add_argument("--tau", required=True)
    sp.add_argument("--check-transform", choices=["T", "S"])

    sp = add("eisenstein", cmd_eisenstein, help="normalized Eisenstein series G_k")
    sp.add_argument("--k", type=int, required=True)
    sp.add_argument("--tau", required=True)
    sp.add_argument("--check", choices=["quasimodular", "completion"])

    sp = add("char", cmd_char, help="level-one characters of Spin(2l)")
    sp.add_argument("--rep", choices=REPS, required=True)
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--z")
    sp.add_argument("--tau")
    sp.add_argument("--qexpand", type=int)
    sp.add_argument("--against-fock", action="store_true")
    sp.add_argument("--anomaly", action="store_true")

    sp = add("aw", cmd_aw, help="circle supertrace versus zeta-Pfaffian")
    sp.add_argument("--loop", help="LoopConnection JSON (default: bundled so(4) fixture)")
    sp.add_argument("--gauge-orbit", type=int, default=0)

    sp = add("eaw", cmd_eaw, help="elliptic character/Pfaffian ratio")
    sp.add_argument("--rep", choices=REPS, required=True)
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--tau", required=True)
    sp.add_argument("--z")
    sp.add_argument("--samples", type=int, default=20)
    sp.add_argument("--pairing", choices=["flip", "same"], default="flip")

    sp = add("zetadet", cmd_zetadet, help="torus zeta determinant")
    sp.add_argument("--z", required=True)
    sp.add_argument("--tau", required=True)
    sp.add_argument("--spin", choices=["00", "01", "10", "11"], required=True)
    sp.add_argument("--spectral", action="store_true", help="also evaluate the Epstein side")

    sp = add("ehol", cmd_ehol, help="elliptic holonomy of a torus gauge field")
    sp.add_argument("--field", required=True)
    sp.add_argument("--rep", choices=REPS, required=True)
    sp.add_argument("--convention", choices=["literal", "unitary"], default="literal")

    sp = add("degenerate", cmd_degenerate, help="q -> 0 limit of q^(-1/12) theta_11/eta along doubling imaginary tau")
    sp.add_argument("--z", required=True)
    sp.add_argument("--tmax", type=int, default=8)

    sp = add("bch", cmd_bch, help="Bismut-Chern character of a loop with curvature")
    sp.add_argument("--input", required=True)
    sp.add_argument("--grading", help="comma-separated +1/-1 diagonal")

    sp = add("witten", cmd_witten, help="Witten series and the localization identity")
    sp.add_argument("--l", type=int, required=True)
    sp.add_argument("--tau", required=True)
    sp.add_argument("--D", type=int, default=6)
    sp.add_argument("--eta-power", type=int, default=None)
    return p


def _config(a) -> dict:
    skip = {"func", "command", "selftest"}
    return {k: v for k, v in sorted(vars(a).items()) if k not in skip}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if a.selftest:
        fn, name = cmd_selftest, "selftest"
    elif a.command:
        fn, name = a.func, a.command
    else:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        result, rows = fn(a)
    except (ValidationError, NotSpecialOrthogonal, AlgebraMismatch, DimMismatch) as exc:
        print(f"ellhol: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NonConvergent, DefectiveMonodromy) as exc:
        print(f"ellhol: convergence contract violated: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ValueError, ArithmeticError) as exc:
        print(f"ellhol: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if a.format == "csv":
        sys.stdout.write(rows_to_csv([to_jsonable_row(r) for r in rows]))
    else:
        report = {"command": name, "version": __version__, "config": to_jsonable(_config(a)),
                  "result": to_jsonable(result)}
        sys.stdout.write(json.dumps(report, indent=2) + "\n")
    if name == "selftest" and not result["all_passed"]:
        return EXIT_SELFTEST
    return EXIT_OK


def to_jsonable_row(row: dict) -> dict:
    return {k: (v if isinstance(v, (complex, np.complexfloating)) else to_jsonable(v)) for k, v in row.items()}


if __name__ == "__main__":
    sys.exit(main())
