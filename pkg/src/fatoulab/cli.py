"""Command line front door: mini-spec arguments in, JSON summaries out.

Every subcommand prints exactly one line of JSON to stdout and, when --out
is given, writes its full report (JSON, CSV traces, PGM images) under that
directory.  Runs are reproducible from the arguments alone: the only
randomness is the --seed value, no timestamps are emitted, and keys are
sorted.  Exit codes: 0 success, 1 input or parse problem, 2 a search or fit
that did not converge.
"""

from __future__ import annotations

import argparse
import hashlib
import json
from pathlib import Path

import numpy as np

from . import dynamics, hyperbolic, range_analysis, universality
from .errors import (
    ConvergenceNotObserved,
    FatouLabError,
    MapSpecError,
    NoConvergence,
    NotConverged,
    NotFound,
)
from .maps import (
    Const,
    Exp,
    MapExpr,
    Mobius,
    Poly,
    Pow,
    Var,
    blaschke_factor,
    eval_deriv,
    map_to_json,
    parse_map,
)
from .maps import Affine as _Affine
from .regions import (
    Contour,
    disc,
    finite_set,
    parse_region,
    polygon,
    region_to_json,
)

_GRAMMAR = """\
map specs:
  var | const:C | poly:C0,C1,... | affine:SCALE,SHIFT | mobius:A,B,C,D |
  blaschke:A | pow:K:SPEC | exp:SPEC | @file.json | inline JSON object
  complex scalars are Python literals: 1, -0.5, 1+2j, 0.3j
region specs:
  disc:CX,CY,R | poly:X1,Y1,X2,Y2,... | points:X1,Y1,... |
  @file.json | inline JSON object
The FATOULAB_THREADS environment variable caps worker threads (0 = auto).
"""


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# --- argument parsing helpers ---------------------------------------------------


def _complex_token(text: str, where: str) -> complex:
    try:
        return complex(text.strip().replace(" ", ""))
    except ValueError:
        raise MapSpecError(f"{where}: bad complex literal {text!r}") from None


def _float_token(text: str, where: str) -> float:
    try:
        return float(text.strip())
    except ValueError:
        raise MapSpecError(f"{where}: bad number {text!r}") from None


def _complex_list(text: str, where: str) -> list:
    return [
        _complex_token(tok, f"{where} field {i + 1}")
        for i, tok in enumerate(text.split(","))
    ]


def _int_list(text: str, where: str) -> list:
    out = []
    for i, tok in enumerate(text.split(",")):
        try:
            out.append(int(tok.strip()))
        except ValueError:
            raise MapSpecError(
                f"{where} field {i + 1}: bad integer {tok!r}"
            ) from None
    return out


def _float_list(text: str, where: str) -> list:
    return [
        _float_token(tok, f"{where} field {i + 1}")
        for i, tok in enumerate(text.split(","))
    ]


def _load_json(path: str, where: str):
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise MapSpecError(f"{where}: cannot read {path}: {exc}") from None
    return _parse_json_text(raw, where)


def _parse_json_text(raw: str, where: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MapSpecError(f"{where}: {exc}") from None


def _mini_fields(rest: str, n: int | None, where: str, head: str) -> list:
    parts = [p for p in rest.split(",")] if rest else []
    if n is not None and len(parts) != n:
        raise MapSpecError(f"{where}: {head} needs {n} fields, got {len(parts)}")
    return parts


def parse_map_arg(text: str, where: str) -> MapExpr:
    """Inline mini-spec, @file.json, or a raw JSON object."""
    text = text.strip()
    if not text:
        raise MapSpecError(f"{where}: empty map spec")
    if text.startswith("@"):
        return parse_map(_load_json(text[1:], where))
    if text.startswith("{"):
        return parse_map(_parse_json_text(text, where))
    head, _, rest = text.partition(":")
    head = head.strip().lower()
    if head == "var":
        if rest:
            raise MapSpecError(f"{where}: var takes no fields")
        return Var()
    if head == "const":
        return Const(_complex_token(rest, where))
    if head == "poly":
        coeffs = [
            _complex_token(tok, f"{where} coefficient {i + 1}")
            for i, tok in enumerate(_mini_fields(rest, None, where, head))
        ]
        if not coeffs:
            raise MapSpecError(f"{where}: poly needs coefficients")
        return Poly(tuple(coeffs))
    if head == "affine":
        a, b = _mini_fields(rest, 2, where, head)
        return _Affine(_complex_token(a, where), _complex_token(b, where))
    if head == "mobius":
        parts = _mini_fields(rest, 4, where, head)
        return Mobius(*(_complex_token(p, where) for p in parts))
    if head == "blaschke":
        return blaschke_factor(_complex_token(rest, where))
    if head == "pow":
        k_text, _, inner = rest.partition(":")
        try:
            k = int(k_text)
        except ValueError:
            raise MapSpecError(f"{where}: bad power {k_text!r}") from None
        return Pow(parse_map_arg(inner, where), k)
    if head == "exp":
        return Exp(parse_map_arg(rest, where))
    raise MapSpecError(f"{where}: unknown map spec head {head!r}")


def parse_region_arg(text: str, where: str):
    text = text.strip()
    if not text:
        raise MapSpecError(f"{where}: empty region spec")
    if text.startswith("@"):
        return parse_region(_load_json(text[1:], where))
    if text.startswith("{"):
        return parse_region(_parse_json_text(text, where))
    head, _, rest = text.partition(":")
    head = head.strip().lower()
    if head == "disc":
        cx, cy, r = _mini_fields(rest, 3, where, head)
        return disc(
            complex(_float_token(cx, where), _float_token(cy, where)),
            _float_token(r, where),
        )
    if head in ("poly", "points"):
        nums = [
            _float_token(tok, f"{where} field {i + 1}")
            for i, tok in enumerate(_mini_fields(rest, None, where, head))
        ]
        if len(nums) % 2 != 0 or not nums:
            raise MapSpecError(f"{where}: {head} needs x,y pairs")
        pts = [complex(x, y) for x, y in zip(nums[::2], nums[1::2])]
        return polygon(pts) if head == "poly" else finite_set(pts)
    raise MapSpecError(f"{where}: unknown region spec head {head!r}")


def _base_point_arg(text: str, where: str):
    if text.strip().lower() in ("inf", "infinity", "none", "oo"):
        return None
    return _complex_token(text, where)


# --- output helpers --------------------------------------------------------------


def _emit(payload: dict) -> None:
    print(json.dumps(payload, sort_keys=True, separators=(",", ":")))


def _outdir(args):
    if getattr(args, "out", None) is None:
        return None
    path = Path(args.out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(outdir, name: str, payload) -> str | None:
    if outdir is None:
        return None
    path = outdir / name
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return str(path)


def _write_csv(outdir, name: str, header, rows) -> str | None:
    if outdir is None:
        return None
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(v) for v in row))
    path = outdir / name
    path.write_text("\n".join(lines) + "\n")
    return str(path)


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _pair(z: complex) -> list:
    return [z.real, z.imag]


# --- subcommand handlers -----------------------------------------------------------


def _cmd_classify(args) -> int:
    params = hyperbolic.load_params(args.params)
    seq = hyperbolic.BlaschkeSequence(tuple(params))
    report = hyperbolic.classify_sequence(seq, horizon=args.horizon)
    out = _outdir(args)
    _write_json(out, "report.json", report.to_jsonable())
    _write_csv(
        out,
        "traces.csv",
        ["n"] + [f"pair{i}" for i in range(len(report.pairs))],
        (
            [n] + [float(report.traces[i][n]) for i in range(len(report.pairs))]
            for n in range(report.horizon + 1)
        ),
    )
    _emit(
        {
            "command": "classify",
            "verdict": report.verdict,
            "tail_sum": float(report.tail_partial_sums[-1]),
            "final_traces": [float(t) for t in report.final_traces],
        }
    )
    return 0


def _cmd_noninjective_seq(args) -> int:
    exhaustion = hyperbolic.disc_exhaustion(args.length)
    cons = hyperbolic.build_noninjective_sequence(exhaustion, args.length)
    residuals = []
    for step in cons.steps:
        factor = cons.sequence.factor(step.factor_index)
        residuals.append(abs(complex(eval_deriv(factor, step.target))))
    worst = max(residuals) if residuals else 0.0
    out = _outdir(args)
    if out is not None:
        hyperbolic.save_params(out / "params.txt", cons.sequence.params)
    _write_json(
        out,
        "report.json",
        {
            "length": args.length,
            "steps": [
                {
                    "factor_index": s.factor_index,
                    "exhaustion_index": s.exhaustion_index,
                    "center": _pair(s.center),
                    "target": _pair(s.target),
                }
                for s in cons.steps
            ],
            "skips": list(cons.skips),
            "max_critical_residual": worst,
        },
    )
    _emit(
        {
            "command": "noninjective-seq",
            "length": args.length,
            "steps": len(cons.steps),
            "skips": len(cons.skips),
            "max_critical_residual": worst,
        }
    )
    return 0


def _cmd_runaway(args) -> int:
    f = parse_map_arg(args.f, "--f")
    region = parse_region_arg(args.K, "--K")
    witness = universality.find_runaway_N(f, region, args.n_max, args.mesh)
    _write_json(_outdir(args), "report.json", witness.to_jsonable())
    _emit(
        {
            "command": "runaway",
            "N": witness.m,
            "margin": witness.margin,
            "method": witness.method,
        }
    )
    return 0


def _cmd_separation(args) -> int:
    f = parse_map_arg(args.f, "--f")
    K = parse_region_arg(args.K, "--K")
    L = parse_region_arg(args.L, "--L")
    witness = universality.find_separation_m(f, K, L, args.m_max, args.mesh)
    _write_json(_outdir(args), "report.json", witness.to_jsonable())
    _emit(
        {
            "command": "separation",
            "m": witness.m,
            "margin": witness.margin,
            "method": witness.method,
        }
    )
    return 0


def _run_step(args, weighted: bool) -> int:
    f = parse_map_arg(args.f, "--f")
    K = parse_region_arg(args.K, "--K")
    g = parse_map_arg(args.g, "--g")
    L = parse_region_arg(args.L, "--L")
    h = parse_map_arg(args.h, "--h")
    kwargs = dict(
        mesh=args.mesh,
        seed=args.seed,
        degree_cap=args.degree_cap,
    )
    if weighted:
        omega = parse_map_arg(args.omega, "--omega")
        witness, result = universality.weighted_universal_step(
            f, omega, K, g, L, h, args.epsilon, args.m_max, **kwargs
        )
    else:
        witness, result = universality.universal_step(
            f, K, g, L, h, args.epsilon, args.m_max, **kwargs
        )
    out = _outdir(args)
    _write_json(
        out,
        "report.json",
        {"witness": witness.to_jsonable(), "fit": result.to_jsonable()},
    )
    _write_json(out, "polynomial.json", map_to_json(result.polynomial))
    _emit(
        {
            "command": "weighted-step" if weighted else "universal-step",
            "m": witness.m,
            "margin": witness.margin,
            "degree": result.degree,
            "validation_errors": list(result.validation_errors),
            "converged": result.converged,
        }
    )
    return 0


def _cmd_universal_step(args) -> int:
    return _run_step(args, weighted=False)


def _cmd_weighted_step(args) -> int:
    return _run_step(args, weighted=True)


def _parse_tasks(text: str, where: str) -> list:
    if text.startswith("@"):
        data = _load_json(text[1:], where)
    else:
        data = _parse_json_text(text, where)
    if not isinstance(data, list):
        raise MapSpecError(f"{where}: expected a JSON list of tasks")
    tasks = []
    for i, item in enumerate(data):
        if not isinstance(item, dict) or "region" not in item or "target" not in item:
            raise MapSpecError(
                f"{where}[{i}]: each task needs 'region' and 'target'"
            )
        tasks.append(
            (
                parse_region(item["region"], path=f"{where}[{i}].region"),
                parse_map(item["target"], path=f"{where}[{i}].target"),
            )
        )
    return tasks


def _cmd_build_universal(args) -> int:
    f = parse_map_arg(args.f, "--f")
    tasks = _parse_tasks(args.tasks, "--tasks")
    radii = _float_list(args.radii, "--radii") if args.radii else None
    record = universality.build_partial_universal(
        f,
        tasks,
        args.epsilon,
        radii,
        args.n_max,
        mesh=args.mesh,
        seed=args.seed,
        degree_cap=args.degree_cap,
    )
    out = _outdir(args)
    _write_json(out, "report.json", record.to_jsonable())
    _write_json(out, "polynomial.json", map_to_json(record.polynomial))
    _emit(
        {
            "command": "build-universal",
            "witness_indices": list(record.witness_indices),
            "final_errors": list(record.final_errors),
            "guard_radii": list(record.guard_radii),
            "converged": record.converged,
        }
    )
    return 0


def _cmd_orbit_density(args) -> int:
    f = parse_map_arg(args.f, "--f")
    g = parse_map_arg(args.g, "--g")
    targets = _parse_tasks(args.targets, "--targets")
    records = universality.orbit_density(
        f, g, targets, args.n_max, seed=args.seed
    )
    out = _outdir(args)
    _write_json(out, "report.json", [r.to_jsonable() for r in records])
    _write_csv(
        out,
        "density.csv",
        ["target_index", "n", "error"],
        (
            [i, n, err]
            for i, rec in enumerate(records)
            for n, err in enumerate(rec.errors)
        ),
    )
    _emit(
        {
            "command": "orbit-density",
            "best": [
                {"n": r.best_n, "error": r.best_error} for r in records
            ],
        }
    )
    return 0


def _cmd_weighted_orbit(args) -> int:
    f = parse_map_arg(args.f, "--f")
    omega = parse_map_arg(args.omega, "--omega")
    g = parse_map_arg(args.g, "--g")
    z = _complex_token(args.z, "--z")
    record = universality.weighted_orbit(f, omega, g, z, args.n)
    out = _outdir(args)
    _write_json(out, "report.json", record.to_jsonable())
    _write_csv(
        out,
        "orbit.csv",
        ["n", "re", "im", "log10_weight"],
        (
            [n, v.real, v.imag, record.log_magnitudes[n]]
            for n, v in enumerate(record.values)
        ),
    )
    final = record.values[-1]
    _emit(
        {
            "command": "weighted-orbit",
            "n": args.n,
            "final": _pair(final),
            "final_log10_weight": record.log_magnitudes[-1],
        }
    )
    return 0


def _cmd_compose_seq(args) -> int:
    where = "--maps"
    text = args.maps.strip()
    if text.startswith("@") or text.startswith("["):
        data = _load_json(text[1:], where) if text.startswith("@") else _parse_json_text(text, where)
        if not isinstance(data, list):
            raise MapSpecError(f"{where}: expected a JSON list of map specs")
        maps = [parse_map(item, path=f"{where}[{i}]") for i, item in enumerate(data)]
    else:
        maps = [
            parse_map_arg(part, f"{where} entry {i + 1}")
            for i, part in enumerate(text.split(";"))
        ]
    z = _complex_token(args.z, "--z")
    values = universality.composition_sequence_orbit(maps, args.mode, z)
    out = _outdir(args)
    _write_csv(
        out,
        "orbit.csv",
        ["n", "re", "im"],
        ([n + 1, v.real, v.imag] for n, v in enumerate(values)),
    )
    _emit(
        {
            "command": "compose-seq",
            "mode": args.mode,
            "count": len(values),
            "final": _pair(values[-1]) if values else None,
        }
    )
    return 0


def _cmd_cyclicity(args) -> int:
    candidate = parse_map_arg(args.candidate, "--candidate")
    contour = Contour(
        _complex_token(args.center, "--center"),
        args.radius,
        orientation=args.orientation,
        node_count=args.nodes,
    )
    a = _complex_token(args.a, "--a")
    report = universality.cyclicity_obstruction(candidate, contour, a)
    _write_json(_outdir(args), "report.json", report.to_jsonable())
    _emit(
        {
            "command": "cyclicity",
            "candidate_integral": _pair(report.candidate_integral),
            "witness_integral": _pair(report.witness_integral),
            "gap": report.gap,
        }
    )
    return 0


def _cmd_count_zeros(args) -> int:
    expr = parse_map_arg(args.expr, "--expr")
    region = parse_region_arg(args.disc, "--disc")
    report = range_analysis.count_zeros(expr, region, args.nodes)
    _write_json(_outdir(args), "report.json", report.to_jsonable())
    _emit(
        {
            "command": "count-zeros",
            "count": report.count,
            "winding_residual": report.winding_residual,
            "nodes_used": report.nodes_used,
        }
    )
    return 0


def _cmd_full_range(args) -> int:
    f = parse_map_arg(args.f, "--f")
    g = parse_map_arg(args.g, "--g")
    z0 = _base_point_arg(args.z0, "--z0")
    base = parse_region_arg(args.base, "--base")
    targets = _complex_list(args.targets, "--targets")
    schedule = _int_list(args.schedule, "--schedule")
    report = range_analysis.full_range_probe(
        f, g, z0, args.r, base, targets, schedule,
        seed=args.seed, nodes=args.nodes,
    )
    _write_json(_outdir(args), "report.json", report.to_jsonable())
    _emit(
        {
            "command": "full-range",
            "attained": [o.attained for o in report.outcomes],
            "witness_n": [o.witness_n for o in report.outcomes],
        }
    )
    return 0


def _cmd_ess_sing(args) -> int:
    g = parse_map_arg(args.g, "--g")
    z0 = _base_point_arg(args.z0, "--z0")
    radii = _float_list(args.radii, "--radii")
    grid = _complex_list(args.grid, "--grid")
    report = range_analysis.essential_singularity_probe(
        g, z0, radii, grid, args.samples
    )
    out = _outdir(args)
    _write_json(out, "report.json", report.to_jsonable())
    _write_csv(
        out,
        "coverage.csv",
        ["radius", "fraction"],
        ([r, frac] for r, frac in zip(report.radii, report.fractions)),
    )
    _emit(
        {
            "command": "ess-sing",
            "fractions": list(report.fractions),
            "omitted": [_pair(v) for v in report.omitted],
        }
    )
    return 0


def _cmd_dw(args) -> int:
    f = parse_map_arg(args.f, "--f")
    estimate = dynamics.denjoy_wolff(f, max_iter=args.max_iter, tol=args.tol)
    payload = {
        "point": _pair(estimate.point),
        "boundary": estimate.boundary_flag,
        "iterations_used": estimate.iterations_used,
        "residual": estimate.residual,
    }
    _write_json(_outdir(args), "report.json", payload)
    _emit({"command": "dw", **payload})
    return 0


def _cmd_fixed_points(args) -> int:
    f = parse_map_arg(args.f, "--f")
    search = parse_region_arg(args.search, "--search")
    infos = dynamics.find_fixed_points(f, search, args.grid_step)
    _write_json(_outdir(args), "report.json", [i.to_jsonable() for i in infos])
    _emit(
        {
            "command": "fixed-points",
            "count": len(infos),
            "points": [i.to_jsonable() for i in infos],
        }
    )
    return 0


def _probe_defect(conj, z0: complex, radius: float, count: int) -> float:
    worst = 0.0
    for k in range(count):
        z = z0 + radius * complex(
            np.cos(2 * np.pi * k / count), np.sin(2 * np.pi * k / count)
        )
        worst = max(worst, conj.defect(z))
    return worst


def _cmd_koenigs(args) -> int:
    f = parse_map_arg(args.f, "--f")
    z0 = _complex_token(args.z0, "--z0")
    conj = dynamics.koenigs(f, z0, args.depth)
    worst = _probe_defect(conj, z0, args.probe_radius, args.probe_count)
    payload = {
        "kind": conj.kind,
        "depth": conj.depth,
        "multiplier": _pair(conj.multiplier),
        "max_defect": worst,
        "probe_radius": args.probe_radius,
    }
    _write_json(_outdir(args), "report.json", payload)
    _emit({"command": "koenigs", **payload})
    return 0


def _cmd_boettcher(args) -> int:
    f = parse_map_arg(args.f, "--f")
    z0 = _complex_token(args.z0, "--z0")
    conj = dynamics.boettcher(f, z0, args.depth)
    worst = _probe_defect(conj, z0, args.probe_radius, args.probe_count)
    payload = {
        "kind": conj.kind,
        "depth": conj.depth,
        "degree": conj.degree,
        "max_defect": worst,
        "probe_radius": args.probe_radius,
    }
    _write_json(_outdir(args), "report.json", payload)
    _emit({"command": "boettcher", **payload})
    return 0


def _cmd_render(args) -> int:
    f = parse_map_arg(args.f, "--f")
    window = _float_list(args.window, "--window")
    if len(window) != 4:
        raise MapSpecError("--window needs x0,y0,x1,y1")
    res = _int_list(args.res, "--res")
    if len(res) == 1:
        res = [res[0], res[0]]
    if len(res) != 2:
        raise MapSpecError("--res needs nx or nx,ny")
    counts = dynamics.escape_render(
        f, tuple(window), tuple(res), args.max_iter, args.escape_radius
    )
    digest = hashlib.sha256(counts.tobytes()).hexdigest()
    out = _outdir(args)
    path = None
    if out is not None:
        path = out / "escape.pgm"
        dynamics.write_pgm(path, counts, args.max_iter)
    _emit(
        {
            "command": "render",
            "shape": [int(counts.shape[0]), int(counts.shape[1])],
            "max_iter": args.max_iter,
            "sha256": digest,
            "written": str(path) if path else None,
        }
    )
    return 0


def _cmd_sector_probe(args) -> int:
    region = range_analysis.sector_region(
        _complex_token(args.vertex, "--vertex"),
        args.axis,
        args.opening,
        args.radius,
    )
    out = _outdir(args)
    _write_json(out, "region.json", region_to_json(region))
    summary = {
        "command": "sector-probe",
        "vertices": len(region.components[0].vertices),
    }
    if args.f and args.g:
        f = parse_map_arg(args.f, "--f")
        g = parse_map_arg(args.g, "--g")
        z0 = _base_point_arg(args.z0, "--z0")
        targets = _complex_list(args.targets, "--targets")
        schedule = _int_list(args.schedule, "--schedule")
        report = range_analysis.full_range_probe(
            f, g, z0, args.r, region, targets, schedule, seed=args.seed
        )
        _write_json(out, "report.json", report.to_jsonable())
        summary["attained"] = [o.attained for o in report.outcomes]
        summary["witness_n"] = [o.witness_n for o in report.outcomes]
    _emit(summary)
    return 0


def _cmd_finite_universal(args) -> int:
    f = parse_map_arg(args.f, "--f")
    omega = parse_map_arg(args.omega, "--omega")
    g = parse_map_arg(args.g, "--g")
    region = parse_region_arg(args.E, "--E")
    if args.targets.startswith("@"):
        data = _load_json(args.targets[1:], "--targets")
    else:
        data = _parse_json_text(args.targets, "--targets")
    if not isinstance(data, list):
        raise MapSpecError("--targets: expected a JSON list of value vectors")
    targets = []
    for i, row in enumerate(data):
        if not isinstance(row, list):
            raise MapSpecError(f"--targets[{i}]: expected a list of [re, im] pairs")
        targets.append([complex(p[0], p[1]) for p in row])
    report = universality.finite_set_universal_check(
        f, omega, region, targets, g, args.n_max
    )
    _write_json(_outdir(args), "report.json", report.to_jsonable())
    _emit(
        {
            "command": "finite-universal",
            "best": [
                {"n": n, "error": e} for n, e in report.per_target
            ],
            "evacuating_observed": report.evacuating_observed,
        }
    )
    return 0


# --- parser wiring ------------------------------------------------------------------


def _add_common(sp, *, seed: bool = True):
    sp.add_argument("--out", help="directory for report files", default=None)
    if seed:
        sp.add_argument("--seed", type=int, default=0)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="fatoulab",
        description="Numerics for composition operators on Fatou components.",
        epilog=_GRAMMAR,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("classify", help="trichotomy verdict for a factor sequence")
    sp.add_argument("--params", required=True, help="text file of 're im' lines")
    sp.add_argument("--horizon", type=int, default=hyperbolic.DEFAULT_HORIZON)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_classify)

    sp = sub.add_parser("noninjective-seq", help="greedy non-injective construction")
    sp.add_argument("--length", type=int, default=50)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_noninjective_seq)

    sp = sub.add_parser("runaway", help="smallest N with f^N(K) off K")
    sp.add_argument("--f", required=True)
    sp.add_argument("--K", required=True)
    sp.add_argument("--n-max", type=int, default=50)
    sp.add_argument("--mesh", type=float, default=universality.DEFAULT_MESH)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_runaway)

    sp = sub.add_parser("separation", help="smallest m with f^m(L) off K")
    sp.add_argument("--f", required=True)
    sp.add_argument("--K", required=True)
    sp.add_argument("--L", required=True)
    sp.add_argument("--m-max", type=int, default=50)
    sp.add_argument("--mesh", type=float, default=1.0 / 128)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_separation)

    for name, handler in (
        ("universal-step", _cmd_universal_step),
        ("weighted-step", _cmd_weighted_step),
    ):
        sp = sub.add_parser(name, help="one transition fit on K and f^m(L)")
        sp.add_argument("--f", required=True)
        if name == "weighted-step":
            sp.add_argument("--omega", required=True)
        sp.add_argument("--K", required=True)
        sp.add_argument("--g", required=True)
        sp.add_argument("--L", required=True)
        sp.add_argument("--h", required=True)
        sp.add_argument("--epsilon", type=float, required=True)
        sp.add_argument("--m-max", type=int, default=50)
        sp.add_argument("--mesh", type=float, default=1.0 / 128)
        sp.add_argument(
            "--degree-cap", type=int, default=universality.DEFAULT_DEGREE_CAP
        )
        _add_common(sp)
        sp.set_defaults(func=handler)

    sp = sub.add_parser("build-universal", help="diagonal multi-target builder")
    sp.add_argument("--f", required=True)
    sp.add_argument("--tasks", required=True, help="@file or JSON task list")
    sp.add_argument("--epsilon", type=float, required=True)
    sp.add_argument("--radii", default=None, help="comma list of guard radii")
    sp.add_argument("--n-max", type=int, default=60)
    sp.add_argument("--mesh", type=float, default=universality.DEFAULT_MESH)
    sp.add_argument(
        "--degree-cap", type=int, default=universality.DEFAULT_DEGREE_CAP
    )
    _add_common(sp)
    sp.set_defaults(func=_cmd_build_universal)

    sp = sub.add_parser("orbit-density", help="best index per target along the orbit")
    sp.add_argument("--f", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--targets", required=True, help="@file or JSON task list")
    sp.add_argument("--n-max", type=int, default=60)
    _add_common(sp)
    sp.set_defaults(func=_cmd_orbit_density)

    sp = sub.add_parser("weighted-orbit", help="weighted orbit values at a point")
    sp.add_argument("--f", required=True)
    sp.add_argument("--omega", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--z", required=True)
    sp.add_argument("--n", type=int, default=10)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_weighted_orbit)

    sp = sub.add_parser("compose-seq", help="left or right composition orbit")
    sp.add_argument("--maps", required=True, help="specs joined by ';', @file, or JSON list")
    sp.add_argument("--mode", choices=["Left", "Right"], default="Left")
    sp.add_argument("--z", required=True)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_compose_seq)

    sp = sub.add_parser("cyclicity", help="contour integral obstruction report")
    sp.add_argument("--candidate", required=True)
    sp.add_argument("--center", default="0")
    sp.add_argument("--radius", type=float, default=1.0)
    sp.add_argument("--nodes", type=int, default=512)
    sp.add_argument("--orientation", type=int, choices=[1, -1], default=1)
    sp.add_argument("--a", default="0")
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_cyclicity)

    sp = sub.add_parser("count-zeros", help="argument-principle zero count")
    sp.add_argument("--expr", required=True)
    sp.add_argument("--disc", required=True)
    sp.add_argument("--nodes", type=int, default=1024)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_count_zeros)

    sp = sub.add_parser("full-range", help="attained targets near a fixed point")
    sp.add_argument("--f", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--z0", required=True, help="complex literal or 'inf'")
    sp.add_argument("--r", type=float, required=True)
    sp.add_argument("--base", required=True)
    sp.add_argument("--targets", required=True, help="comma list of complex values")
    sp.add_argument("--schedule", required=True, help="comma list of indices")
    sp.add_argument("--nodes", type=int, default=1024)
    _add_common(sp)
    sp.set_defaults(func=_cmd_full_range)

    sp = sub.add_parser("ess-sing", help="essential singularity coverage probe")
    sp.add_argument("--g", required=True)
    sp.add_argument("--z0", required=True)
    sp.add_argument("--radii", required=True)
    sp.add_argument("--grid", required=True, help="comma list of complex values")
    sp.add_argument("--samples", type=int, default=256)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_ess_sing)

    sp = sub.add_parser("dw", help="iterate toward the disc attractor")
    sp.add_argument("--f", required=True)
    sp.add_argument("--max-iter", type=int, default=10000)
    sp.add_argument("--tol", type=float, default=1e-12)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_dw)

    sp = sub.add_parser("fixed-points", help="grid-seeded Newton fixed points")
    sp.add_argument("--f", required=True)
    sp.add_argument("--search", required=True)
    sp.add_argument("--grid-step", type=float, default=0.1)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_fixed_points)

    sp = sub.add_parser("koenigs", help="linearizing coordinate diagnostics")
    sp.add_argument("--f", required=True)
    sp.add_argument("--z0", required=True)
    sp.add_argument("--depth", type=int, default=40)
    sp.add_argument("--probe-radius", type=float, default=0.05)
    sp.add_argument("--probe-count", type=int, default=32)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_koenigs)

    sp = sub.add_parser("boettcher", help="superattracting coordinate diagnostics")
    sp.add_argument("--f", required=True)
    sp.add_argument("--z0", required=True)
    sp.add_argument("--depth", type=int, default=20)
    sp.add_argument("--probe-radius", type=float, default=0.05)
    sp.add_argument("--probe-count", type=int, default=32)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_boettcher)

    sp = sub.add_parser("render", help="escape-time image as P5 PGM")
    sp.add_argument("--f", required=True)
    sp.add_argument("--window", required=True, help="x0,y0,x1,y1")
    sp.add_argument("--res", required=True, help="nx or nx,ny")
    sp.add_argument("--max-iter", type=int, default=100)
    sp.add_argument("--escape-radius", type=float, default=2.0)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_render)

    sp = sub.add_parser("sector-probe", help="sector region, optionally probed")
    sp.add_argument("--vertex", default="0")
    sp.add_argument("--axis", type=float, default=0.0)
    sp.add_argument("--opening", type=float, required=True)
    sp.add_argument("--radius", type=float, required=True)
    sp.add_argument("--f", default=None)
    sp.add_argument("--g", default=None)
    sp.add_argument("--z0", default="inf")
    sp.add_argument("--r", type=float, default=10.0)
    sp.add_argument("--targets", default="0")
    sp.add_argument("--schedule", default="0,1,2,3,4,5")
    _add_common(sp)
    sp.set_defaults(func=_cmd_sector_probe)

    sp = sub.add_parser("finite-universal", help="weighted hits on a finite set")
    sp.add_argument("--f", required=True)
    sp.add_argument("--omega", default="const:1")
    sp.add_argument("--g", required=True)
    sp.add_argument("--E", required=True, help="points:... region spec")
    sp.add_argument("--targets", required=True, help="@file or JSON list of vectors")
    sp.add_argument("--n-max", type=int, default=60)
    _add_common(sp, seed=False)
    sp.set_defaults(func=_cmd_finite_universal)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not hasattr(args, "func"):
            raise _UsageError("a subcommand is required (see --help)")
        return args.func(args)
    except _UsageError as exc:
        _emit({"error": "usage", "message": str(exc)})
        return 1
    except (NotConverged, NotFound, ConvergenceNotObserved, NoConvergence) as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)})
        return 2
    except FatouLabError as exc:
        _emit({"error": type(exc).__name__, "message": str(exc)})
        return 1
    except OSError as exc:
        _emit({"error": "io", "message": str(exc)})
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
