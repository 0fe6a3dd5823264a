"""Command line entry point: ``meshnet <command> ...``.

All inputs and outputs are files. Exit status is 0 on feasible completion,
1 when a solve or validation fails and 2 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from ..baseline import AnnealSchedule, restarts, rows_to_csv
from ..mesh import MeshError, dump_document, load_mesh
from ..model import build_model
from ..model.ipmodel import ModelError
from ..smoothing import (
    TOP_WEIGHTS,
    StepPolicy,
    closed_anchor_keys,
    extract_snakes,
    smooth_with_history,
    snap_right_angles,
)
from ..solver.bnb import SolveOptions
from ..solver.lp import export_lp
from ..solver.solution import load_solution, solution_to_dict
from ..spec import FunctionalSpec, SpecError, load_spec
from ..tiling import TilingError, export_grid_map, load_templates
from .plan import PlanError, load_plan
from .render import render_svg
from .report import validate_document
from .scenario import SOLVERS, PipelineError, run_scenario
from .street import run_street_pipeline


class UsageError(Exception):
    pass


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    p = out_dir / name
    p.write_text(text)
    return p


def _spec(args) -> FunctionalSpec:
    spec = load_spec(_read(args.spec))
    if getattr(args, "seed", None) is not None:
        spec = spec.replace(partition_seed=args.seed)
    return spec


def _templates(args, spec: FunctionalSpec):
    path = getattr(args, "templates", None)
    if path is None and spec.templates:
        path = Path(args.spec).parent / spec.templates
    if path is None:
        return None
    return load_templates(_read(path))


def _options(args) -> SolveOptions:
    return SolveOptions(
        time_limit=args.time_limit,
        deterministic=args.deterministic,
        seed=args.seed or 0,
    )


def _summary_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def cmd_generate(args) -> int:
    mesh = load_mesh(_read(args.mesh))
    out = Path(args.out_dir)
    options = _options(args)
    if args.plan:
        plan = load_plan(_read(args.plan))
        result = run_street_pipeline(mesh, plan, options, args.solver)
        docs = []
        for lv in result.levels:
            _write(out, f"level{lv.index}.lp", lv.result.lp)
            if lv.solution is None:
                print(f"wrote {out / f'level{lv.index}.lp'} (later levels need a solved parent)")
                return 0
        rows = []
        for lv in result.levels:
            extra = result.geometry() if lv is result.levels[-1] else None
            doc = solution_to_dict(lv.mesh, lv.solution, extra=extra)
            docs.append(doc)
            _write(out, f"level{lv.index}.json", dump_document(doc))
            b = lv.solution.breakdown
            rows.append(
                {
                    "level": lv.name,
                    "status": lv.solution.status,
                    "objective": repr(float(lv.solution.objective)),
                    "edges": len(lv.solution.active_edges),
                    "length": repr(float(b.get("length", 0.0))),
                    "distance": repr(float(b.get("distance", 0.0))),
                }
            )
        final = result.levels[-1]
        text = dump_document(docs[-1])
        _write(out, "solution.json", text)
        _write(out, "network.svg", render_svg(final.mesh, docs))
        _write(out, "levels.csv", _summary_csv(rows))
        from .figures import energy_figure, levels_figure

        levels_figure([{**r, "length": float(r["length"]), "distance": float(r["distance"])} for r in rows],
                      out / "levels.png")
        if result.energies:
            energy_figure(result.energies, out / "energy.png")
        report = validate_document(text, final.result.spec)
    else:
        spec = _spec(args)
        result = run_scenario(mesh, spec, None, options, args.solver)
        _write(out, "model.lp", result.lp)
        if result.solution is None:
            print(f"wrote {out / 'model.lp'}")
            return 0
        text = dump_document(solution_to_dict(mesh, result.solution))
        _write(out, "solution.json", text)
        samples = sorted(result.sampled.values()) if result.sampled else ()
        _write(out, "network.svg", render_svg(mesh, [load_solution(text)[2]], samples=samples))
        report = validate_document(text, spec)
    _write(out, "report.csv", report.to_csv())
    print(f"wrote {out / 'solution.json'}; validation {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def cmd_tile(args) -> int:
    mesh = load_mesh(_read(args.mesh))
    spec = _spec(args)
    if spec.mode not in ("floorplan", "gamelevel"):
        raise UsageError("tile needs a floorplan or gamelevel spec")
    templates = _templates(args, spec)
    if not templates:
        raise UsageError("tile needs a template catalogue (--templates or the spec's templates key)")
    out = Path(args.out_dir)
    result = run_scenario(mesh, spec, templates, _options(args), args.solver)
    _write(out, "model.lp", result.lp)
    if result.solution is None:
        print(f"wrote {out / 'model.lp'}")
        return 0
    doc = solution_to_dict(mesh, result.solution, rooms=result.rooms, templates=templates)
    text = dump_document(doc)
    _write(out, "solution.json", text)
    _write(out, "tiles.svg", render_svg(mesh, [doc]))
    _write(
        out,
        "gridmap.txt",
        export_grid_map(mesh, templates, result.rooms, result.solution.placements, result.solution.active_edges),
    )
    report = validate_document(text, spec, templates)
    _write(out, "report.csv", report.to_csv())
    print(f"wrote {out / 'solution.json'}; validation {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def cmd_smooth(args) -> int:
    mesh, sol, doc = load_solution(_read(args.solution))
    if not sol.active_edges:
        raise UsageError("the solution has no active edges to smooth")
    snakes = extract_snakes(mesh, sol, tuple(args.weights), args.subdivisions)
    res = smooth_with_history(snakes, StepPolicy(tolerance=args.tolerance), closed_anchor_keys(snakes))
    smoothed = res.snakes
    if not args.no_snap:
        deg = {}
        for e in sol.active_edges:
            for v in mesh.edges[e]:
                deg[v] = deg.get(v, 0) + 1
        smoothed = snap_right_angles(smoothed, [v for v, d in deg.items() if d >= 3], args.snap_threshold)
    pos = mesh.positions.copy()
    for s in smoothed:
        for k, p in zip(s.keys, s.points):
            if isinstance(k, int):
                pos[k] = p
    doc = dict(doc)
    doc["geometry"] = {
        "vertices": [[v, float(x), float(y)] for v, (x, y) in enumerate(pos) if (x, y) != tuple(mesh.positions[v])],
        "snakes": [
            {"level": 0, "closed": s.closed, "points": [[float(x), float(y)] for x, y in s.points]} for s in smoothed
        ],
    }
    out = Path(args.out_dir)
    _write(out, "smoothed.json", dump_document(doc))
    _write(out, "smoothed.svg", render_svg(mesh, [doc]))
    _write(out, "energy.csv", "iteration,energy\n" + "".join(f"{i},{e!r}\n" for i, e in enumerate(res.energies)))
    from .figures import energy_figure

    energy_figure([res.energies], out / "energy.png")
    print(f"smoothed {len(smoothed)} snake(s) in {res.iterations} iteration(s)")
    return 0


def cmd_export_lp(args) -> int:
    mesh = load_mesh(_read(args.mesh))
    spec = _spec(args)
    templates = _templates(args, spec) if spec.mode != "network" else None
    model = build_model(mesh, spec, templates)
    if args.out:
        Path(args.out).write_text(export_lp(model))
        print(f"wrote {args.out}")
    else:
        p = _write(Path(args.out_dir), "model.lp", export_lp(model))
        print(f"wrote {p}")
    return 0


def cmd_render(args) -> int:
    docs, mesh = [], None
    for path in args.solution:
        mesh, _, doc = load_solution(_read(path))
        docs.append(doc)
    p = _write(Path(args.out_dir), args.name, render_svg(mesh, docs))
    print(f"wrote {p}")
    return 0


def cmd_compare_baseline(args) -> int:
    mesh = load_mesh(_read(args.mesh))
    spec = _spec(args)
    exact = None
    if not args.no_exact:
        result = run_scenario(mesh, spec, None, _options(args), "builtin")
        exact = result.solution.objective
    first = args.seed or 0
    schedule = AnnealSchedule(args.temperature, args.cooling, args.iterations, None, first)
    rows, best = restarts(mesh, spec, schedule, range(first, first + args.seeds))
    out = Path(args.out_dir)
    _write(out, "baseline.csv", rows_to_csv(rows, exact))
    _write(out, "baseline_best.json", dump_document(solution_to_dict(mesh, best.solution)))
    from .figures import baseline_figure

    baseline_figure(rows, exact, out / "baseline.png")
    low = min(r.objective for r in rows)
    print(f"best stochastic objective {low!r}" + (f", exact optimum {exact!r}" if exact is not None else ""))
    return 0


def cmd_validate(args) -> int:
    spec = _spec(args)
    templates = _templates(args, spec) if spec.mode != "network" else None
    report = validate_document(_read(args.solution), spec, templates)
    p = _write(Path(args.out_dir), "report.csv", report.to_csv())
    print(f"wrote {p}; validation {'PASS' if report.passed else 'FAIL'}")
    return 0 if report.passed else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="meshnet", description="Networks on polygonal meshes from functional specs.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, solve=True):
        p.add_argument("--out-dir", default=".", help="output directory (default: current)")
        p.add_argument("--seed", type=int, default=None, help="seed for sampling and search")
        if solve:
            p.add_argument("--time-limit", type=float, default=60.0, help="seconds per solve (default 60)")
            p.add_argument("--deterministic", action="store_true", help="replace the clock by a node budget")
            p.add_argument("--solver", choices=SOLVERS, default="builtin")

    p = sub.add_parser("generate", help="solve a network spec or a multi-level plan")
    p.add_argument("--mesh", required=True)
    p.add_argument("--spec", help="spec YAML (single solve)")
    p.add_argument("--plan", help="level plan YAML (street pipeline)")
    common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("tile", help="floorplan or game-level tiling")
    p.add_argument("--mesh", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--templates")
    common(p)
    p.set_defaults(func=cmd_tile)

    p = sub.add_parser("smooth", help="snake smoothing of a solution document")
    p.add_argument("--solution", required=True)
    p.add_argument("--weights", type=float, nargs=3, default=list(TOP_WEIGHTS), metavar=("ALPHA", "BETA", "GAMMA"))
    p.add_argument("--subdivisions", type=int, default=2)
    p.add_argument("--tolerance", type=float, default=1e-6)
    p.add_argument("--snap-threshold", type=float, default=15.0)
    p.add_argument("--no-snap", action="store_true")
    common(p, solve=False)
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("export-lp", help="write the integer program in LP format")
    p.add_argument("--mesh", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--templates")
    p.add_argument("--out", help="LP file path (default: OUT_DIR/model.lp)")
    common(p, solve=False)
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("render", help="SVG of one or more solution documents")
    p.add_argument("--solution", required=True, nargs="+")
    p.add_argument("--name", default="render.svg")
    common(p, solve=False)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("compare-baseline", help="stochastic search against the exact optimum")
    p.add_argument("--mesh", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--iterations", type=int, default=200)
    p.add_argument("--temperature", type=float, default=1.0)
    p.add_argument("--cooling", type=float, default=0.95)
    p.add_argument("--no-exact", action="store_true")
    common(p)
    p.set_defaults(func=cmd_compare_baseline)

    p = sub.add_parser("validate", help="recompute every check on a solution document")
    p.add_argument("--solution", required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--templates")
    common(p, solve=False)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "generate" and not (args.spec or args.plan):
        print("meshnet: error: generate needs --spec or --plan", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"meshnet: {exc}", file=sys.stderr)
        return 1
    except (UsageError, MeshError, SpecError, PlanError, TilingError, ModelError, ValueError) as exc:
        print(f"meshnet: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
