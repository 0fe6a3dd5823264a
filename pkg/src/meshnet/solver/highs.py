"""Optional backend: hand the exported LP file to HiGHS (``pip install highspy``)."""

from __future__ import annotations

import os
import tempfile
import time

from ..model.ipmodel import IpModel
from .bnb import FEASIBLE, INFEASIBLE, OPTIMAL, TIMEOUT, NetworkSolution, SolveOptions
from .bnb import complete_assignment, make_solution
from .lp import export_lp


def highs_available() -> bool:
    try:
        import highspy  # noqa: F401
    except ImportError:
        return False
    return True


def solve_with_highs(model: IpModel, options: SolveOptions | None = None) -> NetworkSolution:
    """Solve the exported LP with HiGHS and rebuild the solution from its edge values.

    Derived quantities (orientations, distance values, indicators) are
    recomputed from the primary variables, so the result has the same shape
    as the built-in solver's.
    """
    import highspy

    options = options or SolveOptions()
    start = time.perf_counter()
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("time_limit", float(options.time_limit))
    h.setOptionValue("mip_rel_gap", float(options.gap))
    h.setOptionValue("threads", int(options.threads))
    h.setOptionValue("random_seed", int(options.seed))
    fd, path = tempfile.mkstemp(suffix=".lp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(export_lp(model))
        h.readModel(path)
    finally:
        os.unlink(path)
    h.run()
    status = h.getModelStatus()
    wall = time.perf_counter() - start
    info = h.getInfo()
    has_solution = info.primal_solution_status == 2
    if status == highspy.HighsModelStatus.kInfeasible:
        return NetworkSolution(INFEASIBLE, wall_time=wall)
    if not has_solution:
        return NetworkSolution(TIMEOUT, wall_time=wall)
    names = h.getLp().col_names_
    col = h.getSolution().col_value
    by_name = dict(zip(names, col))
    raw = [float(by_name.get(v.name, 0.0)) for v in model.variables]
    primary = model.meta.get("primary")
    values = None
    if primary is not None:
        values = complete_assignment(model, {v: int(round(raw[v])) for v in primary})
        if values is not None and model.check(values, 1e-6):
            values = None
    if values is None:
        values = raw
    obj = model.objective_value(values)
    optimal = status == highspy.HighsModelStatus.kOptimal
    bound = obj if optimal else float(info.mip_dual_bound)
    return make_solution(model, values, OPTIMAL if optimal else FEASIBLE, obj, bound, 0, wall)
