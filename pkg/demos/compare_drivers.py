"""Compare the interpolation drivers on Rosenbrock's function.

Every driver starts from (-1.2, 1) with the same budget; the table lists the
evaluations each one needed to bring f within 1e-2, 1e-4 and 1e-6 of zero.
"""

from dfokit.bench import compare_runs, get_problem
from dfokit.bench.report import format_table
from dfokit.drivers import TrConfig, run_ibo_first_order, run_ibo_inaccurate, run_self_correcting
from dfokit.interp import ModelKind

problem = get_problem("rosenbrock2")
config = TrConfig(max_evals=2000)
runs = {
    "first-order": (run_ibo_first_order, {"model_kind": ModelKind.MIN_FROBENIUS, "n_points": 6}),
    "first-order/composite": (run_ibo_first_order, {"model_kind": ModelKind.COMPOSITE}),
    "inaccurate": (run_ibo_inaccurate, {"model_kind": ModelKind.MIN_FROBENIUS, "n_points": 6}),
    "self-correcting": (run_self_correcting, {"model_kind": ModelKind.MIN_FROBENIUS, "n_points": 6}),
}

reports = []
for name, (runner, kwargs) in runs.items():
    rep = runner(problem.oracle(), problem.x0, config, **kwargs)
    print(f"{name:22s} f = {rep.f:.3e}  evals = {rep.evals:5d}  reason = {rep.reason.value}")
    reports.append(rep)

rows = compare_runs(reports, f_min=problem.f_min)
for row, name in zip(rows, runs):
    row["algo"] = name
    row.pop("seed")
print()
print(format_table(rows))
