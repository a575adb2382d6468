"""STORM on a noisy quadratic: final accuracy and sample cost over ten seeds."""

import numpy as np

from dfokit.bench import get_problem
from dfokit.drivers import TrConfig, run_storm
from dfokit.interp import ModelKind
from dfokit.problem_model import Stochastic

bowl = get_problem("quadratic_bowl", n=2)
finals = []
for seed in range(10):
    config = TrConfig(eps_f=0.1, mu_c=0.1, max_evals=10**6, seed=seed)
    rep = run_storm(bowl.oracle(Stochastic(0.01)), bowl.x0, config, ModelKind.MIN_FROBENIUS)
    finals.append(np.linalg.norm(bowl.gradient(rep.x)))
    print(f"seed {seed}: |grad f| = {finals[-1]:.2e}  samples = {rep.evals:7d}  iterations = {len(rep.trace)}")
print(f"median |grad f| = {np.median(finals):.2e}")
