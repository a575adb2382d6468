"""Where the noisy-function driver stalls as the noise level shrinks.

With bounded noise of size eps_f the gradient can only be resolved to about
sqrt(eps_f), so the final gradient norm should fall by a factor of ten for
every hundredfold drop in noise.
"""

import numpy as np

from dfokit.bench import get_problem
from dfokit.drivers import TrConfig, noise_radius_floor, run_noisy_deterministic
from dfokit.problem_model import BoundedDeterministic

bowl = get_problem("quadratic_bowl", n=5)
print(f"{'eps_f':>8s} {'radius floor':>13s} {'|grad f|':>10s} {'ratio':>6s} {'evals':>6s}")
for eps in (1e-2, 1e-4, 1e-6, 1e-8):
    rep = run_noisy_deterministic(bowl.oracle(BoundedDeterministic(eps)), bowl.x0,
                                  TrConfig(max_evals=2000, r=2 * eps))
    g = np.linalg.norm(bowl.gradient(rep.x))
    print(f"{eps:8.0e} {noise_radius_floor(5, eps):13.2e} {g:10.2e} {g / np.sqrt(eps):6.2f} {rep.evals:6d}")
