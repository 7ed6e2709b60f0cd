"""Reference values frozen into the C++ tests.

Everything here is computed independently of the library: closed forms in
mpmath, brute-force maximization for conjugates and scipy's adaptive
integrators for the flows. Run with python3; prints JSON.
"""
import json

import mpmath as mp
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

mp.mp.dps = 30
out = {}

# dissipation potentials
out["power_1.5_eval_v2"] = float(mp.mpf(2) ** 1.5 / 1.5)


def conj_bruteforce(psi, z, lo=-1e3, hi=1e3):
    grid = np.linspace(lo, hi, 200001)
    vals = z * grid - psi(grid)
    i = int(np.argmax(vals))
    res = minimize_scalar(lambda v: -(z * v - psi(v)), bracket=(grid[max(i - 1, 0)], grid[i], grid[min(i + 1, len(grid) - 1)]),
                          tol=1e-14)
    return -res.fun


out["power_1.5_conj_z1"] = conj_bruteforce(lambda v: np.abs(v) ** 1.5 / 1.5, 1.0)
out["power_1.5_gap_v2_zsqrt2"] = float(mp.mpf(2) ** 1.5 / 1.5 + mp.sqrt(2) ** 3 / 3 - 2 * mp.sqrt(2))
out["entropy_subgrad_v1"] = float(mp.diff(lambda v: v * (mp.log(v) - 1), 1))

# energies
out["double_well_phi_0"] = 0.25
out["double_well_grad_0.5"] = float(mp.diff(lambda x: (x * x - 1) ** 2 / 4, mp.mpf("0.5")))
out["exp_t_dt_at_0_1"] = float(mp.diff(lambda t: mp.e ** t * 1 / 2, 0))
out["one_plus_t_dt_at_1_2"] = float(mp.diff(lambda t: (1 + t) * 4 / 2, 1))
out["slope_dw_power_0.5"] = float(abs(mp.mpf("0.375")) ** 3 / 3)


# midpoint-rule J on the exact quadratic flow x = e^{-t}, N = 200
def j_quadratic(nodes, T):
    N = len(nodes) - 1
    tau = T / N
    total = nodes[-1] ** 2 / 2 - nodes[0] ** 2 / 2
    for k in range(N):
        v = (nodes[k + 1] - nodes[k]) / tau
        m = (nodes[k + 1] + nodes[k]) / 2
        total += tau * (v * v / 2 + m * m / 2)
    return total


for N in (50, 100, 200, 400):
    t = np.linspace(0, 1, N + 1)
    out[f"J_exact_quadratic_N{N}"] = j_quadratic(np.exp(-t), 1.0)
t = np.linspace(0, 1, 201)
x = np.exp(-t)
tau = 1 / 200
r = [0.5 * ((x[k + 1] - x[k]) / tau + (x[k] + x[k + 1]) / 2) ** 2 for k in range(200)]
out["residual_exact_quadratic_N200_max"] = max(r)

# implicit Euler
out["mms_quadratic_N10_terminal"] = float(mp.mpf("1.1") ** -10)

# flows
out["power_flow_x1"] = 0.5  # x' = -x^2, x(0) = 1
sol = solve_ivp(lambda t, y: [-y[0] * (y[0] ** 2 - 1)], (0, 4), [0.5], rtol=1e-12, atol=1e-14)
out["double_well_flow_x4"] = sol.y[0, -1]
sol = solve_ivp(lambda t, y: [-y[0] / (1 + 0.5 * np.sin(y[0]))], (0, 1), [1.0], rtol=1e-12, atol=1e-14)
out["friction_flow_x1"] = sol.y[0, -1]
out["time_dependent_flow_x1"] = float(mp.e ** (-1.5))

print(json.dumps(out, indent=2))
