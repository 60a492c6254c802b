"""Quasilinear Klein-Gordon solve: the leading term is a decaying mode.

With mass m = 0.1 the zero resonance moves to sigma_1 ~ -0.0209 i, so the
converged solution has no constant part: the Aitken-extrapolated constant of
the k = 0 mode sits below 1e-6 while the solution decays at the sigma_1
rate.  The long cylinder (t_max = 60) is what resolves that slow decay.
"""

import tamewave as tw
from tamewave.linsolve import NonlinearTerm, ProblemSpec, pulse_forcing
from tamewave.mellin import ModelOperatorSpec, find_resonances, spectral_gap
from tamewave.nashmoser import NashMoserConfig, run
from tamewave.tame import SmoothFunctionSpec

model = ModelOperatorSpec(gamma=0.5, c0=1.0, mass=0.1)
sigma1, gap = spectral_gap(find_resonances(model, 2, 2.0))
print(f"leading resonance sigma_1 = {sigma1:.8f}, next level at -{gap}i")

grid = tw.make_grid(4096, 32, 60.0)
problem = ProblemSpec(
    grid=grid,
    base=model,
    metric=SmoothFunctionSpec("polynomial", coefficients=(0.5,)),
    forcing=pulse_forcing(grid, 1.5, 1.0, 0.01, (1.0, 1.0)),
    nonlinearity=(NonlinearTerm(1.0, 0, ("dy", "dy")),),
    expansion_alpha=0.018,
    fit_window=(25.0, 58.0),
    rate_window=(30.0, 55.0),
)
cfg = NashMoserConfig(d=4, theta0=256.0, delta=1e7, max_iters=16,
                      residual_tol=1e-8, smallness=1e8)
result = run(problem, cfg)

print(f"\nconverged in {result.iterations} iterations,"
      f" final residual {result.trace.residuals[-1]:.2e}")
print(f"constant term magnitude      : {abs(result.constant):.2e}  (no 0-resonance)")
print(f"leading x^(i sigma_1) content: {result.leading_coefficient.real:.6f}")
print(f"measured decay rate          : {result.decay_rate:.6f}")
print(f"|Im sigma_1|                 : {abs(sigma1.imag):.6f}")
