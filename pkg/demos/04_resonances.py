"""Mellin resonance analysis of the boundary-frozen model operator.

The model d_t^2 + gamma d_t - c^2 d_y^2 + m^2 has the quadratic symbol
P_k(sigma) = -sigma^2 - i gamma sigma + c^2 k^2 + m^2 per circle mode k; its
roots are the resonances.  For m = 0 the constant state sits exactly at
sigma = 0 and every other resonance lies at or below Im sigma = -gamma/2;
for small m > 0 the zero resonance moves into the lower half plane, so all
solutions decay.
"""

from tamewave.mellin import ModelOperatorSpec, find_resonances, normal_symbol, spectral_gap

wave = ModelOperatorSpec(gamma=0.5, c0=1.0, mass=0.0)
kg = ModelOperatorSpec(gamma=0.5, c0=1.0, mass=0.1)

print("symbol checks: P_0(0) =", normal_symbol(wave, 0, 0.0),
      "  P_1(0) =", normal_symbol(wave, 1, 0.0))

for label, spec in (("damped wave (m = 0)", wave), ("Klein-Gordon (m = 0.1)", kg)):
    rs = find_resonances(spec, k_max=3, search_bound=2.0)
    sigma1, gap = spectral_gap(rs)
    print(f"\n{label}:")
    print("   k   resonances")
    for k in range(0, 4):
        roots = ", ".join(f"{z.real:+.6f} {z.imag:+.6f}i" for z in rs.modes[k])
        print(f"  {k:+d}   {roots}")
    print(f"  leading resonance sigma_1 = {sigma1:.8f}, spectral gap = {gap:.4f}")
    print(f"  every root satisfies |P_k(sigma)| < 1e-10:",
          all(abs(normal_symbol(spec, k, z)) < 1e-10 for k, z in rs.all_roots()))
