"""
Oscillation histograms: strong convergence you can measure
==========================================================

A refinement sequence converges strongly when patchwise histograms of
cell values collapse to point masses.  A bounded sequence that only
converges weakly keeps spread histograms, and that spread is exactly what
breaks passing nonlinear fluxes through the limit.  This demo contrasts
the two behaviors and measures the Jensen-type flux gap on the canonical
oscillating sequence.
"""

import numpy as np

from fvaudit import (
    CellField,
    SchemeConfig,
    build_young,
    cell_averages,
    checkerboard_values,
    dirac_trend,
    make_flux,
    nonlinearity_gap,
    run,
    uniform_interval_mesh,
)

flux = make_flux("burgers")
cfg = SchemeConfig(flux_rule="godunov", reconstruction="constant",
                   time_integrator="euler", cfl_number=0.45)

# a rarefaction run refines toward the exact fan: histograms collapse
finals = []
for n in (40, 80, 160, 320):
    mesh = uniform_interval_mesh(n, -1.0, 1.0, periodic=False)
    u0 = cell_averages(mesh, lambda x: np.where(x[:, 0] < 0.0, -1.0, 1.0))
    finals.append(run(CellField(mesh, u0), flux, cfg, 0.4).final)
collapse = dirac_trend(finals, base_patches=8, bins=64)

# the checkerboard sequence oscillates at the mesh scale forever
boards = []
for n in (64, 128, 256, 512):
    mesh = uniform_interval_mesh(n, 0.0, 1.0, periodic=True)
    boards.append(CellField(mesh, checkerboard_values(mesh)))
persist = dirac_trend(boards, base_patches=8, bins=64)

print("worst patch variance by level (patch size tied to h)")
print("-" * 64)
print("level   rarefaction run    checkerboard sequence")
for i, (a, b) in enumerate(zip(collapse, persist)):
    print(f"{i:5d} {a:17.3e} {b:21.3e}")
print()
print("the evolved run collapses toward a Dirac at every point; the")
print("checkerboard keeps its two-point histogram at every resolution")

# the flux gap: <f(u)> vs f(<u>) on the finest checkerboard
ym = build_young(boards[-1], patches=8, bins=64)
gap = float(nonlinearity_gap(ym, flux).max())
mean = float(np.abs(ym.mean).max())
print()
print(f"finest checkerboard: histogram mean {mean:.2e} (weak limit 0), but")
print(f"Burgers flux gap <f> - f(<id>) = {gap:.6f} (exact value for +-1")
print("oscillation is 1/2; the deficit is pure histogram bin quantization)")
print()
print("this gap is the obstruction to passing f through a weak limit, and")
print("its vanishing under refinement is what certifies strong convergence")
