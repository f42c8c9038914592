"""Acceptance gate: every primary guarantee, one pass/fail line each.

Each test exercises one advertised property end to end at its stated
tolerance and prints a single PASS/FAIL line (visible with ``pytest -s``
or in captured output).  Tolerances here are the contract; loosening them
is a behavior change, not a test fix.
"""

import time

import numpy as np

from fvaudit import (
    CellField,
    SchemeConfig,
    StudyConfig,
    VGrid,
    build_young,
    cell_averages,
    check_e_flux,
    checkerboard_values,
    defect_measure,
    dirac_trend,
    frozen_trajectory,
    kinetic_residual,
    kruzkov_k_grid,
    lf_lambda,
    make_flux,
    max_stable_dt,
    nondegeneracy,
    nonlinearity_gap,
    numerical_flux,
    reconstruct,
    run,
    run_entropy_audit,
    run_study,
    step,
    triangulated_rectangle,
    twin_run,
    uniform_interval_mesh,
)

E_RULES = ("godunov", "lax_friedrichs", "engquist_osher")


def _gate(name: str, ok: bool, detail: str):
    print(f"{'PASS' if ok else 'FAIL'}: {name} ({detail})")
    assert ok, f"{name}: {detail}"


def _scheme(rule="godunov", recon="constant"):
    return SchemeConfig(flux_rule=rule, reconstruction=recon,
                        time_integrator="euler", cfl_number=0.45)


def _step_values(mesh, x0, ul, ur):
    return cell_averages(mesh, lambda x: np.where(x[:, 0] < x0, ul, ur))


def test_criterion_01_conservation_200_steps():
    start = time.perf_counter()
    mesh = uniform_interval_mesh(200, 0.0, 1.0, periodic=True)
    flux = make_flux("burgers")
    cfg = _scheme()
    f = CellField(mesh, cell_averages(
        mesh, lambda x: 0.5 + 0.25 * np.sin(2.0 * np.pi * x[:, 0])))
    m0 = f.total_mass
    drift = 0.0
    for _ in range(200):
        f = step(f, flux, cfg, max_stable_dt(f, flux, cfg))
        drift = max(drift, abs(f.total_mass - m0) / max(1.0, abs(m0)))
    elapsed = time.perf_counter() - start
    _gate("conservation", drift <= 1e-12 and elapsed < 5.0,
          f"periodic Burgers, 200 steps at h=1/200: relative drift "
          f"{drift:.3e} <= 1e-12, {elapsed:.2f}s < 5s")


def test_criterion_02_max_principle_every_step():
    worst = 0.0
    for rule in E_RULES:
        mesh = uniform_interval_mesh(50, -0.5, 1.0, periodic=False)
        for ul, ur in ((1.0, 0.0), (-1.0, 1.0)):
            traj = run(CellField(mesh, _step_values(mesh, 0.25, ul, ur)),
                       make_flux("burgers"), _scheme(rule), 0.3)
            lo, hi = min(ul, ur), max(ul, ur)
            for f in traj.fields:
                worst = max(worst, float(f.values.max()) - hi,
                            lo - float(f.values.min()))
    mesh2 = triangulated_rectangle(12, 12, -0.5, 0.0, 1.0, 1.0, periodic=False)
    traj = run(CellField(mesh2, _step_values(mesh2, 0.0, 1.0, 0.0)),
               make_flux("rotated_burgers_2d", angle=0.0), _scheme(), 0.2)
    for f in traj.fields:
        worst = max(worst, float(f.values.max()) - 1.0, -float(f.values.min()))
    worst = max(worst, 0.0)
    _gate("max_principle", worst <= 1e-12,
          f"shock + rarefaction, E-fluxes, 1-D and triangulated square: "
          f"worst range escape {worst:.3e} <= 1e-12")


def test_criterion_03_cell_entropy_inequality():
    mesh = uniform_interval_mesh(40, -0.5, 1.0, periodic=False)
    flux = make_flux("burgers")
    worst = 0.0
    for rule in E_RULES:
        cfg = _scheme(rule)
        traj = run(CellField(mesh, _step_values(mesh, 0.0, 1.0, 0.0)),
                   flux, cfg, 0.25)
        k_grid = kruzkov_k_grid(0.0, 1.0, n=33)
        rpt = run_entropy_audit(traj, flux, cfg, k_grid, tol=1e-12)
        assert rpt.k_grid.size == 33
        assert rpt.passed
        worst = max(worst, rpt.worst)
    _gate("entropy_inequality", worst <= 1e-12,
          f"Godunov/LF/EO, 33 Kruzkov states, every step of a shock run: "
          f"worst positive residual {worst:.3e} <= 1e-12")


def test_criterion_04_shock_convergence_rate():
    start = time.perf_counter()
    result = run_study(StudyConfig(problem="riemann_shock", base_n=50,
                                   levels=5, t_final=0.4, audits="none"))
    elapsed = time.perf_counter() - start
    errs = [lv.l1 for lv in result.levels]
    ok = (np.isfinite(result.fitted_rate) and result.fitted_rate >= 0.45
          and all(np.isfinite(errs)) and elapsed < 60.0)
    _gate("shock_convergence", ok,
          f"Godunov Riemann shock to T=0.4, n=50..800: fitted L1 rate "
          f"{result.fitted_rate:.3f} >= 0.45, {elapsed:.1f}s < 60s")


def test_criterion_05_l1_contraction_every_step():
    mesh = uniform_interval_mesh(50, 0.0, 1.0, periodic=True)
    flux = make_flux("burgers")
    cfg = _scheme()
    a0 = CellField(mesh, cell_averages(
        mesh, lambda x: 0.5 + 0.25 * np.sin(2.0 * np.pi * x[:, 0])))
    b0 = CellField(mesh, a0.values + cell_averages(
        mesh, lambda x: 0.1 * np.exp(-((x[:, 0] - 0.5) / 0.1) ** 2)))
    ta, tb = twin_run(a0, b0, flux, cfg, 0.3)
    dist = np.array([float(mesh.cell_area @ np.abs(a.values - b.values))
                     for a, b in zip(ta.fields, tb.fields)])
    growth = max(float(np.diff(dist).max()), 0.0)
    _gate("l1_contraction", growth <= 1e-12 * max(1.0, dist[0]),
          f"twin periodic Burgers runs: largest one-step L1 growth "
          f"{growth:.3e} <= 1e-12")


def test_criterion_06_total_variation_and_limiter():
    mesh = uniform_interval_mesh(50, -0.5, 1.0, periodic=False)
    flux = make_flux("burgers")
    traj = run(CellField(mesh, _step_values(mesh, 0.0, 1.0, 0.0)),
               flux, _scheme(), 0.3)

    def tv(f):
        interior = mesh.face_right >= 0
        return float(np.abs(f.values[mesh.face_right[interior]]
                            - f.values[mesh.face_left[interior]]).sum())

    tvs = [tv(f) for f in traj.fields]
    growth = max(max(np.diff(tvs)), 0.0)

    mesh_r = uniform_interval_mesh(60, -1.0, 1.0, periodic=False)
    limited = SchemeConfig(flux_rule="godunov", reconstruction="limited_linear",
                           time_integrator="ssp_rk2", cfl_number=0.45)
    traj_r = run(CellField(mesh_r, np.where(mesh_r.cell_centroid[:, 0] < 0.0,
                                            -1.0, 1.0)),
                 flux, limited, 0.4)
    # monotone data must stay monotone: any dip is a created extremum
    dip = max(max(float(np.maximum(-np.diff(f.values), 0.0).max())
                  for f in traj_r.fields), 0.0)
    ok = growth <= 1e-12 and dip <= 1e-12
    _gate("tvd_and_limiter", ok,
          f"1-D TV growth {growth:.3e} <= 1e-12; limited rarefaction "
          f"largest created extremum {dip:.3e} <= 1e-12")


def test_criterion_07_e_flux_sampling():
    flux = make_flux("burgers")
    worst_e = 0.0
    for rule in E_RULES:
        rpt = check_e_flux(rule, flux, n_samples=10_000, seed=0)
        assert rpt.passed and rpt.samples >= 10_000
        worst_e = max(worst_e, rpt.worst_violation)
    central = check_e_flux("central", flux, n_samples=10_000, seed=0)
    a, b, w, normal = central.worst_case
    ok = (worst_e <= 1e-12 and not central.passed
          and central.worst_violation >= 0.5 - 1e-12
          and np.isfinite([a, b, w]).all()
          and abs(np.linalg.norm(normal) - 1.0) <= 1e-12)
    _gate("e_flux_sampling", ok,
          f"1e4 samples: Godunov/LF/EO worst {worst_e:.3e} <= 1e-12; central "
          f"violates by {central.worst_violation:.3f} at recorded "
          f"counterexample a={a:.3f}, b={b:.3f}, w={w:.3f}")


def test_criterion_08_kinetic_negativity_trend():
    flux = make_flux("burgers")
    grid = VGrid.for_range(-1.0, 1.0, n=128)
    scores = []
    for n in (40, 80, 160):
        mesh = uniform_interval_mesh(n, -1.0, 1.0, periodic=True)
        u0 = cell_averages(mesh, lambda x: np.sign(x[:, 0]))
        traj = run(CellField(mesh, u0), flux, _scheme(), 0.4)
        scores.append(defect_measure(
            kinetic_residual(traj, flux, grid)).negativity_score)
    mesh = uniform_interval_mesh(160, -1.0, 1.0, periodic=True)
    base = CellField(mesh, cell_averages(mesh, lambda x: np.sign(x[:, 0])))
    frozen = defect_measure(kinetic_residual(
        frozen_trajectory(base, dt=1e-3, n_steps=1), flux, grid))
    decreasing = scores[0] > scores[1] > scores[2]
    separated = frozen.negativity_score >= 10.0 * scores[-1]
    _gate("kinetic_negativity", decreasing and separated,
          "entropic fan negativity "
          + " > ".join(f"{s:.3e}" for s in scores)
          + f" strictly decreasing; frozen expansion "
          f"{frozen.negativity_score:.3e} >= 10x finest")


def test_criterion_09_nondegeneracy():
    burgers = nondegeneracy(make_flux("burgers"), (-1.0, 1.0), tol=1e-3, seed=0)
    linear = nondegeneracy(make_flux("linear_advection", a=1.0), (-1.0, 1.0),
                           tol=1e-3, seed=0)
    bound = 5.0 * burgers.tol / (burgers.interval[1] - burgers.interval[0])
    ok = burgers.measure <= bound and linear.measure >= 0.99
    _gate("nondegeneracy", ok,
          f"Burgers concentration {burgers.measure:.3e} <= {bound:.1e}; "
          f"linear flux concentration {linear.measure:.3f} >= 0.99")


def test_criterion_10_oscillation_histograms():
    flux = make_flux("burgers")
    finals = []
    for n in (40, 80, 160, 320):
        mesh = uniform_interval_mesh(n, -1.0, 1.0, periodic=False)
        u0 = _step_values(mesh, 0.0, -1.0, 1.0)
        finals.append(run(CellField(mesh, u0), flux, _scheme(), 0.4).final)
    trend = dirac_trend(finals, base_patches=8, bins=64)
    collapse = bool(np.all(np.diff(trend) < 0.0))

    boards = []
    for n in (64, 128, 256, 512):
        mesh = uniform_interval_mesh(n, 0.0, 1.0, periodic=True)
        boards.append(CellField(mesh, checkerboard_values(mesh)))
    persist = dirac_trend(boards, base_patches=8, bins=64)
    persists = bool(np.all(persist >= 0.9))
    gap = float(nonlinearity_gap(
        build_young(boards[-1], patches=8, bins=64), flux).max())
    gap_ok = abs(gap - 0.5) <= 1.0 / 64.0
    _gate("oscillation_histograms", collapse and persists and gap_ok,
          "rarefaction variance "
          + " > ".join(f"{v:.2e}" for v in trend)
          + f"; checkerboard variance >= 0.9 at all levels; flux gap "
          f"{gap:.6f} within 0.5 +- 1/64")


def test_criterion_11_property_suites():
    rng = np.random.default_rng(101)
    flux = make_flux("burgers")

    # two-point flux conservativity, 1e4 samples across all four rules
    worst_cons = 0.0
    for rule in ("godunov", "lax_friedrichs", "engquist_osher", "central"):
        a = rng.uniform(-1.5, 1.5, 10_000)
        b = rng.uniform(-1.5, 1.5, 10_000)
        n = np.where(rng.uniform(size=(10_000, 1)) < 0.5, -1.0, 1.0)
        lam = lf_lambda(flux, a, b, n) if rule == "lax_friedrichs" else None
        fwd = numerical_flux(rule, flux, a, b, n, lam)
        rev = numerical_flux(rule, flux, b, a, -n, lam)
        worst_cons = max(worst_cons, float(np.abs(fwd + rev).max()))

    # limiter bounds, 1e3 random fields
    mesh = uniform_interval_mesh(12, 0.0, 1.0, periodic=True)
    limited = SchemeConfig(flux_rule="godunov", reconstruction="limited_linear",
                           time_integrator="euler", cfl_number=0.45)
    L, R = mesh.face_left, mesh.face_right
    worst_lim = 0.0
    for _ in range(1000):
        u = rng.uniform(-2.0, 2.0, mesh.n_cells)
        rec = reconstruct(CellField(mesh, u), limited)
        lo, hi = u.copy(), u.copy()
        np.minimum.at(lo, L, u[R]); np.minimum.at(lo, R, u[L])
        np.maximum.at(hi, L, u[R]); np.maximum.at(hi, R, u[L])
        tr = rec.trace(L, mesh.face_midpoint_left)
        worst_lim = max(worst_lim, float((lo[L] - tr).max()),
                        float((tr - hi[L]).max()))

    # indicator moment identity, 1e3 random states
    from fvaudit import chi
    grid = VGrid(-3.0, 3.0, 512)
    alphas = rng.uniform(-2.5, 2.5, 1000)
    moments = grid.dv * chi(grid.centers[None, :], alphas[:, None]).sum(axis=1)
    worst_chi = float(np.abs(moments - alphas).max()) - grid.dv

    # mesh closure on jittered triangulations and intervals
    worst_mesh = 0.0
    for m in (uniform_interval_mesh(17, -1.0, 2.0, periodic=False),
              triangulated_rectangle(6, 5, 0.0, 0.0, 2.0, 1.0, periodic=True,
                                     jitter=0.25, seed=4),
              triangulated_rectangle(5, 5, 0.0, 0.0, 1.0, 1.0, periodic=False,
                                     jitter=0.2, seed=9)):
        closure = np.zeros((m.n_cells, m.dim))
        weighted = m.face_length[:, None] * m.face_normal
        np.add.at(closure, m.face_left, weighted)
        interior = m.face_right >= 0
        np.subtract.at(closure, m.face_right[interior], weighted[interior])
        rel = np.linalg.norm(closure, axis=1) / m.cell_perimeter
        worst_mesh = max(worst_mesh, float(rel.max()))

    ok = (worst_cons <= 1e-12 and worst_lim <= 1e-12
          and worst_chi <= 1e-12 and worst_mesh <= 1e-12)
    _gate("property_suites", ok,
          f"conservativity {worst_cons:.2e}, limiter escape {worst_lim:.2e}, "
          f"indicator moment slack {worst_chi:.2e}, cell closure "
          f"{worst_mesh:.2e}, all <= 1e-12 at 1e3-1e4 samples")
