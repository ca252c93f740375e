"""Point sets behind the standard phase-space and orbit figures.

Four CSV files per family: the zero-energy surface p_v^2/2 + a v^2/2
+ u^2/2 - F(u, b) = 0 sampled over a (u, v) window, the section of the
reversal's fixed-point set inside that surface (p_v^2 = 2 F(u, b) - u^2,
a curve depending only on b), the reconstructed homoclinic orbit at the
refined parameter, and the orbit of the same seed after perturbing a by
10^-2, which misses the fixed-point set and escapes.
"""

from __future__ import annotations

import os
from dataclasses import replace

from .homoclinic import ShotConfig, Sigma, reconstruct_orbit, shot_trajectory
from .scan import search_bracket
from .system import NonlinearitySpec, Params, eval_F
from .writers import fmt17, trajectory_csv_lines, write_lines

U_RANGE = 1.3
V_RANGE = 1.3
SURFACE_STEP = 0.02
CHI_STEP = 0.002
PERTURB_DA = 1e-2

SURFACE_NAME = "phi_surface.csv"
CHI_NAME = "chi_set.csv"
ORBIT_NAME = "orbit_homoclinic.csv"
PERTURBED_NAME = "orbit_perturbed.csv"


def _grid(half_range: float, step: float) -> list[float]:
    n = int(round(2.0 * half_range / step)) + 1
    return [-half_range + i * step for i in range(n)]


def zero_energy_surface_points(
    nonlinearity: NonlinearitySpec, a: float, b: float
) -> list[tuple[float, float, float]]:
    """(u, v, p_v) samples of the surface H = 0, both p_v signs."""
    pts = []
    vs = _grid(V_RANGE, SURFACE_STEP)
    for u in _grid(U_RANGE, SURFACE_STEP):
        fu = eval_F(nonlinearity, u, b) - 0.5 * u * u
        for v in vs:
            pv2 = 2.0 * (fu - 0.5 * a * v * v)
            if pv2 < 0.0:
                continue
            pv = pv2 ** 0.5
            pts.append((u, v, pv))
            if pv > 0.0:
                pts.append((u, v, -pv))
    return pts


def chi_set_points(
    nonlinearity: NonlinearitySpec, b: float
) -> list[tuple[float, float]]:
    """(u, p_v) samples of {v = p_u = 0, H = 0}; independent of a."""
    pts = []
    for u in _grid(U_RANGE, CHI_STEP):
        pv2 = 2.0 * eval_F(nonlinearity, u, b) - u * u
        if pv2 < 0.0:
            continue
        pv = pv2 ** 0.5
        pts.append((u, pv))
        if pv > 0.0:
            pts.append((u, -pv))
    return pts


def write_figure_data(
    nonlinearity: NonlinearitySpec,
    b: float,
    bracket: tuple[float, float],
    cfg: ShotConfig,
    out_dir,
    k: int | None = None,
    sigma: Sigma | None = None,
) -> dict | None:
    """Refine a locus inside the bracket and emit all four figure files.

    Returns a summary dict, or None when no certified point exists in the
    bracket.
    """
    lp = search_bracket(nonlinearity, b, bracket[0], bracket[1], cfg, k=k, sigma=sigma)
    if lp is None:
        return None
    cfg_s = replace(cfg, sigma=lp.sigma)
    p_star = Params(lp.a_star, b, nonlinearity)

    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)

    orbit = reconstruct_orbit(p_star, cfg_s, lp.k)
    write_lines(os.path.join(out_dir, ORBIT_NAME), trajectory_csv_lines(orbit))

    perturbed, _ = shot_trajectory(
        Params(lp.a_star + PERTURB_DA, b, nonlinearity), cfg_s
    )
    write_lines(os.path.join(out_dir, PERTURBED_NAME), trajectory_csv_lines(perturbed))

    surf = ["u,v,p_v"]
    surf += [f"{fmt17(u)},{fmt17(v)},{fmt17(pv)}" for u, v, pv in
             zero_energy_surface_points(nonlinearity, lp.a_star, b)]
    write_lines(os.path.join(out_dir, SURFACE_NAME), surf)

    chi = ["u,p_v"]
    chi += [f"{fmt17(u)},{fmt17(pv)}" for u, pv in chi_set_points(nonlinearity, b)]
    write_lines(os.path.join(out_dir, CHI_NAME), chi)

    return {
        "a_star": lp.a_star,
        "b": b,
        "sigma": int(lp.sigma),
        "k": lp.k,
        "miss_residual": lp.miss_residual,
        "files": [ORBIT_NAME, PERTURBED_NAME, SURFACE_NAME, CHI_NAME],
    }
