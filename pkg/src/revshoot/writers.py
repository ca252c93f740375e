"""Deterministic text output helpers.

All numeric columns are written with 17 significant digits, enough for
float64 round-trips, so re-reading a file reproduces the exact values and
identical runs produce byte-identical files.
"""

from __future__ import annotations

from .integrate import Trajectory
from .system import hamiltonian

TRAJECTORY_HEADER = "t,u,v,p_u,p_v,H"


def fmt17(x: float) -> str:
    return format(float(x), ".17g")


def trajectory_csv_lines(tr: Trajectory) -> list[str]:
    """Node rows t,u,v,p_u,p_v,H for an integrated trajectory."""
    lines = [TRAJECTORY_HEADER]
    for t, s in zip(tr.ts, tr.states):
        h = hamiltonian(s, tr.p)
        lines.append(
            f"{fmt17(t)},{fmt17(s.u)},{fmt17(s.v)},{fmt17(s.p_u)},{fmt17(s.p_v)},{fmt17(h)}"
        )
    return lines


def write_lines(path, lines: list[str]) -> None:
    with open(path, "w", newline="\n") as fp:
        fp.write("\n".join(lines))
        fp.write("\n")
