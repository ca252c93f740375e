"""Command line front end.

Subcommands: classify, shoot, find, scan, verify, plot-data.  All numeric
artifacts go to files or stdout as CSV/JSON; diagnostics go to stderr.
Exit codes: 0 success, 1 the computation found nothing, 2 invalid
configuration or usage, 3 integrator failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from . import __version__
from .config import (
    ConfigError,
    RunConfig,
    as_bracket,
    as_crossing_index,
    as_sigma,
    load_config,
)
from .homoclinic import (
    Outcome,
    ReconstructionRefused,
    ShotConfig,
    closed_form_residual,
    known_solutions,
    reconstruct_orbit,
    refine_root,
    shoot,
    shot_trajectory,
    verify_reversibility,
)
from .integrate import NonFiniteState, StepSizeUnderflow
from .plotdata import write_figure_data
from .scan import GridTooLarge, ManifestMismatch, run_scan, search_bracket
from .spectral import classify, classify_coefficients
from .system import Params
from .writers import trajectory_csv_lines, write_lines

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_NOT_FOUND = 1
EXIT_CONFIG = 2
EXIT_INTEGRATOR = 3

_LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}

# verification thresholds for the built-in oracle checks
RESIDUAL_TOL = 1e-8
DEFECT_TOL = 1e-8
RECOVERY_TOL = 1e-4


def _setup_logging() -> None:
    name = os.environ.get("HOMOCLINIC_LOG", "error")
    level = _LOG_LEVELS.get(name.lower())
    if level is None:
        raise ConfigError(
            f"HOMOCLINIC_LOG must be one of error, info, debug; got {name!r}"
        )
    logging.basicConfig(
        stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s"
    )


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="revshoot",
        description="Locate orbits homoclinic to the saddle-center of "
        "u'''' + a u'' - u + f(u, b) = 0 by reversible shooting.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")

    pc = sub.add_parser(
        "classify", parents=[common], help="equilibrium spectrum at (a, b)"
    )
    pc.add_argument("--a", type=float, help="linear coefficient a")
    pc.add_argument("--b", type=float, help="nonlinearity strength b")

    ps = sub.add_parser(
        "shoot", parents=[common], help="one unstable-manifold shot at (a, b)"
    )
    ps.add_argument("--a", type=float)
    ps.add_argument("--b", type=float)
    ps.add_argument("--sigma", type=int, choices=(1, -1), help="seed sign")
    ps.add_argument("--out", metavar="PATH", help="also write the node trajectory CSV")

    pf = sub.add_parser(
        "find", parents=[common], help="refine one homoclinic locus point in a bracket"
    )
    pf.add_argument("--b", type=float)
    pf.add_argument(
        "--bracket", nargs=2, type=float, metavar=("A_LO", "A_HI"), default=None
    )
    pf.add_argument("--k", type=int, help="crossing index (default: try 1..k_max)")
    pf.add_argument("--sigma", type=int, choices=(1, -1), help="seed sign (default: both)")
    pf.add_argument("--out", metavar="PATH", help="also write the reconstructed orbit CSV")

    pg = sub.add_parser("scan", parents=[common], help="sweep an (a, b) grid for loci")
    pg.add_argument("--out", metavar="DIR", help="output directory (overrides config)")
    pg.add_argument("--jobs", type=int, help="worker processes (default: all cores)")
    pg.add_argument("--resume", action="store_true", help="skip rows already on disk")
    pg.add_argument(
        "--profiles", action="store_true", help="also write per-shot crossing profiles"
    )

    sub.add_parser("verify", help="run the built-in closed-form oracle checks")

    pp = sub.add_parser(
        "plot-data", parents=[common], help="emit figure point sets as CSV"
    )
    pp.add_argument("--out", metavar="DIR", required=True)
    pp.add_argument("--b", type=float)
    pp.add_argument(
        "--bracket", nargs=2, type=float, metavar=("A_LO", "A_HI"), default=None
    )
    pp.add_argument("--k", type=int)
    pp.add_argument("--sigma", type=int, choices=(1, -1))

    return ap


def _load(args) -> RunConfig | None:
    if getattr(args, "config", None) is None:
        return None
    return load_config(args.config)


def _require_config(cfg: RunConfig | None, command: str) -> RunConfig:
    if cfg is None:
        raise ConfigError(f"{command} requires --config (it defines the nonlinearity)")
    return cfg


def _pick(flag_value, cfg_value, name: str):
    value = flag_value if flag_value is not None else cfg_value
    if value is None:
        raise ConfigError(f"missing {name!r}: pass --{name} or set it in the config")
    return value


def _effective_shot(cfg: RunConfig, flag_sigma) -> ShotConfig:
    """Config shot settings with the command-level sigma folded in."""
    sigma = flag_sigma if flag_sigma is not None else cfg.sigma
    shot = cfg.shot
    if sigma is not None:
        shot = replace(shot, sigma=as_sigma(sigma))
    return shot


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_classify(args) -> int:
    cfg = _load(args)
    a = args.a if args.a is not None else (cfg.a if cfg else None)
    b = args.b if args.b is not None else (cfg.b if cfg else None)
    if a is None:
        raise ConfigError("classify needs a value for a (--a or config)")
    if b is None:
        b = 0.0
    if cfg is not None:
        spec = classify(Params(a, b, cfg.nonlinearity))
    else:
        spec = classify_coefficients(float(a), 1.0)
    _print_json(
        {
            "a": float(a),
            "b": float(b),
            "kind": spec.kind.value,
            "lambda": spec.lam,
            "omega": spec.omega,
        }
    )
    return EXIT_OK


def _crossing_rows(crossings) -> list[dict]:
    return [
        {
            "k": i,
            "t": rec.t,
            "u": rec.s.u,
            "v": rec.s.v,
            "p_u": rec.s.p_u,
            "p_v": rec.s.p_v,
        }
        for i, rec in enumerate(crossings, start=1)
    ]


def cmd_shoot(args) -> int:
    cfg = _require_config(_load(args), "shoot")
    a = float(_pick(args.a, cfg.a, "a"))
    b = float(_pick(args.b, cfg.b, "b"))
    shot = _effective_shot(cfg, args.sigma)
    p = Params(a, b, cfg.nonlinearity)

    if args.out is not None:
        tr, outcome = shot_trajectory(p, shot)
        write_lines(args.out, trajectory_csv_lines(tr))
        crossings = tr.events
    else:
        prof = shoot(p, shot)
        outcome = prof.outcome
        crossings = prof.crossings

    _print_json(
        {
            "a": a,
            "b": b,
            "sigma": int(shot.sigma),
            "outcome": outcome.name.lower(),
            "crossings": _crossing_rows(crossings),
        }
    )
    return EXIT_INTEGRATOR if outcome is Outcome.INTEGRATOR_FAILED else EXIT_OK


def _locus_json(lp) -> dict:
    return {
        "a_star": lp.a_star,
        "b": lp.b,
        "sigma": int(lp.sigma),
        "k": lp.k,
        "miss_residual": lp.miss_residual,
        "lambda": lp.lam,
    }


def cmd_find(args) -> int:
    cfg = _require_config(_load(args), "find")
    b = float(_pick(args.b, cfg.b, "b"))
    bracket = args.bracket if args.bracket is not None else cfg.bracket
    if bracket is None:
        raise ConfigError("find needs a bracket (--bracket A_LO A_HI or config)")
    lo, hi = as_bracket(list(bracket))
    k = args.k if args.k is not None else cfg.k
    if k is not None:
        k = as_crossing_index(k)
    sigma = args.sigma if args.sigma is not None else cfg.sigma
    if sigma is not None:
        sigma = as_sigma(sigma)

    lp = search_bracket(cfg.nonlinearity, b, lo, hi, cfg.shot, k=k, sigma=sigma)
    if lp is None:
        print(
            f"no certified locus point in a-bracket [{lo}, {hi}] at b={b}",
            file=sys.stderr,
        )
        return EXIT_NOT_FOUND

    if args.out is not None:
        orbit = reconstruct_orbit(
            Params(lp.a_star, b, cfg.nonlinearity),
            replace(cfg.shot, sigma=lp.sigma),
            lp.k,
        )
        write_lines(args.out, trajectory_csv_lines(orbit))

    _print_json(_locus_json(lp))
    return EXIT_OK


def cmd_scan(args) -> int:
    cfg = _require_config(_load(args), "scan")
    if cfg.grid is None:
        raise ConfigError("scan needs a grid (set 'grid' in the config)")
    out_dir = args.out if args.out is not None else cfg.output_dir
    if out_dir is None:
        raise ConfigError("scan needs an output directory (--out or output_dir)")
    manifest = run_scan(
        cfg.nonlinearity,
        cfg.grid,
        cfg.shot,
        out_dir,
        jobs=args.jobs,
        resume=args.resume,
        write_profiles=args.profiles,
    )
    _print_json(manifest)
    return EXIT_OK if manifest["loci_count"] > 0 else EXIT_NOT_FOUND


def cmd_verify(args) -> int:
    sols = known_solutions()
    sech = sols["sech"]
    sech2 = sols["sech2"]
    xs = [i * 0.01 for i in range(-1000, 1001)]

    cfg = ShotConfig()
    # brackets are one scan step on either side of the known parameters
    lp_sech = refine_root(
        sech.params_star.nonlinearity, sech.params_star.b,
        sech.params_star.a - 0.01, sech.params_star.a + 0.01, cfg, 2,
    )
    lp_sech2 = refine_root(
        sech2.params_star.nonlinearity, sech2.params_star.b,
        sech2.params_star.a - 0.01, sech2.params_star.a + 0.01, cfg, 2,
    )
    defect = verify_reversibility(sech2.params_star, sech2.phase_state(0.0), 10.0)

    report = {
        "residual_sech": closed_form_residual(sech, xs),
        "residual_sech2": closed_form_residual(sech2, xs),
        "reversibility_defect": defect,
        "recovered_a_sech": lp_sech.a_star,
        "recovered_a_sech2": lp_sech2.a_star,
    }
    _print_json(report)
    ok = (
        report["residual_sech"] < RESIDUAL_TOL
        and report["residual_sech2"] < RESIDUAL_TOL
        and report["reversibility_defect"] <= DEFECT_TOL
        and abs(report["recovered_a_sech"] - sech.params_star.a) <= RECOVERY_TOL
        and abs(report["recovered_a_sech2"] - sech2.params_star.a) <= RECOVERY_TOL
    )
    return EXIT_OK if ok else EXIT_NOT_FOUND


def cmd_plot_data(args) -> int:
    cfg = _require_config(_load(args), "plot-data")
    b = float(_pick(args.b, cfg.b, "b"))
    bracket = args.bracket if args.bracket is not None else cfg.bracket
    if bracket is None:
        raise ConfigError("plot-data needs a bracket (--bracket A_LO A_HI or config)")
    lo, hi = as_bracket(list(bracket))
    k = args.k if args.k is not None else cfg.k
    if k is not None:
        k = as_crossing_index(k)
    sigma = args.sigma if args.sigma is not None else cfg.sigma
    if sigma is not None:
        sigma = as_sigma(sigma)

    info = write_figure_data(
        cfg.nonlinearity, b, (lo, hi), cfg.shot, args.out, k=k, sigma=sigma
    )
    if info is None:
        print(
            f"no certified locus point in a-bracket [{lo}, {hi}] at b={b}",
            file=sys.stderr,
        )
        return EXIT_NOT_FOUND
    _print_json(info)
    return EXIT_OK


_COMMANDS = {
    "classify": cmd_classify,
    "shoot": cmd_shoot,
    "find": cmd_find,
    "scan": cmd_scan,
    "verify": cmd_verify,
    "plot-data": cmd_plot_data,
}


def main(argv=None) -> int:
    try:
        _setup_logging()
        args = _build_parser().parse_args(argv)
        return _COMMANDS[args.command](args)
    except (ConfigError, GridTooLarge, ManifestMismatch) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except ReconstructionRefused as err:
        print(f"not homoclinic: {err}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except (StepSizeUnderflow, NonFiniteState) as err:
        print(f"integrator failure: {err}", file=sys.stderr)
        return EXIT_INTEGRATOR


if __name__ == "__main__":
    sys.exit(main())
