"""Command-line interface.

Every subcommand reads networks from JSON files (either the exponent schema or
the physical schema), writes one JSON document to stdout (or --out), and uses
exit codes scripts can branch on: 0 success, 2 usage error, 3 infeasibility
verdict. Floats are serialized with 12 significant digits and -inf becomes
null.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .exceptions import Infeasible, TinqError
from .fixtures import fixture_checksums
from .model import parse_network, realize_network
from .optimize import (
    decentralized_gp,
    gp_power_control,
    max_weighted_gdof_exact,
    max_weighted_gdof_lp,
)
from .power import is_feasible, solve_power_auction, solve_power_hungarian
from .region import check_conditions, tina_polytope, tina_polytope_cyclic
from .schedule import (
    SchedulerParams,
    flashlinq_schedule,
    itlinq_plus_schedule,
    itlinq_schedule,
    num_run,
)
from .sim import (
    Scenario,
    run_experiment,
    run_synthetic_experiment,
    scenario1,
    scenario2,
    write_rows_csv,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3


def _round12(x: float):
    """12-significant-digit float for serialization; non-finite becomes None."""
    if not math.isfinite(x):
        return None
    return float(f"{x:.12g}")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round12(float(obj))
    return obj


def _emit(obj, out_path=None) -> None:
    text = json.dumps(_jsonable(obj), indent=2) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_network(path: str):
    with open(path) as fh:
        return parse_network(json.load(fh))


def _csv_floats(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip() != ""]


def _csv_ints(text: str) -> list:
    return [int(x) for x in text.split(",") if x.strip() != ""]


def _physical(args, alpha, net):
    """The physical network, realizing exponent-form inputs at --snr-db."""
    if net is not None:
        return net
    return realize_network(alpha, 10.0 ** (args.snr_db / 10.0))


class _Version(argparse.Action):
    def __init__(self, option_strings, dest, **kwargs):
        super().__init__(option_strings, dest, nargs=0, **kwargs)

    def __call__(self, parser, namespace, values, option_string=None):
        lines = [f"tinq {__version__}"]
        for name, digest in sorted(fixture_checksums().items()):
            lines.append(f"{name} sha256 {digest}")
        sys.stdout.write("\n".join(lines) + "\n")
        parser.exit(0)


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="tinq",
        description="TIN GDoF regions, minimal power control, and D2D scheduling",
    )
    p.add_argument("--version", action=_Version,
                   help="print version and reference-network checksums")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, network=True):
        if network:
            sp.add_argument("--network", required=True,
                            help="network JSON file (exponent or physical schema)")
        sp.add_argument("--out", help="write the JSON result here instead of stdout")

    sp = sub.add_parser("region", help="achievable-region constraint bounds")
    add_common(sp)
    sp.add_argument("--subset", help="comma-separated user indices (default all)")
    sp.add_argument("--form", choices=("matching", "cyclic"), default="matching")

    sp = sub.add_parser("power", help="minimal power exponents for a GDoF target")
    add_common(sp)
    sp.add_argument("--gdof", required=True, help="comma-separated targets")
    sp.add_argument("--subset", help="active users (default: support of the target)")
    sp.add_argument("--solver", choices=("hungarian", "auction"), default="hungarian")
    sp.add_argument("--epsilon", type=float, default=1e-5)
    sp.add_argument("--snap", action="store_true",
                    help="auction only: re-derive exact labels centrally")

    sp = sub.add_parser("feasible", help="is a GDoF target achievable?")
    add_common(sp)
    sp.add_argument("--gdof", required=True)

    sp = sub.add_parser("check", help="strength/topology condition report")
    add_common(sp)

    sp = sub.add_parser("sumgdof", help="maximize weighted sum GDoF")
    add_common(sp)
    sp.add_argument("--weights", required=True, help="comma-separated weights")
    sp.add_argument("--method", choices=("lp", "exact", "gp", "dgp"), default="lp")
    sp.add_argument("--subset")
    sp.add_argument("--snr-db", type=float, default=40.0,
                    help="reference SNR when realizing exponent-form input")
    sp.add_argument("--iters", type=int, default=5000, help="dgp iterations")

    sp = sub.add_parser("schedule", help="run one distributed scheduling pass")
    add_common(sp)
    sp.add_argument("--scheme", choices=("flashlinq", "itlinq", "itlinq+"),
                    required=True)
    sp.add_argument("--eta", type=float, default=0.9)
    sp.add_argument("--gamma", type=float, default=0.1)
    sp.add_argument("--m-db", type=float, default=25.0)
    sp.add_argument("--sir-db", type=float, default=9.0)
    sp.add_argument("--priority", default="rr",
                    help="'rr', 'weights', or a comma-separated permutation")
    sp.add_argument("--snr-db", type=float, default=40.0)

    sp = sub.add_parser("num", help="utility-maximizing scheduling loop")
    add_common(sp)
    sp.add_argument("--fairness", type=float, default=1.0,
                    help="utility family exponent (0 linear, 1 log)")
    sp.add_argument("--v", type=float, default=10.0)
    sp.add_argument("--a-max", type=float, default=1.0)
    sp.add_argument("--slots", type=int, default=1000)
    sp.add_argument("--solver", choices=("exact", "lp", "itlinq+"), default="exact")
    sp.add_argument("--ref-power", type=float, default=1e6)

    sp = sub.add_parser("simulate", help="Monte-Carlo scheduler/power comparison")
    add_common(sp, network=False)
    sp.add_argument("--scenario", type=int, choices=(1, 2), default=1)
    sp.add_argument("--config", help="JSON file with Scenario fields (overrides --scenario)")
    sp.add_argument("--links", type=int, default=16)
    sp.add_argument("--drops", type=int, default=10)
    sp.add_argument("--schemes", default="none,flashlinq,itlinq,itlinq+")
    sp.add_argument("--power-mode", default="full",
                    choices=("full", "gp", "gp+assignment", "lp+assignment"))
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--csv", help="also write per-drop rows to this CSV file")
    sp.add_argument("--synthetic", action="store_true",
                    help="random-exponent setup instead of geometric drops")
    sp.add_argument("--snr-db", type=float, default=30.0,
                    help="synthetic mode reference SNR")
    return p


def _cmd_region(args) -> int:
    alpha, _ = _load_network(args.network)
    subset = _csv_ints(args.subset) if args.subset else None
    build = tina_polytope if args.form == "matching" else tina_polytope_cyclic
    poly = build(alpha, subset)
    cons = [
        {"users": sorted(users), "bound": bound}
        for users, bound in poly.constraints.items()
    ]
    cons.sort(key=lambda c: (len(c["users"]), c["users"]))
    _emit({"k": poly.K, "subset": list(poly.subset), "constraints": cons}, args.out)
    return EXIT_OK


def _cmd_power(args) -> int:
    alpha, _ = _load_network(args.network)
    d = np.array(_csv_floats(args.gdof))
    subset = _csv_ints(args.subset) if args.subset else None
    rounds = None
    if args.solver == "hungarian":
        r, labels, trace = solve_power_hungarian(alpha, d, subset, return_trace=True)
        rounds = trace.rounds
    else:
        r, labels = solve_power_auction(alpha, d, subset,
                                        epsilon=args.epsilon, snap=args.snap)
    _emit({
        "r": list(r.r),
        "y_u": list(labels.y_u),
        "y_v": list(labels.y_v),
        "rounds": rounds,
    }, args.out)
    return EXIT_OK


def _cmd_feasible(args) -> int:
    alpha, _ = _load_network(args.network)
    d = np.array(_csv_floats(args.gdof))
    ok = is_feasible(alpha, d)
    _emit({"feasible": bool(ok)}, args.out)
    return EXIT_OK if ok else EXIT_INFEASIBLE


def _cmd_check(args) -> int:
    alpha, _ = _load_network(args.network)
    rep = check_conditions(alpha)
    _emit({
        "gnaj": list(rep.gnaj),
        "c1": list(rep.c1),
        "c2": rep.c2,
        "gnaj_violations": sorted(rep.gnaj_witnesses),
        "c1_violations": sorted(rep.c1_witnesses),
        "c2_witness": list(rep.c2_witness) if rep.c2_witness else None,
        "c2_skipped": rep.c2_skipped,
    }, args.out)
    return EXIT_OK


def _cmd_sumgdof(args) -> int:
    alpha, net = _load_network(args.network)
    w = np.array(_csv_floats(args.weights))
    subset = _csv_ints(args.subset) if args.subset else None
    if args.method == "lp":
        d, obj = max_weighted_gdof_lp(alpha, subset, w)
        out = {"method": "lp", "d": list(d.d), "objective": obj}
    elif args.method == "exact":
        d, best_subset, obj = max_weighted_gdof_exact(alpha, w)
        out = {"method": "exact", "d": list(d.d), "subset": list(best_subset),
               "objective": obj}
    elif args.method == "gp":
        phys = _physical(args, alpha, net)
        sol = gp_power_control(phys, subset, w)
        out = {
            "method": "gp",
            "powers": list(sol.powers),
            "sinr": list(sol.sinr),
            "objective_bits": sol.objective,
            "subset": list(sol.subset),
        }
    else:
        r, d = decentralized_gp(alpha, subset, w, iters=args.iters)
        out = {"method": "dgp", "r": list(r.r), "d": list(d.d),
               "objective": float(w @ d.d)}
    _emit(out, args.out)
    return EXIT_OK


def _cmd_schedule(args) -> int:
    alpha, net = _load_network(args.network)
    phys = _physical(args, alpha, net)
    snr_tab = phys.nominal_snr()
    snr = np.diag(snr_tab).copy()
    if args.priority in ("rr", "weights"):
        priority = None  # identity for a single standalone pass
    else:
        priority = _csv_ints(args.priority)
    if args.scheme == "itlinq+":
        params = SchedulerParams(eta=args.eta, gamma=args.gamma,
                                 itlinq_m_db=args.m_db,
                                 flashlinq_sir_db=args.sir_db,
                                 priority=tuple(priority) if priority else None)
        res = itlinq_plus_schedule(snr, snr_tab, params)
    elif args.scheme == "itlinq":
        res = itlinq_schedule(snr, snr_tab, eta=args.eta, m_db=args.m_db,
                              priority=priority)
    else:
        res = flashlinq_schedule(snr, snr_tab, sir_db=args.sir_db,
                                 priority=priority)
    _emit({
        "scheme": args.scheme,
        "selected": list(res.selected),
        "messages": res.messages,
        "min_in": {str(k): v for k, v in sorted(res.min_in.items())},
        "min_out": {str(k): v for k, v in sorted(res.min_out.items())},
    }, args.out)
    return EXIT_OK


def _cmd_num(args) -> int:
    alpha, _ = _load_network(args.network)
    traj = num_run(alpha, fairness=args.fairness, v=args.v, a_max=args.a_max,
                   t_slots=args.slots, solver=args.solver,
                   ref_power=args.ref_power)
    _emit({
        "slots": args.slots,
        "solver": args.solver,
        "avg_d": list(traj.final_avg_d),
        "utility": traj.final_utility,
        "final_weights": list(traj.final_weights),
    }, args.out)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    if args.synthetic:
        res = run_synthetic_experiment(args.links, args.drops, args.seed,
                                       snr_db=args.snr_db)
        scenario_name = f"synthetic@{args.snr_db:g}dB"
    else:
        if args.config:
            with open(args.config) as fh:
                cfg = json.load(fh)
            cfg.setdefault("n_links", args.links)
            cfg["dist_range_m"] = tuple(cfg["dist_range_m"])
            scenario = Scenario(**cfg)
        else:
            scenario = (scenario1 if args.scenario == 1 else scenario2)(args.links)
        schemes = [s.strip() for s in args.schemes.split(",") if s.strip()]
        res = run_experiment(scenario, schemes, args.drops, args.seed,
                             power_mode=args.power_mode, jobs=args.jobs)
        scenario_name = f"scenario{args.scenario}" if not args.config else "custom"
    if args.csv:
        write_rows_csv(res.rows, args.csv)
    _emit({
        "setup": scenario_name,
        "n_links": args.links,
        "n_drops": args.drops,
        "excluded": res.excluded,
        "valid": getattr(res, "valid", res.excluded <= 0.01 * args.drops),
        "aggregates": [
            {
                "scheme": a.scheme,
                "power_mode": a.power_mode,
                "n": a.n,
                "mean_tput_bps_hz": a.mean_tput,
                "ci95_tput": a.ci95_tput,
                "mean_energy_bits_per_joule": a.mean_energy,
                "ci95_energy": a.ci95_energy,
                "mean_active_links": a.mean_active,
            }
            for a in res.aggregates
        ],
    }, args.out)
    return EXIT_OK


_HANDLERS = {
    "region": _cmd_region,
    "power": _cmd_power,
    "feasible": _cmd_feasible,
    "check": _cmd_check,
    "sumgdof": _cmd_sumgdof,
    "schedule": _cmd_schedule,
    "num": _cmd_num,
    "simulate": _cmd_simulate,
}


def dispatch(argv) -> int:
    """Parse argv (no program name) and run the chosen subcommand."""
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except Infeasible as e:
        _emit({"infeasible": True, "error": str(e)},
              getattr(args, "out", None))
        print(f"infeasible: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (TinqError, ValueError, IndexError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def main(argv=None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
