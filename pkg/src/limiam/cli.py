"""Command-line entry points: ldl, simulate, discover, popfail, svar, bench."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import bench as bench_mod
from .discover import direct_limiam, direct_lingam_baseline
from .meanind import SCORER_NAMES, scorer_from_name
from .popfail import (
    Cumulant4Config,
    jade_empirical_check,
    jade_objective,
    jade_reversal_verdict,
    residual_dependence_scores,
)
from .simulate import (
    DESIGN_NAMES,
    AuxDistribution,
    design_from_name,
    generate_dataset,
    sample_dag,
    sample_disturbances,
)
from .svar import bootstrap_se_B, fit_var, mutual_independence_test, ordered_meanind_test, svar_discover
from .tensor import SymmetricTensor, higher_order_ldl


def _read_csv_matrix(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader)
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SystemExit(f"{path}:{line_no}: expected {len(header)} fields")
            try:
                rows.append([float(v) for v in row])
            except ValueError:
                raise SystemExit(
                    f"{path}:{line_no}: non-numeric or missing value"
                ) from None
    return header, np.asarray(rows)


def _write_json(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _cmd_ldl(args) -> None:
    payload = json.loads(Path(args.input).read_text())
    tensor = SymmetricTensor.from_json_dict(payload)
    if args.order is not None and args.order != tensor.order:
        raise SystemExit(
            f"--order {args.order} does not match tensor order {tensor.order}"
        )
    l_factor, core = higher_order_ldl(tensor)
    _write_json(
        {
            "L": {"dim": l_factor.dim, "matrix": l_factor.matrix.tolist()},
            "D": core.to_json_dict(),
        },
        args.out,
    )


def _cmd_simulate(args) -> None:
    aux = AuxDistribution(args.aux)
    design = design_from_name(args.design, rho=args.rho, gamma=args.gamma)
    root = np.random.SeedSequence(args.seed)
    dag_seed, eps_seed = root.spawn(2)
    dag = sample_dag(
        args.p, dag_seed, random_signs=args.random_signs, edge_prob=args.edge_prob
    )
    eps = sample_disturbances(args.p, args.T, aux, design, eps_seed)
    x = generate_dataset(dag, eps)
    out = Path(args.out)
    with open(out, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"x{i + 1}" for i in range(args.p)])
        writer.writerows(x.tolist())
    sidecar = out.with_suffix(out.suffix + ".dag.json")
    sidecar.write_text(json.dumps(dag.to_json_dict(), indent=2) + "\n")
    print(f"wrote {out} and {sidecar}")


def _cmd_discover(args) -> None:
    header, x = _read_csv_matrix(args.input)
    if args.scorer == "direct-lingam":
        result = direct_lingam_baseline(x, seed=args.seed)
    else:
        scorer = scorer_from_name(args.scorer, d=args.d)
        result = direct_limiam(x, scorer, seed=args.seed)
    payload = result.to_json_dict()
    payload["variables"] = header
    payload["order_names"] = [header[i] for i in result.order]
    _write_json(payload, args.out)


def _cmd_popfail(args) -> None:
    cfg = Cumulant4Config(args.k1, args.k2, args.c)
    jade = jade_reversal_verdict(cfg)
    resid = residual_dependence_scores(cfg)
    rows = [
        ("g(0) = k1^2 + k2^2", f"{jade_objective(cfg, 0.0):.6g}"),
        ("g(pi/4) = (k1+k2+6c)^2 / 8", f"{jade_objective(cfg, np.pi / 4):.6g}"),
        ("criterion lhs (k1+k2+6c)^2", f"{jade.criterion_lhs:.6g}"),
        ("criterion rhs 8(k1^2+k2^2)", f"{jade.criterion_rhs:.6g}"),
        ("rotation-contrast verdict", jade.verdict.value),
        ("residual score, true source", f"{resid.true_source_score:.6g}"),
        ("residual score, reversed", f"{resid.reversed_source_score:.6g}"),
        ("residual-score verdict", resid.verdict.value),
        ("sufficient condition c > (k1+k2)/6", str(resid.sufficient_reversal)),
    ]
    if args.empirical:
        theta = jade_empirical_check(cfg, T=args.T, seed=args.seed)
        rows.append(("empirical rotation theta-hat", f"{theta:.6f}"))
    width = max(len(name) for name, _ in rows)
    for name, value in rows:
        print(f"{name.ljust(width)}  {value}")


def _cmd_svar(args) -> None:
    header, x = _read_csv_matrix(args.input)
    fit = fit_var(x, args.lags)
    scorer = scorer_from_name(args.scorer, d=args.d)
    discovery = svar_discover(fit.residuals, scorer, seed=args.seed)
    order = list(discovery.result.order)
    ordered_shocks = discovery.shocks[:, order]
    meanind_report = ordered_meanind_test(
        ordered_shocks, permutations=args.permutations, seed=args.seed
    )
    mutual_report = mutual_independence_test(
        discovery.shocks, permutations=args.permutations, seed=args.seed
    )
    se = bootstrap_se_B(
        x, args.lags, discovery.result.order, replicates=args.bootstrap, seed=args.seed
    )
    payload = {
        "variables": header,
        "var_model": fit.model.to_json_dict(),
        "order": order,
        "order_names": [header[i] for i in order],
        "B": discovery.result.B.tolist(),
        "B_se": se.tolist(),
        "ordered_meanind_test": meanind_report.to_json_dict(),
        "mutual_independence_test": mutual_report.to_json_dict(),
    }
    _write_json(payload, args.out)


def _cmd_bench(args) -> None:
    cfg = bench_mod.BenchmarkConfig()
    if args.config:
        try:
            import tomllib
        except ModuleNotFoundError:  # python < 3.11
            import tomli as tomllib

        raw = tomllib.loads(Path(args.config).read_text())
        kwargs = {}
        if "dims" in raw:
            kwargs["dims"] = tuple(raw["dims"])
        if "T" in raw:
            kwargs["T"] = int(raw["T"])
        if "replications" in raw:
            kwargs["replications"] = int(raw["replications"])
        if "base_seed" in raw:
            kwargs["base_seed"] = int(raw["base_seed"])
        if "shd_threshold" in raw:
            kwargs["shd_threshold"] = float(raw["shd_threshold"])
        if "aux_set" in raw:
            kwargs["aux_set"] = tuple(AuxDistribution(a) for a in raw["aux_set"])
        if "design_set" in raw:
            kwargs["design_set"] = tuple(design_from_name(d) for d in raw["design_set"])
        if "methods" in raw:
            by_name = {m.name: m for m in bench_mod.default_methods()}
            kwargs["methods"] = tuple(by_name[m] for m in raw["methods"])
        cfg = bench_mod.BenchmarkConfig(**kwargs)
    if args.paper_scale:
        cfg = cfg.paper_scale()

    def progress(aux, design, p, rep):
        if args.verbose and rep == 0:
            print(f"running {aux} / {design} / p={p}", file=sys.stderr)

    cells = bench_mod.run_grid(cfg, progress=progress)
    bench_mod.write_outputs(cells, cfg, args.out)
    print(f"wrote results to {args.out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="limiam",
        description="Causal discovery under order-dependent mean independence",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_ldl = sub.add_parser("ldl", help="triangular tensor decomposition of a JSON tensor")
    p_ldl.add_argument("--input", required=True)
    p_ldl.add_argument("--order", type=int, default=None)
    p_ldl.add_argument("--out", default=None)
    p_ldl.set_defaults(func=_cmd_ldl)

    p_sim = sub.add_parser("simulate", help="draw a synthetic dataset and its true DAG")
    p_sim.add_argument("--p", type=int, required=True)
    p_sim.add_argument("--T", type=int, required=True)
    p_sim.add_argument("--aux", choices=[a.value for a in AuxDistribution], default="uniform")
    p_sim.add_argument("--design", choices=DESIGN_NAMES, default="independent")
    p_sim.add_argument("--rho", type=float, default=0.5)
    p_sim.add_argument("--gamma", type=float, default=1.0)
    p_sim.add_argument("--edge-prob", type=float, default=1.0)
    p_sim.add_argument("--random-signs", action="store_true")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=_cmd_simulate)

    p_disc = sub.add_parser("discover", help="estimate a causal order and coefficients")
    p_disc.add_argument("--input", required=True)
    p_disc.add_argument(
        "--scorer", choices=list(SCORER_NAMES) + ["direct-lingam"], default="kernel"
    )
    p_disc.add_argument("--d", type=int, default=4)
    p_disc.add_argument("--seed", type=int, default=0)
    p_disc.add_argument("--out", default=None)
    p_disc.set_defaults(func=_cmd_discover)

    p_pop = sub.add_parser("popfail", help="population reversal analysis for a cumulant config")
    p_pop.add_argument("--k1", type=float, required=True)
    p_pop.add_argument("--k2", type=float, required=True)
    p_pop.add_argument("--c", type=float, required=True)
    p_pop.add_argument("--empirical", action="store_true")
    p_pop.add_argument("--T", type=int, default=100_000)
    p_pop.add_argument("--seed", type=int, default=0)
    p_pop.set_defaults(func=_cmd_popfail)

    p_svar = sub.add_parser("svar", help="VAR residual discovery and specification tests")
    p_svar.add_argument("--input", required=True)
    p_svar.add_argument("--lags", type=int, required=True)
    p_svar.add_argument("--scorer", choices=list(SCORER_NAMES), default="kernel")
    p_svar.add_argument("--d", type=int, default=4)
    p_svar.add_argument("--permutations", type=int, default=999)
    p_svar.add_argument("--bootstrap", type=int, default=200)
    p_svar.add_argument("--seed", type=int, default=0)
    p_svar.add_argument("--out", default=None)
    p_svar.set_defaults(func=_cmd_svar)

    p_bench = sub.add_parser("bench", help="run the benchmark grid")
    p_bench.add_argument("--config", default=None, help="optional TOML overrides")
    p_bench.add_argument("--out", required=True)
    p_bench.add_argument("--paper-scale", action="store_true")
    p_bench.add_argument("--verbose", action="store_true")
    p_bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> None:
    args = build_parser().parse_args(argv)
    args.func(args)


if __name__ == "__main__":
    main()
