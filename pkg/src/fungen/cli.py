"""Command-line interface: simulate, backtest, verify."""

from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import io
import json
import os
import sys

import numpy as np

from . import diagnostics, engine, genfun, lambdas, marketdata, simulate, verify
from .errors import ConfigError, FungenError, ParseError, ValidationError

_GENFUN_KEYS = {"alpha", "p", "d1", "d2", "xi_lo", "xi_hi"}
_SIM_KEYS = {
    "n_assets",
    "n_days",
    "drift",
    "vol",
    "corr",
    "div_yield",
    "init_mv",
    "start_date",
}


def load_config(path: str) -> dict:
    """Read a TOML (or JSON) run configuration into a plain dict."""
    if path.endswith(".json"):
        with open(path) as fh:
            return json.load(fh)
    import tomli

    with open(path, "rb") as fh:
        try:
            return tomli.load(fh)
        except tomli.TOMLDecodeError as exc:
            raise ParseError(f"{path}: {exc}") from None


def effective_config(raw: dict, out: str | None, seeds: list[int] | None) -> dict:
    """Apply defaults and flag overrides; validate field types and names."""
    cfg = {
        "market": dict(raw.get("market", {})),
        "genfun": dict(raw.get("genfun", {})),
        "lambda": dict(raw.get("lambda", {})),
        "run": dict(raw.get("run", {})),
    }
    market = cfg["market"]
    unknown = set(market) - {"source", "csv_path", "sim"}
    if unknown:
        raise ConfigError(f"unknown market keys: {', '.join(sorted(unknown))}")
    market.setdefault("source", "csv" if market.get("csv_path") else "sim")
    if market["source"] not in ("sim", "csv"):
        raise ConfigError("market.source must be 'sim' or 'csv'")
    if market["source"] == "csv":
        if not market.get("csv_path"):
            raise ConfigError("market.csv_path is required when market.source = 'csv'")
    else:
        sim = dict(market.get("sim", {}))
        unknown = set(sim) - _SIM_KEYS
        if unknown:
            raise ConfigError(f"unknown market.sim keys: {', '.join(sorted(unknown))}")
        sim.setdefault("n_assets", 8)
        sim.setdefault("n_days", 250)
        market["sim"] = sim

    gf = cfg["genfun"]
    gf.setdefault("name", "entropy")
    if gf["name"] not in genfun.CATALOG:
        raise ConfigError(
            f"genfun.name must be one of {', '.join(genfun.CATALOG)}"
        )
    unknown = set(gf) - _GENFUN_KEYS - {"name"}
    if unknown:
        raise ConfigError(f"unknown genfun keys: {', '.join(sorted(unknown))}")

    lam = cfg["lambda"]
    lam.setdefault("kind", "constant")
    if lam["kind"] not in lambdas.KINDS:
        raise ConfigError(f"lambda.kind must be one of {', '.join(lambdas.KINDS)}")

    run = cfg["run"]
    run.setdefault("mode", "both")
    if run["mode"] not in ("additive", "multiplicative", "both"):
        raise ConfigError("run.mode must be additive, multiplicative, or both")
    run.setdefault("c", 0.0)
    run.setdefault("epsilon", 0.0)
    if run["c"] < 0:
        raise ConfigError("run.c must be non-negative")
    if run["epsilon"] < 0:
        raise ConfigError("run.epsilon must be non-negative")
    run.setdefault("diversity_cap", diagnostics.DEFAULT_DIVERSITY_CAP)
    run.setdefault("out_dir", "out")
    run.setdefault("seeds", [0])
    if out is not None:
        run["out_dir"] = out
    if seeds:
        run["seeds"] = list(seeds)
    if not isinstance(run["seeds"], list) or not all(
        isinstance(s, int) for s in run["seeds"]
    ):
        raise ConfigError("run.seeds must be a list of integers")
    return cfg


def run_id_for(cfg: dict, seed: int | None) -> str:
    """Short content hash naming one run: config (minus output dir) plus seed."""
    hashed = json.loads(json.dumps(cfg))
    hashed["run"] = {k: v for k, v in hashed["run"].items() if k not in ("out_dir", "seeds")}
    hashed["seed"] = seed
    canon = json.dumps(hashed, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()[:10]


def _thread_count() -> int:
    raw = os.environ.get("FUNGEN_THREADS", "")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ConfigError("FUNGEN_THREADS must be an integer") from None
        if n < 1:
            raise ConfigError("FUNGEN_THREADS must be at least 1")
        return n
    return min(4, os.cpu_count() or 1)


def _fan_out(tasks):
    """Run no-argument callables, in parallel when allowed; re-raise first failure."""
    workers = _thread_count()
    if workers == 1 or len(tasks) == 1:
        return [task() for task in tasks]
    with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
        return [f.result() for f in [pool.submit(t) for t in tasks]]


def _build_sim_config(cfg: dict) -> simulate.SimConfig:
    sim = cfg["market"]["sim"]
    kwargs = {}
    for key in _SIM_KEYS:
        if key in sim:
            value = sim[key]
            if isinstance(value, list):
                value = tuple(tuple(v) if isinstance(v, list) else v for v in value)
            kwargs[key] = value
    return simulate.SimConfig(**kwargs)


def _market_for(cfg: dict, seed: int | None) -> marketdata.MarketPath:
    market = cfg["market"]
    if market["source"] == "csv":
        return marketdata.load_market_csv(market["csv_path"])
    return simulate.simulate_market(_build_sim_config(cfg), seed if seed is not None else 0)


def cmd_simulate(cfg: dict) -> list[str]:
    """Simulate per seed and write <run_id>__market.csv files."""
    out_dir = cfg["run"]["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    sim_cfg = _build_sim_config(cfg)

    def one(seed: int) -> str:
        path = simulate.simulate_market(sim_cfg, seed)
        buf = io.StringIO()
        marketdata.write_market_csv(path, buf)
        target = os.path.join(out_dir, f"{run_id_for(cfg, seed)}__market.csv")
        diagnostics._atomic_write(target, buf.getvalue())
        return target

    return _fan_out([lambda s=s: one(s) for s in cfg["run"]["seeds"]])


def run_pipeline(cfg: dict, seed: int | None) -> dict[str, str]:
    """One full backtest for one seed; returns the written report files."""
    path = _market_for(cfg, seed)
    gf_cfg = dict(cfg["genfun"])
    g = genfun.catalog(gf_cfg.pop("name"), **gf_cfg)
    lam_cfg = dict(cfg["lambda"])
    lam = lambdas.build_lambda(lam_cfg.pop("kind"), lam_cfg, path)

    w0 = marketdata.begin_weights(path, 0)
    members0 = path.member[0]
    lam0 = (
        lam.values[0, 0]
        if g.domain.lambda_kind == "scalar"
        else engine._lambda_values(g, lam, path)[0][members0]
    )
    norm = engine.normalize(g, lam0, w0[members0])

    run = cfg["run"]
    modes = ["additive", "multiplicative"] if run["mode"] == "both" else [run["mode"]]
    gam = engine.gamma_defect(norm, path, lam)
    gammas = {"defect": gam}
    try:
        gammas["closed"] = engine.gamma_closed(norm, path, lam)
    except ConfigError:
        pass

    ledgers = {}
    verdicts = {}
    for mode in modes:
        ledger, _ = engine.run_backtest(norm, path, lam, mode=mode, c=run["c"])
        ledgers[mode] = ledger
        verdict = engine.arbitrage_check(gam, mode, run["epsilon"])
        verdicts[mode] = {
            "crossed": verdict.crossed,
            "day": verdict.day,
            "threshold": verdict.threshold,
        }

    diag = diagnostics.compute_diagnostics(path, run["diversity_cap"])
    g_end = engine.g_values(norm, path, lam, at="end")
    notes = []
    if g.name == "ranked_hybrid":
        notes.append(
            "ranked_hybrid: rank-crossing correction terms are omitted from Gamma"
        )
    return diagnostics.assemble_report(
        run_id=run_id_for(cfg, seed),
        out_dir=run["out_dir"],
        path=path,
        diag=diag,
        gammas=gammas,
        ledgers=ledgers,
        config_snapshot=cfg,
        seed=seed,
        verdicts=verdicts,
        g_series=g_end,
        notes=notes,
    )


def cmd_backtest(cfg: dict) -> list[dict[str, str]]:
    seeds: list[int | None]
    if cfg["market"]["source"] == "csv":
        seeds = [None]  # the panel is fixed; seeds have nothing to vary
    else:
        seeds = list(cfg["run"]["seeds"])
    runs = _fan_out([lambda s=s: run_pipeline(cfg, s) for s in seeds])
    if len(runs) > 1:
        runs.append(_write_aggregate(cfg, seeds, runs))
    return runs


def _write_aggregate(cfg: dict, seeds: list, runs: list[dict[str, str]]) -> dict[str, str]:
    """Cross-seed roll-up of the per-run summaries; no timestamps inside."""
    entries = []
    for seed, files in zip(seeds, runs):
        with open(files["summary.json"]) as fh:
            summary = json.load(fh)
        entries.append(
            {
                "seed": seed,
                "run_id": summary["run_id"],
                "terminal": summary["terminal"],
                "arbitrage": summary["arbitrage"],
            }
        )
    v_phi = [e["terminal"]["v_phi"] for e in entries if e["terminal"]["v_phi"] is not None]
    agg = {
        "n_runs": len(entries),
        "runs": entries,
        "terminal_v_phi": {
            "mean": sum(v_phi) / len(v_phi) if v_phi else None,
            "min": min(v_phi) if v_phi else None,
            "max": max(v_phi) if v_phi else None,
        },
        "crossings": {
            mode: sum(
                1 for e in entries if e["arbitrage"].get(mode, {}).get("crossed")
            )
            for mode in ("additive", "multiplicative")
        },
    }
    target = os.path.join(
        cfg["run"]["out_dir"], f"{run_id_for(cfg, None)}__aggregate.json"
    )
    diagnostics._atomic_write(target, json.dumps(agg, indent=2, sort_keys=True) + "\n")
    return {"aggregate.json": target}


def cmd_verify(seed: int) -> verify.VerificationReport:
    return verify.run_verification(seed=seed)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="fungen",
        description="Functionally generated trading strategies on daily market data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, needs_config in (("simulate", True), ("backtest", True), ("verify", False)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=needs_config, help="TOML or JSON run config")
        p.add_argument("--out", help="output directory (overrides run.out_dir)")
        p.add_argument(
            "--seed",
            type=int,
            action="append",
            help="seed override; repeat for several seeds",
        )
    args = parser.parse_args(argv)

    try:
        if args.command == "verify":
            seed = args.seed[0] if args.seed else 0
            report = cmd_verify(seed)
            for check in report.checks:
                status = "PASS" if check.passed else "FAIL"
                print(f"{status} {check.name} worst={check.worst:.3e} ({check.detail})")
            return 0 if report.ok else 1

        raw = load_config(args.config)
        cfg = effective_config(raw, args.out, args.seed)
        if args.command == "simulate":
            for target in cmd_simulate(cfg):
                print(target)
        else:
            for files in cmd_backtest(cfg):
                print(files.get("summary.json", files.get("aggregate.json")))
        return 0
    except (ConfigError, ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FungenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
