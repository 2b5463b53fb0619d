"""Seeded scenario generation, batch runs and shrinking of divergent runs."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable, Optional

from .compose import GenerationError
from .sim import RunResult, ScenarioError, realized_scenario, run_scenario


@dataclass
class FuzzConfig:
    seed: int = 0
    scenarios: int = 1000
    sites: tuple[int, int] = (3, 5)
    ops: tuple[int, int] = (5, 15)
    weights: dict = field(default_factory=dict)
    shrink: bool = True
    max_witnesses: int = 3


def make_scenario(cfg: FuzzConfig, index: int) -> dict:
    rng = random.Random(f"{cfg.seed}:{index}")
    spec: dict = {"count": list(cfg.ops)}
    if cfg.weights:
        spec["weights"] = dict(cfg.weights)
    return {
        "seed": rng.randrange(2**32),
        "sites": rng.randint(*cfg.sites),
        "schedulePolicy": "random",
        "script": [{"random": spec}] if cfg.ops[1] > 0 else [],
    }


def _still_fails(sc: dict, failing: Callable[[RunResult], bool]) -> Optional[RunResult]:
    try:
        result = run_scenario(sc)
    except (ScenarioError, GenerationError):
        return None
    return result if failing(result) else None


def shrink(result: RunResult,
           failing: Callable[[RunResult], bool] = lambda r: not r.converged) -> tuple[dict, RunResult]:
    """Greedy reduction of a failing run to a locally minimal ordered script:
    drop local ops (with the steps that moved them), then single
    receive/execute steps (leaving that work to the final flush), then
    trailing sites nobody uses.  Returns the reduced ordered scenario (the
    closing flush is implicit) and its run."""
    sc = realized_scenario(result)
    best = result
    changed = True
    while changed:
        changed = False
        script = sc["script"]
        i = len(script) - 1
        while i >= 0:
            step = script[i]
            if "site" in step:
                key = f"{step['site']};{step['opnb']}"
                cand = [s for j, s in enumerate(script)
                        if j != i and _step_req(s) != key]
            else:
                cand = script[:i] + script[i + 1:]
            trial = dict(sc, script=cand)
            hit = _still_fails(trial, failing)
            if hit is not None:
                sc, best, script, changed = trial, hit, cand, True
            i = min(i, len(script)) - 1
    used = {s["site"] for s in sc["script"] if "site" in s}
    while sc["sites"] > 1 and sc["sites"] not in used:
        trial = dict(sc, sites=sc["sites"] - 1,
                     script=[s for s in sc["script"] if _step_site(s) < sc["sites"]])
        hit = _still_fails(trial, failing)
        if hit is None:
            break
        sc, best = trial, hit
    return sc, best


def _step_req(step: dict) -> Optional[str]:
    for k in ("recv", "exec", "deliver"):
        if k in step:
            return step[k]["req"]
    return None


def _step_site(step: dict) -> int:
    if "site" in step:
        return step["site"]
    if "recv" in step or "deliver" in step:
        return (step.get("recv") or step.get("deliver"))["to"]
    if "exec" in step:
        return step["exec"]["at"]
    return 0


@dataclass
class FuzzSummary:
    config: dict
    runs: int = 0
    converged: int = 0
    deadlocks: int = 0
    divergent_seeds: list[int] = field(default_factory=list)
    witnesses: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.runs == self.converged

    def record(self) -> dict:
        return {"config": self.config, "runs": self.runs, "converged": self.converged,
                "deadlocks": self.deadlocks, "divergent": self.divergent_seeds,
                "witnesses": self.witnesses, "ok": self.ok}


def fuzz(cfg: FuzzConfig) -> FuzzSummary:
    summary = FuzzSummary({"seed": cfg.seed, "scenarios": cfg.scenarios,
                           "sites": list(cfg.sites), "ops": list(cfg.ops),
                           "weights": cfg.weights})
    for i in range(cfg.scenarios):
        result = run_scenario(make_scenario(cfg, i))
        summary.runs += 1
        if result.converged:
            summary.converged += 1
            continue
        if not result.report["quiescent"]:
            summary.deadlocks += 1
        summary.divergent_seeds.append(i)
        if len(summary.witnesses) < cfg.max_witnesses:
            small_sc, small = shrink(result) if cfg.shrink else (realized_scenario(result), result)
            summary.witnesses.append({
                "index": i,
                "scenario": small_sc,
                "states": small.report["states"],
                "trace": small.report["trace"],
            })
    return summary
