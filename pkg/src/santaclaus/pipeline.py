"""End-to-end solver pipelines with per-stage reports.

The allocation pipeline runs: configuration LP, fat/thin split, clusters,
quartering and sampling, weighted hypergraph, dyadic rounding, grouping,
resource hierarchy, selection, reconstruction, lift, and final assembly.
Hypergraph inputs skip straight to the matching stages.  Randomized stages
draw from seeds derived per stage and per retry, so a run is reproducible
from its top-level seed alone.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import clustering, configlp, flow, lll, reconstruct, reduction, sampling
from .model import (
    GroupedHypergraph,
    RelaxedMatching,
    SantaInstance,
    as_seed,
    validate_instance,
    verify_relaxed_matching,
)

SCHEMA_VERSION = 1
DEFAULT_ALPHA = 4  # desk-scale stand-in for the asymptotic relaxation target


class StageError(Exception):
    def __init__(self, stage: str, message: str, witness=None):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage
        self.witness = witness


@dataclass
class PipelineOptions:
    profile: str = "practical"
    seed: int = 0
    ell: Optional[int] = None
    gamma: Optional[int] = None
    slack: float = 1.0
    tol: float = 1e-9
    max_rounds: int = 10_000
    alpha_param: int = DEFAULT_ALPHA
    hier_tries: int = 50
    retries: int = 5

    def effective_ell(self, n: int) -> int:
        base = self.ell if self.ell is not None else 16
        if self.profile == "theory":
            want = max(base, sampling.theory_ell(n))
            if want > 10 ** 6:
                raise StageError("profile", f"theory profile needs ell={want}, "
                                            "beyond the practical budget")
            return want
        return base


class _Timer:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self._t0 = None
        self._stage = None

    def start(self, stage: str):
        self._stage = stage
        self._t0 = time.perf_counter()

    def stop(self):
        if self._stage is not None:
            self.timings[self._stage] = self.timings.get(self._stage, 0.0) + \
                time.perf_counter() - self._t0
            self._stage = None


def _frac(x: Fraction) -> list:
    return [x.numerator, x.denominator]


def solve_matching(gh: GroupedHypergraph, opts: PipelineOptions,
                   classes: Optional[sampling.SizeClasses] = None
                   ) -> tuple[RelaxedMatching, dict]:
    """Hierarchy, selection and reconstruction for a grouped hypergraph."""
    seed = as_seed(opts.seed)
    timer = _Timer()
    ell = max(2, gh.ell)
    if classes is None:
        classes = sampling.SizeClasses.from_hypergraph(gh, ell)
    report: dict = {"schema_version": SCHEMA_VERSION, "kind": "matching",
                    "profile": opts.profile, "seed": opts.seed,
                    "resamples": 0, "mt_rounds": 0}
    last_error: Optional[Exception] = None
    for attempt in range(opts.retries):
        try:
            timer.start("hierarchy")
            hier, tries = sampling.resample_until_good(
                gh, opts.hier_tries, seed.derive("hier", attempt),
                classes=classes, ell=ell)
            timer.stop()
            report["resamples"] += tries - 1
            timer.start("selection")
            mt = lll.select_moser_tardos(
                gh, hier, seed.derive("mt", attempt),
                max_rounds=opts.max_rounds, classes=classes,
                slack=opts.slack, profile=opts.profile)
            timer.stop()
            report["mt_rounds"] += mt.rounds
            timer.start("audit")
            audit = lll.selection_intersection_bound(mt.selection, hier)
            timer.stop()
            report["audit_ok"] = audit.ok
            report["audit_factor"] = audit.achieved_factor
            report["slack"] = opts.slack
            timer.start("reconstruct")
            matching = reconstruct.reconstruct_matching(
                gh, hier, mt.selection, gamma=opts.gamma, profile=opts.profile)
            timer.stop()
            ok, why = verify_relaxed_matching(gh, matching)
            if not ok:
                raise StageError("reconstruct", f"matching failed to verify: {why}")
            report["alpha"] = _frac(matching.alpha)
            report["timings"] = timer.timings
            return matching, report
        except (flow.ResampleNeeded, clustering.SamplingFailed,
                sampling.ResampleExhausted) as exc:
            timer.stop()
            last_error = exc
            report["resamples"] += 1
            continue
    raise StageError("matching", f"retries exhausted: {last_error}",
                     witness=last_error)


def solve_santa(inst: SantaInstance, opts: PipelineOptions
                ) -> tuple[reconstruct.SantaSolution, dict]:
    """The full allocation pipeline; returns the partition and a report."""
    seed = as_seed(opts.seed)
    timer = _Timer()
    report: dict = {"schema_version": SCHEMA_VERSION, "kind": "santa",
                    "profile": opts.profile, "seed": opts.seed,
                    "resamples": 0, "mt_rounds": 0}
    problems = validate_instance(inst)
    if problems:
        raise StageError("validate", problems[0], witness=problems)

    timer.start("config-lp")
    lp = configlp.solve_config_lp(inst, tol=opts.tol)
    timer.stop()
    report["t_star"] = lp.t_star
    report["lp_capped"] = lp.capped
    t_value = configlp.C_APPROX * lp.t_star
    report["lp_value"] = t_value

    if lp.t_star <= 0:
        # no positive target is certifiable; serve everyone greedily
        empty_dec = clustering.ClusterDecomposition(
            clusters=(), q=(), q_fat=(), trees=(), thin=(),
            thin_columns=(), sampled=(), ell=0)
        wm = RelaxedMatching(chosen=(), assigned=(), alpha=Fraction(1))
        sol = reconstruct.assemble_santa_solution(inst, empty_dec, wm)
        report["alpha"] = _frac(wm.alpha)
        report["value"] = _frac(sol.value)
        report["timings"] = timer.timings
        return sol, report

    timer.start("split")
    split = clustering.split_fat_thin(inst, Fraction(t_value), opts.alpha_param)
    timer.stop()
    timer.start("clusters")
    dec = clustering.build_clusters(inst, lp.solution, split, tol=max(opts.tol, 1e-9) * 10)
    timer.stop()
    report["clusters"] = len(dec.clusters)
    report["fat_served"] = len(dec.q)
    floor = Fraction(1, 2) - Fraction(1, 10 ** 6)  # LP tolerance propagates
    for h in range(len(dec.clusters)):
        if dec.cluster_thin_mass(h) < floor:
            raise StageError("clusters",
                             f"cluster {h} thin mass {dec.cluster_thin_mass(h)} "
                             "below 1/2")

    if not dec.clusters:
        wm = RelaxedMatching(chosen=(), assigned=(), alpha=Fraction(1))
        sol = reconstruct.assemble_santa_solution(inst, dec, wm)
        report["alpha"] = _frac(wm.alpha)
        report["value"] = _frac(sol.value)
        report["timings"] = timer.timings
        return sol, report

    ell = opts.effective_ell(inst.n)
    gamma = opts.gamma
    last_error: Optional[Exception] = None
    for attempt in range(opts.retries):
        try:
            timer.start("quartering")
            quartered = clustering.quarter_thin_columns(
                inst.valuation, dec, Fraction(t_value))
            timer.stop()
            timer.start("cluster-sampling")
            sampled = clustering.sample_cluster_configs(
                dec, quartered, ell, seed.derive("cluster-sample", attempt))
            timer.stop()
            timer.start("weighted-hypergraph")
            wh = reduction.build_weighted_hypergraph(
                sampled, inst.valuation, Fraction(t_value))
            rounded = reduction.round_weights(wh)
            gh = reduction.to_grouped(rounded)
            timer.stop()
            sub_opts = PipelineOptions(
                profile=opts.profile,
                seed=as_seed(opts.seed).derive("matching", attempt).seed,
                ell=ell, gamma=gamma, slack=opts.slack, tol=opts.tol,
                max_rounds=opts.max_rounds, alpha_param=opts.alpha_param,
                hier_tries=opts.hier_tries, retries=1)
            gm, sub_report = solve_matching(gh, sub_opts)
            report["resamples"] += sub_report.get("resamples", 0)
            report["mt_rounds"] += sub_report.get("mt_rounds", 0)
            report["audit_ok"] = sub_report.get("audit_ok")
            report["audit_factor"] = sub_report.get("audit_factor")
            for k, v in sub_report.get("timings", {}).items():
                timer.timings[k] = timer.timings.get(k, 0.0) + v
            timer.start("lift")
            wm = reduction.lift_matching(gm, wh, gh=gh)
            timer.stop()
            ok, why = verify_relaxed_matching(wh, wm)
            if not ok:
                raise StageError("lift", f"weighted matching failed to verify: {why}")
            timer.start("assemble")
            sol = reconstruct.assemble_santa_solution(inst, sampled, wm)
            timer.stop()
            bad = sol.check_partition(inst)
            if bad:
                raise StageError("assemble", bad[0], witness=bad)
            report["alpha"] = _frac(wm.alpha)
            report["alpha_grouped"] = _frac(gm.alpha)
            report["value"] = _frac(sol.value)
            report["timings"] = timer.timings
            return sol, report
        except (flow.ResampleNeeded, clustering.SamplingFailed,
                sampling.ResampleExhausted, clustering.StructuralError,
                ValueError) as exc:
            timer.stop()
            last_error = exc
            report["resamples"] += 1
            continue
    raise StageError("pipeline", f"retries exhausted: {last_error}",
                     witness=last_error)
