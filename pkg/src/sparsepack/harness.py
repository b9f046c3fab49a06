"""Instance generators, exact oracles, and the Monte Carlo harness.

The harness answers one question for every rounding scheme in the
package: across many independent trials, is each item's empirical
inclusion frequency at or above its analytic floor?

    kcspip   x_j / (2k)
    bkns     x_j / (e k)
    sksp     (sum_t beta_t) x_j / k
    hm       x_e (1 - exp(-k_e)) / k_e
    ufp      alpha beta x_i

Trials are partitioned into fixed chunks of CHUNK_TRIALS; chunk c draws
its randomness from the counter stream (seed, module, c), where the
module constant identifies the algorithm.  The partition is a property
of (seed, trials) alone, so running with --jobs 8 reproduces the
single-process results bit for bit, and any flagged trial can be
replayed in isolation by rebuilding its chunk's generator and stepping
to the offset.  Reports carry this derivation rule alongside the raw
frequencies, standard errors, floors, and per-item ratios; the
feasibility violation counter must be zero on every run, since all five
schemes are feasible by construction.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import (FEAS_TOL, check_feasible, make_instance, objective_value,
                   require_valid)
from .errors import (InternalInvariantError, ParamError, SizeError,
                     ValidationError)
from .hypermatch import (_sweep, attenuation_g, is_matching, make_hypergraph,
                         matching_weight, require_valid_hypergraph,
                         theoretical_bound)
from .kcspip import (EXACT_MARGINAL_CAP, BknsRounder, KcsParams, KcsRounder,
                     instance_k)
from .lp import solve_packing_lp
from .montecarlo import binomial_stderr, trial_rng
from .sksp import (MultiChanceSampler, SkspInstance, compute_schedule,
                   default_chances, make_item, solve_sksp_lp)
from .ufptree import (UfpCrScheme, UfpParams, edge_usage, make_tree,
                      optimize_alpha, routed_weight, tree_lp_instance)

BRUTE_FORCE_CAP = 24
CHUNK_TRIALS = 4096

# Counter-stream module ids.  0 is the generic montecarlo default;
# 1-5 are trial streams, 101-105 the matching setup pools (attenuation
# estimation), 11-15 instance generators, 21 the memoized oracle path.
_TRIAL_STREAM = {"kcspip": 1, "bkns": 2, "sksp": 3, "hm": 4, "ufp": 5}
_SETUP_STREAM = {"sksp": 103, "ufp": 105}
_GEN_STREAM = {"gap": 11, "kcs": 12, "hyper": 13, "sksp": 14, "tree": 15}
_ORACLE_STREAM = 21

ALGORITHMS = tuple(sorted(_TRIAL_STREAM))


# ---------------------------------------------------------------------------
# Instance generators

def gen_gap_instance(k, eps=None):
    """The tight family: n = m = 2k - 1, unit capacities and weights.

    Column j puts coefficient 1 on row j and a small eps on the k - 1
    rows cyclically preceding j, so every column touches k rows and any
    two columns conflict through some row's unit entry.  eps must stay
    below 1 / (10 n k); the default is half that threshold.
    """
    if k < 2:
        raise ParamError(f"k={k} must be at least 2")
    n = 2 * k - 1
    limit = 1.0 / (10.0 * n * k)
    if eps is None:
        eps = limit / 2.0
    if not (0.0 < eps < limit):
        raise ParamError(f"eps={eps} must be in (0, {limit:.3g})")
    columns = []
    for j in range(n):
        col = [(j, 1.0)]
        col.extend(((j - r) % n, eps) for r in range(1, k))
        columns.append(sorted(col))
    inst = make_instance([1.0] * n, [1.0] * n, columns, k=k)
    return require_valid(inst)


def gen_random_kcs(n, m, k, seed):
    """Random column-sparse instance: every column touches k distinct
    uniform rows with coefficients uniform in (0,1], weights uniform in
    (0,1], all capacities 1."""
    if k < 1 or n < 1 or m < 1:
        raise ParamError("n, m, k must be positive")
    if k > m:
        raise ParamError(f"k={k} exceeds row count m={m}")
    rng = trial_rng(seed, 0, module=_GEN_STREAM["kcs"])
    columns = []
    for _ in range(n):
        rows = sorted(int(i) for i in rng.choice(m, size=k, replace=False))
        columns.append([(i, 1.0 - rng.random()) for i in rows])
    weights = [1.0 - rng.random() for _ in range(n)]
    inst = make_instance([1.0] * m, weights, columns, k=k)
    return require_valid(inst)


def gen_random_hypergraph(n_vertices, n_edges, k, seed):
    """Random weighted hypergraph with edge sizes uniform in 1..k."""
    if n_vertices < 1 or n_edges < 1 or k < 1:
        raise ParamError("n_vertices, n_edges, k must be positive")
    rng = trial_rng(seed, 0, module=_GEN_STREAM["hyper"])
    edges = []
    for _ in range(n_edges):
        size = int(rng.integers(1, min(k, n_vertices) + 1))
        vs = sorted(int(v) for v in rng.choice(n_vertices, size=size, replace=False))
        edges.append((tuple(vs), 1.0 - rng.random()))
    return require_valid_hypergraph(make_hypergraph(n_vertices, edges))


def gen_sksp_instance(n, m, k, scenarios, seed, cap_hi=2):
    """Random stochastic instance: integer capacities, Bernoulli bits,
    normalized scenario probabilities."""
    if n < 1 or m < 1 or k < 1 or scenarios < 1:
        raise ParamError("n, m, k, scenarios must be positive")
    if k > m:
        raise ParamError(f"k={k} exceeds row count m={m}")
    rng = trial_rng(seed, 0, module=_GEN_STREAM["sksp"])
    capacities = tuple(int(c) for c in rng.integers(1, cap_hi + 1, size=m))
    items = []
    for _ in range(n):
        support = sorted(int(i) for i in rng.choice(m, size=k, replace=False))
        raw = rng.random(scenarios) + 0.1
        probs = raw / raw.sum()
        table = []
        for s in range(scenarios):
            bits = [int(b) for b in rng.integers(0, 2, size=k)]
            table.append((float(probs[s]), 1.0 - rng.random(), bits))
        items.append(make_item(support, table))
    return SkspInstance(m=m, capacities=capacities, items=tuple(items), k=k)


def gen_random_tree(n_vertices, n_demands, seed, cap_hi=2):
    """Random rooted tree (vertex 0 is the root) with random demands."""
    if n_vertices < 2 or n_demands < 1:
        raise ParamError("need at least 2 vertices and 1 demand")
    rng = trial_rng(seed, 0, module=_GEN_STREAM["tree"])
    parent = [-1] + [int(rng.integers(0, v)) for v in range(1, n_vertices)]
    caps = [1] + [int(c) for c in rng.integers(1, cap_hi + 1, size=n_vertices - 1)]
    demands = []
    for _ in range(n_demands):
        s = int(rng.integers(0, n_vertices))
        t = int(rng.integers(0, n_vertices - 1))
        if t >= s:
            t += 1
        demands.append((s, t, 1.0 - rng.random()))
    return make_tree(parent, 0, caps, demands)


def hypergraph_lp_instance(h):
    """Fractional matching polytope of a hypergraph as a packing
    instance: one unit-capacity row per vertex, coefficient 1 per
    incidence."""
    require_valid_hypergraph(h)
    columns = [[(v, 1.0) for v in vs] for vs, _ in h.edges]
    weights = [w for _, w in h.edges]
    return make_instance([1.0] * h.m, weights, columns)


# ---------------------------------------------------------------------------
# Exact optimum by branch and bound

def brute_force_opt(inst, size_cap=BRUTE_FORCE_CAP):
    """Exact packing optimum via depth-first search with suffix-weight
    pruning.  Returns (value, chosen item set).

    Refuses n > size_cap (default 24, where 2^n with pruning stays
    sub-second).  Callers may raise the cap for instances whose
    structure keeps the search small, such as the tight gap family,
    where any two items conflict and the tree is quadratic."""
    require_valid(inst)
    if inst.n > size_cap:
        raise SizeError(f"n={inst.n} exceeds brute force cap {size_cap}")
    n, m = inst.n, inst.m
    caps = [b + FEAS_TOL for b in inst.capacities]
    suffix = [0.0] * (n + 1)
    for j in range(n - 1, -1, -1):
        suffix[j] = suffix[j + 1] + inst.weights[j]
    usage = [0.0] * m
    picked = []
    best_val = 0.0
    best_set = frozenset()

    def walk(j, value):
        nonlocal best_val, best_set
        if value + suffix[j] <= best_val + 1e-12:
            return
        if j == n:
            best_val = value
            best_set = frozenset(picked)
            return
        col = inst.columns[j]
        if all(usage[i] + a <= caps[i] for i, a in col):
            for i, a in col:
                usage[i] += a
            picked.append(j)
            walk(j + 1, value + inst.weights[j])
            picked.pop()
            for i, a in col:
                usage[i] -= a
        walk(j + 1, value)

    walk(0, 0.0)
    return best_val, best_set


# ---------------------------------------------------------------------------
# Experiment specification and reports

@dataclass(frozen=True)
class ItemReport:
    """One row of the comparison table.  ratio is None when the floor
    is zero (an item the fractional solution never uses)."""

    index: int
    x: float
    frequency: float
    std_err: float
    floor: float
    ratio: object


@dataclass(frozen=True)
class RoundingReport:
    algorithm: str
    trials: int
    seed: int
    chunk: int
    stream: str
    lp_objective: float
    mean_objective: float
    objective_std_err: float
    feasibility_violations: int
    min_ratio: object
    opt_value: object
    items: tuple
    notes: tuple


@dataclass
class ExperimentSpec:
    """What to run: algorithm name, the instance itself, trial count,
    master seed, process fan-out, per-algorithm parameters (see
    `empirical_ratio`), and an optional JSON report sink path."""

    algorithm: str
    instance: object
    trials: int
    seed: int
    jobs: int = 1
    params: dict = field(default_factory=dict)
    sink: object = None

    def __post_init__(self):
        if self.algorithm not in _TRIAL_STREAM:
            raise ValidationError(
                f"unknown algorithm {self.algorithm!r}; expected one of "
                f"{', '.join(ALGORITHMS)}"
            )
        if self.trials < 1:
            raise ParamError("trials must be positive")
        if self.jobs < 1:
            raise ParamError("jobs must be positive")


class _HmRunner:
    """Per-trial matching sampler with the validation and rate table
    hoisted out of the loop; draws match `round_matching` exactly."""

    def __init__(self, h, rates):
        self.h = h
        self.rates = np.asarray(rates, dtype=float)

    def trial(self, rng):
        marked = np.nonzero(rng.random(self.h.n) < self.rates)[0].tolist()
        keys = rng.random(len(marked))
        return _sweep(self.h, marked, keys)


def _evaluate(alg, instance, result):
    """Normalize one trial result to (chosen set, weight, feasible)."""
    if alg == "sksp":
        chosen = result.chosen
        ok = all(u <= b for u, b in zip(result.usage, instance.capacities))
        return chosen, result.realized_weight, ok
    if alg == "hm":
        return result, matching_weight(instance, result), is_matching(instance, result)
    if alg == "ufp":
        u = edge_usage(instance, result)
        ok = all(
            u[v] <= instance.edge_capacity[v]
            for v in range(instance.n_vertices)
            if v != instance.root
        )
        return result, routed_weight(instance, result), ok
    return result, objective_value(instance, result), check_feasible(instance, result)


def _run_chunks(payload):
    """Worker: run a list of trial chunks and return partial tallies."""
    alg, runner, instance, n_items, seed, trials, chunk_ids = payload
    counts = np.zeros(n_items, dtype=np.int64)
    violations = 0
    flagged = []
    obj_parts = []
    for c in chunk_ids:
        rng = trial_rng(seed, c, module=_TRIAL_STREAM[alg])
        lo = c * CHUNK_TRIALS
        hi = min(trials, lo + CHUNK_TRIALS)
        obj_sum = 0.0
        obj_sq = 0.0
        for t in range(lo, hi):
            chosen, weight, ok = _evaluate(alg, instance, runner.trial(rng))
            for j in chosen:
                counts[j] += 1
            obj_sum += weight
            obj_sq += weight * weight
            if not ok:
                violations += 1
                if len(flagged) < 10:
                    flagged.append((c, t - lo))
        obj_parts.append((c, obj_sum, obj_sq))
    return counts, violations, obj_parts, flagged


def _build_runner(spec, instance, x):
    """Instantiate the per-trial runner, its floors, and setup notes.

    Recognized spec.params keys:
        kcspip  kcs_params (a KcsParams), epsilon
        bkns    alpha
        sksp    T, sim_budget, attenuate_last
        ufp     alpha (default: the balance-optimal rate, whose keep
                probability is nearly zero; experiments that want to
                see routing should pass a moderate alpha), sim_budget
    """
    alg = spec.algorithm
    params = spec.params
    notes = []
    if alg == "kcspip":
        kp = params.get("kcs_params")
        if kp is None:
            kp = KcsParams.defaults(instance_k(instance), epsilon=params.get("epsilon"))
        runner = KcsRounder(instance, x, kp)
        k = instance_k(instance)
        floors = [v / (2.0 * k) for v in x]
    elif alg == "bkns":
        alpha = params.get("alpha", 1.0)
        runner = BknsRounder(instance, x, alpha=alpha)
        k = instance_k(instance)
        floors = [v / (math.e * k) for v in x]
    elif alg == "sksp":
        T = params.get("T")
        if T is None:
            T = default_chances(instance.k)
        schedule = compute_schedule(T, instance.k)
        setup_rng = trial_rng(spec.seed, 0, module=_SETUP_STREAM["sksp"])
        runner = MultiChanceSampler(
            instance, x, schedule, setup_rng,
            sim_budget=params.get("sim_budget"),
            attenuate_last=params.get("attenuate_last", True),
        )
        gamma = sum(schedule.betas)
        floors = [gamma * v / instance.k for v in x]
        if runner.underflow:
            notes.append(
                f"attenuation clamped at {len(runner.underflow)} "
                f"(chance, item) pairs: {sorted(set(runner.underflow))[:10]}"
            )
    elif alg == "hm":
        rates = [attenuation_g(v) for v in x]
        runner = _HmRunner(instance, rates)
        floors = [
            v * theoretical_bound(len(instance.edges[e][0]))
            for e, v in enumerate(x)
        ]
    else:
        alpha = params.get("alpha")
        if alpha is None:
            alpha = optimize_alpha()[0]
        up = UfpParams(alpha=alpha, sim_budget=params.get("sim_budget", 100_000))
        setup_rng = trial_rng(spec.seed, 0, module=_SETUP_STREAM["ufp"])
        runner = UfpCrScheme(instance, x, up, setup_rng)
        floors = [up.alpha * up.beta * v for v in x]
        if runner.clamped:
            notes.append(f"safety estimates below beta for demands {runner.clamped[:10]}")
    return runner, floors, notes


def _default_x(alg, instance):
    if alg in ("kcspip", "bkns"):
        return solve_packing_lp(instance, strengthen=True).x
    if alg == "sksp":
        return solve_sksp_lp(instance).x
    if alg == "hm":
        return solve_packing_lp(hypergraph_lp_instance(instance), strengthen=False).x
    return solve_packing_lp(tree_lp_instance(instance), strengthen=False).x


def _item_count(alg, instance):
    if alg == "hm":
        return instance.n
    if alg == "ufp":
        return instance.n_demands
    return instance.n


def empirical_ratio(spec, x=None):
    """Run the experiment and return a RoundingReport.

    x defaults to the appropriate relaxation's solution (strengthened
    for the packing schemes).  Floors and per-item ratios follow the
    table in the module docstring; `min_ratio` is the worst ratio over
    items with a positive floor, the single number a guarantee check
    cares about.  When spec.sink is set, the JSON report is also
    written there.
    """
    alg = spec.algorithm
    instance = spec.instance
    if x is None:
        x = _default_x(alg, instance)
    x = [float(v) for v in x]
    n_items = _item_count(alg, instance)
    if len(x) != n_items:
        raise ValidationError(f"x has length {len(x)}, expected {n_items}")
    runner, floors, notes = _build_runner(spec, instance, x)

    n_chunks = (spec.trials + CHUNK_TRIALS - 1) // CHUNK_TRIALS
    payloads = []
    jobs = min(spec.jobs, n_chunks)
    for w in range(jobs):
        ids = list(range(w, n_chunks, jobs))
        if ids:
            payloads.append(
                (alg, runner, instance, n_items, spec.seed, spec.trials, ids)
            )
    if jobs <= 1:
        parts = [_run_chunks(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_run_chunks, payloads))

    counts = np.zeros(n_items, dtype=np.int64)
    violations = 0
    obj_parts = []
    flagged = []
    for pc, pv, po, pf in parts:
        counts += pc
        violations += pv
        obj_parts.extend(po)
        flagged.extend(pf)
    for c, off in sorted(flagged)[:10]:
        notes.append(f"feasibility violation at chunk {c} offset {off}")

    # Reduce objective moments in chunk order; the float association, and
    # with it the report bytes, must not depend on the worker count.
    obj_sum = 0.0
    obj_sq = 0.0
    for _, ps, pq in sorted(obj_parts):
        obj_sum += ps
        obj_sq += pq

    trials = spec.trials
    mean_obj = obj_sum / trials
    var_obj = max(obj_sq / trials - mean_obj * mean_obj, 0.0)
    items = []
    ratios = []
    for j in range(n_items):
        freq = counts[j] / trials
        floor = floors[j]
        ratio = freq / floor if floor > 0.0 else None
        if ratio is not None:
            ratios.append(ratio)
        items.append(ItemReport(
            index=j,
            x=x[j],
            frequency=float(freq),
            std_err=binomial_stderr(float(freq), trials),
            floor=float(floor),
            ratio=ratio,
        ))

    opt_value = None
    if spec.params.get("compare_opt") and alg in ("kcspip", "bkns"):
        opt_value = brute_force_opt(instance)[0]

    stream = (
        f"chunk c holds trials [{CHUNK_TRIALS}c, {CHUNK_TRIALS}(c+1)) and uses "
        f"SeedSequence((seed, {_TRIAL_STREAM[alg]}, c)); setup pools use module "
        f"ids {sorted(_SETUP_STREAM.values())}"
    )
    lp_obj = float(np.dot([w for w in _weights_of(alg, instance)], x))
    report = RoundingReport(
        algorithm=alg,
        trials=trials,
        seed=spec.seed,
        chunk=CHUNK_TRIALS,
        stream=stream,
        lp_objective=lp_obj,
        mean_objective=float(mean_obj),
        objective_std_err=float(math.sqrt(var_obj / trials)),
        feasibility_violations=int(violations),
        min_ratio=min(ratios) if ratios else None,
        opt_value=opt_value,
        items=tuple(items),
        notes=tuple(notes),
    )
    if spec.sink is not None:
        write_report_json(report, spec.sink)
    return report


def _weights_of(alg, instance):
    if alg == "hm":
        return [w for _, w in instance.edges]
    if alg == "ufp":
        return [w for _, _, w in instance.demands]
    if alg == "sksp":
        return [it.expected_weight for it in instance.items]
    return list(instance.weights)


# ---------------------------------------------------------------------------
# Report serialization

def report_to_dict(r):
    return {
        "algorithm": r.algorithm,
        "trials": r.trials,
        "seed": r.seed,
        "chunk": r.chunk,
        "stream": r.stream,
        "lp_objective": r.lp_objective,
        "mean_objective": r.mean_objective,
        "objective_std_err": r.objective_std_err,
        "feasibility_violations": r.feasibility_violations,
        "min_ratio": r.min_ratio,
        "opt_value": r.opt_value,
        "notes": list(r.notes),
        "items": [
            {
                "index": it.index,
                "x": it.x,
                "frequency": it.frequency,
                "std_err": it.std_err,
                "floor": it.floor,
                "ratio": it.ratio,
            }
            for it in r.items
        ],
    }


def report_to_json(r):
    return json.dumps(report_to_dict(r), indent=1, sort_keys=True) + "\n"


def write_report_json(r, path):
    with open(path, "w") as fh:
        fh.write(report_to_json(r))


def write_report_csv(r, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "x", "frequency", "std_err", "analytic_floor",
                         "ratio"])
        for it in r.items:
            writer.writerow([
                it.index, repr(it.x), repr(it.frequency), repr(it.std_err),
                repr(it.floor), "" if it.ratio is None else repr(it.ratio),
            ])


def format_report(r):
    """Human-readable block for terminal output."""
    lines = [
        f"algorithm={r.algorithm} trials={r.trials} seed={r.seed} "
        f"violations={r.feasibility_violations}",
        f"lp_objective={r.lp_objective:.6g} mean_objective={r.mean_objective:.6g} "
        f"(stderr {r.objective_std_err:.3g})",
    ]
    if r.min_ratio is not None:
        lines.append(f"min_ratio={r.min_ratio:.4f}")
    if r.opt_value is not None:
        lines.append(f"opt_value={r.opt_value:.6g}")
    lines.append(f"{'index':>5} {'x':>9} {'freq':>9} {'stderr':>9} "
                 f"{'floor':>9} {'ratio':>8}")
    for it in r.items:
        ratio = f"{it.ratio:8.4f}" if it.ratio is not None else "       -"
        lines.append(
            f"{it.index:>5} {it.x:9.5f} {it.frequency:9.5f} {it.std_err:9.5f} "
            f"{it.floor:9.5f} {ratio}"
        )
    lines.extend(f"note: {s}" for s in r.notes)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Memoized Monte Carlo for small instances

def mc_inclusion_kcspip(inst, x, params, trials, seed):
    """Per-item inclusion counts over many pipeline trials, fast.

    Everything after the independent sampling step is deterministic
    when epsilon is unset, so the trial law factors through the sampled
    mask: draw masks in bulk, memoize mask -> color classes, then pick
    a uniform class.  The joint law (Bernoulli mask, pipeline, uniform
    color) is identical to `round_kcspip`; only the stream layout
    differs.  Every memoized class is checked feasible, so a violation
    anywhere in the support would raise instead of being sampled over.
    Requires n <= 16.  Returns an int64 count vector of length n.
    """
    require_valid(inst)
    if inst.n > EXACT_MARGINAL_CAP:
        raise SizeError(f"n={inst.n} exceeds memoized cap {EXACT_MARGINAL_CAP}")
    if params.epsilon is not None:
        raise ValidationError("memoized path needs the deterministic coloring")
    if trials < 1:
        raise ParamError("trials must be positive")
    rounder = KcsRounder(inst, x, params)
    palette = rounder.palette
    n = inst.n
    table = np.full((1 << n, palette), -1, dtype=np.int64)
    known = np.zeros(1 << n, dtype=bool)

    def memoize(mask):
        sampled = frozenset(j for j in range(n) if (mask >> j) & 1)
        classes = rounder.color_classes(sampled)
        row = np.zeros(palette, dtype=np.int64)
        for color, members in enumerate(classes):
            if not check_feasible(inst, members):
                raise InternalInvariantError(
                    f"infeasible color class {members} for mask {mask:#x}"
                )
            bm = 0
            for j in members:
                bm |= 1 << j
            row[color] = bm
        table[mask] = row
        known[mask] = True

    powers = (1 << np.arange(n)).astype(np.int64)
    p = rounder.p
    counts = np.zeros(n, dtype=np.int64)
    chunk = 1 << 15
    n_chunks = (trials + chunk - 1) // chunk
    for c in range(n_chunks):
        b = min(chunk, trials - c * chunk)
        rng = trial_rng(seed, c, module=_ORACLE_STREAM)
        masks = ((rng.random((b, n)) < p) @ powers).astype(np.int64)
        colors = rng.integers(palette, size=b)
        for mask in np.unique(masks):
            if not known[mask]:
                memoize(int(mask))
        outcome = table[masks, colors]
        for j in range(n):
            counts[j] += int(((outcome >> j) & 1).sum())
    return counts


def kcspip_ratio_trend(ks=(5, 10, 20, 40), trials=20_000, seed=0, jobs=1):
    """Worst per-item ratio on the tight family at increasing k.

    Returns one dict per k with the instance shape, the pipeline
    parameters actually used, and the achieved min and mean ratios.
    The floors use the universal constant 1/(2k); the trend across k is
    the quantity of interest, not a fixed threshold.
    """
    rows = []
    for k in ks:
        inst = gen_gap_instance(k)
        x = solve_packing_lp(inst, strengthen=True).x
        spec = ExperimentSpec("kcspip", inst, trials, seed, jobs=jobs)
        rep = empirical_ratio(spec, x=x)
        ratios = [it.ratio for it in rep.items if it.ratio is not None]
        kp = KcsParams.defaults(k)
        rows.append({
            "k": k,
            "n": inst.n,
            "alpha": kp.alpha,
            "d": kp.d,
            "trials": trials,
            "min_ratio": rep.min_ratio,
            "mean_ratio": sum(ratios) / len(ratios) if ratios else None,
            "violations": rep.feasibility_violations,
        })
    return rows
