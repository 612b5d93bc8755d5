"""NSGA-II neuroevolution over prescriptor genomes.

Two objectives, both minimized: mean predicted ELUC and mean percent change
over an evaluation sample. An all-time archive accumulates every evaluated
individual that no other evaluated individual dominates; the final front is
read from the archive, not from the last generation.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset
from .land import MOD_IDX, apply_batch, change_batch
from .predictors.base import Predictor
from .prescriptor import GENOME_LENGTH, decode, encode, random_net, save_prescriptor


@dataclass(frozen=True)
class Objectives:
    eluc_mean: float
    change_mean: float

    def __post_init__(self):
        if not (math.isfinite(self.eluc_mean) and math.isfinite(self.change_mean)):
            raise ValueError(f"objectives must be finite: {self}")
        if not 0.0 <= self.change_mean <= 100.0:
            raise ValueError(f"change_mean out of [0, 100]: {self.change_mean}")

    def as_tuple(self) -> tuple[float, float]:
        return (self.eluc_mean, self.change_mean)


def dominates(a: Objectives, b: Objectives) -> bool:
    """True iff a is no worse in both objectives and strictly better in one."""
    return (
        a.eluc_mean <= b.eluc_mean
        and a.change_mean <= b.change_mean
        and (a.eluc_mean < b.eluc_mean or a.change_mean < b.change_mean)
    )


@dataclass
class Individual:
    genome: np.ndarray
    objectives: Objectives | None = None
    rank: int = -1
    crowding: float = 0.0


@dataclass
class EvolutionConfig:
    population_size: int = 100
    generations: int = 50
    nb_elites: int = 10
    mutation_probability: float = 0.2
    mutation_factor: float = 0.2
    remove_population_pct: float = 0.8
    initialization_range: float = 1.0
    eval_fraction: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.nb_elites <= self.population_size:
            raise ValueError("nb_elites must be in (0, population_size]")
        if not 0.0 <= self.remove_population_pct < 1.0:
            raise ValueError("remove_population_pct must be in [0, 1)")
        if not 0.0 <= self.mutation_probability <= 1.0:
            raise ValueError("mutation_probability must be in [0, 1]")
        if self.mutation_factor < 0.0:
            raise ValueError("mutation_factor must be >= 0")

    def as_dict(self) -> dict:
        return {
            "population_size": self.population_size,
            "generations": self.generations,
            "nb_elites": self.nb_elites,
            "mutation_probability": self.mutation_probability,
            "mutation_factor": self.mutation_factor,
            "remove_population_pct": self.remove_population_pct,
            "initialization_range": self.initialization_range,
            "eval_fraction": self.eval_fraction,
            "seed": self.seed,
            "parent_selection": "tournament",
            "mutation_type": "gaussian_noise_percentage",
            "initialization_distribution": "orthogonal",
        }


def fast_nondominated_sort(pop: list[Individual]) -> list[list[Individual]]:
    """Partition an evaluated population into dominance fronts."""
    for ind in pop:
        if ind.objectives is None:
            raise ValueError("population contains an unevaluated individual")
    n = len(pop)
    dominated_by = [[] for _ in range(n)]
    n_dominators = [0] * n
    fronts_idx = [[]]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            if dominates(pop[i].objectives, pop[j].objectives):
                dominated_by[i].append(j)
            elif dominates(pop[j].objectives, pop[i].objectives):
                n_dominators[i] += 1
        if n_dominators[i] == 0:
            pop[i].rank = 0
            fronts_idx[0].append(i)
    k = 0
    while fronts_idx[k]:
        nxt = []
        for i in fronts_idx[k]:
            for j in dominated_by[i]:
                n_dominators[j] -= 1
                if n_dominators[j] == 0:
                    pop[j].rank = k + 1
                    nxt.append(j)
        k += 1
        fronts_idx.append(nxt)
    fronts_idx.pop()
    return [[pop[i] for i in f] for f in fronts_idx]


def crowding_distance(front: list[Individual]) -> None:
    """Assign crowding distances in place; boundaries get +inf per objective."""
    if not front:
        raise ValueError("empty front")
    for ind in front:
        ind.crowding = 0.0
    n = len(front)
    for key in (lambda o: o.eluc_mean, lambda o: o.change_mean):
        order = sorted(range(n), key=lambda i: key(front[i].objectives))
        vals = [key(front[i].objectives) for i in order]
        front[order[0]].crowding = math.inf
        front[order[-1]].crowding = math.inf
        span = vals[-1] - vals[0]
        if span <= 0.0:
            continue
        for r in range(1, n - 1):
            i = order[r]
            if front[i].crowding != math.inf:
                front[i].crowding += (vals[r + 1] - vals[r - 1]) / span


def sort_population(pop: list[Individual]) -> list[Individual]:
    """Ranks, crowding, then the population ordered best-first (stable)."""
    fronts = fast_nondominated_sort(pop)
    for front in fronts:
        crowding_distance(front)
    return sorted(pop, key=lambda ind: (ind.rank, -ind.crowding))


def tournament_select(pool: list[Individual], rng: np.random.Generator) -> Individual:
    """Binary tournament on (rank, crowding), random tie-break."""
    a = pool[int(rng.integers(len(pool)))]
    b = pool[int(rng.integers(len(pool)))]
    if a.rank != b.rank:
        return a if a.rank < b.rank else b
    if a.crowding != b.crowding:
        return a if a.crowding > b.crowding else b
    return a if rng.random() < 0.5 else b


def crossover(a: np.ndarray, b: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Uniform crossover: each gene from either parent with probability 1/2."""
    if a.shape != b.shape:
        raise ValueError(f"genome length mismatch: {a.shape} vs {b.shape}")
    take_a = rng.random(a.shape[0]) < 0.5
    return np.where(take_a, a, b)


def mutate(genome: np.ndarray, probability: float, factor: float,
           rng: np.random.Generator) -> np.ndarray:
    """Multiplicative gaussian noise: g *= 1 + N(0, factor), per gene."""
    out = genome.copy()
    hit = rng.random(out.shape[0]) < probability
    k = int(hit.sum())
    if k and factor > 0.0:
        out[hit] *= 1.0 + rng.normal(0.0, factor, k)
    return out


def init_population(cfg: EvolutionConfig, seeds: list[np.ndarray],
                    rng: np.random.Generator) -> list[Individual]:
    """Seed genomes verbatim, the rest from orthogonal initialization."""
    if len(seeds) > cfg.population_size:
        raise ValueError("more seeds than population slots")
    pop = [Individual(np.asarray(g, dtype=np.float64).copy()) for g in seeds]
    while len(pop) < cfg.population_size:
        pop.append(Individual(encode(random_net(rng, scale=cfg.initialization_range))))
    return pop


class ParetoArchive:
    """All-time mutually non-dominated set of (genome, objectives)."""

    def __init__(self):
        self.members: list[tuple[np.ndarray, Objectives]] = []

    def __len__(self) -> int:
        return len(self.members)

    def insert(self, genome: np.ndarray, obj: Objectives) -> bool:
        """Insert unless dominated (or an exact objective duplicate); prune."""
        for _, kept in self.members:
            if dominates(kept, obj) or kept.as_tuple() == obj.as_tuple():
                return False
        self.members = [(g, o) for g, o in self.members if not dominates(obj, o)]
        self.members.append((genome.copy(), obj))
        return True

    def update(self, pop: list[Individual]) -> None:
        for ind in pop:
            self.insert(ind.genome, ind.objectives)

    def sorted_members(self) -> list[tuple[np.ndarray, Objectives]]:
        return sorted(self.members, key=lambda m: (m[1].change_mean, m[1].eluc_mean))


def hypervolume(front: list[Objectives], reference: Objectives) -> float:
    """Area dominated by a 2-D front up to a reference point (both minimized)."""
    if not front:
        return 0.0
    for o in front:
        if not (o.eluc_mean < reference.eluc_mean and o.change_mean < reference.change_mean):
            raise ValueError(f"front point {o} does not dominate the reference {reference}")
    pts = sorted((o.eluc_mean, o.change_mean) for o in front)
    hv = 0.0
    best_change = reference.change_mean
    for eluc, change in pts:
        if change < best_change:
            hv += (reference.eluc_mean - eluc) * (best_change - change)
            best_change = change
    return hv


@dataclass
class EvalContexts:
    """Columnar contexts for candidate evaluation."""

    usage: np.ndarray
    nonland: np.ndarray
    area: np.ndarray
    lat: np.ndarray
    lon: np.ndarray
    year: np.ndarray

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "EvalContexts":
        return cls(ds.usage.copy(), ds.nonland.copy(), ds.area.copy(),
                   ds.lat.copy(), ds.lon.copy(), ds.year.copy())

    def __len__(self) -> int:
        return len(self.area)


def evaluate_candidate(genome: np.ndarray, ctxs: EvalContexts, predictor: Predictor) -> Objectives:
    """Prescribe on every context, apply, and average predicted ELUC and change."""
    from .prescriptor import prescribe_batch

    if len(ctxs) == 0:
        raise ValueError("empty evaluation set")
    net = decode(genome)
    recs = prescribe_batch(net, ctxs.usage, ctxs.area)
    after = apply_batch(ctxs.usage, recs)
    delta = after - ctxs.usage
    change = change_batch(ctxs.usage, after, ctxs.nonland)
    eluc = predictor.predict_batch(ctxs.usage, ctxs.nonland, delta, ctxs.area,
                                   ctxs.lat, ctxs.lon, ctxs.year)
    return Objectives(float(eluc.mean()), float(change.mean()))


@dataclass
class EvolveResult:
    population: list[Individual]
    archive: ParetoArchive
    stats: list[dict]
    config: EvolutionConfig
    hv_reference: Objectives | None = None


def evolve(cfg: EvolutionConfig, ctxs: EvalContexts, predictor: Predictor,
           seeds: list[np.ndarray] | None = None) -> EvolveResult:
    """Run the full NSGA-II loop.

    Per generation: evaluate the unevaluated, sort, archive every evaluated
    individual, keep the best (1 - remove_population_pct) as survivors and
    parents, and refill with mutated uniform-crossover offspring. Elites (the
    nb_elites best) re-enter unchanged as part of the survivors.
    """
    rng = np.random.default_rng(cfg.seed)
    pop = init_population(cfg, seeds or [], rng)
    archive = ParetoArchive()
    stats: list[dict] = []
    max_eluc_seen = -math.inf

    def eval_new(individuals: list[Individual]) -> None:
        nonlocal max_eluc_seen
        for ind in individuals:
            if ind.objectives is None:
                ind.objectives = evaluate_candidate(ind.genome, ctxs, predictor)
                max_eluc_seen = max(max_eluc_seen, ind.objectives.eluc_mean)
        archive.update(individuals)

    def record(gen: int) -> None:
        ref = Objectives(max_eluc_seen + 1.0, 101.0)
        hv = hypervolume([o for _, o in archive.members], ref)
        elucs = [ind.objectives.eluc_mean for ind in pop]
        changes = [ind.objectives.change_mean for ind in pop]
        stats.append({
            "generation": gen,
            "best_eluc": min(elucs),
            "mean_eluc": sum(elucs) / len(elucs),
            "best_change": min(changes),
            "mean_change": sum(changes) / len(changes),
            "archive_size": len(archive),
            "archive_hypervolume": hv,
        })

    eval_new(pop)
    record(0)

    n_remove = int(cfg.remove_population_pct * cfg.population_size)
    n_survive = max(cfg.nb_elites, cfg.population_size - n_remove)
    for gen in range(1, cfg.generations + 1):
        ordered = sort_population(pop)
        survivors = ordered[:n_survive]
        offspring = []
        while len(survivors) + len(offspring) < cfg.population_size:
            pa = tournament_select(survivors, rng)
            pb = tournament_select(survivors, rng)
            child = crossover(pa.genome, pb.genome, rng)
            child = mutate(child, cfg.mutation_probability, cfg.mutation_factor, rng)
            offspring.append(Individual(child))
        eval_new(offspring)
        pop = survivors + offspring
        record(gen)

    pop = sort_population(pop)
    return EvolveResult(pop, archive, stats, cfg,
                        hv_reference=Objectives(max_eluc_seen + 1.0, 101.0))


STATS_COLUMNS = ("generation", "best_eluc", "mean_eluc", "best_change", "mean_change",
                 "archive_size", "archive_hypervolume")


def write_run_outputs(result: EvolveResult, out_dir, extra_config: dict | None = None) -> None:
    """Write config.json, generation_stats.csv, archive/, and pareto.csv."""
    out = Path(out_dir)
    (out / "archive").mkdir(parents=True, exist_ok=True)

    cfg_doc = result.config.as_dict()
    if extra_config:
        cfg_doc.update(extra_config)
    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(cfg_doc, fh, indent=2)
        fh.write("\n")

    with open(out / "generation_stats.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(STATS_COLUMNS)
        for row in result.stats:
            writer.writerow([
                row["generation"], repr(row["best_eluc"]), repr(row["mean_eluc"]),
                repr(row["best_change"]), repr(row["mean_change"]),
                row["archive_size"], repr(row["archive_hypervolume"]),
            ])

    members = result.archive.sorted_members()
    with open(out / "pareto.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "eluc_mean", "change_mean"])
        for i, (genome, obj) in enumerate(members):
            pid = f"p{i:03d}"
            writer.writerow([pid, repr(obj.eluc_mean), repr(obj.change_mean)])
            save_prescriptor(decode(genome), out / "archive" / f"{pid}.json", metadata={
                "prescriptor_id": pid,
                "eluc_mean": obj.eluc_mean,
                "change_mean": obj.change_mean,
                "seed": result.config.seed,
            })
