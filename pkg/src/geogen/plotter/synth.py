"""End-to-end diagram synthesis for one (master seed, index) pair."""

from __future__ import annotations

import numpy as np

from geogen.errors import UnsatisfiedAfterRetries
from geogen.formal.registry import Registry
from geogen.plotter.constraints import augment_segments, build_constraints, solve_coordinates
from geogen.plotter.diagram import Canvas, Diagram, SynthConfig
from geogen.plotter.sampling import instantiate, sample_combination


REBIND_ROUNDS = 10


def diagram_rng(master_seed: int, index: int) -> np.random.Generator:
    """Independent stream per diagram, derived from the master seed."""
    return np.random.default_rng([int(master_seed), int(index)])


def synthesize(master_seed: int, index: int, registry: Registry, config: SynthConfig | None = None,
               canvas: Canvas | None = None) -> Diagram:
    """Sample, instantiate, solve and augment one diagram.

    The retry budget is shared between re-binding the relations (some
    bindings are structurally degenerate, e.g. a perpendicular foot that
    falls on a right-angle vertex) and resampling coordinates.  Raises
    UnsatisfiedAfterRetries when it runs out.
    """
    config = config or SynthConfig()
    rng = diagram_rng(master_seed, index)
    combo = sample_combination(registry, config, rng)
    rounds = min(REBIND_ROUNDS, config.retry_budget)
    per_round = config.retry_budget // rounds
    diagnostics: list[str] = []
    for _ in range(rounds):
        lits = instantiate(combo, rng, registry)
        system = build_constraints(lits, registry)
        try:
            d = solve_coordinates(system, rng, config, canvas, attempts=per_round)
            break
        except UnsatisfiedAfterRetries as exc:
            diagnostics.extend(exc.diagnostics)
    else:
        raise UnsatisfiedAfterRetries(
            f"{'+'.join(p.name for p in combo)}: no valid diagram in {config.retry_budget} attempts", diagnostics)
    d = augment_segments(d, rng, config)
    d.id = f"d{master_seed}-{index:06d}"
    d.seed = int(master_seed)
    return d
