"""Bernoulli rating generation with counter-based, order-independent random streams"""
from typing import Optional, Sequence

import numpy as np

from src.analysis.probability_model import record_probabilities
from src.core.logging_config import get_logger
from src.core.models.parameters import ModelSpec, ParameterSet
from src.core.models.ratings import RatingDataset
from src.simulation.designs import StudyDesign

logger = get_logger(__name__)


def replication_rng(seed: int, replication: int, stream: Sequence[int] = ()) -> np.random.Generator:
    """
    Philox generator keyed by (seed, stream..., replication)

    Draws of one replication do not depend on which other replications
    ran or in which order, so replications can run in parallel.
    """
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream),
                                                                         int(replication)])))


def simulate_dataset(truth: ParameterSet, design: StudyDesign, seed: Optional[int] = None,
                     replication: int = 0, stream: Sequence[int] = (),
                     spec: Optional[ModelSpec] = None) -> RatingDataset:
    """
    Draw one rating data set from the generating model

    Record k of the design receives the k-th uniform draw of the
    replication's stream; its score is 1 when the draw falls below the
    success probability.

    Args:
        truth: Generating parameters, aligned with the design's identifiers
        design: Study design supplying the rating layout
        seed: Base seed (defaults to the design seed)
        replication: Replication number
        stream: Extra key components, e.g. sweep coordinates
        spec: Generating model (defaults to the design's)

    Returns:
        RatingDataset with the design's identifiers
    """
    skeleton = design.skeleton
    spec = spec or design.true_spec
    seed = design.seed if seed is None else seed
    probabilities = record_probabilities(spec, truth, skeleton)
    draws = replication_rng(seed, replication, stream).random(skeleton.n_records)
    data = skeleton.with_scores((draws < probabilities).astype(np.int8))
    logger.debug(f"Simulated {design.name} replication {replication}: {data.n_records} records, "
                 f"pass rate {data.scores.mean():.3f}")
    return data
