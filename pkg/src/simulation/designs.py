"""Simulation designs: the recovery study and the essay-rating reconstruction"""
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import cached_property
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from src.core.config import StudyConfig
from src.core.exceptions import ConfigurationError, ParameterError
from src.core.logging_config import get_logger
from src.core.models.parameters import ModelFamily, ModelSpec, ParameterSet
from src.core.models.ratings import RatingDataset

logger = get_logger(__name__)

STUDY1_RATERS = 20
STUDY1_STUDENTS = 50
STUDY1_ITEMS = 40
STUDY1_SIGMA = 0.5
STUDY1_INTERCEPT = 0.5

ESSAY_POOL_SIZE = 363
ESSAY_SIGMA = 2.51
ESSAY_TOPICS = ('family', 'school', 'sport', 'work')
ESSAY_CRITERIA = {
    'specificity': -1.54,
    'coherence': -1.45,
    'structure': 0.19,
    'grammar': 0.76,
    'content': 2.04,
}

# topic -> rater -> (ratings, summed score, rho, eta, kappa_bar)
ESSAY_REFERENCE: Dict[str, Dict[str, Tuple[int, int, float, float, float]]] = {
    'family': {'AM': (440, 338, 1.00, -2.24, 0.76), 'BE': (435, 273, 0.71, -0.88, 0.82),
               'CO': (450, 195, 0.65, 0.85, 0.78), 'DA': (365, 103, 0.79, 2.04, 0.67)},
    'school': {'AM': (525, 392, 0.50, -1.57, 0.54), 'BE': (470, 298, 0.61, -1.09, 0.72),
               'CO': (535, 220, 0.88, 0.99, 0.90), 'DA': (520, 155, 0.66, 1.83, 0.62)},
    'sport': {'AM': (370, 286, 0.48, -1.77, 0.48), 'BE': (535, 320, 0.71, -1.17, 0.78),
              'CO': (485, 178, 0.76, 1.52, 0.75), 'DA': (460, 142, 0.55, 1.67, 0.56)},
    'work': {'AM': (455, 335, 0.52, -1.78, 0.51), 'BE': (380, 233, 0.54, -1.01, 0.68),
             'CO': (440, 183, 0.63, 0.85, 0.77), 'DA': (395, 106, 0.82, 1.76, 0.74)},
}


class AssignmentKind(str, Enum):
    COMPLETE = 'complete'
    INCOMPLETE = 'incomplete'


def _ids(prefix: str, count: int) -> Tuple[str, ...]:
    width = len(str(count))
    return tuple(f"{prefix}{k:0{width}d}" for k in range(1, count + 1))


@dataclass(frozen=True, eq=False)
class StudyDesign:
    """
    Generating truth and rating layout of a simulation study

    ``assignment`` maps each student to the raters who rate all of that
    student's items; ``None`` means every rater rates every student on
    every item. Identifier order matches the parameter arrays of
    ``true_params``.
    """
    name: str
    student_ids: Tuple[str, ...]
    rater_ids: Tuple[str, ...]
    item_ids: Tuple[str, ...]
    true_params: ParameterSet
    assignment: Optional[Mapping[str, Tuple[str, ...]]] = None
    replications: int = 200
    seed: int = 0
    fit_families: Tuple[ModelFamily, ...] = (ModelFamily.GMF, ModelFamily.TFM)
    true_spec: ModelSpec = field(default_factory=lambda: ModelSpec.default(ModelFamily.GMF))
    group: Optional[str] = None

    def __post_init__(self):
        params = self.true_params
        if (params.n_students, params.n_raters, params.n_items) != (self.n_students, self.n_raters, self.n_items):
            raise ParameterError(
                f"Design {self.name!r} has N={self.n_students}, R={self.n_raters}, I={self.n_items} "
                f"but the truth has N={params.n_students}, R={params.n_raters}, I={params.n_items}"
            )
        if self.replications < 1:
            raise ConfigurationError(f"replications must be positive, got {self.replications}")
        families = tuple(ModelFamily(f) for f in self.fit_families)
        if any(f not in (ModelFamily.TFM, ModelFamily.GMF) for f in families):
            raise ConfigurationError("Recovery studies fit TFM and GMF only")
        object.__setattr__(self, 'fit_families', families)
        for ids, label in ((self.student_ids, 'student'), (self.rater_ids, 'rater'), (self.item_ids, 'item')):
            if len(set(ids)) != len(ids):
                raise ConfigurationError(f"Duplicate {label} identifiers in design {self.name!r}")

        if self.assignment is not None:
            missing = [s for s in self.student_ids if not self.assignment.get(s)]
            if missing:
                raise ConfigurationError(f"Assignment leaves {len(missing)} students unrated, e.g. {missing[0]!r}")
            known = set(self.rater_ids)
            unknown = {r for raters in self.assignment.values() for r in raters} - known
            if unknown:
                raise ConfigurationError(f"Assignment names unknown raters {sorted(unknown)}")

    @property
    def n_students(self) -> int:
        return len(self.student_ids)

    @property
    def n_raters(self) -> int:
        return len(self.rater_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @property
    def assignment_kind(self) -> AssignmentKind:
        return AssignmentKind.COMPLETE if self.assignment is None else AssignmentKind.INCOMPLETE

    @cached_property
    def skeleton(self) -> RatingDataset:
        """Rating layout with every score set to 0"""
        n_items = self.n_items
        if self.assignment is None:
            pairs_student = np.repeat(np.arange(self.n_students), self.n_raters)
            pairs_rater = np.tile(np.arange(self.n_raters), self.n_students)
        else:
            position = {rid: k for k, rid in enumerate(self.rater_ids)}
            students, raters = [], []
            for s, sid in enumerate(self.student_ids):
                for rid in sorted(set(self.assignment[sid]), key=position.get):
                    students.append(s)
                    raters.append(position[rid])
            pairs_student = np.asarray(students, dtype=np.intp)
            pairs_rater = np.asarray(raters, dtype=np.intp)

        student_index = np.repeat(pairs_student, n_items)
        rater_index = np.repeat(pairs_rater, n_items)
        item_index = np.tile(np.arange(n_items), len(pairs_student))
        for array in (student_index, rater_index, item_index):
            array.setflags(write=False)
        return RatingDataset(
            student_ids=self.student_ids,
            rater_ids=self.rater_ids,
            item_ids=self.item_ids,
            student_index=student_index,
            rater_index=rater_index,
            item_index=item_index,
            scores=np.zeros(len(student_index), dtype=np.int8),
        )

    @property
    def n_records(self) -> int:
        return self.skeleton.n_records

    def configured(self, config: StudyConfig) -> 'StudyDesign':
        """Copy with the replication count and fit families of a study configuration"""
        return replace(self, replications=config.replications, fit_families=config.families)

    def with_truth(self, params: ParameterSet) -> 'StudyDesign':
        return replace(self, true_params=params)


def complete_design(name: str, params: ParameterSet, seed: int = 0, **kwargs) -> StudyDesign:
    """Complete design with generated identifiers s*, r*, i* sized from the parameters"""
    return StudyDesign(
        name=name,
        student_ids=_ids('s', params.n_students),
        rater_ids=_ids('r', params.n_raters),
        item_ids=_ids('i', params.n_items),
        true_params=params,
        seed=seed,
        **kwargs,
    )


def standard_normal_sample(size: int, seed: int, stream: Sequence[int] = ()) -> np.ndarray:
    """Draw abilities and standardise them to mean 0 and variance 1"""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, *stream])))
    draws = rng.standard_normal(size)
    if size > 1:
        draws = (draws - draws.mean()) / draws.std()
    return draws


def study1_raw_parameters() -> Dict[str, np.ndarray]:
    """Rater and item parameters of the recovery study before centring"""
    r = np.arange(1, STUDY1_RATERS + 1)
    i = np.arange(1, STUDY1_ITEMS + 1)
    return {
        'rho': r / STUDY1_RATERS,
        'eta': (21 - r) / 9.0 - 1.0,
        'delta': i / 19.0,
    }


def generate_study1_truth(seed: int = 0, replications: int = 200) -> StudyDesign:
    """
    Recovery-study design: 20 raters, 50 students and 40 items, fully crossed

    rho_r = r / 20 and eta_r = (21 - r) / 9 - 1, so rater 20 is the most
    discriminating and the least severe. Item difficulties follow i / 19.
    eta and delta are centred with their means folded into the intercept
    of 0.5, which leaves every success probability unchanged. Abilities are
    drawn once per seed from N(0, 1) and standardised; sigma = 0.5.
    """
    raw = study1_raw_parameters()
    eta_mean = float(raw['eta'].mean())
    delta_mean = float(raw['delta'].mean())
    params = ParameterSet(
        theta_prime=standard_normal_sample(STUDY1_STUDENTS, seed),
        sigma=STUDY1_SIGMA,
        rho=raw['rho'],
        eta=raw['eta'] - eta_mean,
        delta=raw['delta'] - delta_mean,
        alpha=STUDY1_INTERCEPT - eta_mean - delta_mean,
    )
    logger.debug(f"Study 1 truth: alpha={params.alpha:.4f}, seed={seed}")
    return complete_design('study1', params, seed=seed, replications=replications)


def essay_allocation(topic: str, seed: int) -> Dict[str, Tuple[str, ...]]:
    """
    Random student-to-rater allocation of one topic

    Each rater receives ratings / 5 distinct students from the pool, so
    the record counts match the reference counts.
    """
    if topic not in ESSAY_REFERENCE:
        raise ConfigurationError(f"Unknown topic {topic!r}; expected one of {list(ESSAY_REFERENCE)}")
    pool = _ids('p', ESSAY_POOL_SIZE)
    n_criteria = len(ESSAY_CRITERIA)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, ESSAY_TOPICS.index(topic)])))
    allocation: Dict[str, set] = {}
    for rater, (count, *_rest) in sorted(ESSAY_REFERENCE[topic].items()):
        chosen = rng.choice(ESSAY_POOL_SIZE, size=count // n_criteria, replace=False)
        for k in np.sort(chosen):
            allocation.setdefault(pool[k], set()).add(rater)
    return {student: tuple(sorted(raters)) for student, raters in sorted(allocation.items())}


def generate_study2_design(topic: str, seed: int = 0, replications: int = 200) -> StudyDesign:
    """
    Essay-rating design of one topic with the reference estimates as truth

    Four raters rate the five criteria of an allocated subset of a pool of
    363 students; sigma = 2.51, alpha = 0 and the reference rho and eta
    values of the topic are used unchanged.
    """
    allocation = essay_allocation(topic, seed)
    student_ids = tuple(allocation)
    pool_ids = _ids('p', ESSAY_POOL_SIZE)
    pool_theta = standard_normal_sample(ESSAY_POOL_SIZE, seed, stream=(len(ESSAY_TOPICS),))
    position = {sid: k for k, sid in enumerate(pool_ids)}
    theta = pool_theta[[position[s] for s in student_ids]]

    reference = ESSAY_REFERENCE[topic]
    rater_ids = tuple(sorted(reference))
    item_ids = tuple(sorted(ESSAY_CRITERIA))
    params = ParameterSet(
        theta_prime=theta,
        sigma=ESSAY_SIGMA,
        rho=[reference[r][2] for r in rater_ids],
        eta=[reference[r][3] for r in rater_ids],
        delta=[ESSAY_CRITERIA[i] for i in item_ids],
        alpha=0.0,
    )
    logger.debug(f"Study 2 design for {topic!r}: {len(student_ids)} students, seed={seed}")
    return StudyDesign(
        name=f'study2-{topic}',
        student_ids=student_ids,
        rater_ids=rater_ids,
        item_ids=item_ids,
        true_params=params,
        assignment=allocation,
        replications=replications,
        seed=seed,
        fit_families=(ModelFamily.GMF,),
        group=topic,
    )
