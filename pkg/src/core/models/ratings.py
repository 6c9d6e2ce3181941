"""Rating records and the indexed rating dataset"""
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.exceptions import DataValidationError

RATING_COLUMNS = ['student', 'rater', 'item', 'score']


@dataclass(frozen=True)
class RatingRecord:
    """One dichotomous rating of a student on an item by a rater"""
    student_id: str
    rater_id: str
    item_id: str
    score: int

    def __post_init__(self):
        if self.score not in (0, 1):
            raise DataValidationError(
                f"Score must be 0 or 1, got {self.score!r} for "
                f"({self.student_id}, {self.rater_id}, {self.item_id})"
            )


def _freeze(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class RatingDataset:
    """
    Indexed collection of ratings

    Identifiers are kept in sorted order; records refer to them through the
    integer arrays ``student_index``, ``rater_index`` and ``item_index``.
    Every identifier has at least one record and no (student, rater, item)
    triple appears twice.
    """
    student_ids: Tuple[str, ...]
    rater_ids: Tuple[str, ...]
    item_ids: Tuple[str, ...]
    student_index: np.ndarray
    rater_index: np.ndarray
    item_index: np.ndarray
    scores: np.ndarray
    _rater_sets: Tuple[np.ndarray, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        n = len(self.scores)
        for name in ('student_index', 'rater_index', 'item_index'):
            if len(getattr(self, name)) != n:
                raise DataValidationError(f"{name} has {len(getattr(self, name))} entries, expected {n}")
        if n == 0:
            raise DataValidationError("Rating dataset is empty")
        if not np.isin(self.scores, (0, 1)).all():
            raise DataValidationError("Scores must be 0 or 1")

        for ids, index, label in ((self.student_ids, self.student_index, 'student'),
                                  (self.rater_ids, self.rater_index, 'rater'),
                                  (self.item_ids, self.item_index, 'item')):
            counts = np.bincount(index, minlength=len(ids))
            if len(counts) > len(ids) or (counts == 0).any():
                raise DataValidationError(f"Every {label} must have at least one record")

        keys = (self.student_index.astype(np.int64) * len(self.rater_ids) + self.rater_index) \
            * len(self.item_ids) + self.item_index
        unique_keys, first = np.unique(keys, return_index=True)
        if len(unique_keys) != n:
            duplicated = np.setdiff1d(np.arange(n), first)[0]
            raise DataValidationError(
                "Duplicate rating for (student, rater, item) = "
                f"({self.student_ids[self.student_index[duplicated]]}, "
                f"{self.rater_ids[self.rater_index[duplicated]]}, "
                f"{self.item_ids[self.item_index[duplicated]]})"
            )

        order = np.argsort(self.student_index, kind='stable')
        boundaries = np.searchsorted(self.student_index[order], np.arange(len(self.student_ids) + 1))
        sets = tuple(
            _freeze(np.unique(self.rater_index[order[boundaries[k]:boundaries[k + 1]]]))
            for k in range(len(self.student_ids))
        )
        object.__setattr__(self, '_rater_sets', sets)

    @classmethod
    def from_arrays(cls, students: Sequence, raters: Sequence, items: Sequence,
                    scores: Sequence) -> 'RatingDataset':
        """Build a dataset from parallel identifier and score sequences"""
        scores = np.asarray(scores)
        if scores.dtype.kind == 'f' and not np.isin(scores, (0.0, 1.0)).all():
            raise DataValidationError("Scores must be 0 or 1")
        student_codes, student_ids = pd.factorize(pd.Series(students, dtype=str), sort=True)
        rater_codes, rater_ids = pd.factorize(pd.Series(raters, dtype=str), sort=True)
        item_codes, item_ids = pd.factorize(pd.Series(items, dtype=str), sort=True)
        return cls(
            student_ids=tuple(student_ids),
            rater_ids=tuple(rater_ids),
            item_ids=tuple(item_ids),
            student_index=_freeze(np.asarray(student_codes, dtype=np.intp)),
            rater_index=_freeze(np.asarray(rater_codes, dtype=np.intp)),
            item_index=_freeze(np.asarray(item_codes, dtype=np.intp)),
            scores=_freeze(np.asarray(scores, dtype=np.int8)),
        )

    @classmethod
    def from_records(cls, records: Iterable[RatingRecord]) -> 'RatingDataset':
        """Build a dataset from RatingRecord objects"""
        records = list(records)
        return cls.from_arrays(
            [r.student_id for r in records],
            [r.rater_id for r in records],
            [r.item_id for r in records],
            [r.score for r in records],
        )

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> 'RatingDataset':
        """Build a dataset from a frame with student, rater, item and 0/1 score columns"""
        missing = [c for c in RATING_COLUMNS if c not in frame.columns]
        if missing:
            raise DataValidationError(f"Missing required columns: {missing}")
        return cls.from_arrays(frame['student'], frame['rater'], frame['item'], frame['score'])

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
    def n_records(self) -> int:
        return len(self.scores)

    def rater_set(self, student: int) -> np.ndarray:
        """Indices of the raters who rated the given student"""
        return self._rater_sets[student]

    def rater_sets(self) -> Tuple[np.ndarray, ...]:
        return self._rater_sets

    def records(self) -> List[RatingRecord]:
        return [
            RatingRecord(self.student_ids[s], self.rater_ids[r], self.item_ids[i], int(y))
            for s, r, i, y in zip(self.student_index, self.rater_index, self.item_index, self.scores)
        ]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            'student': np.asarray(self.student_ids, dtype=object)[self.student_index],
            'rater': np.asarray(self.rater_ids, dtype=object)[self.rater_index],
            'item': np.asarray(self.item_ids, dtype=object)[self.item_index],
            'score': self.scores.astype(int),
        })

    def rater_summary(self) -> pd.DataFrame:
        """Per-rater record counts and summed scores"""
        counts = np.bincount(self.rater_index, minlength=self.n_raters)
        sums = np.bincount(self.rater_index, weights=self.scores, minlength=self.n_raters)
        return pd.DataFrame({
            'rater': list(self.rater_ids),
            'n_ratings': counts.astype(int),
            'sum_score': sums.astype(int),
        })

    def with_scores(self, scores: Sequence) -> 'RatingDataset':
        """Same design with new 0/1 scores in record order"""
        scores = np.asarray(scores)
        if scores.shape != (self.n_records,):
            raise DataValidationError(f"Expected {self.n_records} scores, got shape {scores.shape}")
        return RatingDataset(
            student_ids=self.student_ids,
            rater_ids=self.rater_ids,
            item_ids=self.item_ids,
            student_index=self.student_index,
            rater_index=self.rater_index,
            item_index=self.item_index,
            scores=_freeze(np.array(scores, dtype=np.int8)),
        )

    def with_cloned_students(self, suffix: str = '#2') -> 'RatingDataset':
        """Dataset with every student duplicated under a new identifier"""
        frame = self.to_frame()
        clone = frame.copy()
        clone['student'] = clone['student'] + suffix
        return RatingDataset.from_frame(pd.concat([frame, clone], ignore_index=True))

    def index_of(self) -> Dict[str, Dict[str, int]]:
        """Identifier-to-position maps for students, raters and items"""
        return {
            'student': {sid: k for k, sid in enumerate(self.student_ids)},
            'rater': {rid: k for k, rid in enumerate(self.rater_ids)},
            'item': {iid: k for k, iid in enumerate(self.item_ids)},
        }
