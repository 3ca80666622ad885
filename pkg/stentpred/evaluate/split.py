import dataclasses

import numpy as np

from stentpred.util.misc import StentpredError


__all__ = ["DEFAULT_TRAIN_FRACTION", "SplitError", "FoldAssignment",
           "split_grouped_kfold", "holdout_split"]


# 78 training lesions out of 110
DEFAULT_TRAIN_FRACTION = 78/110


class SplitError(StentpredError):
    pass


@dataclasses.dataclass(frozen=True, eq=False)
class FoldAssignment:
    """Fold of every item, grouped by patient

    ``fold[i]`` is the fold of item ``i``; ``patients[f]`` lists the patients
    of fold ``f``.
    """
    k: int
    fold: np.ndarray
    patients: tuple

    def indices(self, f):
        return np.flatnonzero(self.fold == f)

    def train_indices(self, f):
        return np.flatnonzero(self.fold != f)


def _shuffled_patients(group_ids, seed):
    patients = np.array(sorted(set(group_ids)), dtype=object)
    rng = np.random.default_rng(seed)
    rng.shuffle(patients)
    return patients


def split_grouped_kfold(group_ids, k, seed):
    """Assign items to ``k`` folds so that no patient spans two folds.

    Patients are shuffled with ``seed`` and dealt into folds whose patient
    counts differ by at most one.
    """
    group_ids = np.asarray(group_ids, dtype=object)
    if k < 2:
        raise SplitError("need at least 2 folds, got {}".format(k))
    patients = _shuffled_patients(group_ids, seed)
    if len(patients) < k:
        raise SplitError("{} patients cannot fill {} folds".format(len(patients), k))
    chunks = np.array_split(patients, k)
    fold_of = dict()
    for f, chunk in enumerate(chunks):
        for patient in chunk:
            fold_of[patient] = f
    fold = np.array([fold_of[g] for g in group_ids], dtype=int)
    return FoldAssignment(k, fold, tuple(tuple(sorted(c)) for c in chunks))


def holdout_split(group_ids, train_fraction=DEFAULT_TRAIN_FRACTION, seed=0):
    """Split items into (train, held-out) index arrays by patient.

    Shuffled patients join the training side while their items fit into
    ``round(train_fraction * len(group_ids))``; the rest are held out.
    """
    group_ids = np.asarray(group_ids, dtype=object)
    if not 0 < train_fraction < 1:
        raise SplitError("train fraction must lie in (0, 1), got {}".format(
            train_fraction))
    wanted = int(round(train_fraction*len(group_ids)))
    counts = dict()
    for g in group_ids:
        counts[g] = counts.get(g, 0) + 1
    train_patients = set()
    size = 0
    for patient in _shuffled_patients(group_ids, seed):
        if size + counts[patient] <= wanted:
            train_patients.add(patient)
            size += counts[patient]
        if size == wanted:
            break
    train = np.array([g in train_patients for g in group_ids])
    if train.all() or not train.any():
        raise SplitError("hold-out split of {} items left one side empty".format(
            len(group_ids)))
    return np.flatnonzero(train), np.flatnonzero(~train)
