"""
Dataset directories

A dataset is a directory with one subdirectory per lesion, in one of two
layouts:

- a pre-stent pullback directory (``meta.txt`` plus masks), whose post-stent
  areas are listed in the dataset's ``truth.csv``
  (``lesion_id,frame,post_area_mm2,phenotype``, frames in pre-stent
  indices), as written by the synthetic generator;
- ``pre/`` and ``post/`` pullback directories, optionally with a
  ``registration.txt`` of ``z_offset_frames=`` and ``rotation_deg=`` lines.
  Post-stent areas are read from the registered post pullback.

Lesions without either source of targets are loaded without them.
"""

import collections
import dataclasses
import logging
import os

from stentpred.data.pullback import META_FILENAME, PullbackError, load_pullback
from stentpred.data.registration import RegistrationTransform
from stentpred.features.assemble import (LesionTargets, extract_lesion,
                                         lesion_targets_from_post)
from stentpred.util.misc import csv_rows


__all__ = ["LesionInput", "read_truth", "read_registration", "load_dataset",
           "load_records"]


logger = logging.getLogger(__name__)

TRUTH_FILENAME = "truth.csv"
REGISTRATION_FILENAME = "registration.txt"


@dataclasses.dataclass(frozen=True, eq=False)
class LesionInput:
    lesion_id: str
    pullback: object
    targets: LesionTargets = None


def read_truth(filename):
    """Post-stent areas per lesion: ``{lesion_id: {frame: area}}``."""
    truth = collections.OrderedDict()
    with open(filename, encoding="utf-8", newline="") as f:
        rows = csv_rows(f.read())
    if not rows or rows[0][:3] != ["lesion_id", "frame", "post_area_mm2"]:
        raise PullbackError("{} lacks the lesion_id,frame,post_area_mm2 header".format(
            filename), field=TRUTH_FILENAME)
    for number, cells in enumerate(rows[1:], 1):
        try:
            frame, area = int(cells[1]), float(cells[2])
        except (IndexError, ValueError):
            raise PullbackError("{} row {}: malformed".format(filename, number),
                                field=TRUTH_FILENAME)
        truth.setdefault(cells[0], dict())[frame] = area
    return truth


def read_registration(filename):
    values = dict()
    with open(filename, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if line and not line.startswith("#"):
                key, _, value = line.partition("=")
                values[key.strip()] = value.strip()
    try:
        return RegistrationTransform(int(values.get("z_offset_frames", 0)),
                                     float(values.get("rotation_deg", 0.0)))
    except ValueError:
        raise PullbackError("{}: malformed registration".format(filename),
                            field=REGISTRATION_FILENAME)


def load_dataset(path):
    """Lesion inputs of a dataset directory, sorted by lesion id."""
    if not os.path.isdir(path):
        raise PullbackError("dataset directory {} does not exist".format(path))
    truth_path = os.path.join(path, TRUTH_FILENAME)
    truth = read_truth(truth_path) if os.path.exists(truth_path) else {}
    inputs = []
    for name in sorted(os.listdir(path)):
        lesion_dir = os.path.join(path, name)
        if not os.path.isdir(lesion_dir):
            continue
        if os.path.exists(os.path.join(lesion_dir, META_FILENAME)):
            pre = load_pullback(lesion_dir)
            targets = LesionTargets(truth[name]) if name in truth else None
            inputs.append(LesionInput(name, pre, targets))
        elif os.path.isdir(os.path.join(lesion_dir, "pre")):
            pre = load_pullback(os.path.join(lesion_dir, "pre"))
            targets = None
            post_dir = os.path.join(lesion_dir, "post")
            if os.path.isdir(post_dir):
                reg_path = os.path.join(lesion_dir, REGISTRATION_FILENAME)
                transform = (read_registration(reg_path)
                             if os.path.exists(reg_path) else None)
                targets = lesion_targets_from_post(pre, load_pullback(post_dir),
                                                   transform)
            inputs.append(LesionInput(name, pre, targets))
    if not inputs:
        raise PullbackError("no lesion directories in {}".format(path))
    logger.info("loaded %d lesions from %s", len(inputs), path)
    return inputs


def load_records(path):
    return [extract_lesion(i.pullback, i.targets, i.lesion_id)
            for i in load_dataset(path)]
