import functools

import numpy as np

from stentpred.data.pullback import LUMEN, CALCIFICATION, PRE, Pullback, PullbackMeta
from stentpred.data.synth import SynthConfig, generate_dataset
from stentpred.features.assemble import extract_lesion


# small frames and short lesions keep feature extraction fast
SMALL_SYNTH = SynthConfig(n_lesions=12, seed=11, image_size=64,
                          pixel_spacing_mm=0.04, lesion_frames=(6, 10),
                          reference_frames=3)


def polar(size, center=None):
    """Radius and counter-clockwise angle (degrees) of every pixel."""
    if center is None:
        center = ((size - 1)/2, (size - 1)/2)
    yy, xx = np.ogrid[:size, :size]
    dy, dx = yy - center[0], xx - center[1]
    return np.hypot(dy, dx), np.mod(np.degrees(np.arctan2(dy, dx)), 360)


def disc_mask(size, radius, center=None):
    rr, _ = polar(size, center)
    mask = np.zeros((size, size), dtype=np.uint8)
    mask[rr <= radius] = LUMEN
    return mask


def ellipse_mask(size, col_semi_axis, row_semi_axis):
    c = (size - 1)/2
    yy, xx = np.ogrid[:size, :size]
    inside = ((xx - c)/col_semi_axis)**2 + ((yy - c)/row_semi_axis)**2 <= 1
    mask = np.zeros((size, size), dtype=np.uint8)
    mask[inside] = LUMEN
    return mask


def wedge_mask(size=201, lumen_radius=40, inner=50, outer=80, start_deg=0.0,
               arc_deg=90.0):
    """Lumen disc plus a calcified annular sector ``inner < r <= outer``."""
    rr, theta = polar(size)
    mask = disc_mask(size, lumen_radius)
    sector = np.mod(theta - start_deg, 360) < arc_deg
    mask[sector & (rr > inner) & (rr <= outer)] = CALCIFICATION
    return mask


def make_pullback(frames, lesion=None, spacing=0.01, pitch=0.2, phase=PRE,
                  stent=None, patient_id="P0001", pullback_id="PB0001",
                  phenotype=None):
    frames = np.asarray(frames, dtype=np.uint8)
    n = frames.shape[0]
    if lesion is None:
        lesion = (1, n - 2)
    stent = stent or (None, None)
    meta = PullbackMeta(
        pullback_id=pullback_id,
        phase=phase,
        frame_count=n,
        pixel_spacing_mm=spacing,
        lesion_start_frame=lesion[0],
        lesion_end_frame=lesion[1],
        patient_id=patient_id,
        frame_pitch_mm=pitch,
        stent_start_frame=stent[0],
        stent_end_frame=stent[1],
        phenotype=phenotype)
    return Pullback(meta, frames)


def disc_pullback(radii, size=41, **kwargs):
    """One centered lumen disc per frame."""
    return make_pullback([disc_mask(size, r) for r in radii], **kwargs)


@functools.lru_cache(maxsize=None)
def small_dataset(n_lesions=SMALL_SYNTH.n_lesions, seed=SMALL_SYNTH.seed):
    config = SMALL_SYNTH.replace(n_lesions=n_lesions, seed=seed)
    return tuple(generate_dataset(config))


@functools.lru_cache(maxsize=None)
def small_records(n_lesions=SMALL_SYNTH.n_lesions, seed=SMALL_SYNTH.seed):
    return tuple(extract_lesion(lesion.pullback, lesion.targets, lesion.lesion_id)
                 for lesion in small_dataset(n_lesions, seed))


class DatasetCase:
    n_lesions = SMALL_SYNTH.n_lesions
    seed = SMALL_SYNTH.seed

    def setUp(self):
        self.lesions = small_dataset(self.n_lesions, self.seed)
        self.records = list(small_records(self.n_lesions, self.seed))
