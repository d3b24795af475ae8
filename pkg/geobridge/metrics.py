"""
Structure-prediction metrics: C-RMSD, D-MAE, D-RMSE and ADwT.
"""
from dataclasses import asdict, dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .errors import AlignmentError, InputError, StateError
from .geom import kabsch_align, rmsd
from .geometric_state import GeometricState


__all__ = ["MetricReport",
           "c_rmsd",
           "pairwise_distances",
           "d_mae",
           "d_rmse",
           "adwt",
           "adwt_thresholds",
           "evaluate"]


@dataclass(frozen=True)
class MetricReport:
    """
    Aggregate metrics over a set of predictions.

    :ivar c_rmsd: Mean coordinate RMSD after rigid alignment, Angstrom.
    :ivar d_mae: Mean absolute error of interatomic distances, Angstrom.
    :ivar d_rmse: Root mean square error of interatomic distances, Angstrom.
    :ivar adwt_percent: Average distance within threshold, in ``[0, 100]``.
    """
    c_rmsd: float
    d_mae: float
    d_rmse: float
    adwt_percent: float

    def __post_init__(self):
        for name, value in self.as_dict().items():
            if not value >= 0:
                raise InputError(f"{name} must be >= 0, got {value}")
        if self.adwt_percent > 100:
            raise InputError(f"adwt_percent must be <= 100, got {self.adwt_percent}")

    def as_dict(self) -> dict[str, float]:
        """Metric name to value, in field order."""
        return asdict(self)


def _check_pair(pred: GeometricState, ref: GeometricState):
    if not pred.same_atoms(ref):
        raise AlignmentError("prediction and reference differ in atoms")


def c_rmsd(pred: GeometricState, ref: GeometricState) -> float:
    """
    RMSD between ``pred`` and ``ref`` after optimal rigid alignment of ``pred``.

    :raises AlignmentError: If the states differ in atoms.
    """
    aligned, _ = kabsch_align(pred, ref)
    return rmsd(aligned.coords, ref.coords)


def pairwise_distances(state: GeometricState) -> np.ndarray:
    """
    Distances of all pairs ``i < j`` in lexicographic order, ``n (n - 1) / 2`` values.

    :raises StateError: If the state has fewer than two atoms.
    """
    if state.n_atoms < 2:
        raise StateError("pairwise distances need at least two atoms")
    return pdist(state.coords)


def _distance_errors(pred: GeometricState, ref: GeometricState) -> np.ndarray:
    _check_pair(pred, ref)
    return pairwise_distances(pred) - pairwise_distances(ref)


def d_mae(pred: GeometricState, ref: GeometricState) -> float:
    """Mean absolute error of the interatomic distances."""
    return float(np.mean(np.abs(_distance_errors(pred, ref))))


def d_rmse(pred: GeometricState, ref: GeometricState) -> float:
    """Root mean square error of the interatomic distances."""
    errors = _distance_errors(pred, ref)
    return float(np.sqrt(np.mean(errors * errors)))


@lru_cache(maxsize=1)
def adwt_thresholds() -> np.ndarray:
    """The 491 thresholds ``0.010, 0.011, ..., 0.500`` Angstrom, from integer indices."""
    thresholds = (10 + np.arange(491)) / 1000
    thresholds.flags.writeable = False
    return thresholds


def _position_mae(pred: GeometricState, ref: GeometricState, aligned: bool) -> float:
    _check_pair(pred, ref)
    if aligned:
        pred, _ = kabsch_align(pred, ref)
    return float(np.mean(np.linalg.norm(pred.coords - ref.coords, axis=-1)))


def adwt(preds: Sequence[GeometricState], refs: Sequence[GeometricState],
         aligned: bool = False) -> float:
    """
    Average distance within threshold.

    For every threshold ``beta`` the fraction of structures whose mean per-atom position
    error is strictly below ``beta`` is taken; the result is the mean of those fractions
    in percent.

    :param preds: Predicted structures.
    :param refs: Reference structures, same length and order.
    :param aligned: Align each prediction onto its reference first.
    :return: Percentage in ``[0, 100]``.
    :rtype: float
    :raises InputError: If the lists are empty or of different lengths.
    """
    if len(preds) != len(refs):
        raise InputError(f"{len(preds)} predictions for {len(refs)} references")
    if not preds:
        raise InputError("ADwT needs at least one structure")
    errors = np.array([_position_mae(pred, ref, aligned) for pred, ref in zip(preds, refs)])
    passed = errors[None, :] < adwt_thresholds()[:, None]
    return float(np.mean(passed)) * 100.0


def evaluate(preds: Sequence[GeometricState], refs: Sequence[GeometricState],
             aligned: bool = False) -> MetricReport:
    """
    Averages C-RMSD, D-MAE and D-RMSE over the structures and computes ADwT.

    :param aligned: Passed to :func:`adwt`; the other metrics are alignment-free or
        always aligned.
    :rtype: MetricReport
    """
    adwt_percent = adwt(preds, refs, aligned)
    pairs = list(zip(preds, refs))
    return MetricReport(c_rmsd=float(np.mean([c_rmsd(p, r) for p, r in pairs])),
                        d_mae=float(np.mean([d_mae(p, r) for p, r in pairs])),
                        d_rmse=float(np.mean([d_rmse(p, r) for p, r in pairs])),
                        adwt_percent=adwt_percent)
