"""Alias for :mod:`rankpair.evaluation`.

The implementation lives in ``evaluation`` so imports never shadow the
``eval`` builtin in readers' minds; this module keeps the short name
working.
"""

from .evaluation import *  # noqa: F401,F403
from .evaluation import (  # noqa: F401
    DEFAULT_CORRELATION_IOU_FLOOR,
    DEFAULT_IOU_THRESHOLDS,
    EvalReport,
    average_precision,
    coco_style_ap,
    correlations,
    detection_report,
    match_predictions,
)
