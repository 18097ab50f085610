"""Two-stage multi-object tracking engine.

Stage 1 associates easy targets by spatial overlap, normalized per track
against its own recent matched-IOU history. Stage 2 resolves the leftover
hard pairs through a pluggable appearance-similarity provider. A
velocity-aware lifecycle decides when lost tracks are dropped, and the
evaluator reports CLEAR-MOT style metrics plus first-stage coverage ratios.
"""

from adaptrack.core import AssociationResult, BoundingBox, Detection, iou

__all__ = ["AssociationResult", "BoundingBox", "Detection", "iou"]
__version__ = "0.1.0"
