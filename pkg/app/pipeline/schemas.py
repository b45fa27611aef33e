from pydantic import BaseModel

from app.evaluation.schemas import EvalReport
from app.matching.schemas import JitterSummary


class PipelineReport(BaseModel):
    """Baseline mAP (detections as given) against mAP with every box resized to ``s_star``."""
    gt_side: float
    n_pairs: int
    jitter: JitterSummary
    s_star: float
    expected_iou_at_star: float
    expected_iou_at_gt_side: float
    baseline: EvalReport
    at_gt_side: EvalReport
    at_star: EvalReport

    @property
    def gain(self) -> float:
        return self.at_star.map - self.baseline.map
