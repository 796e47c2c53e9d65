"""objectives package"""
from .losses import LossWeights, joint_mono, joint_multi, loss_mas, loss_mim, loss_vis2sum, mim_targets
from .masking import DEFAULT_REGION_PROBABILITY, MaskPlan, mask_one_image, mask_regions

__all__ = [
    "MaskPlan", "mask_one_image", "mask_regions", "DEFAULT_REGION_PROBABILITY",
    "LossWeights", "loss_mas", "loss_vis2sum", "loss_mim", "mim_targets",
    "joint_mono", "joint_multi",
]
