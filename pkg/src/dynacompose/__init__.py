"""Dynamics-aware reference/neighbor frame configuration for video inpainting."""

from .calibration import (
    CalibrationProfile,
    SegmentTable,
    build_segments,
    fit_profile,
    load_profile,
    save_profile,
    sweep_video,
)
from .configurator import InputComposition, MemoryModel, compose, configure, max_frames, select_ratio
from .dynamics import DynamicsScore, NormalizationBounds, StreamAnalyzer, combine, mask_change, normalize, score_target
from .errors import AdapterError, DataError, DynacomposeError, NoSourcePixels
from .frame_model import FlowField, Frame, Mask, SequenceWindow, validate_window
from .inpaint import InpainterAdapter, inpaint_baseline, inpaint_external
from .optical_flow import PyramidConfig, complete_flow, estimate_flow, masked_flow_magnitude
from .pipeline import run_stream
from .quality_metrics import LineFit, RatioSweepResult, fit_line, psnr, signed_max_change_rate, ssim

__version__ = "0.1.0"
