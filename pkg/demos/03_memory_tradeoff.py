"""Input-set size versus quality under a linear memory model.

With 662 MB per frame and a 69 MB base, eight frames cost 5365 MB.  Each
row trades one more frame of memory for whatever quality it buys, with
and without dynamics-aware configuration.
"""

import warnings

from dynacompose.calibration import fit_profile, video_sample
from dynacompose.configurator import MemoryModel, max_frames
from dynacompose.evaluation import memory_tradeoff
from dynacompose.synthetic import make_scene

warnings.simplefilter("ignore")

print("8 frames fit in", MemoryModel(662, 5365, 69).usage_mb(8), "MB:", max_frames(MemoryModel(662, 5365, 69)))

samples = [video_sample(*make_scene(k, 50 + i), max_targets=3, target_step=5).as_tuple()
           for i, k in enumerate(["static", "medium", "fast"])]
profile = fit_profile(samples)

frames, masks = make_scene("medium", 7)
rows = memory_tradeoff(frames, masks, profile, per_frame_mb=662, base_mb=69, targets=list(range(40, 96, 6)))
print("total  memory_mb  balanced  configured  delta")
for r in rows:
    print(f"{r['total']:5d}  {r['memory_mb']:9.0f}  {r['baseline_psnr']:8.2f}  {r['configured_psnr']:10.2f}  {r['delta']:+.2f}")
